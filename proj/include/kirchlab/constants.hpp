// constants.hpp — numeric policy shared across the transformation chain
//
// The contraction balls of the two fixed-point inverses are measured, not
// derived: the calibration runs live in the test suite, the frozen results
// live here.

#pragma once

namespace kirchlab::constants {

// fixed-point inverses (Φ⁽⁴⁾, Φ⁽⁵⁾, (I+K)⁻¹, (I+𝒦)⁻¹)
inline constexpr double kFixedPointTol = 1e-13;
inline constexpr int kFixedPointCap = 50;

// root-find for φ, the inverse of x ↦ x√(1+2x)
inline constexpr double kPhiRootTol = 1e-14;

// invertibility balls: ‖η‖_{m0} ≤ 1/4 for Φ⁽⁴⁾ (printed in the
// construction); for Φ⁽⁵⁾ the measured contraction persists past
// ‖w‖_{m1} = 1.8 on desk lattices, frozen operating ball 0.5
inline constexpr double kPhi4Ball = 0.25;
inline constexpr double kPhi5Ball = 0.5;

// |S̃_λ - S_λ| ≤ C ‖u‖²_{m1} S_λ for the stage-3..5 composite; fitted once
// over seeded random-phase states and coherent constructor data at
// ‖u‖_{m1} ≤ 0.15, d ∈ {1,2}.  Coherent data (B_λ = S_λ) maximizes the
// stage-3 mixing; max observed ratio 1.16, frozen with ~1.7x headroom.
inline constexpr double kCisaC = 2.0;

// |(W_{≥7})_k| ≤ C ‖u‖⁶_{m1} (|u_k| + |u_{-k}|); fitted the same way
// (max observed ratio 0.32), frozen with headroom.
inline constexpr double kW7ModeC = 0.7;

}  // namespace kirchlab::constants
