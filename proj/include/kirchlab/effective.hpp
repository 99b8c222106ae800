// effective.hpp — truncated dynamics on Fourier spheres
//
// State: per shell the superaction S_λ ≥ 0 and the complex sum B_λ, evolved by
//
//   ∂_t S_λ = -(3/16) Σ_{α+β=λ} θ_{αβλ} αβλ + (3/8) Σ_{β+λ=α} θ_{βλα} αβλ
//   ∂_t B_λ = -2i(1+𝒫)(λ + ¼ λ² S_λ) B_λ
//
// with θ_{αβλ} = Im(B_α B_β B̄_λ) and the order-≥7 remainders dropped.  The
// truncated B-equation is a pure rotation, so |B_λ| is constant, and the
// weighted sum Σ_λ λ S_λ is an algebraic invariant of the S-equation.
// The scalar 𝒫 = √(1+2φ(Q)) - 1 closes through Q = ½ Σ_λ λ (S_λ + Re B_λ),
// the shell-level form of the quadratic functional of the chain; a zero-𝒫
// mode is available since 𝒫 only rescales time slightly.

#pragma once

#include "kirchlab/lattice.hpp"
#include "kirchlab/spectral.hpp"

#include <complex>
#include <vector>

namespace kirchlab {

enum class ClosureMode { FullP, ZeroP };

struct EffectiveState {
    LatticeRef lattice;
    std::vector<double> S;
    std::vector<Complex> B;
    ClosureMode closure = ClosureMode::FullP;
};

EffectiveState effective_from_pair(const ConjugatePair& pair,
                                   ClosureMode closure = ClosureMode::FullP);

struct EffectiveTangent {
    std::vector<double> Sdot;
    std::vector<Complex> Bdot;
};

double effective_P(const EffectiveState& st);

EffectiveTangent effective_rhs(const EffectiveState& st, const TripleSet& triples);

struct TripleDiagnostics {
    double omega = 0.0;   // α²S_α + β²S_β - λ²S_λ
    double Omega = 0.0;   // α²S_α + β²S_β + λ²S_λ
    Complex Z{0.0, 0.0};  // B_α B_β B̄_λ
    double theta = 0.0;   // Im Z
};

TripleDiagnostics triple_diagnostics(const EffectiveState& st, const Triple& triple);

enum class EffectiveScheme { RotFrame, Rk4 };

struct EffectiveTrajectory {
    LatticeRef lattice;
    std::vector<double> times;
    std::vector<std::vector<double>> S;
    std::vector<std::vector<Complex>> B;
    std::vector<double> P;
    // monitored, not asserted: whether |B_λ| ≤ S_λ survives the truncation
    // is open; the worst observed excess (|B|-S)/S over the run is recorded
    double max_B_excess = 0.0;
};

// RotFrame advances B by the exact phase rotation of each step (S frozen at
// the midpoint value) and S by the midpoint rule; Rk4 is the cross-check.
// Negative S beyond -1e-12·max S aborts; smaller undershoots are clamped.
EffectiveTrajectory integrate_effective(const EffectiveState& initial, const TripleSet& triples,
                                        double dt, double T, EffectiveScheme scheme,
                                        std::size_t stride = 1);

struct GrowthReport {
    std::vector<double> growth;        // per shell: max_t |S_λ(t)/S_λ(0) - 1| (Γ₁ only)
    std::vector<bool> populated;       // Γ₁ membership at t=0
    double max_growth = 0.0;
    double min_margin = 0.0;           // min over time and Γ₁-triples of |ω|/Ω
    bool has_margin = false;
    bool gamma0_stayed_zero = true;
};

GrowthReport growth_report(const EffectiveTrajectory& traj, const TripleSet& triples);

}  // namespace kirchlab
