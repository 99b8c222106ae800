// normal_form.hpp — the quasilinear normal-form chain of the Kirchhoff system
//
// Five changes of variables connect the physical pair (a,b) to the normal
// coordinates (u,v):
//
//   Φ⁽¹⁾ (q,p) = (Λ^{-1/2} q, Λ^{1/2} p)          symmetrization
//   Φ⁽²⁾ (f,g) = ((f+g)/√2, (f-g)/(i√2))          diagonalization
//   Φ⁽³⁾ (η,ψ) = 𝓜(ρ)·(η,ψ)ᵀ                      removes Λ off-diagonal
//   Φ⁽⁴⁾ (w,z) = (I + M(w,z))·(w,z)ᵀ              kills cubic energy terms
//   Φ⁽⁵⁾ (u,v) = (I + 𝓜(u,v))·(u,v)ᵀ              kills nonresonant quintics
//
// "chain forward" here maps physical → normal, i.e. applies the printed
// maps' inverses in the order 1…5; "chain inverse" is the composition
// Φ⁽¹⁾∘…∘Φ⁽⁵⁾ itself.  Every operator application factors through per-shell
// bilinear sums: coefficients depend on radii only, so the cost is
// O(#shells³ + #modes) instead of O(#modes³).  Radius equalities inside the
// coefficients (Kronecker deltas, resonance constraints) are decided on the
// integer shell keys, never on floating-point radii.
//
// After the chain, the tangent fields of interest are
//
//   X₃⁺  — cubic, resonant, invisible to every ‖·‖_s energy estimate,
//   W₅   — quintic, resonant, the source of superaction drift,
//   W_{≥7} = W - (1+𝒫)(𝒟₁+X₃⁺) - W₅ — the order-seven remainder,
//
// with W(u,v) = (I+𝒦(u,v))⁻¹ X⁺(Φ⁽⁵⁾(u,v)) assembled from the stage-4
// pushforward X⁺ = (I+K)⁻¹ X∘Φ⁽⁴⁾.

#pragma once

#include "kirchlab/constants.hpp"
#include "kirchlab/dynamics.hpp"
#include "kirchlab/spectral.hpp"

#include <array>
#include <memory>
#include <string>

namespace kirchlab {

enum class StageDir { Forward, Inverse };

// inverse of x ↦ x√(1+2x) on x ≥ 0: safeguarded Newton on 2x³+x²-y²
// with bisection fallback on [0, max(1,y)]
double phi_of(double y);
// ρ(x) = -x / (1 + x + √(1+2x))
double rho_of(double x);

struct Phi3Scalars {
    double Q = 0.0;     // ¼⟨Λ(η+ψ), η+ψ⟩
    double P = 0.0;     // φ(Q)
    double rho = 0.0;   // ρ(P) ∈ (-1, 0]
    double calP = 0.0;  // √(1+2P) - 1 ≥ 0
};

// linear stages
PhysicalState phi1_forward(const RealPair& qp);
RealPair phi1_inverse(const PhysicalState& ab);
RealPair phi2_forward(const ConjugatePair& fg);
ConjugatePair phi2_inverse(const RealPair& qp);

Phi3Scalars phi3_scalars(const ConjugatePair& pair);
ConjugatePair phi3(StageDir dir, const ConjugatePair& pair);

enum class FixApply { A12, C12 };

// The stage-4 building blocks: out_k = (Σ_j u_j v_{-j} coeff(|j|,|k|)) h_k
// with coeff = |j|²/8(|j|-|k|) (A12, diagonal |j|=|k| excluded) or
// |j|²/8(|j|+|k|) (C12).
SpectralField a12_c12_apply(FixApply which, const SpectralField& u, const SpectralField& v,
                            const SpectralField& h);

ConjugatePair phi4(StageDir dir, const ConjugatePair& pair,
                   double tol = constants::kFixedPointTol);

enum class Phi5Family { a11, b11, c11, d11, f11, a12, b12, c12, d12, f12 };

// printed coefficient formulas; 0/0 conventions resolved through the exact
// shell keys of the three radii
double phi5_coefficient(Phi5Family family, const Shell& j, const Shell& l, const Shell& k);

struct ResidualReport {
    ConjugatePair tangent;            // W_{≥7}(u,v)
    double norm_m1 = 0.0;             // ‖(W_{≥7})₁‖_{m1}
    double exponent = 0.0;            // log₂ ratio against the half-amplitude state
    double per_mode_C = 0.0;          // max_k |res_k| / (‖u‖⁶_{m1}(|u_k|+|u_{-k}|))
    double calP = 0.0;                // 𝒫(Φ⁽⁵⁾(u,v)) used in the subtraction
};

// All shell-resonance-aware operations for one lattice.  Immutable after
// construction; concurrent use is fine.
class NormalForm {
public:
    explicit NormalForm(LatticeRef lat);

    const LatticeRef& lattice() const { return lat_; }
    const TripleSet& triples() const { return triples_; }

    ConjugatePair phi5(StageDir dir, const ConjugatePair& pair,
                       double tol = constants::kFixedPointTol) const;

    // physical (a,b) → normal (u,v)
    ConjugatePair chain_forward(const PhysicalState& ab) const;
    // normal (u,v) → physical (a,b)
    PhysicalState chain_inverse(const ConjugatePair& uv) const;

    // tangent fields at the normal level
    ConjugatePair d1(const ConjugatePair& uv) const;       // (-iΛu, +iΛv)
    ConjugatePair x3plus(const ConjugatePair& uv) const;
    ConjugatePair w5(const ConjugatePair& uv) const;

    // RHS of the stage-3 system (at the (η,ψ) level)
    ConjugatePair x_field(const ConjugatePair& ep) const;

    // (1+𝒫)(𝒟₁+X₃⁺) + W₅ — the per-mode system truncated at quintic order
    ConjugatePair quintic_tangent(const ConjugatePair& uv) const;

    // full transformed field W(u,v) and the 𝒫 factor it carries;
    // tol = 0 runs the operator inverses to stagnation
    std::pair<ConjugatePair, double> w_field(const ConjugatePair& uv,
                                             double tol = 0.0) const;

    ResidualReport w7_residual(const ConjugatePair& uv) const;

    // 𝒫(Φ⁽⁵⁾(u,v)) = √(1+2P(Φ⁽⁴⁾(Φ⁽⁵⁾(u,v)))) - 1
    double calP_at(const ConjugatePair& uv) const;

    // apply 𝓜(u,v) to (α,β) — exposed for the dense-oracle comparison
    ConjugatePair apply_curlyM(const ConjugatePair& uv, const ConjugatePair& ab) const;

private:
    struct Phi5Multipliers {
        std::vector<Complex> m11, m12, m21, m22;
    };
    Phi5Multipliers curlyM_multipliers(const ConjugatePair& uv) const;
    ConjugatePair apply_curlyE(const ConjugatePair& uv, const ConjugatePair& ab) const;
    ConjugatePair apply_curlyK(const ConjugatePair& uv, const ConjugatePair& ab) const;
    ConjugatePair inv_I_plus_curlyK(const ConjugatePair& uv, const ConjugatePair& rhs,
                                    double tol) const;

    double coeff(Phi5Family f, std::size_t s1, std::size_t s2, std::size_t t) const;

    LatticeRef lat_;
    TripleSet triples_;
    // cached coefficient tables [ (s1*NS+s2)*NS + t ], one per family with
    // nonzero entries; empty when the lattice is too large to table
    std::array<std::vector<double>, 8> table_;
    bool tabled_ = false;
};

// (I+K(w,z))⁻¹ rhs for the stage-4 differential, by Neumann-style fixed point
ConjugatePair inv_I_plus_K4(const ConjugatePair& wz, const ConjugatePair& rhs,
                            double tol = constants::kFixedPointTol);

}  // namespace kirchlab
