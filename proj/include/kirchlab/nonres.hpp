// nonres.hpp — nonresonance checking and construction of nonresonant data
//
// The condition on a profile (σ_λ) over the populated shells Γ₁ is
//
//     |σ_α + σ_β - σ_λ| ≥ c₀ (σ_α + σ_β + σ_λ)   for all α+β=λ in Γ₁,
//
// applied to U_λ directly (U-form) or to λ²S_λ (S-form).  The Melnikov
// variant replaces the right side by c₀ / min{α,β,λ}^τ.  Constructors build
// profiles that carry a certificate:
//
//   decreasing / power-decay  →  c₀ = 1/3   (a decreasing profile always works)
//   sequential(c₀)            →  σ_λ picked outside every interval
//                                ((σ_α+σ_β)θ₁, (σ_α+σ_β)θ₂),
//                                θ₁ = (1-c₀)/(1+c₀), θ₂ = 1/θ₁
//   odd-support / primes      →  c₀ = 1     (no resonant triple exists)
//
// The sequential construction runs in exact rational arithmetic so the
// avoidance is an exact property of the emitted profile, not a float accident.

#pragma once

#include "kirchlab/lattice.hpp"
#include "kirchlab/spectral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kirchlab {

// minimal exact rational on int64 (gcd-normalized, __int128 intermediates)
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Rational() = default;
    Rational(std::int64_t n, std::int64_t d = 1);
    static Rational of(std::int64_t n, std::int64_t d = 1) { return {n, d}; }

    Rational operator+(const Rational& o) const;
    Rational operator-(const Rational& o) const;
    Rational operator*(const Rational& o) const;
    Rational operator/(const Rational& o) const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
    bool operator<(const Rational& o) const;
    bool operator<=(const Rational& o) const { return *this < o || *this == o; }
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

struct CertificationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class NonresForm { U, S };

struct TripleMargin {
    std::int64_t n_a = 0, n_b = 0, n_l = 0;
    double margin = 0.0;     // |σ_α+σ_β-σ_λ| / (σ_α+σ_β+σ_λ)
    double threshold = 0.0;  // c₀ (plain) or c₀/minλ^τ normalized (Melnikov)
};

struct CheckReport {
    bool pass = true;
    double worst_margin = std::numeric_limits<double>::infinity();
    std::size_t triples_checked = 0;  // triples fully inside Γ₁
    std::vector<TripleMargin> violations;
};

// values indexed by shell (same order as Lattice::shell); S-form multiplies
// each entry by λ² before testing.  Triples touching a zero value are
// skipped: the condition quantifies over Γ₁ only.
CheckReport check_nonres(const std::vector<double>& values, const Lattice& lat,
                         const TripleSet& triples, double c0, NonresForm form = NonresForm::U);

// |σ_α + σ_β - σ_λ| ≥ c₀ / min{α,β,λ}^τ
CheckReport check_melnikov(const std::vector<double>& values, const Lattice& lat,
                           const TripleSet& triples, double c0, double tau,
                           NonresForm form = NonresForm::U);

enum class DataRecipe { Decreasing, PowerDecay, Sequential, OddSupport, PrimesPattern };

struct Certificate {
    double c0 = 0.0;                    // certified constant
    std::optional<Rational> c0_exact;   // when the construction is exact
    double measured_margin = 0.0;       // re-check through check_nonres
    std::size_t triples_checked = 0;
    std::string recipe;
};

struct NonresData {
    PhysicalState state;
    Certificate certificate;
    std::vector<double> U;  // realized profile
};

struct MakeOptions {
    double sigma = 3.0;            // power-decay exponent (σ > m1 required)
    Rational c0 = Rational{1, 9};  // sequential target constant
    PhasePolicy phases = PhasePolicy::Zero;
    std::uint64_t seed = 0;
};

// Data scaled to ‖a‖_{m1+1/2} + ‖b‖_{m1-1/2} = ε (b = 0: profiles realized
// through a alone), certificate re-verified before return.
NonresData make_nonresonant(DataRecipe recipe, const LatticeRef& lat, double epsilon,
                            const MakeOptions& opts = {});

struct PerturbationReport {
    double mu = 0.0;  // smallest μ with U_λ(pert) ≤ μ² U_λ(base) on Γ₁(base)
    double c0_new = 0.0;
    bool dominated = true;            // false when pert loads a Γ₀ shell of base
    std::optional<std::int64_t> offending_shell;
};

PerturbationReport perturbation_margin(const PhysicalState& base, const PhysicalState& pert,
                                       double base_c0);

// exact rational view of the sequential profile (for external verification)
struct SequentialProfile {
    std::vector<Rational> sigma;  // by shell index
    Rational theta1, theta2;
};
SequentialProfile sequential_profile(const Lattice& lat, const Rational& c0);

}  // namespace kirchlab
