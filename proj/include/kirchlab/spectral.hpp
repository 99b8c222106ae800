// spectral.hpp — Fourier-side states of zero-mean fields on the torus
//
// Everything lives in coefficient space: a field is the dense vector of its
// Fourier coefficients over a Lattice.  The pairing is
//
//     ⟨w,h⟩ := Σ_j w_j h_{-j}
//
// (integral of the product, with the measure normalized so that every
// transformation coefficient below is verbatim), and the Sobolev norm is
// ‖u‖_s² = Σ_j |u_j|² |j|^{2s}.  Shell observables collapse a state to the
// per-sphere sums
//
//     S_λ = Σ_{|k|=λ} |u_k|²,   B_λ = Σ_{|k|=λ} u_k u_{-k},
//     U_λ = Σ_{|k|=λ} (λ³|a_k|² + λ|b_k|²),
//
// which are all the quintic-order dynamics ever needs.

#pragma once

#include "kirchlab/lattice.hpp"
#include "kirchlab/rng.hpp"

#include <complex>
#include <vector>

namespace kirchlab {

using Complex = std::complex<double>;

class SpectralField {
public:
    SpectralField() = default;
    explicit SpectralField(LatticeRef lat)
        : lat_(std::move(lat)), c_(lat_->num_points(), Complex{0.0, 0.0}) {}

    const LatticeRef& lattice() const { return lat_; }
    std::size_t size() const { return c_.size(); }

    Complex& operator[](std::size_t i) { return c_[i]; }
    const Complex& operator[](std::size_t i) const { return c_[i]; }
    const std::vector<Complex>& coeffs() const { return c_; }
    std::vector<Complex>& coeffs() { return c_; }

    SpectralField& operator+=(const SpectralField& o);
    SpectralField& operator-=(const SpectralField& o);
    SpectralField& operator*=(Complex z);
    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(Complex z, SpectralField f) { return f *= z; }

private:
    LatticeRef lat_;
    std::vector<Complex> c_;
};

// (u,v) with v_k = conj(u_{-k}) — the space H^s(T^d, c.c.).
struct ConjugatePair {
    SpectralField u, v;
};

// real pair (u(t), ∂_t u(t)) of the wave system, stored spectrally
struct PhysicalState {
    SpectralField a, b;
};

// intermediate real pair (q,p) between the two linear stages
struct RealPair {
    SpectralField q, p;
};

struct ShellObservables {
    std::vector<double> S;
    std::vector<Complex> B;
};

double sobolev_norm(const SpectralField& f, double s);

// ⟨w,h⟩ = Σ_j w_j h_{-j}; throws on lattice mismatch.
Complex pairing(const SpectralField& w, const SpectralField& h);

// per-shell bilinear sums T_λ(f,g) = Σ_{|j|=λ} f_j g_{-j}
std::vector<Complex> shell_pair_sums(const SpectralField& f, const SpectralField& g);

// S_λ, B_λ of a conjugate pair
ShellObservables shell_observables(const ConjugatePair& pair);

// U_λ(a,b) = Σ_{|k|=λ} (λ³|a_k|² + λ|b_k|²)
std::vector<double> u_lambda(const PhysicalState& state);

// max_k |v_k - conj(u_{-k})| — conjugate-pair defect
double conjugate_defect(const ConjugatePair& pair);
// max_k |f_{-k} - conj(f_k)| — reality defect
double reality_defect(const SpectralField& f);

ConjugatePair conjugate_pair_from_u(SpectralField u);

enum class TargetMeaning { U, S };
enum class PhasePolicy { Zero, SeededRandom };

// Initial data with prescribed shell profile.  Mass is split equally across
// the members of each shell; phases are zero or drawn from the seeded
// generator (reality-compatible for U targets).  U targets produce a
// PhysicalState with b = 0; use the S overload for conjugate pairs.
PhysicalState synth_physical_from_targets(const LatticeRef& lat,
                                          const std::vector<std::pair<std::int64_t, double>>& targets,
                                          PhasePolicy policy = PhasePolicy::Zero,
                                          std::uint64_t seed = 0);

ConjugatePair synth_pair_from_targets(const LatticeRef& lat,
                                      const std::vector<std::pair<std::int64_t, double>>& targets,
                                      PhasePolicy policy = PhasePolicy::Zero,
                                      std::uint64_t seed = 0);

}  // namespace kirchlab
