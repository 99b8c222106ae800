#include "kirchlab/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kirchlab {

namespace {

void require_same_lattice(const SpectralField& a, const SpectralField& b, const char* who) {
    if (a.lattice().get() != b.lattice().get())
        throw std::invalid_argument(std::string(who) + ": lattice mismatch");
}

}  // namespace

SpectralField& SpectralField::operator+=(const SpectralField& o) {
    require_same_lattice(*this, o, "SpectralField::operator+=");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
    require_same_lattice(*this, o, "SpectralField::operator-=");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

SpectralField& SpectralField::operator*=(Complex z) {
    for (auto& c : c_) c *= z;
    return *this;
}

double sobolev_norm(const SpectralField& f, double s) {
    if (s < 0.0) throw std::invalid_argument("sobolev_norm: s must be >= 0");
    const Lattice& lat = *f.lattice();
    double acc = 0.0;
    for (std::size_t sh = 0; sh < lat.num_shells(); ++sh) {
        const Shell& shell = lat.shell(sh);
        double mass = 0.0;
        for (auto i : shell.members) mass += std::norm(f[i]);
        acc += mass * std::pow(shell.lambda, 2.0 * s);
    }
    return std::sqrt(acc);
}

Complex pairing(const SpectralField& w, const SpectralField& h) {
    require_same_lattice(w, h, "pairing");
    const Lattice& lat = *w.lattice();
    Complex acc{0.0, 0.0};
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * h[lat.neg_point(i)];
    return acc;
}

std::vector<Complex> shell_pair_sums(const SpectralField& f, const SpectralField& g) {
    require_same_lattice(f, g, "shell_pair_sums");
    const Lattice& lat = *f.lattice();
    std::vector<Complex> out(lat.num_shells(), Complex{0.0, 0.0});
    for (std::size_t s = 0; s < lat.num_shells(); ++s) {
        Complex acc{0.0, 0.0};
        for (auto i : lat.shell(s).members) acc += f[i] * g[lat.neg_point(i)];
        out[s] = acc;
    }
    return out;
}

ShellObservables shell_observables(const ConjugatePair& pair) {
    const Lattice& lat = *pair.u.lattice();
    ShellObservables obs;
    obs.S.assign(lat.num_shells(), 0.0);
    obs.B.assign(lat.num_shells(), Complex{0.0, 0.0});
    for (std::size_t s = 0; s < lat.num_shells(); ++s) {
        for (auto i : lat.shell(s).members) {
            obs.S[s] += std::norm(pair.u[i]);
            obs.B[s] += pair.u[i] * pair.u[lat.neg_point(i)];
        }
    }
    return obs;
}

std::vector<double> u_lambda(const PhysicalState& state) {
    const Lattice& lat = *state.a.lattice();
    std::vector<double> out(lat.num_shells(), 0.0);
    for (std::size_t s = 0; s < lat.num_shells(); ++s) {
        const Shell& sh = lat.shell(s);
        const double lam = sh.lambda;
        double acc = 0.0;
        for (auto i : sh.members)
            acc += lam * lam * lam * std::norm(state.a[i]) + lam * std::norm(state.b[i]);
        out[s] = acc;
    }
    return out;
}

double conjugate_defect(const ConjugatePair& pair) {
    const Lattice& lat = *pair.u.lattice();
    double worst = 0.0;
    for (std::size_t i = 0; i < pair.u.size(); ++i)
        worst = std::max(worst, std::abs(pair.v[i] - std::conj(pair.u[lat.neg_point(i)])));
    return worst;
}

double reality_defect(const SpectralField& f) {
    const Lattice& lat = *f.lattice();
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
        worst = std::max(worst, std::abs(f[lat.neg_point(i)] - std::conj(f[i])));
    return worst;
}

ConjugatePair conjugate_pair_from_u(SpectralField u) {
    const Lattice& lat = *u.lattice();
    SpectralField v(u.lattice());
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::conj(u[lat.neg_point(i)]);
    return {std::move(u), std::move(v)};
}

namespace {

std::size_t shell_or_throw(const Lattice& lat, std::int64_t n) {
    auto s = lat.shell_index_of(n);
    if (!s) throw std::invalid_argument("synth: target on shell n=" + std::to_string(n) +
                                        " absent from lattice");
    return *s;
}

}  // namespace

PhysicalState synth_physical_from_targets(
    const LatticeRef& lat, const std::vector<std::pair<std::int64_t, double>>& targets,
    PhasePolicy policy, std::uint64_t seed) {
    PhysicalState st{SpectralField(lat), SpectralField(lat)};
    Rng rng(seed);
    for (const auto& [n, value] : targets) {
        const Shell& sh = lat->shell(shell_or_throw(*lat, n));
        if (value < 0.0) throw std::invalid_argument("synth: negative target");
        if (value == 0.0) continue;
        // U_λ realized through a alone: λ³ Σ|a_k|² = U_λ, equidistributed
        const double amp =
            std::sqrt(value / (std::pow(sh.lambda, 3.0) * static_cast<double>(sh.members.size())));
        for (auto i : sh.members) {
            const auto ni = lat->neg_point(i);
            if (ni < static_cast<std::int32_t>(i)) continue;  // handle each ±pair once
            double phase = 0.0;
            if (policy == PhasePolicy::SeededRandom)
                phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            const Complex c = amp * Complex{std::cos(phase), std::sin(phase)};
            st.a[i] = c;
            st.a[ni] = std::conj(c);
        }
    }
    return st;
}

ConjugatePair synth_pair_from_targets(
    const LatticeRef& lat, const std::vector<std::pair<std::int64_t, double>>& targets,
    PhasePolicy policy, std::uint64_t seed) {
    SpectralField u(lat);
    Rng rng(seed);
    for (const auto& [n, value] : targets) {
        const Shell& sh = lat->shell(shell_or_throw(*lat, n));
        if (value < 0.0) throw std::invalid_argument("synth: negative target");
        if (value == 0.0) continue;
        const double amp = std::sqrt(value / static_cast<double>(sh.members.size()));
        for (auto i : sh.members) {
            double phase = 0.0;
            if (policy == PhasePolicy::SeededRandom)
                phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            u[i] = amp * Complex{std::cos(phase), std::sin(phase)};
        }
    }
    return conjugate_pair_from_u(std::move(u));
}

}  // namespace kirchlab
