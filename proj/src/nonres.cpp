#include "kirchlab/nonres.hpp"

#include "kirchlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace kirchlab {

namespace {

std::int64_t checked_cast(__int128 v, const char* who) {
    if (v > std::numeric_limits<std::int64_t>::max() ||
        v < std::numeric_limits<std::int64_t>::min())
        throw std::overflow_error(std::string(who) + ": rational overflow");
    return static_cast<std::int64_t>(v);
}

__int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        const __int128 t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Rational reduce128(__int128 n, __int128 d, const char* who) {
    const __int128 g = gcd128(n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    return Rational(checked_cast(n, who), checked_cast(d, who));
}

}  // namespace

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("Rational: zero denominator");
    if (den < 0) {
        num = -num;
        den = -den;
    }
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
        num /= g;
        den /= g;
    }
}

Rational Rational::operator+(const Rational& o) const {
    const __int128 n = static_cast<__int128>(num) * o.den + static_cast<__int128>(o.num) * den;
    const __int128 d = static_cast<__int128>(den) * o.den;
    return reduce128(n, d, "Rational+");
}

Rational Rational::operator-(const Rational& o) const {
    return *this + Rational(-o.num, o.den);
}

Rational Rational::operator*(const Rational& o) const {
    return reduce128(static_cast<__int128>(num) * o.num, static_cast<__int128>(den) * o.den,
                     "Rational*");
}

Rational Rational::operator/(const Rational& o) const {
    if (o.num == 0) throw std::invalid_argument("Rational: division by zero");
    return reduce128(static_cast<__int128>(num) * o.den, static_cast<__int128>(den) * o.num,
                     "Rational/");
}

bool Rational::operator<(const Rational& o) const {
    return static_cast<__int128>(num) * o.den < static_cast<__int128>(o.num) * den;
}

// ---------------------------------------------------------------------------

namespace {

CheckReport run_check(const std::vector<double>& values, const Lattice& lat,
                      const TripleSet& triples, NonresForm form,
                      const std::function<double(const Triple&)>& threshold_of,
                      bool relative_threshold) {
    if (values.size() != lat.num_shells())
        throw std::invalid_argument("check_nonres: values must be indexed by shell");
    std::vector<double> v = values;
    if (form == NonresForm::S)
        for (std::size_t s = 0; s < v.size(); ++s)
            v[s] *= static_cast<double>(lat.shell(s).n);

    CheckReport rep;
    for (const auto& tr : triples.sum_triples) {
        const double va = v[tr.sa], vb = v[tr.sb], vl = v[tr.sc];
        if (va <= 0.0 || vb <= 0.0 || vl <= 0.0) continue;  // Γ₀ legs skipped
        ++rep.triples_checked;
        const double diff = std::abs(va + vb - vl);
        const double sum = va + vb + vl;
        const double margin = diff / sum;
        rep.worst_margin = std::min(rep.worst_margin, margin);
        const double thr = threshold_of(tr);
        const bool ok = relative_threshold ? margin >= thr : diff >= thr;
        if (!ok) {
            rep.pass = false;
            rep.violations.push_back({lat.shell(tr.sa).n, lat.shell(tr.sb).n,
                                      lat.shell(tr.sc).n, margin, thr});
        }
    }
    return rep;
}

}  // namespace

CheckReport check_nonres(const std::vector<double>& values, const Lattice& lat,
                         const TripleSet& triples, double c0, NonresForm form) {
    if (!(c0 > 0.0 && c0 <= 1.0))
        throw std::invalid_argument("check_nonres: c0 must lie in (0,1]");
    return run_check(values, lat, triples, form, [&](const Triple&) { return c0; }, true);
}

CheckReport check_melnikov(const std::vector<double>& values, const Lattice& lat,
                           const TripleSet& triples, double c0, double tau, NonresForm form) {
    if (!(c0 > 0.0)) throw std::invalid_argument("check_melnikov: c0 must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("check_melnikov: tau must be > 0");
    return run_check(
        values, lat, triples, form,
        [&](const Triple& tr) {
            const double minl = std::min({lat.shell(tr.sa).lambda, lat.shell(tr.sb).lambda,
                                          lat.shell(tr.sc).lambda});
            return c0 / std::pow(minl, tau);
        },
        false);
}

// ---------------------------------------------------------------------------

SequentialProfile sequential_profile(const Lattice& lat, const Rational& c0) {
    if (!(Rational(0) < c0) || !(c0 < Rational(1)))
        throw std::invalid_argument("sequential_profile: c0 must lie in (0,1)");
    SequentialProfile prof;
    prof.theta1 = (Rational(1) - c0) / (Rational(1) + c0);
    prof.theta2 = (Rational(1) + c0) / (Rational(1) - c0);
    prof.sigma.assign(lat.num_shells(), Rational(0));

    // class p -> (m -> shell), processed in increasing m within each class
    std::map<std::int64_t, std::map<std::int64_t, std::int32_t>> classes;
    for (std::size_t s = 0; s < lat.num_shells(); ++s)
        classes[lat.shell(s).p][lat.shell(s).m] = static_cast<std::int32_t>(s);

    for (const auto& [p, by_m] : classes) {
        for (const auto& [m, s] : by_m) {
            // smallest left endpoint of the forbidden intervals feeding λ_s
            std::optional<Rational> x1;
            for (const auto& [ma, sa] : by_m) {
                if (ma >= m) break;
                const std::int64_t mb = m - ma;
                if (mb < ma) break;
                auto it = by_m.find(mb);
                if (it == by_m.end()) continue;
                const Rational left = prof.theta1 * (prof.sigma[sa] + prof.sigma[it->second]);
                if (!x1 || left < *x1) x1 = left;
            }
            // first shell of a class is free; afterwards take the midpoint of
            // the always-allowed lower interval [0, x1]
            prof.sigma[s] = x1 ? *x1 * Rational(1, 2) : Rational(1);
        }
    }
    return prof;
}

namespace {

std::vector<double> profile_for(DataRecipe recipe, const Lattice& lat, const MakeOptions& opts,
                                Certificate& cert) {
    const std::size_t ns = lat.num_shells();
    std::vector<double> U(ns, 0.0);
    switch (recipe) {
        case DataRecipe::Decreasing: {
            // strictly decreasing dyadic profile
            for (std::size_t s = 0; s < ns; ++s) U[s] = std::ldexp(1.0, -static_cast<int>(s));
            cert.c0 = 1.0 / 3.0;
            cert.c0_exact = Rational(1, 3);
            cert.recipe = "decreasing";
            break;
        }
        case DataRecipe::PowerDecay: {
            const double m1 = m1_of_dim(lat.dim());
            if (!(opts.sigma > m1))
                throw std::invalid_argument("make_nonresonant: power-decay needs sigma > m1");
            for (std::size_t s = 0; s < ns; ++s)
                U[s] = std::pow(lat.shell(s).lambda, -2.0 * opts.sigma);
            cert.c0 = 1.0 / 3.0;
            cert.c0_exact = Rational(1, 3);
            cert.recipe = "power-decay";
            break;
        }
        case DataRecipe::Sequential: {
            const auto prof = sequential_profile(lat, opts.c0);
            for (std::size_t s = 0; s < ns; ++s) U[s] = prof.sigma[s].value();
            cert.c0 = opts.c0.value();
            cert.c0_exact = opts.c0;
            cert.recipe = "sequential";
            break;
        }
        case DataRecipe::OddSupport: {
            // Γ₁ ⊆ odd integers: shells with λ an odd integer, i.e. p = 1, m odd
            bool any = false;
            for (std::size_t s = 0; s < ns; ++s) {
                const Shell& sh = lat.shell(s);
                if (sh.p == 1 && sh.m % 2 == 1) {
                    U[s] = std::pow(sh.lambda, -2.0 * opts.sigma);
                    any = true;
                }
            }
            if (!any)
                throw std::invalid_argument("make_nonresonant: no odd-integer shell in lattice");
            cert.c0 = 1.0;
            cert.c0_exact = Rational(1, 1);
            cert.recipe = "odd-support";
            break;
        }
        case DataRecipe::PrimesPattern: {
            // within every class √p keep only odd multiples m√p
            bool any = false;
            for (std::size_t s = 0; s < ns; ++s) {
                const Shell& sh = lat.shell(s);
                if (sh.m % 2 == 1) {
                    U[s] = std::pow(sh.lambda, -2.0 * opts.sigma);
                    any = true;
                }
            }
            if (!any) throw std::invalid_argument("make_nonresonant: empty primes pattern");
            cert.c0 = 1.0;
            cert.c0_exact = Rational(1, 1);
            cert.recipe = "primes-pattern";
            break;
        }
    }
    return U;
}

}  // namespace

NonresData make_nonresonant(DataRecipe recipe, const LatticeRef& lat, double epsilon,
                            const MakeOptions& opts) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("make_nonresonant: epsilon must be > 0");
    Certificate cert;
    std::vector<double> U = profile_for(recipe, *lat, opts, cert);

    std::vector<std::pair<std::int64_t, double>> targets;
    for (std::size_t s = 0; s < U.size(); ++s)
        if (U[s] > 0.0) targets.emplace_back(lat->shell(s).n, U[s]);
    PhysicalState st = synth_physical_from_targets(lat, targets, opts.phases, opts.seed);

    // scale to ‖a‖_{m1+1/2} + ‖b‖_{m1-1/2} = ε; the condition is invariant
    const double m1 = m1_of_dim(lat->dim());
    const double norm = sobolev_norm(st.a, m1 + 0.5) + sobolev_norm(st.b, m1 - 0.5);
    const double scale = epsilon / norm;
    st.a *= scale;
    st.b *= scale;

    NonresData out;
    out.U = u_lambda(st);
    const auto triples = resonant_triples(*lat);
    const auto report = check_nonres(out.U, *lat, triples, cert.c0, NonresForm::U);
    if (!report.pass)
        throw CertificationError("make_nonresonant: constructed data failed its own certificate");
    cert.measured_margin = report.worst_margin;
    cert.triples_checked = report.triples_checked;
    out.state = std::move(st);
    out.certificate = cert;
    return out;
}

PerturbationReport perturbation_margin(const PhysicalState& base, const PhysicalState& pert,
                                       double base_c0) {
    const auto Ub = u_lambda(base);
    const auto Up = u_lambda(pert);
    PerturbationReport rep;
    double mu2 = 0.0;
    for (std::size_t s = 0; s < Ub.size(); ++s) {
        if (Ub[s] > 0.0) {
            mu2 = std::max(mu2, Up[s] / Ub[s]);
        } else if (Up[s] > 0.0) {
            rep.dominated = false;
            rep.offending_shell = base.a.lattice()->shell(s).n;
            rep.mu = std::numeric_limits<double>::infinity();
            rep.c0_new = 0.0;
            return rep;
        }
    }
    rep.mu = std::sqrt(mu2);
    rep.c0_new = std::max(0.0, base_c0 - 4.0 * rep.mu);
    return rep;
}

}  // namespace kirchlab
