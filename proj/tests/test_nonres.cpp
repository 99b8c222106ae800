#include "kirchlab/nonres.hpp"

#include "kirchlab/dynamics.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace kirchlab;
using namespace kirchlab::testing;

TEST_CASE("rational arithmetic basics") {
    const Rational a(1, 3), b(1, 6);
    CHECK((a + b) == Rational(1, 2));
    CHECK((a - b) == Rational(1, 6));
    CHECK((a * b) == Rational(1, 18));
    CHECK((a / b) == Rational(2, 1));
    CHECK(Rational(-2, -4) == Rational(1, 2));
    CHECK(Rational(2, -4) == Rational(-1, 2));
    CHECK(b < a);
    CHECK_THROWS_AS(Rational(1, 0), std::invalid_argument);
}

TEST_CASE("check_nonres on the flat profile") {
    auto lat = Lattice::build(1, 9);  // shells 1,2,3 -> triples (1,1,2),(1,2,3)
    const auto triples = resonant_triples(*lat);
    const std::vector<double> U = {2.0, 2.0, 2.0};
    const auto rep = check_nonres(U, *lat, triples, 1.0 / 3.0);
    CHECK(rep.pass);
    CHECK(rep.worst_margin == doctest::Approx(1.0 / 3.0));
    CHECK(rep.triples_checked == 2);
    const auto tighter = check_nonres(U, *lat, triples, 0.34);
    CHECK(!tighter.pass);
    CHECK(tighter.violations.size() == 2);
    CHECK_THROWS_AS(check_nonres(U, *lat, triples, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(check_nonres(U, *lat, triples, 1.5), std::invalid_argument);
}

TEST_CASE("decreasing profiles achieve one third; Γ₀ legs are skipped") {
    auto lat = Lattice::build(1, 64);
    const auto triples = resonant_triples(*lat);
    std::vector<double> U(lat->num_shells());
    for (std::size_t s = 0; s < U.size(); ++s) U[s] = 1.0 / static_cast<double>(s + 1);
    CHECK(check_nonres(U, *lat, triples, 1.0 / 3.0).pass);

    // odd-integer support: no triples survive
    std::vector<double> odd(lat->num_shells(), 0.0);
    for (std::size_t s = 0; s < odd.size(); ++s)
        if (lat->shell(s).m % 2 == 1) odd[s] = 1.0;
    const auto rep = check_nonres(odd, *lat, triples, 1.0);
    CHECK(rep.pass);
    CHECK(rep.triples_checked == 0);
}

TEST_CASE("scale invariance of margins") {
    auto lat = Lattice::build(1, 36);
    const auto triples = resonant_triples(*lat);
    Rng rng(5);
    std::vector<double> U(lat->num_shells());
    for (auto& u : U) u = rng.uniform(0.1, 2.0);
    const auto r1 = check_nonres(U, *lat, triples, 0.05);
    for (auto& u : U) u *= 37.5;
    const auto r2 = check_nonres(U, *lat, triples, 0.05);
    CHECK(r1.worst_margin == doctest::Approx(r2.worst_margin).epsilon(1e-12));
    CHECK(r1.pass == r2.pass);
}

TEST_CASE("melnikov variant with explicit enumeration") {
    auto lat = Lattice::build(1, 64);
    const auto triples = resonant_triples(*lat);
    std::vector<double> U(lat->num_shells());
    for (std::size_t s = 0; s < U.size(); ++s)
        U[s] = std::pow(lat->shell(s).lambda, -6.0);
    const double c0 = 0.1, tau = 2.0;
    const auto rep = check_melnikov(U, *lat, triples, c0, tau);
    // independent enumeration
    bool expect_pass = true;
    for (const auto& tr : triples.sum_triples) {
        const double a = lat->shell(tr.sa).lambda, b = lat->shell(tr.sb).lambda,
                     l = lat->shell(tr.sc).lambda;
        const double diff = std::abs(std::pow(a, -6.0) + std::pow(b, -6.0) - std::pow(l, -6.0));
        if (diff < c0 / std::pow(std::min({a, b, l}), tau)) expect_pass = false;
    }
    CHECK(rep.pass == expect_pass);

    const std::vector<double> zero(lat->num_shells(), 0.0);
    CHECK(check_melnikov(zero, *lat, triples, c0, tau).pass);  // vacuous
    CHECK_THROWS_AS(check_melnikov(U, *lat, triples, -1.0, tau), std::invalid_argument);
}

TEST_CASE("constructors: certificates and scaling") {
    auto lat = Lattice::build(1, 64);
    const double eps = 0.05;
    const double m1 = m1_of_dim(1);

    const auto dec = make_nonresonant(DataRecipe::Decreasing, lat, eps);
    CHECK(dec.certificate.c0 == 1.0 / 3.0);
    CHECK(*dec.certificate.c0_exact == Rational(1, 3));
    CHECK(dec.certificate.measured_margin >= 1.0 / 3.0);
    CHECK(sobolev_norm(dec.state.a, m1 + 0.5) + sobolev_norm(dec.state.b, m1 - 0.5) ==
          doctest::Approx(eps).epsilon(1e-12));

    const auto pow3 = make_nonresonant(DataRecipe::PowerDecay, lat, eps);
    CHECK(pow3.certificate.c0 == 1.0 / 3.0);
    CHECK(pow3.certificate.measured_margin >= 1.0 / 3.0);
    // realized profile is proportional to λ^{-2σ}
    for (std::size_t s = 1; s < pow3.U.size(); ++s) {
        const double expect = std::pow(lat->shell(s).lambda / lat->shell(0).lambda, -6.0);
        CHECK(pow3.U[s] / pow3.U[0] == doctest::Approx(expect).epsilon(1e-10));
    }
    MakeOptions bad;
    bad.sigma = 0.5;
    CHECK_THROWS_AS(make_nonresonant(DataRecipe::PowerDecay, lat, eps, bad),
                    std::invalid_argument);

    const auto odd = make_nonresonant(DataRecipe::OddSupport, lat, eps);
    CHECK(odd.certificate.c0 == 1.0);
    CHECK(odd.certificate.triples_checked == 0);
    for (std::size_t s = 0; s < odd.U.size(); ++s) {
        const auto& sh = lat->shell(s);
        if (!(sh.p == 1 && sh.m % 2 == 1)) CHECK(odd.U[s] == 0.0);
    }
}

TEST_CASE("sequential construction avoids every interval, exactly") {
    const Rational c0(1, 9);
    for (int d = 1; d <= 2; ++d) {
        auto lat = Lattice::build(d, d == 1 ? 64 : 20);
        const auto prof = sequential_profile(*lat, c0);
        CHECK(prof.theta1 == Rational(8, 10));
        CHECK(prof.theta2 == Rational(10, 8));
        const auto triples = resonant_triples(*lat);
        for (const auto& tr : triples.sum_triples) {
            const Rational sum = prof.sigma[tr.sa] + prof.sigma[tr.sb];
            const Rational lo = prof.theta1 * sum, hi = prof.theta2 * sum;
            const Rational& sl = prof.sigma[tr.sc];
            const bool outside = sl <= lo || hi <= sl;
            CHECK(outside);
        }
        // and the double-precision profile passes the float checker at 1/9
        std::vector<double> U;
        for (const auto& r : prof.sigma) U.push_back(r.value());
        CHECK(check_nonres(U, *lat, triples, c0.value()).pass);
    }

    auto lat = Lattice::build(1, 36);
    const auto data = make_nonresonant(DataRecipe::Sequential, lat, 0.05);
    CHECK(data.certificate.c0 == doctest::Approx(1.0 / 9.0));
    CHECK(data.certificate.measured_margin >= 1.0 / 9.0);
}

TEST_CASE("perturbation margins") {
    auto lat = Lattice::build(1, 16);
    // dyadic base: decreasing U, exact arithmetic all the way through
    PhysicalState base{SpectralField(lat), SpectralField(lat)};
    for (std::size_t s = 0; s < lat->num_shells(); ++s) {
        const double amp = std::ldexp(1.0, -2 * static_cast<int>(s) - 1);
        for (auto i : lat->shell(s).members) base.a[i] = amp;
    }
    const double c0 = 1.0 / 3.0;

    PhysicalState zero{SpectralField(lat), SpectralField(lat)};
    const auto r0 = perturbation_margin(base, zero, c0);
    CHECK(r0.mu == 0.0);
    CHECK(r0.c0_new == c0);

    // coefficient-wise μ₀ = 1/24 scaling: exact rational outcome 1/3 - 4/24 = 1/6
    const double mu0 = 1.0 / 24.0;
    PhysicalState pert{base.a, base.b};
    pert.a *= mu0;
    const auto r1 = perturbation_margin(base, pert, c0);
    CHECK(r1.mu == mu0);          // bit-exact: sqrt(fl(mu0²)) == mu0
    CHECK(r1.c0_new == 1.0 / 6.0);  // bit-exact: fl(1/3) - 4·fl(1/24) == fl(1/6)

    // perturbation on a Γ₀ shell of the base
    PhysicalState base2{SpectralField(lat), SpectralField(lat)};
    for (auto i : lat->shell(0).members) base2.a[i] = 0.5;
    PhysicalState pert2{SpectralField(lat), SpectralField(lat)};
    for (auto i : lat->shell(1).members) pert2.a[i] = 0.01;
    const auto r2 = perturbation_margin(base2, pert2, c0);
    CHECK(!r2.dominated);
    CHECK(std::isinf(r2.mu));
    CHECK(r2.c0_new == 0.0);
    CHECK(r2.offending_shell == 4);
}

TEST_CASE("perturbation bound is sound on random admissible perturbations") {
    auto lat = Lattice::build(1, 49);
    const auto triples = resonant_triples(*lat);
    const auto base = make_nonresonant(DataRecipe::PowerDecay, lat, 0.5);
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        // random small perturbation supported on the base's shells
        PhysicalState pert{SpectralField(lat), SpectralField(lat)};
        for (std::size_t i = 0; i < pert.a.size(); ++i) {
            const auto ni = lat->neg_point(i);
            if (ni < static_cast<std::int32_t>(i)) continue;
            const Complex c{rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3)};
            pert.a[i] = c * std::abs(base.state.a[i]);
            pert.a[ni] = std::conj(pert.a[i]);
        }
        const auto rep = perturbation_margin(base.state, pert, base.certificate.c0);
        REQUIRE(rep.dominated);
        PhysicalState summed{base.state.a + pert.a, base.state.b + pert.b};
        const auto check = check_nonres(u_lambda(summed), *lat, triples,
                                        std::max(rep.c0_new, 1e-9));
        CHECK(check.pass);
    }
}
