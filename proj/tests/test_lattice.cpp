#include "kirchlab/lattice.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <set>

using namespace kirchlab;
using namespace kirchlab::testing;

TEST_CASE("squarefree decomposition") {
    auto check = [](std::int64_t n, std::int64_t m, std::int64_t p) {
        const auto r = squarefree_decompose(n);
        CHECK(r.m == m);
        CHECK(r.p == p);
        CHECK(r.m * r.m * r.p == n);
    };
    check(1, 1, 1);
    check(8, 2, 2);
    check(12, 2, 3);
    check(49, 7, 1);
    check(360, 6, 10);
    CHECK_THROWS_AS(squarefree_decompose(0), std::invalid_argument);
}

TEST_CASE("d=1 lattice up to n_max=9") {
    auto lat = Lattice::build(1, 9);
    CHECK(lat->num_shells() == 3);
    CHECK(lat->shell(0).n == 1);
    CHECK(lat->shell(1).n == 4);
    CHECK(lat->shell(2).n == 9);
    for (std::size_t s = 0; s < 3; ++s) CHECK(lat->shell(s).members.size() == 2);
    CHECK_THROWS_AS(Lattice::build(0, 4), std::invalid_argument);
    CHECK_THROWS_AS(Lattice::build(1, 0), std::invalid_argument);
}

TEST_CASE("d=2 shells n=1,2 and n=25") {
    auto lat = Lattice::build(2, 2);
    REQUIRE(lat->num_shells() == 2);
    CHECK(lat->shell(0).members.size() == 4);  // ±e1, ±e2
    CHECK(lat->shell(1).members.size() == 4);  // (±1,±1)

    auto big = Lattice::build(2, 25);
    const auto s25 = big->shell_index_of(25);
    REQUIRE(s25.has_value());
    // brute force count of a²+b²=25 over pairs
    int count = 0;
    for (int a = -5; a <= 5; ++a)
        for (int b = -5; b <= 5; ++b)
            if (a * a + b * b == 25) ++count;
    CHECK(big->shell(*s25).members.size() == static_cast<std::size_t>(count));
    CHECK(count == 12);
}

TEST_CASE("shells closed under negation, members share the key") {
    auto lat = Lattice::build(3, 30);
    for (std::size_t s = 0; s < lat->num_shells(); ++s) {
        const Shell& sh = lat->shell(s);
        CHECK(!sh.members.empty());
        CHECK(sh.m * sh.m * sh.p == sh.n);
        for (auto i : sh.members) {
            CHECK(lat->shell_of_point(lat->neg_point(i)) == static_cast<std::int32_t>(s));
            std::int64_t n = 0;
            for (int c : lat->point(i)) n += static_cast<std::int64_t>(c) * c;
            CHECK(n == sh.n);
        }
    }
}

TEST_CASE("resonant triples: d=1 examples") {
    auto lat = Lattice::build(1, 16);  // lambda 1..4
    const auto ts = resonant_triples(*lat);
    const auto keys = triples_to_keys(*lat, ts);
    const TripleKeys expected = {{1, 1, 4}, {1, 4, 9}, {1, 9, 16}, {4, 4, 16}};
    CHECK(keys == expected);
}

TEST_CASE("resonant triples: one cross-shell class in d=2") {
    // √2 + √8 = √18 inside the class p=2
    auto lat = Lattice::build(2, 18);
    const auto ts = resonant_triples(*lat);
    bool found = false;
    for (const auto& tr : ts.sum_triples)
        if (lat->shell(tr.sa).n == 2 && lat->shell(tr.sb).n == 8 && lat->shell(tr.sc).n == 18)
            found = true;
    CHECK(found);
}

TEST_CASE("distinct squarefree classes cannot sum") {
    auto lat = Lattice::build(2, 2);  // shells 1 and 2 only
    const auto ts = resonant_triples(*lat);
    CHECK(ts.sum_triples.empty());
}

TEST_CASE("class arithmetic equals float brute force on moderate lattices") {
    for (int d = 1; d <= 3; ++d) {
        auto lat = Lattice::build(d, d == 3 ? 60 : 120);
        const auto ts = resonant_triples(*lat);
        CHECK(triples_to_keys(*lat, ts) == brute_force_triples(*lat));
        for (const auto& tr : ts.sum_triples) {
            CHECK(lat->shell(tr.sa).p == lat->shell(tr.sc).p);
            CHECK(lat->shell(tr.sb).p == lat->shell(tr.sc).p);
            CHECK(lat->shell(tr.sa).m + lat->shell(tr.sb).m == lat->shell(tr.sc).m);
        }
    }
}

TEST_CASE("sum and diff pair lists are consistent with the triples") {
    auto lat = Lattice::build(1, 25);
    const auto ts = resonant_triples(*lat);
    std::size_t npairs = 0;
    for (std::size_t t = 0; t < lat->num_shells(); ++t) {
        for (const auto& [s1, s2] : ts.sum_pairs[t])
            CHECK(lat->shell(s1).lambda + lat->shell(s2).lambda ==
                  doctest::Approx(lat->shell(t).lambda).epsilon(1e-12));
        for (const auto& [s1, s2] : ts.diff_pairs[t])
            CHECK(lat->shell(s1).lambda - lat->shell(s2).lambda ==
                  doctest::Approx(lat->shell(t).lambda).epsilon(1e-12));
        npairs += ts.sum_pairs[t].size();
    }
    CHECK(npairs > 0);
}

TEST_CASE("shell table CSV") {
    auto lat = Lattice::build(1, 4);
    CHECK(shell_table_csv(*lat) == "n,m,p,member_count\n1,1,1,2\n4,2,1,2\n");
}
