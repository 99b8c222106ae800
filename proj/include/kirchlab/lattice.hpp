// lattice.hpp — frequency lattice of the torus, organized into shells
//
// The frequency set is Γ = { |k| : k ∈ Z^d \ {0} } ⊆ { √n : n ∈ N }.
// A "shell" collects all lattice points with a common |k|² = n; its radius
// λ = √n is stored in the exact form n = m²·p with p squarefree, so that
// identities like √n_a + √n_b = √n_c are decided by integer arithmetic
// (possible only within one squarefree class, where they reduce to
// m_a + m_b = m_c).  No floating-point comparison of radii anywhere.

#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kirchlab {

struct SquarefreeParts {
    std::int64_t m = 1;
    std::int64_t p = 1;  // squarefree, n = m²·p
};

// n = m²·p with p squarefree, by trial division.
SquarefreeParts squarefree_decompose(std::int64_t n);

struct Shell {
    std::int64_t n = 0;       // exact key |k|²
    std::int64_t m = 1;       // n = m²·p
    std::int64_t p = 1;       // squarefree class
    double lambda = 0.0;      // √n, for coefficients and display only
    std::vector<std::int32_t> members;  // point indices, closed under k ↦ -k
};

class Lattice {
public:
    // All points k ∈ Z^d \ {0} with |k|² ≤ n_max, grouped into shells with
    // strictly increasing keys n.  Throws std::invalid_argument for d < 1
    // or n_max < 1.
    static std::shared_ptr<Lattice> build(int dimension, std::int64_t n_max);

    int dim() const { return dim_; }
    std::int64_t n_max() const { return n_max_; }

    std::size_t num_points() const { return shell_of_point_.size(); }
    std::size_t num_shells() const { return shells_.size(); }

    std::span<const int> point(std::size_t i) const {
        return {coords_.data() + i * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }
    // index of -k
    std::int32_t neg_point(std::size_t i) const { return neg_of_point_[i]; }
    std::int32_t shell_of_point(std::size_t i) const { return shell_of_point_[i]; }

    const Shell& shell(std::size_t s) const { return shells_[s]; }
    const std::vector<Shell>& shells() const { return shells_; }

    std::optional<std::size_t> find_point(std::span<const int> k) const;
    std::optional<std::size_t> shell_index_of(std::int64_t n) const;

    // λ of the largest shell
    double lambda_max() const { return shells_.back().lambda; }

private:
    int dim_ = 0;
    std::int64_t n_max_ = 0;
    std::vector<int> coords_;                 // flat, stride dim_
    std::vector<std::int32_t> shell_of_point_;
    std::vector<std::int32_t> neg_of_point_;
    std::vector<Shell> shells_;
    std::map<std::vector<int>, std::int32_t> point_index_;
    std::map<std::int64_t, std::int32_t> shell_index_;
};

using LatticeRef = std::shared_ptr<const Lattice>;

// One exact resonance √n_a + √n_b = √n_c among shell radii; a, b unordered
// (stored with sa ≤ sb).  Indices refer to Lattice::shell.
struct Triple {
    std::int32_t sa = 0, sb = 0, sc = 0;
};

// Resonance structure of a lattice: the triples themselves plus, for each
// shell s, the ordered pair lists used when evaluating sums restricted to
// λ_i + λ_j = λ_s and λ_i - λ_j = λ_s.
struct TripleSet {
    std::vector<Triple> sum_triples;
    // ordered (s1,s2) with λ_{s1} + λ_{s2} = λ_s
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> sum_pairs;
    // ordered (s1,s2) with λ_{s1} - λ_{s2} = λ_s
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> diff_pairs;
};

// Exact triple detection through squarefree classes and integer sums of the
// m-parts.  Cross-class sums √p₁-class + √p₂-class never resonate.
TripleSet resonant_triples(const Lattice& lat);

// Shell table as CSV with columns n,m,p,member_count.
std::string shell_table_csv(const Lattice& lat);

}  // namespace kirchlab
