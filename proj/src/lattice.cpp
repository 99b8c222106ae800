#include "kirchlab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kirchlab {

SquarefreeParts squarefree_decompose(std::int64_t n) {
    if (n < 1) throw std::invalid_argument("squarefree_decompose: n must be >= 1");
    SquarefreeParts out;
    std::int64_t rest = n;
    for (std::int64_t q = 2; q * q <= rest; ++q) {
        if (rest % q != 0) continue;
        int mult = 0;
        while (rest % q == 0) {
            rest /= q;
            ++mult;
        }
        for (int i = 0; i < mult / 2; ++i) out.m *= q;
        if (mult % 2 != 0) out.p *= q;
    }
    out.p *= rest;  // leftover prime, exponent one
    return out;
}

namespace {

void enumerate_points(int dim, std::int64_t n_max, std::vector<int>& current,
                      std::vector<std::vector<int>>& out) {
    if (static_cast<int>(current.size()) == dim) {
        std::int64_t n = 0;
        for (int c : current) n += static_cast<std::int64_t>(c) * c;
        if (n >= 1 && n <= n_max) out.push_back(current);
        return;
    }
    const int kmax = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_max)))) + 1;
    for (int c = -kmax; c <= kmax; ++c) {
        current.push_back(c);
        enumerate_points(dim, n_max, current, out);
        current.pop_back();
    }
}

std::int64_t norm2(const std::vector<int>& k) {
    std::int64_t n = 0;
    for (int c : k) n += static_cast<std::int64_t>(c) * c;
    return n;
}

}  // namespace

std::shared_ptr<Lattice> Lattice::build(int dimension, std::int64_t n_max) {
    if (dimension < 1) throw std::invalid_argument("Lattice::build: dimension must be >= 1");
    if (n_max < 1) throw std::invalid_argument("Lattice::build: n_max must be >= 1");

    auto lat = std::make_shared<Lattice>();
    lat->dim_ = dimension;
    lat->n_max_ = n_max;

    std::vector<std::vector<int>> pts;
    std::vector<int> scratch;
    enumerate_points(dimension, n_max, scratch, pts);
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        const std::int64_t na = norm2(a), nb = norm2(b);
        if (na != nb) return na < nb;
        return a < b;
    });

    const std::size_t npts = pts.size();
    lat->coords_.reserve(npts * dimension);
    lat->shell_of_point_.resize(npts);
    lat->neg_of_point_.resize(npts);

    for (std::size_t i = 0; i < npts; ++i) {
        lat->point_index_[pts[i]] = static_cast<std::int32_t>(i);
        for (int c : pts[i]) lat->coords_.push_back(c);
    }

    std::vector<int> neg(dimension);
    for (std::size_t i = 0; i < npts; ++i) {
        for (int c = 0; c < dimension; ++c) neg[c] = -pts[i][c];
        lat->neg_of_point_[i] = lat->point_index_.at(neg);

        const std::int64_t n = norm2(pts[i]);
        auto it = lat->shell_index_.find(n);
        std::int32_t s;
        if (it == lat->shell_index_.end()) {
            s = static_cast<std::int32_t>(lat->shells_.size());
            lat->shell_index_[n] = s;
            Shell sh;
            sh.n = n;
            const auto parts = squarefree_decompose(n);
            sh.m = parts.m;
            sh.p = parts.p;
            sh.lambda = std::sqrt(static_cast<double>(n));
            lat->shells_.push_back(std::move(sh));
        } else {
            s = it->second;
        }
        lat->shell_of_point_[i] = s;
        lat->shells_[s].members.push_back(static_cast<std::int32_t>(i));
    }
    return lat;
}

std::optional<std::size_t> Lattice::find_point(std::span<const int> k) const {
    std::vector<int> key(k.begin(), k.end());
    auto it = point_index_.find(key);
    if (it == point_index_.end()) return std::nullopt;
    return static_cast<std::size_t>(it->second);
}

std::optional<std::size_t> Lattice::shell_index_of(std::int64_t n) const {
    auto it = shell_index_.find(n);
    if (it == shell_index_.end()) return std::nullopt;
    return static_cast<std::size_t>(it->second);
}

TripleSet resonant_triples(const Lattice& lat) {
    TripleSet ts;
    const auto& shells = lat.shells();
    ts.sum_pairs.resize(shells.size());
    ts.diff_pairs.resize(shells.size());

    // class p -> (m -> shell index)
    std::map<std::int64_t, std::map<std::int64_t, std::int32_t>> classes;
    for (std::size_t s = 0; s < shells.size(); ++s)
        classes[shells[s].p][shells[s].m] = static_cast<std::int32_t>(s);

    for (const auto& [p, by_m] : classes) {
        for (auto ia = by_m.begin(); ia != by_m.end(); ++ia) {
            for (auto ib = ia; ib != by_m.end(); ++ib) {
                auto ic = by_m.find(ia->first + ib->first);
                if (ic == by_m.end()) continue;
                const std::int32_t sa = ia->second, sb = ib->second, sc = ic->second;
                ts.sum_triples.push_back({sa, sb, sc});
                // ordered λ_i + λ_j = λ_c pairs
                ts.sum_pairs[sc].emplace_back(sa, sb);
                if (sa != sb) ts.sum_pairs[sc].emplace_back(sb, sa);
                // ordered λ_i - λ_j = λ pairs: λ_c - λ_b = λ_a and λ_c - λ_a = λ_b
                ts.diff_pairs[sa].emplace_back(sc, sb);
                if (sa != sb) ts.diff_pairs[sb].emplace_back(sc, sa);
            }
        }
    }
    return ts;
}

std::string shell_table_csv(const Lattice& lat) {
    std::ostringstream os;
    os << "n,m,p,member_count\n";
    for (const auto& sh : lat.shells())
        os << sh.n << ',' << sh.m << ',' << sh.p << ',' << sh.members.size() << '\n';
    return os.str();
}

}  // namespace kirchlab
