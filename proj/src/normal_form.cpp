#include "kirchlab/normal_form.hpp"

#include "residual_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kirchlab {

namespace {

constexpr Complex kI{0.0, 1.0};

double cube_eq(double x, double y2) { return x * x * (1.0 + 2.0 * x) - y2; }

}  // namespace

double phi_of(double y) {
    if (y < 0.0) {
        if (y > -1e-12) return 0.0;
        throw std::invalid_argument("phi_of: negative argument");
    }
    if (y == 0.0) return 0.0;
    const double y2 = y * y;
    double lo = 0.0, hi = std::max(1.0, y);
    double x = y;  // initial guess
    for (int it = 0; it < 200; ++it) {
        const double h = cube_eq(x, y2);
        if (h > 0.0)
            hi = x;
        else
            lo = x;
        const double dh = 2.0 * x + 6.0 * x * x;
        double next = (dh > 0.0) ? x - h / dh : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= constants::kPhiRootTol * std::max(1.0, std::abs(x))) {
            return next;
        }
        x = next;
    }
    throw NumericError("phi_of: root-find did not converge for y=" + std::to_string(y));
}

double rho_of(double x) { return -x / (1.0 + x + std::sqrt(1.0 + 2.0 * x)); }

// ---------------------------------------------------------------------------
// linear stages

PhysicalState phi1_forward(const RealPair& qp) {
    const Lattice& lat = *qp.q.lattice();
    PhysicalState out{SpectralField(qp.q.lattice()), SpectralField(qp.q.lattice())};
    for (std::size_t i = 0; i < qp.q.size(); ++i) {
        const double lam = lat.shell(lat.shell_of_point(i)).lambda;
        const double r = std::sqrt(lam);
        out.a[i] = qp.q[i] / r;
        out.b[i] = qp.p[i] * r;
    }
    return out;
}

RealPair phi1_inverse(const PhysicalState& ab) {
    const Lattice& lat = *ab.a.lattice();
    RealPair out{SpectralField(ab.a.lattice()), SpectralField(ab.a.lattice())};
    for (std::size_t i = 0; i < ab.a.size(); ++i) {
        const double lam = lat.shell(lat.shell_of_point(i)).lambda;
        const double r = std::sqrt(lam);
        out.q[i] = ab.a[i] * r;
        out.p[i] = ab.b[i] / r;
    }
    return out;
}

RealPair phi2_forward(const ConjugatePair& fg) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    RealPair out{SpectralField(fg.u.lattice()), SpectralField(fg.u.lattice())};
    for (std::size_t i = 0; i < fg.u.size(); ++i) {
        out.q[i] = (fg.u[i] + fg.v[i]) * inv_sqrt2;
        out.p[i] = -kI * (fg.u[i] - fg.v[i]) * inv_sqrt2;
    }
    return out;
}

ConjugatePair phi2_inverse(const RealPair& qp) {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    ConjugatePair out{SpectralField(qp.q.lattice()), SpectralField(qp.q.lattice())};
    for (std::size_t i = 0; i < qp.q.size(); ++i) {
        out.u[i] = (qp.q[i] + kI * qp.p[i]) * inv_sqrt2;
        out.v[i] = (qp.q[i] - kI * qp.p[i]) * inv_sqrt2;
    }
    return out;
}

// ---------------------------------------------------------------------------
// stage 3

namespace {

// Q(f,g) = ¼ ⟨Λ(f+g), f+g⟩, real for conjugate pairs
double quadratic_Q(const ConjugatePair& pair) {
    const Lattice& lat = *pair.u.lattice();
    SpectralField sum = pair.u;
    sum += pair.v;
    const auto T = shell_pair_sums(sum, sum);
    double q = 0.0;
    for (std::size_t s = 0; s < T.size(); ++s) q += lat.shell(s).lambda * T[s].real();
    return 0.25 * q;
}

ConjugatePair mix(const ConjugatePair& pair, double diag, double off) {
    ConjugatePair out{SpectralField(pair.u.lattice()), SpectralField(pair.u.lattice())};
    for (std::size_t i = 0; i < pair.u.size(); ++i) {
        out.u[i] = diag * pair.u[i] + off * pair.v[i];
        out.v[i] = off * pair.u[i] + diag * pair.v[i];
    }
    return out;
}

}  // namespace

Phi3Scalars phi3_scalars(const ConjugatePair& pair) {
    Phi3Scalars s;
    s.Q = quadratic_Q(pair);
    s.P = phi_of(s.Q);
    s.rho = rho_of(s.P);
    s.calP = std::sqrt(1.0 + 2.0 * s.P) - 1.0;
    return s;
}

ConjugatePair phi3(StageDir dir, const ConjugatePair& pair) {
    if (dir == StageDir::Forward) {
        const auto s = phi3_scalars(pair);
        const double den = std::sqrt(1.0 - s.rho * s.rho);
        return mix(pair, 1.0 / den, s.rho / den);
    }
    const double r = rho_of(quadratic_Q(pair));
    const double den = std::sqrt(1.0 - r * r);
    return mix(pair, 1.0 / den, -r / den);
}

// ---------------------------------------------------------------------------
// stage 4

namespace {

// per-output-shell multipliers Σ_s T[s]·|λ_s|²/8(λ_s ∓ λ_t)
std::vector<Complex> a12_multipliers(const Lattice& lat, const std::vector<Complex>& T) {
    std::vector<Complex> out(lat.num_shells(), Complex{0.0, 0.0});
    for (std::size_t t = 0; t < lat.num_shells(); ++t) {
        const Shell& st = lat.shell(t);
        Complex acc{0.0, 0.0};
        for (std::size_t s = 0; s < lat.num_shells(); ++s) {
            const Shell& sj = lat.shell(s);
            if (sj.n == st.n) continue;
            acc += T[s] * (sj.lambda * sj.lambda / (8.0 * (sj.lambda - st.lambda)));
        }
        out[t] = acc;
    }
    return out;
}

std::vector<Complex> c12_multipliers(const Lattice& lat, const std::vector<Complex>& T) {
    std::vector<Complex> out(lat.num_shells(), Complex{0.0, 0.0});
    for (std::size_t t = 0; t < lat.num_shells(); ++t) {
        const Shell& st = lat.shell(t);
        Complex acc{0.0, 0.0};
        for (std::size_t s = 0; s < lat.num_shells(); ++s) {
            const Shell& sj = lat.shell(s);
            acc += T[s] * (sj.lambda * sj.lambda / (8.0 * (sj.lambda + st.lambda)));
        }
        out[t] = acc;
    }
    return out;
}

SpectralField apply_shell_multiplier(const std::vector<Complex>& mult, const SpectralField& h) {
    const Lattice& lat = *h.lattice();
    SpectralField out(h.lattice());
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = mult[lat.shell_of_point(i)] * h[i];
    return out;
}

// M(w,z)(α,β) = ( (A12[w,w]+C12[z,z]) β, (A12[z,z]+C12[w,w]) α )
ConjugatePair apply_M4(const ConjugatePair& wz, const ConjugatePair& ab) {
    const Lattice& lat = *wz.u.lattice();
    const auto Tww = shell_pair_sums(wz.u, wz.u);
    const auto Tzz = shell_pair_sums(wz.v, wz.v);
    auto m12 = a12_multipliers(lat, Tww);
    {
        const auto c = c12_multipliers(lat, Tzz);
        for (std::size_t t = 0; t < m12.size(); ++t) m12[t] += c[t];
    }
    auto m21 = a12_multipliers(lat, Tzz);
    {
        const auto c = c12_multipliers(lat, Tww);
        for (std::size_t t = 0; t < m21.size(); ++t) m21[t] += c[t];
    }
    return {apply_shell_multiplier(m12, ab.v), apply_shell_multiplier(m21, ab.u)};
}

// E(w,z)(α,β) = ( 2A12[w,α]z + 2C12[z,β]z, 2C12[w,α]w + 2A12[z,β]w )
ConjugatePair apply_E4(const ConjugatePair& wz, const ConjugatePair& ab) {
    const Lattice& lat = *wz.u.lattice();
    const auto Twa = shell_pair_sums(wz.u, ab.u);
    const auto Tzb = shell_pair_sums(wz.v, ab.v);
    auto e1 = a12_multipliers(lat, Twa);
    auto e2 = c12_multipliers(lat, Twa);
    {
        const auto c = c12_multipliers(lat, Tzb);
        const auto a = a12_multipliers(lat, Tzb);
        for (std::size_t t = 0; t < e1.size(); ++t) {
            e1[t] = 2.0 * (e1[t] + c[t]);
            e2[t] = 2.0 * (e2[t] + a[t]);
        }
    }
    return {apply_shell_multiplier(e1, wz.v), apply_shell_multiplier(e2, wz.u)};
}

ConjugatePair apply_K4(const ConjugatePair& wz, const ConjugatePair& ab) {
    auto m = apply_M4(wz, ab);
    const auto e = apply_E4(wz, ab);
    m.u += e.u;
    m.v += e.v;
    return m;
}

double pair_norm(const ConjugatePair& p, double s) {
    return std::max(sobolev_norm(p.u, s), sobolev_norm(p.v, s));
}

ConjugatePair pair_diff(const ConjugatePair& a, const ConjugatePair& b) {
    return {a.u - b.u, a.v - b.v};
}

}  // namespace

SpectralField a12_c12_apply(FixApply which, const SpectralField& u, const SpectralField& v,
                            const SpectralField& h) {
    const Lattice& lat = *u.lattice();
    const auto T = shell_pair_sums(u, v);
    const auto mult =
        which == FixApply::A12 ? a12_multipliers(lat, T) : c12_multipliers(lat, T);
    return apply_shell_multiplier(mult, h);
}

ConjugatePair phi4(StageDir dir, const ConjugatePair& pair, double tol) {
    if (dir == StageDir::Forward) {
        auto out = apply_M4(pair, pair);
        out.u += pair.u;
        out.v += pair.v;
        return out;
    }
    const double m0 = m0_of_dim(pair.u.lattice()->dim());
    ConjugatePair x = pair;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < constants::kFixedPointCap; ++it) {
        auto corr = apply_M4(x, x);
        ConjugatePair next{pair.u - corr.u, pair.v - corr.v};
        const double err = pair_norm(pair_diff(next, x), m0);
        x = std::move(next);
        if (err <= tol) return x;
        if (err > 4.0 * prev && err > 1.0)
            throw NumericError("phi4 inverse: iteration diverges (outside the ball)");
        prev = err;
    }
    throw NumericError("phi4 inverse: fixed point did not converge");
}

// tol == 0 iterates to stagnation (the increment stops shrinking)
ConjugatePair inv_I_plus_K4(const ConjugatePair& wz, const ConjugatePair& rhs, double tol) {
    const double m0 = m0_of_dim(wz.u.lattice()->dim());
    ConjugatePair x = rhs;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < constants::kFixedPointCap; ++it) {
        auto kx = apply_K4(wz, x);
        ConjugatePair next{rhs.u - kx.u, rhs.v - kx.v};
        const double err = pair_norm(pair_diff(next, x), m0);
        x = std::move(next);
        if (err <= tol) return x;
        if (tol == 0.0 && err >= prev && it > 0) return x;
        if (err > 4.0 * prev && err > 1.0)
            throw NumericError("(I+K)^-1: iteration diverges");
        prev = err;
    }
    if (tol == 0.0) return x;
    throw NumericError("(I+K)^-1: fixed point did not converge");
}

// ---------------------------------------------------------------------------
// stage 5 coefficients

double phi5_coefficient(Phi5Family family, const Shell& j, const Shell& l, const Shell& k) {
    const double x = j.lambda, y = l.lambda, z = k.lambda;
    const bool dxy = j.n == l.n, dxz = j.n == k.n, dyz = l.n == k.n;
    switch (family) {
        case Phi5Family::a11:
            return x * x * y * y / (128.0 * (x + y)) * (1.0 / (x + z) + 1.0 / (y + z));
        case Phi5Family::b11:
        case Phi5Family::d11:
            return 0.0;
        case Phi5Family::c11: {
            if (dxy) return 0.0;
            double br = 1.0 / (x + z);
            if (dyz && !dxz) br += -1.0 / (x - z);
            if (!dyz) br -= 1.0 / (y - z);
            return x * x * y * y / 64.0 * br / (y - x);
        }
        case Phi5Family::f11: {
            double br = -((dyz ? 1.0 : 0.0) + (dxz ? 1.0 : 0.0)) / (x + y);
            if (!dxz) br += 1.0 / (x - z);
            if (!dyz) br += 1.0 / (y - z);
            return br * x * x * y * y / (128.0 * (x + y));
        }
        case Phi5Family::a12: {
            const bool resonant = j.p == l.p && l.p == k.p && j.m + l.m == k.m;
            if (resonant) return 0.0;
            return 3.0 / 64.0 * x * y * (x + y) / (z - x - y);
        }
        case Phi5Family::b12: {
            if (dxz) return 0.0;
            double br = 6.0 + y / (y + x);
            if (dxy && !dyz) br += y / (y - z);
            if (!dxy) br += y / (y - x);
            return x * x * y / 32.0 * br / (z - x);
        }
        case Phi5Family::c12: {
            const bool resonant = j.p == l.p && l.p == k.p && j.m - l.m == k.m;
            if (resonant) return 0.0;
            return 3.0 / 32.0 * x * y * (x - y) / (z - x + y);
        }
        case Phi5Family::d12: {
            double br = -6.0 - x / (y + x);
            if (dxy) br += -x / (x + z);
            if (!dxy) br += x / (y - x);
            return x * y * y * br / (32.0 * (z + y));
        }
        case Phi5Family::f12:
            return -3.0 * x * y * (x + y) / (64.0 * (z + x + y));
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// NormalForm

namespace {

// the eight families with nonzero entries, in table order
constexpr std::array<Phi5Family, 8> kFamilies = {
    Phi5Family::a11, Phi5Family::c11, Phi5Family::f11, Phi5Family::a12,
    Phi5Family::b12, Phi5Family::c12, Phi5Family::d12, Phi5Family::f12};

int family_slot(Phi5Family f) {
    for (int i = 0; i < 8; ++i)
        if (kFamilies[i] == f) return i;
    return -1;
}

constexpr std::size_t kTableBudget = 2'000'000;  // entries per family

}  // namespace

NormalForm::NormalForm(LatticeRef lat) : lat_(std::move(lat)), triples_(resonant_triples(*lat_)) {
    const std::size_t ns = lat_->num_shells();
    if (ns * ns * ns <= kTableBudget) {
        for (int f = 0; f < 8; ++f) {
            auto& tab = table_[f];
            tab.resize(ns * ns * ns);
            for (std::size_t s1 = 0; s1 < ns; ++s1)
                for (std::size_t s2 = 0; s2 < ns; ++s2)
                    for (std::size_t t = 0; t < ns; ++t)
                        tab[(s1 * ns + s2) * ns + t] = phi5_coefficient(
                            kFamilies[f], lat_->shell(s1), lat_->shell(s2), lat_->shell(t));
        }
        tabled_ = true;
    }
}

double NormalForm::coeff(Phi5Family f, std::size_t s1, std::size_t s2, std::size_t t) const {
    const int slot = family_slot(f);
    if (slot < 0) return 0.0;
    if (tabled_) {
        const std::size_t ns = lat_->num_shells();
        return table_[slot][(s1 * ns + s2) * ns + t];
    }
    return phi5_coefficient(f, lat_->shell(s1), lat_->shell(s2), lat_->shell(t));
}

NormalForm::Phi5Multipliers NormalForm::curlyM_multipliers(const ConjugatePair& uv) const {
    const std::size_t ns = lat_->num_shells();
    const auto Puu = shell_pair_sums(uv.u, uv.u);
    const auto Puv = shell_pair_sums(uv.u, uv.v);
    const auto Pvu = shell_pair_sums(uv.v, uv.u);
    const auto Pvv = shell_pair_sums(uv.v, uv.v);

    Phi5Multipliers m;
    m.m11.assign(ns, {});
    m.m12.assign(ns, {});
    m.m21.assign(ns, {});
    m.m22.assign(ns, {});
    for (std::size_t s1 = 0; s1 < ns; ++s1) {
        for (std::size_t s2 = 0; s2 < ns; ++s2) {
            const Complex uu_uu = Puu[s1] * Puu[s2];
            const Complex uu_vv = Puu[s1] * Pvv[s2];
            const Complex vv_uu = Pvv[s1] * Puu[s2];
            const Complex vv_vv = Pvv[s1] * Pvv[s2];
            const Complex uu_uv = Puu[s1] * Puv[s2];
            const Complex uv_vv = Puv[s1] * Pvv[s2];
            const Complex vv_vu = Pvv[s1] * Pvu[s2];
            const Complex vu_uu = Pvu[s1] * Puu[s2];
            for (std::size_t t = 0; t < ns; ++t) {
                const double a11 = coeff(Phi5Family::a11, s1, s2, t);
                const double c11 = coeff(Phi5Family::c11, s1, s2, t);
                const double f11 = coeff(Phi5Family::f11, s1, s2, t);
                const double a12 = coeff(Phi5Family::a12, s1, s2, t);
                const double b12 = coeff(Phi5Family::b12, s1, s2, t);
                const double c12 = coeff(Phi5Family::c12, s1, s2, t);
                const double d12 = coeff(Phi5Family::d12, s1, s2, t);
                const double f12 = coeff(Phi5Family::f12, s1, s2, t);
                m.m11[t] += a11 * uu_uu + c11 * uu_vv + f11 * vv_vv;
                m.m12[t] += a12 * uu_uu + b12 * uu_uv + c12 * uu_vv + d12 * uv_vv + f12 * vv_vv;
                m.m21[t] += a12 * vv_vv + b12 * vv_vu + c12 * vv_uu + d12 * vu_uu + f12 * uu_uu;
                m.m22[t] += a11 * vv_vv + c11 * vv_uu + f11 * uu_uu;
            }
        }
    }
    return m;
}

ConjugatePair NormalForm::apply_curlyM(const ConjugatePair& uv, const ConjugatePair& ab) const {
    const auto m = curlyM_multipliers(uv);
    ConjugatePair out{SpectralField(lat_), SpectralField(lat_)};
    for (std::size_t i = 0; i < ab.u.size(); ++i) {
        const auto t = lat_->shell_of_point(i);
        out.u[i] = m.m11[t] * ab.u[i] + m.m12[t] * ab.v[i];
        out.v[i] = m.m21[t] * ab.u[i] + m.m22[t] * ab.v[i];
    }
    return out;
}

ConjugatePair NormalForm::apply_curlyE(const ConjugatePair& uv, const ConjugatePair& ab) const {
    const std::size_t ns = lat_->num_shells();
    const auto Puu = shell_pair_sums(uv.u, uv.u);
    const auto Puv = shell_pair_sums(uv.u, uv.v);
    const auto Pvu = shell_pair_sums(uv.v, uv.u);
    const auto Pvv = shell_pair_sums(uv.v, uv.v);
    const auto Tua = shell_pair_sums(uv.u, ab.u);   // T(u,α) = T(α,u)
    const auto Tvb = shell_pair_sums(uv.v, ab.v);   // T(v,β) = T(β,v)
    const auto Tub = shell_pair_sums(uv.u, ab.v);   // T(u,β)
    const auto Tva = shell_pair_sums(uv.v, ab.u);   // T(v,α)

    enum Fam { A, B, C, D, F };
    struct Term {
        Fam fam;
        const std::vector<Complex>* Tj;
        const std::vector<Complex>* Tl;
        double w;
    };
    // the differential of 𝓜 along (α,β); pair-slot symmetry already folded
    // into the weights
    const std::array<Term, 12> row1 = {{{A, &Tua, &Puu, 2.0},
                                        {A, &Puu, &Tua, 2.0},
                                        {B, &Tua, &Puv, 2.0},
                                        {B, &Puu, &Tva, 1.0},
                                        {B, &Puu, &Tub, 1.0},
                                        {C, &Tua, &Pvv, 2.0},
                                        {C, &Puu, &Tvb, 2.0},
                                        {D, &Tva, &Pvv, 1.0},
                                        {D, &Tub, &Pvv, 1.0},
                                        {D, &Puv, &Tvb, 2.0},
                                        {F, &Tvb, &Pvv, 2.0},
                                        {F, &Pvv, &Tvb, 2.0}}};
    // mirror: u↔v, α↔β
    const std::array<Term, 12> row2 = {{{A, &Tvb, &Pvv, 2.0},
                                        {A, &Pvv, &Tvb, 2.0},
                                        {B, &Tvb, &Pvu, 2.0},
                                        {B, &Pvv, &Tub, 1.0},
                                        {B, &Pvv, &Tva, 1.0},
                                        {C, &Tvb, &Puu, 2.0},
                                        {C, &Pvv, &Tua, 2.0},
                                        {D, &Tub, &Puu, 1.0},
                                        {D, &Tva, &Puu, 1.0},
                                        {D, &Pvu, &Tua, 2.0},
                                        {F, &Tua, &Puu, 2.0},
                                        {F, &Puu, &Tua, 2.0}}};

    const auto fam11 = [](Fam f) -> Phi5Family {
        switch (f) {
            case A: return Phi5Family::a11;
            case C: return Phi5Family::c11;
            case F: return Phi5Family::f11;
            case B: return Phi5Family::b11;
            case D: return Phi5Family::d11;
        }
        return Phi5Family::b11;
    };
    const auto fam12 = [](Fam f) -> Phi5Family {
        switch (f) {
            case A: return Phi5Family::a12;
            case B: return Phi5Family::b12;
            case C: return Phi5Family::c12;
            case D: return Phi5Family::d12;
            case F: return Phi5Family::f12;
        }
        return Phi5Family::f12;
    };

    std::vector<Complex> acc1u(ns), acc1v(ns), acc2u(ns), acc2v(ns);
    for (int r = 0; r < 2; ++r) {
        const auto& terms = r == 0 ? row1 : row2;
        for (const auto& term : terms) {
            const Phi5Family g11 = fam11(term.fam);
            const Phi5Family g12 = fam12(term.fam);
            const bool has11 = term.fam == A || term.fam == C || term.fam == F;
            for (std::size_t s1 = 0; s1 < ns; ++s1) {
                if ((*term.Tj)[s1] == Complex{0.0, 0.0}) continue;
                for (std::size_t s2 = 0; s2 < ns; ++s2) {
                    const Complex TT = term.w * (*term.Tj)[s1] * (*term.Tl)[s2];
                    if (TT == Complex{0.0, 0.0}) continue;
                    for (std::size_t t = 0; t < ns; ++t) {
                        if (has11) {
                            const Complex c = TT * coeff(g11, s1, s2, t);
                            if (r == 0)
                                acc1u[t] += c;
                            else
                                acc2v[t] += c;
                        }
                        const Complex c = TT * coeff(g12, s1, s2, t);
                        if (r == 0)
                            acc1v[t] += c;
                        else
                            acc2u[t] += c;
                    }
                }
            }
        }
    }

    ConjugatePair out{SpectralField(lat_), SpectralField(lat_)};
    for (std::size_t i = 0; i < uv.u.size(); ++i) {
        const auto t = lat_->shell_of_point(i);
        out.u[i] = acc1u[t] * uv.u[i] + acc1v[t] * uv.v[i];
        out.v[i] = acc2u[t] * uv.u[i] + acc2v[t] * uv.v[i];
    }
    return out;
}

ConjugatePair NormalForm::apply_curlyK(const ConjugatePair& uv, const ConjugatePair& ab) const {
    auto m = apply_curlyM(uv, ab);
    const auto e = apply_curlyE(uv, ab);
    m.u += e.u;
    m.v += e.v;
    return m;
}

ConjugatePair NormalForm::phi5(StageDir dir, const ConjugatePair& pair, double tol) const {
    if (dir == StageDir::Forward) {
        auto out = apply_curlyM(pair, pair);
        out.u += pair.u;
        out.v += pair.v;
        return out;
    }
    const double m1 = m1_of_dim(lat_->dim());
    ConjugatePair x = pair;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < constants::kFixedPointCap; ++it) {
        auto corr = apply_curlyM(x, x);
        ConjugatePair next{pair.u - corr.u, pair.v - corr.v};
        const double err = pair_norm(pair_diff(next, x), m1);
        x = std::move(next);
        if (err <= tol) return x;
        if (err > 4.0 * prev && err > 1.0)
            throw NumericError("phi5 inverse: iteration diverges (outside the ball)");
        prev = err;
    }
    throw NumericError("phi5 inverse: fixed point did not converge");
}

ConjugatePair NormalForm::inv_I_plus_curlyK(const ConjugatePair& uv, const ConjugatePair& rhs,
                                            double tol) const {
    const double m1 = m1_of_dim(lat_->dim());
    const auto mults = curlyM_multipliers(uv);
    const auto applyM = [&](const ConjugatePair& ab) {
        ConjugatePair out{SpectralField(lat_), SpectralField(lat_)};
        for (std::size_t i = 0; i < ab.u.size(); ++i) {
            const auto t = lat_->shell_of_point(i);
            out.u[i] = mults.m11[t] * ab.u[i] + mults.m12[t] * ab.v[i];
            out.v[i] = mults.m21[t] * ab.u[i] + mults.m22[t] * ab.v[i];
        }
        return out;
    };
    ConjugatePair x = rhs;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < constants::kFixedPointCap; ++it) {
        auto kx = applyM(x);
        const auto e = apply_curlyE(uv, x);
        kx.u += e.u;
        kx.v += e.v;
        ConjugatePair next{rhs.u - kx.u, rhs.v - kx.v};
        const double err = pair_norm(pair_diff(next, x), m1);
        x = std::move(next);
        if (err <= tol) return x;
        if (tol == 0.0 && err >= prev && it > 0) return x;
        if (err > 4.0 * prev && err > 1.0)
            throw NumericError("(I+curlyK)^-1: iteration diverges");
        prev = err;
    }
    if (tol == 0.0) return x;
    throw NumericError("(I+curlyK)^-1: fixed point did not converge");
}

// ---------------------------------------------------------------------------
// chain

ConjugatePair NormalForm::chain_forward(const PhysicalState& ab) const {
    const auto qp = phi1_inverse(ab);
    const auto fg = phi2_inverse(qp);
    const auto ep = phi3(StageDir::Inverse, fg);
    const auto wz = phi4(StageDir::Inverse, ep);
    return phi5(StageDir::Inverse, wz);
}

PhysicalState NormalForm::chain_inverse(const ConjugatePair& uv) const {
    const auto wz = phi5(StageDir::Forward, uv);
    const auto ep = phi4(StageDir::Forward, wz);
    const auto fg = phi3(StageDir::Forward, ep);
    const auto qp = phi2_forward(fg);
    return phi1_forward(qp);
}

// ---------------------------------------------------------------------------
// tangent fields

ConjugatePair NormalForm::d1(const ConjugatePair& uv) const {
    ConjugatePair out{SpectralField(lat_), SpectralField(lat_)};
    for (std::size_t i = 0; i < uv.u.size(); ++i) {
        const double lam = lat_->shell(lat_->shell_of_point(i)).lambda;
        out.u[i] = -kI * lam * uv.u[i];
        out.v[i] = kI * lam * uv.v[i];
    }
    return out;
}

ConjugatePair NormalForm::x3plus(const ConjugatePair& uv) const {
    const auto Puu = shell_pair_sums(uv.u, uv.u);
    const auto Pvv = shell_pair_sums(uv.v, uv.v);
    ConjugatePair out{SpectralField(lat_), SpectralField(lat_)};
    for (std::size_t i = 0; i < uv.u.size(); ++i) {
        const auto t = lat_->shell_of_point(i);
        const double lam2 = static_cast<double>(lat_->shell(t).n);
        out.u[i] = -kI / 4.0 * lam2 * Puu[t] * uv.v[i];
        out.v[i] = kI / 4.0 * lam2 * Pvv[t] * uv.u[i];
    }
    return out;
}

ConjugatePair NormalForm::w5(const ConjugatePair& uv) const {
    const std::size_t ns = lat_->num_shells();
    const auto Puu = shell_pair_sums(uv.u, uv.u);
    const auto Puv = shell_pair_sums(uv.u, uv.v);
    const auto Pvu = shell_pair_sums(uv.v, uv.u);
    const auto Pvv = shell_pair_sums(uv.v, uv.v);

    std::vector<Complex> m11(ns), m12(ns), m11m(ns), m12m(ns);
    for (std::size_t t = 0; t < ns; ++t) {
        const Shell& st = lat_->shell(t);
        const double z = st.lambda;

        // |j| = |ℓ| block: coefficient |j|⁴ (1/(|j|+|k|) - (1-δ)/(|j|-|k|))
        Complex acc1{}, acc1m{};
        for (std::size_t s = 0; s < ns; ++s) {
            const Shell& sj = lat_->shell(s);
            const double lam = sj.lambda;
            double c = 1.0 / (lam + z);
            if (sj.n != st.n) c -= 1.0 / (lam - z);
            const double w = lam * lam * lam * lam * c;
            acc1 += Puu[s] * Pvv[s] * w;
            acc1m += Pvv[s] * Puu[s] * w;
        }
        m11[t] = kI / 32.0 * acc1;
        m11m[t] = kI / 32.0 * acc1m;

        // |k| = |j| + |ℓ| block
        Complex acc2{}, acc2m{};
        for (const auto& [s1, s2] : triples_.sum_pairs[t]) {
            const double w = lat_->shell(s1).lambda * lat_->shell(s2).lambda;
            acc2 += Puu[s1] * Puu[s2] * w;
            acc2m += Pvv[s1] * Pvv[s2] * w;
        }
        acc2 *= 3.0 * kI / 32.0 * z;
        acc2m *= 3.0 * kI / 32.0 * z;

        // |j| = |k| block
        Complex acc3{}, acc3m{};
        for (std::size_t s = 0; s < ns; ++s) {
            const Shell& sl = lat_->shell(s);
            const double lam = sl.lambda;
            double c = 6.0 + lam / (lam + z);
            if (sl.n != st.n) c += lam / (lam - z);
            acc3 += Puv[s] * (lam * c);
            acc3m += Pvu[s] * (lam * c);
        }
        acc3 = kI / 16.0 * z * z * Puu[t] * acc3;
        acc3m = kI / 16.0 * z * z * Pvv[t] * acc3m;

        // |k| = |j| - |ℓ| block
        Complex acc4{}, acc4m{};
        for (const auto& [s1, s2] : triples_.diff_pairs[t]) {
            const double w = lat_->shell(s1).lambda * lat_->shell(s2).lambda;
            acc4 += Puu[s1] * Pvv[s2] * w;
            acc4m += Pvv[s1] * Puu[s2] * w;
        }
        acc4 *= 3.0 * kI / 16.0 * z;
        acc4m *= 3.0 * kI / 16.0 * z;

        m12[t] = acc2 + acc3 + acc4;
        m12m[t] = acc2m + acc3m + acc4m;
    }

    ConjugatePair out{SpectralField(lat_), SpectralField(lat_)};
    for (std::size_t i = 0; i < uv.u.size(); ++i) {
        const auto t = lat_->shell_of_point(i);
        out.u[i] = m11[t] * uv.u[i] + m12[t] * uv.v[i];
        out.v[i] = -(m11m[t] * uv.v[i] + m12m[t] * uv.u[i]);
    }
    return out;
}

ConjugatePair NormalForm::x_field(const ConjugatePair& ep) const {
    const auto Pee = shell_pair_sums(ep.u, ep.u);
    const auto Ppp = shell_pair_sums(ep.v, ep.v);
    const double Q = quadratic_Q(ep);
    const double P = phi_of(Q);
    const double root = std::sqrt(1.0 + 2.0 * P);
    Complex g{0.0, 0.0};  // ⟨Λψ,Λψ⟩ - ⟨Λη,Λη⟩
    for (std::size_t s = 0; s < Pee.size(); ++s) {
        const double lam2 = static_cast<double>(lat_->shell(s).n);
        g += lam2 * (Ppp[s] - Pee[s]);
    }
    const Complex factor = kI / (4.0 * (1.0 + 2.0 * P)) * g;
    ConjugatePair out{SpectralField(lat_), SpectralField(lat_)};
    for (std::size_t i = 0; i < ep.u.size(); ++i) {
        const double lam = lat_->shell(lat_->shell_of_point(i)).lambda;
        out.u[i] = -kI * root * lam * ep.u[i] + factor * ep.v[i];
        out.v[i] = kI * root * lam * ep.v[i] + factor * ep.u[i];
    }
    return out;
}

double NormalForm::calP_at(const ConjugatePair& uv) const {
    const auto wz = phi5(StageDir::Forward, uv);
    const auto ep = phi4(StageDir::Forward, wz);
    return std::sqrt(1.0 + 2.0 * phi_of(quadratic_Q(ep))) - 1.0;
}

ConjugatePair NormalForm::quintic_tangent(const ConjugatePair& uv) const {
    const double cp = 1.0 + calP_at(uv);
    auto lin = d1(uv);
    const auto x3 = x3plus(uv);
    auto out = w5(uv);
    for (std::size_t i = 0; i < uv.u.size(); ++i) {
        out.u[i] += cp * (lin.u[i] + x3.u[i]);
        out.v[i] += cp * (lin.v[i] + x3.v[i]);
    }
    return out;
}

std::pair<ConjugatePair, double> NormalForm::w_field(const ConjugatePair& uv, double tol) const {
    const auto wz = phi5(StageDir::Forward, uv, tol);
    const auto ep = phi4(StageDir::Forward, wz);
    const auto x = x_field(ep);
    const auto xplus = inv_I_plus_K4(wz, x, tol);
    auto w = inv_I_plus_curlyK(uv, xplus, tol);
    const double calP = std::sqrt(1.0 + 2.0 * phi_of(quadratic_Q(ep))) - 1.0;
    return {std::move(w), calP};
}

// The remainder is a difference of near-cancelling fields (~ε vs ~ε⁷), so
// the assembly runs in quad precision; see residual_engine.hpp.
ResidualReport NormalForm::w7_residual(const ConjugatePair& uv) const {
    const double m1 = m1_of_dim(lat_->dim());
    detail::ResidualEngine eng(*lat_, triples_);

    ResidualReport rep;
    const auto full = eng.lift(uv);
    auto [res_hi, calP] = eng.residual(full);
    rep.calP = static_cast<double>(calP);
    rep.norm_m1 = static_cast<double>(eng.m1_norm(res_hi.u));

    auto half = full;
    for (std::size_t i = 0; i < half.u.size(); ++i) {
        half.u[i] = detail::Real(0.5) * half.u[i];
        half.v[i] = detail::Real(0.5) * half.v[i];
    }
    const auto [res_half, calP_half] = eng.residual(half);
    (void)calP_half;
    const double nh = static_cast<double>(eng.m1_norm(res_half.u));
    rep.exponent = (rep.norm_m1 > 0.0 && nh > 0.0) ? std::log2(rep.norm_m1 / nh) : 0.0;

    auto res = eng.lower(res_hi, lat_);
    const double u6 = std::pow(sobolev_norm(uv.u, m1), 6.0);
    double cmax = 0.0;
    for (std::size_t i = 0; i < uv.u.size(); ++i) {
        const double denom = u6 * (std::abs(uv.u[i]) + std::abs(uv.u[lat_->neg_point(i)]));
        if (denom > 1e-300)
            cmax = std::max(cmax, std::abs(res.u[i]) / denom);
    }
    rep.per_mode_C = cmax;
    rep.tangent = std::move(res);
    return rep;
}

}  // namespace kirchlab
