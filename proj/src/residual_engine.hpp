// residual_engine.hpp — quad-precision assembly of the transformed field
//
// The order-seven remainder W_{≥7} = W - (1+𝒫)(𝒟₁+X₃⁺) - W₅ is a difference
// of near-cancelling quantities: at amplitude ε it has size ~ε⁷ while the
// pieces carry ~ε, so measuring it below ε ≈ 2·10⁻² needs more than double
// precision in the assembly.  This engine reruns the same shell-factorized
// pipeline in __float128; only W_{≥7} and the scalars come back as doubles.

#pragma once

#include "kirchlab/lattice.hpp"
#include "kirchlab/spectral.hpp"

#include <quadmath.h>

#include <vector>

namespace kirchlab::detail {

using Real = __float128;

inline Real rsqrt_of(Real x) { return sqrtq(x); }

struct Cplx {
    Real re = 0, im = 0;
    friend Cplx operator+(Cplx a, Cplx b) { return {a.re + b.re, a.im + b.im}; }
    friend Cplx operator-(Cplx a, Cplx b) { return {a.re - b.re, a.im - b.im}; }
    friend Cplx operator*(Cplx a, Cplx b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend Cplx operator*(Real s, Cplx b) { return {s * b.re, s * b.im}; }
    Cplx& operator+=(Cplx o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    Cplx& operator-=(Cplx o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
};

inline Cplx conj(Cplx a) { return {a.re, -a.im}; }
inline Cplx itimes(Cplx a) { return {-a.im, a.re}; }  // i·a
inline Real abs2(Cplx a) { return a.re * a.re + a.im * a.im; }

using Field = std::vector<Cplx>;

struct FPair {
    Field u, v;
};

class ResidualEngine {
public:
    ResidualEngine(const Lattice& lat, const TripleSet& triples) : lat_(lat), triples_(triples) {
        lambda_.reserve(lat.num_shells());
        for (const auto& sh : lat.shells()) lambda_.push_back(rsqrt_of(Real(sh.n)));
    }

    FPair lift(const ConjugatePair& p) const {
        FPair out;
        out.u.resize(p.u.size());
        out.v.resize(p.v.size());
        for (std::size_t i = 0; i < p.u.size(); ++i) {
            out.u[i] = {Real(p.u[i].real()), Real(p.u[i].imag())};
            out.v[i] = {Real(p.v[i].real()), Real(p.v[i].imag())};
        }
        return out;
    }

    ConjugatePair lower(const FPair& p, const LatticeRef& lat) const {
        ConjugatePair out{SpectralField(lat), SpectralField(lat)};
        for (std::size_t i = 0; i < p.u.size(); ++i) {
            out.u[i] = Complex{static_cast<double>(p.u[i].re), static_cast<double>(p.u[i].im)};
            out.v[i] = Complex{static_cast<double>(p.v[i].re), static_cast<double>(p.v[i].im)};
        }
        return out;
    }

    // W(u,v) and 𝒫(Φ⁽⁵⁾(u,v))
    std::pair<FPair, Real> w_field(const FPair& uv) const {
        const FPair wz = phi5_forward(uv);
        const FPair ep = phi4_forward(wz);
        const FPair x = x_field(ep);
        const FPair xplus = inv_fixed_point(
            x, [&](const FPair& a) { return apply_K4(wz, a); });
        const auto m5 = curlyM_multipliers(uv);
        const FPair w = inv_fixed_point(xplus, [&](const FPair& a) {
            FPair k = apply_mults(m5, a);
            const FPair e = apply_curlyE(uv, a);
            for (std::size_t i = 0; i < k.u.size(); ++i) {
                k.u[i] += e.u[i];
                k.v[i] += e.v[i];
            }
            return k;
        });
        const Real P = phi_newton(quadratic_Q(ep));
        return {w, rsqrt_of(Real(1) + 2 * P) - Real(1)};
    }

    std::pair<FPair, Real> residual(const FPair& uv) const {
        auto [w, calP] = w_field(uv);
        const Real cp = Real(1) + calP;
        const FPair lin = d1(uv);
        const FPair x3 = x3plus(uv);
        const FPair w5f = w5(uv);
        for (std::size_t i = 0; i < w.u.size(); ++i) {
            w.u[i] -= cp * (lin.u[i] + x3.u[i]) + w5f.u[i];
            w.v[i] -= cp * (lin.v[i] + x3.v[i]) + w5f.v[i];
        }
        return {std::move(w), calP};
    }

    Real m1_norm(const Field& f) const {
        const double m1 = lat_.dim() == 1 ? 1.0 : 2.0;
        Real acc = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const Real lam = lambda_[lat_.shell_of_point(i)];
            Real w = 1;
            for (int p = 0; p < static_cast<int>(2 * m1); ++p) w *= lam;
            acc += abs2(f[i]) * w;
        }
        return rsqrt_of(acc);
    }

private:
    Field pair_sums(const Field& f, const Field& g) const {
        Field out(lat_.num_shells());
        for (std::size_t s = 0; s < lat_.num_shells(); ++s) {
            Cplx acc{};
            for (auto i : lat_.shell(s).members) acc += f[i] * g[lat_.neg_point(i)];
            out[s] = acc;
        }
        return out;
    }

    Real quadratic_Q(const FPair& p) const {
        Field sum(p.u.size());
        for (std::size_t i = 0; i < p.u.size(); ++i) sum[i] = p.u[i] + p.v[i];
        const auto T = pair_sums(sum, sum);
        Real q = 0;
        for (std::size_t s = 0; s < T.size(); ++s) q += lambda_[s] * T[s].re;
        return q / 4;
    }

    static Real phi_newton(Real y) {
        if (y <= 0) return 0;
        Real x = y;
        for (int it = 0; it < 80; ++it) {
            const Real h = x * x * (1 + 2 * x) - y * y;
            const Real dh = 2 * x + 6 * x * x;
            const Real next = x - h / dh;
            if (fabsq(next - x) <= Real(1e-35) * (Real(1) + fabsq(x))) return next;
            x = next;
        }
        return x;
    }

    // stage 4 -----------------------------------------------------------

    Field a12_multipliers(const Field& T) const {
        const std::size_t ns = lat_.num_shells();
        Field out(ns);
        for (std::size_t t = 0; t < ns; ++t) {
            Cplx acc{};
            for (std::size_t s = 0; s < ns; ++s) {
                if (lat_.shell(s).n == lat_.shell(t).n) continue;
                acc += (lambda_[s] * lambda_[s] / (8 * (lambda_[s] - lambda_[t]))) * T[s];
            }
            out[t] = acc;
        }
        return out;
    }

    Field c12_multipliers(const Field& T) const {
        const std::size_t ns = lat_.num_shells();
        Field out(ns);
        for (std::size_t t = 0; t < ns; ++t) {
            Cplx acc{};
            for (std::size_t s = 0; s < ns; ++s)
                acc += (lambda_[s] * lambda_[s] / (8 * (lambda_[s] + lambda_[t]))) * T[s];
            out[t] = acc;
        }
        return out;
    }

    Field apply_mult(const Field& mult, const Field& h) const {
        Field out(h.size());
        for (std::size_t i = 0; i < h.size(); ++i)
            out[i] = mult[lat_.shell_of_point(i)] * h[i];
        return out;
    }

    FPair phi4_forward(const FPair& wz) const {
        const auto Tww = pair_sums(wz.u, wz.u);
        const auto Tzz = pair_sums(wz.v, wz.v);
        auto m12 = a12_multipliers(Tww);
        auto m21 = a12_multipliers(Tzz);
        {
            const auto c1 = c12_multipliers(Tzz);
            const auto c2 = c12_multipliers(Tww);
            for (std::size_t t = 0; t < m12.size(); ++t) {
                m12[t] += c1[t];
                m21[t] += c2[t];
            }
        }
        FPair out = wz;
        const auto mu = apply_mult(m12, wz.v);
        const auto mv = apply_mult(m21, wz.u);
        for (std::size_t i = 0; i < out.u.size(); ++i) {
            out.u[i] += mu[i];
            out.v[i] += mv[i];
        }
        return out;
    }

    FPair apply_K4(const FPair& wz, const FPair& ab) const {
        const auto Tww = pair_sums(wz.u, wz.u);
        const auto Tzz = pair_sums(wz.v, wz.v);
        const auto Twa = pair_sums(wz.u, ab.u);
        const auto Tzb = pair_sums(wz.v, ab.v);
        auto m12 = a12_multipliers(Tww);
        auto m21 = a12_multipliers(Tzz);
        auto e1 = a12_multipliers(Twa);
        auto e2 = c12_multipliers(Twa);
        {
            const auto c1 = c12_multipliers(Tzz);
            const auto c2 = c12_multipliers(Tww);
            const auto c3 = c12_multipliers(Tzb);
            const auto a3 = a12_multipliers(Tzb);
            for (std::size_t t = 0; t < m12.size(); ++t) {
                m12[t] += c1[t];
                m21[t] += c2[t];
                e1[t] = 2 * (e1[t] + c3[t]);
                e2[t] = 2 * (e2[t] + a3[t]);
            }
        }
        FPair out;
        out.u = apply_mult(m12, ab.v);
        out.v = apply_mult(m21, ab.u);
        const auto eu = apply_mult(e1, wz.v);
        const auto ev = apply_mult(e2, wz.u);
        for (std::size_t i = 0; i < out.u.size(); ++i) {
            out.u[i] += eu[i];
            out.v[i] += ev[i];
        }
        return out;
    }

    // stage 5 -----------------------------------------------------------

    struct Coeffs {
        Real a11, c11, f11, a12, b12, c12, d12, f12;
    };

    Coeffs coeffs(std::size_t s1, std::size_t s2, std::size_t t) const {
        const Shell &j = lat_.shell(s1), &l = lat_.shell(s2), &k = lat_.shell(t);
        const Real x = lambda_[s1], y = lambda_[s2], z = lambda_[t];
        const bool dxy = j.n == l.n, dxz = j.n == k.n, dyz = l.n == k.n;
        Coeffs c{};
        c.a11 = x * x * y * y / (128 * (x + y)) * (1 / (x + z) + 1 / (y + z));
        if (!dxy) {
            Real br = 1 / (x + z);
            if (dyz && !dxz) br += -1 / (x - z);
            if (!dyz) br -= 1 / (y - z);
            c.c11 = x * x * y * y / 64 * br / (y - x);
        }
        {
            Real br = -(Real(dyz ? 1 : 0) + Real(dxz ? 1 : 0)) / (x + y);
            if (!dxz) br += 1 / (x - z);
            if (!dyz) br += 1 / (y - z);
            c.f11 = br * x * x * y * y / (128 * (x + y));
        }
        if (!(j.p == l.p && l.p == k.p && j.m + l.m == k.m))
            c.a12 = Real(3) / 64 * x * y * (x + y) / (z - x - y);
        if (!dxz) {
            Real br = 6 + y / (y + x);
            if (dxy && !dyz) br += y / (y - z);
            if (!dxy) br += y / (y - x);
            c.b12 = x * x * y / 32 * br / (z - x);
        }
        if (!(j.p == l.p && l.p == k.p && j.m - l.m == k.m))
            c.c12 = Real(3) / 32 * x * y * (x - y) / (z - x + y);
        {
            Real br = -6 - x / (y + x);
            if (dxy) br += -x / (x + z);
            if (!dxy) br += x / (y - x);
            c.d12 = x * y * y * br / (32 * (z + y));
        }
        c.f12 = -3 * x * y * (x + y) / (64 * (z + x + y));
        return c;
    }

    struct Mults {
        Field m11, m12, m21, m22;
    };

    Mults curlyM_multipliers(const FPair& uv) const {
        const std::size_t ns = lat_.num_shells();
        const auto Puu = pair_sums(uv.u, uv.u);
        const auto Puv = pair_sums(uv.u, uv.v);
        const auto Pvu = pair_sums(uv.v, uv.u);
        const auto Pvv = pair_sums(uv.v, uv.v);
        Mults m;
        m.m11.assign(ns, {});
        m.m12.assign(ns, {});
        m.m21.assign(ns, {});
        m.m22.assign(ns, {});
        for (std::size_t s1 = 0; s1 < ns; ++s1)
            for (std::size_t s2 = 0; s2 < ns; ++s2) {
                const Cplx uu_uu = Puu[s1] * Puu[s2];
                const Cplx uu_vv = Puu[s1] * Pvv[s2];
                const Cplx vv_uu = Pvv[s1] * Puu[s2];
                const Cplx vv_vv = Pvv[s1] * Pvv[s2];
                const Cplx uu_uv = Puu[s1] * Puv[s2];
                const Cplx uv_vv = Puv[s1] * Pvv[s2];
                const Cplx vv_vu = Pvv[s1] * Pvu[s2];
                const Cplx vu_uu = Pvu[s1] * Puu[s2];
                for (std::size_t t = 0; t < ns; ++t) {
                    const Coeffs c = coeffs(s1, s2, t);
                    m.m11[t] += c.a11 * uu_uu + c.c11 * uu_vv + c.f11 * vv_vv;
                    m.m12[t] += c.a12 * uu_uu + c.b12 * uu_uv + c.c12 * uu_vv +
                                c.d12 * uv_vv + c.f12 * vv_vv;
                    m.m21[t] += c.a12 * vv_vv + c.b12 * vv_vu + c.c12 * vv_uu +
                                c.d12 * vu_uu + c.f12 * uu_uu;
                    m.m22[t] += c.a11 * vv_vv + c.c11 * vv_uu + c.f11 * uu_uu;
                }
            }
        return m;
    }

    FPair apply_mults(const Mults& m, const FPair& ab) const {
        FPair out;
        out.u.resize(ab.u.size());
        out.v.resize(ab.v.size());
        for (std::size_t i = 0; i < ab.u.size(); ++i) {
            const auto t = lat_.shell_of_point(i);
            out.u[i] = m.m11[t] * ab.u[i] + m.m12[t] * ab.v[i];
            out.v[i] = m.m21[t] * ab.u[i] + m.m22[t] * ab.v[i];
        }
        return out;
    }

    FPair phi5_forward(const FPair& uv) const {
        auto out = apply_mults(curlyM_multipliers(uv), uv);
        for (std::size_t i = 0; i < out.u.size(); ++i) {
            out.u[i] += uv.u[i];
            out.v[i] += uv.v[i];
        }
        return out;
    }

    FPair apply_curlyE(const FPair& uv, const FPair& ab) const {
        const std::size_t ns = lat_.num_shells();
        const auto Puu = pair_sums(uv.u, uv.u);
        const auto Puv = pair_sums(uv.u, uv.v);
        const auto Pvu = pair_sums(uv.v, uv.u);
        const auto Pvv = pair_sums(uv.v, uv.v);
        const auto Tua = pair_sums(uv.u, ab.u);
        const auto Tvb = pair_sums(uv.v, ab.v);
        const auto Tub = pair_sums(uv.u, ab.v);
        const auto Tva = pair_sums(uv.v, ab.u);

        enum Fam { A, B, C, D, F };
        struct Term {
            Fam fam;
            const Field* Tj;
            const Field* Tl;
            Real w;
        };
        const Term row1[12] = {{A, &Tua, &Puu, 2}, {A, &Puu, &Tua, 2}, {B, &Tua, &Puv, 2},
                               {B, &Puu, &Tva, 1}, {B, &Puu, &Tub, 1}, {C, &Tua, &Pvv, 2},
                               {C, &Puu, &Tvb, 2}, {D, &Tva, &Pvv, 1}, {D, &Tub, &Pvv, 1},
                               {D, &Puv, &Tvb, 2}, {F, &Tvb, &Pvv, 2}, {F, &Pvv, &Tvb, 2}};
        const Term row2[12] = {{A, &Tvb, &Pvv, 2}, {A, &Pvv, &Tvb, 2}, {B, &Tvb, &Pvu, 2},
                               {B, &Pvv, &Tub, 1}, {B, &Pvv, &Tva, 1}, {C, &Tvb, &Puu, 2},
                               {C, &Pvv, &Tua, 2}, {D, &Tub, &Puu, 1}, {D, &Tva, &Puu, 1},
                               {D, &Pvu, &Tua, 2}, {F, &Tua, &Puu, 2}, {F, &Puu, &Tua, 2}};

        Field acc1u(ns), acc1v(ns), acc2u(ns), acc2v(ns);
        for (int r = 0; r < 2; ++r) {
            const Term* terms = r == 0 ? row1 : row2;
            for (int ti = 0; ti < 12; ++ti) {
                const Term& term = terms[ti];
                const bool has11 = term.fam == A || term.fam == C || term.fam == F;
                for (std::size_t s1 = 0; s1 < ns; ++s1)
                    for (std::size_t s2 = 0; s2 < ns; ++s2) {
                        const Cplx TT = term.w * ((*term.Tj)[s1] * (*term.Tl)[s2]);
                        if (TT.re == 0 && TT.im == 0) continue;
                        for (std::size_t t = 0; t < ns; ++t) {
                            const Coeffs c = coeffs(s1, s2, t);
                            Real g11 = 0, g12 = 0;
                            switch (term.fam) {
                                case A: g11 = c.a11; g12 = c.a12; break;
                                case B: g12 = c.b12; break;
                                case C: g11 = c.c11; g12 = c.c12; break;
                                case D: g12 = c.d12; break;
                                case F: g11 = c.f11; g12 = c.f12; break;
                            }
                            if (r == 0) {
                                if (has11) acc1u[t] += g11 * TT;
                                acc1v[t] += g12 * TT;
                            } else {
                                if (has11) acc2v[t] += g11 * TT;
                                acc2u[t] += g12 * TT;
                            }
                        }
                    }
            }
        }
        FPair out;
        out.u.resize(uv.u.size());
        out.v.resize(uv.v.size());
        for (std::size_t i = 0; i < uv.u.size(); ++i) {
            const auto t = lat_.shell_of_point(i);
            out.u[i] = acc1u[t] * uv.u[i] + acc1v[t] * uv.v[i];
            out.v[i] = acc2u[t] * uv.u[i] + acc2v[t] * uv.v[i];
        }
        return out;
    }

    template <class Op>
    FPair inv_fixed_point(const FPair& rhs, const Op& op) const {
        FPair x = rhs;
        Real prev = Real(1e30);
        for (int it = 0; it < 60; ++it) {
            const FPair kx = op(x);
            FPair next = rhs;
            Real err = 0;
            for (std::size_t i = 0; i < rhs.u.size(); ++i) {
                next.u[i] -= kx.u[i];
                next.v[i] -= kx.v[i];
                err += abs2(next.u[i] - x.u[i]) + abs2(next.v[i] - x.v[i]);
            }
            x = std::move(next);
            if (err == 0 || (it > 0 && err >= prev)) return x;
            prev = err;
        }
        return x;
    }

    // tangent fields ------------------------------------------------------

    FPair x_field(const FPair& ep) const {
        const auto Pee = pair_sums(ep.u, ep.u);
        const auto Ppp = pair_sums(ep.v, ep.v);
        const Real P = phi_newton(quadratic_Q(ep));
        const Real root = rsqrt_of(1 + 2 * P);
        Cplx g{};
        for (std::size_t s = 0; s < Pee.size(); ++s)
            g += (lambda_[s] * lambda_[s]) * (Ppp[s] - Pee[s]);
        const Cplx factor = (Real(1) / (4 * (1 + 2 * P))) * itimes(g);
        FPair out;
        out.u.resize(ep.u.size());
        out.v.resize(ep.v.size());
        for (std::size_t i = 0; i < ep.u.size(); ++i) {
            const Real lam = lambda_[lat_.shell_of_point(i)];
            out.u[i] = Real(-1) * itimes(root * lam * ep.u[i]) + factor * ep.v[i];
            out.v[i] = itimes(root * lam * ep.v[i]) + factor * ep.u[i];
        }
        return out;
    }

    FPair d1(const FPair& uv) const {
        FPair out;
        out.u.resize(uv.u.size());
        out.v.resize(uv.v.size());
        for (std::size_t i = 0; i < uv.u.size(); ++i) {
            const Real lam = lambda_[lat_.shell_of_point(i)];
            out.u[i] = Real(-1) * itimes(lam * uv.u[i]);
            out.v[i] = itimes(lam * uv.v[i]);
        }
        return out;
    }

    FPair x3plus(const FPair& uv) const {
        const auto Puu = pair_sums(uv.u, uv.u);
        const auto Pvv = pair_sums(uv.v, uv.v);
        FPair out;
        out.u.resize(uv.u.size());
        out.v.resize(uv.v.size());
        for (std::size_t i = 0; i < uv.u.size(); ++i) {
            const auto t = lat_.shell_of_point(i);
            const Real lam2 = lambda_[t] * lambda_[t];
            out.u[i] = Real(-0.25) * itimes(lam2 * (Puu[t] * uv.v[i]));
            out.v[i] = Real(0.25) * itimes(lam2 * (Pvv[t] * uv.u[i]));
        }
        return out;
    }

    FPair w5(const FPair& uv) const {
        const std::size_t ns = lat_.num_shells();
        const auto Puu = pair_sums(uv.u, uv.u);
        const auto Puv = pair_sums(uv.u, uv.v);
        const auto Pvu = pair_sums(uv.v, uv.u);
        const auto Pvv = pair_sums(uv.v, uv.v);

        Field m11(ns), m12(ns), m11m(ns), m12m(ns);
        for (std::size_t t = 0; t < ns; ++t) {
            const Real z = lambda_[t];
            Cplx acc1{}, acc1m{};
            for (std::size_t s = 0; s < ns; ++s) {
                const Real lam = lambda_[s];
                Real c = 1 / (lam + z);
                if (lat_.shell(s).n != lat_.shell(t).n) c -= 1 / (lam - z);
                const Real w = lam * lam * lam * lam * c;
                acc1 += w * (Puu[s] * Pvv[s]);
                acc1m += w * (Pvv[s] * Puu[s]);
            }
            m11[t] = Real(1.0 / 32) * itimes(acc1);
            m11m[t] = Real(1.0 / 32) * itimes(acc1m);

            Cplx acc2{}, acc2m{};
            for (const auto& [s1, s2] : triples_.sum_pairs[t]) {
                const Real w = lambda_[s1] * lambda_[s2];
                acc2 += w * (Puu[s1] * Puu[s2]);
                acc2m += w * (Pvv[s1] * Pvv[s2]);
            }
            acc2 = (Real(3.0 / 32) * z) * itimes(acc2);
            acc2m = (Real(3.0 / 32) * z) * itimes(acc2m);

            Cplx acc3{}, acc3m{};
            for (std::size_t s = 0; s < ns; ++s) {
                const Real lam = lambda_[s];
                Real c = 6 + lam / (lam + z);
                if (lat_.shell(s).n != lat_.shell(t).n) c += lam / (lam - z);
                acc3 += (lam * c) * Puv[s];
                acc3m += (lam * c) * Pvu[s];
            }
            acc3 = (Real(1.0 / 16) * z * z) * itimes(Puu[t] * acc3);
            acc3m = (Real(1.0 / 16) * z * z) * itimes(Pvv[t] * acc3m);

            Cplx acc4{}, acc4m{};
            for (const auto& [s1, s2] : triples_.diff_pairs[t]) {
                const Real w = lambda_[s1] * lambda_[s2];
                acc4 += w * (Puu[s1] * Pvv[s2]);
                acc4m += w * (Pvv[s1] * Puu[s2]);
            }
            acc4 = (Real(3.0 / 16) * z) * itimes(acc4);
            acc4m = (Real(3.0 / 16) * z) * itimes(acc4m);

            m12[t] = acc2 + acc3 + acc4;
            m12m[t] = acc2m + acc3m + acc4m;
        }

        FPair out;
        out.u.resize(uv.u.size());
        out.v.resize(uv.v.size());
        for (std::size_t i = 0; i < uv.u.size(); ++i) {
            const auto t = lat_.shell_of_point(i);
            out.u[i] = m11[t] * uv.u[i] + m12[t] * uv.v[i];
            out.v[i] = Real(-1) * (m11m[t] * uv.v[i] + m12m[t] * uv.u[i]);
        }
        return out;
    }

    const Lattice& lat_;
    const TripleSet& triples_;
    std::vector<Real> lambda_;
};

}  // namespace kirchlab::detail
