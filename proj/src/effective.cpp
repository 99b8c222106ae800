#include "kirchlab/effective.hpp"

#include "kirchlab/dynamics.hpp"
#include "kirchlab/normal_form.hpp"

#include <cmath>
#include <stdexcept>

namespace kirchlab {

EffectiveState effective_from_pair(const ConjugatePair& pair, ClosureMode closure) {
    const auto obs = shell_observables(pair);
    return {pair.u.lattice(), obs.S, obs.B, closure};
}

double effective_P(const EffectiveState& st) {
    if (st.closure == ClosureMode::ZeroP) return 0.0;
    const Lattice& lat = *st.lattice;
    double Q = 0.0;
    for (std::size_t s = 0; s < st.S.size(); ++s)
        Q += lat.shell(s).lambda * (st.S[s] + st.B[s].real());
    Q *= 0.5;
    return std::sqrt(1.0 + 2.0 * phi_of(Q)) - 1.0;
}

EffectiveTangent effective_rhs(const EffectiveState& st, const TripleSet& triples) {
    const Lattice& lat = *st.lattice;
    const std::size_t ns = st.S.size();
    EffectiveTangent out;
    out.Sdot.assign(ns, 0.0);
    out.Bdot.assign(ns, Complex{0.0, 0.0});

    for (const auto& tr : triples.sum_triples) {
        const double a = lat.shell(tr.sa).lambda;
        const double b = lat.shell(tr.sb).lambda;
        const double c = lat.shell(tr.sc).lambda;
        const double theta = (st.B[tr.sa] * st.B[tr.sb] * std::conj(st.B[tr.sc])).imag();
        if (theta == 0.0) continue;
        const double w = theta * a * b * c;
        const double mult = tr.sa == tr.sb ? 1.0 : 2.0;
        out.Sdot[tr.sc] -= 3.0 / 16.0 * mult * w;
        out.Sdot[tr.sa] += 3.0 / 8.0 * w;
        if (tr.sa != tr.sb) out.Sdot[tr.sb] += 3.0 / 8.0 * w;
    }

    const double cp = 1.0 + effective_P(st);
    for (std::size_t s = 0; s < ns; ++s) {
        const double lam = lat.shell(s).lambda;
        const double lam2 = static_cast<double>(lat.shell(s).n);
        out.Bdot[s] = Complex{0.0, -2.0 * cp * (lam + 0.25 * lam2 * st.S[s])} * st.B[s];
    }
    return out;
}

TripleDiagnostics triple_diagnostics(const EffectiveState& st, const Triple& tr) {
    const Lattice& lat = *st.lattice;
    const double a2 = static_cast<double>(lat.shell(tr.sa).n);
    const double b2 = static_cast<double>(lat.shell(tr.sb).n);
    const double c2 = static_cast<double>(lat.shell(tr.sc).n);
    TripleDiagnostics d;
    d.omega = a2 * st.S[tr.sa] + b2 * st.S[tr.sb] - c2 * st.S[tr.sc];
    d.Omega = a2 * st.S[tr.sa] + b2 * st.S[tr.sb] + c2 * st.S[tr.sc];
    d.Z = st.B[tr.sa] * st.B[tr.sb] * std::conj(st.B[tr.sc]);
    d.theta = d.Z.imag();
    return d;
}

namespace {

void guard_nonnegative(std::vector<double>& S, std::size_t step) {
    constexpr double floor = -1e-12;
    for (double& s : S) {
        if (s < floor)
            throw NumericError("integrate_effective: S went negative at step " +
                               std::to_string(step) + " (truncation inconsistency)");
        if (s < 0.0) s = 0.0;
    }
}

// B ← B · exp(-2i(1+P)(λ + ¼λ²S) h), the exact flow of the truncated B-equation
void rotate(const Lattice& lat, const std::vector<double>& S, double cp, double h,
            std::vector<Complex>& B) {
    for (std::size_t s = 0; s < B.size(); ++s) {
        const double lam = lat.shell(s).lambda;
        const double lam2 = static_cast<double>(lat.shell(s).n);
        const double phase = -2.0 * cp * (lam + 0.25 * lam2 * S[s]) * h;
        B[s] *= Complex{std::cos(phase), std::sin(phase)};
    }
}

}  // namespace

EffectiveTrajectory integrate_effective(const EffectiveState& initial, const TripleSet& triples,
                                        double dt, double T, EffectiveScheme scheme,
                                        std::size_t stride) {
    if (dt <= 0.0) throw std::invalid_argument("integrate_effective: dt must be > 0");
    if (T < 0.0) throw std::invalid_argument("integrate_effective: T must be >= 0");
    if (stride == 0) stride = 1;
    const Lattice& lat = *initial.lattice;

    if (scheme == EffectiveScheme::Rk4) {
        const double cp0 = 1.0 + effective_P(initial);
        const double guard = 0.1 / (lat.lambda_max() * cp0);
        if (dt > guard)
            throw NumericError("integrate_effective: rk4 dt violates guard dt <= " +
                               std::to_string(guard));
    }

    EffectiveTrajectory traj;
    traj.lattice = initial.lattice;
    EffectiveState st = initial;
    const auto record = [&](double t) {
        traj.times.push_back(t);
        traj.S.push_back(st.S);
        traj.B.push_back(st.B);
        traj.P.push_back(effective_P(st));
        for (std::size_t s = 0; s < st.S.size(); ++s)
            if (st.S[s] > 0.0)
                traj.max_B_excess =
                    std::max(traj.max_B_excess, (std::abs(st.B[s]) - st.S[s]) / st.S[s]);
    };
    record(0.0);

    const std::size_t ns = st.S.size();
    const auto nsteps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
    for (std::size_t step = 1; step <= nsteps; ++step) {
        if (scheme == EffectiveScheme::RotFrame) {
            // midpoint in S, exact rotation in B with S frozen at the midpoint
            const auto k1 = effective_rhs(st, triples);
            EffectiveState mid = st;
            for (std::size_t s = 0; s < ns; ++s) mid.S[s] = st.S[s] + 0.5 * dt * k1.Sdot[s];
            const double cp_mid = 1.0 + effective_P(mid);
            rotate(lat, mid.S, cp_mid, 0.5 * dt, mid.B);
            const auto k2 = effective_rhs(mid, triples);
            for (std::size_t s = 0; s < ns; ++s) st.S[s] += dt * k2.Sdot[s];
            rotate(lat, mid.S, cp_mid, dt, st.B);
        } else {
            const auto step_state = [&](const EffectiveTangent& k, double h) {
                EffectiveState nxt = st;
                for (std::size_t s = 0; s < ns; ++s) {
                    nxt.S[s] = st.S[s] + h * k.Sdot[s];
                    nxt.B[s] = st.B[s] + h * k.Bdot[s];
                }
                return nxt;
            };
            const auto k1 = effective_rhs(st, triples);
            const auto k2 = effective_rhs(step_state(k1, 0.5 * dt), triples);
            const auto k3 = effective_rhs(step_state(k2, 0.5 * dt), triples);
            const auto k4 = effective_rhs(step_state(k3, dt), triples);
            for (std::size_t s = 0; s < ns; ++s) {
                st.S[s] += dt / 6.0 * (k1.Sdot[s] + 2.0 * k2.Sdot[s] + 2.0 * k3.Sdot[s] +
                                       k4.Sdot[s]);
                st.B[s] += dt / 6.0 * (k1.Bdot[s] + 2.0 * k2.Bdot[s] + 2.0 * k3.Bdot[s] +
                                       k4.Bdot[s]);
            }
        }
        guard_nonnegative(st.S, step);
        if (step % stride == 0 || step == nsteps) record(static_cast<double>(step) * dt);
    }
    return traj;
}

GrowthReport growth_report(const EffectiveTrajectory& traj, const TripleSet& triples) {
    if (traj.times.size() < 2)
        throw std::invalid_argument("growth_report: need at least two snapshots");
    const std::size_t ns = traj.S.front().size();
    GrowthReport rep;
    rep.growth.assign(ns, 0.0);
    rep.populated.assign(ns, false);
    for (std::size_t s = 0; s < ns; ++s) rep.populated[s] = traj.S.front()[s] > 0.0;

    for (const auto& snap : traj.S) {
        for (std::size_t s = 0; s < ns; ++s) {
            if (!rep.populated[s]) {
                if (snap[s] != 0.0) rep.gamma0_stayed_zero = false;
                continue;
            }
            rep.growth[s] =
                std::max(rep.growth[s], std::abs(snap[s] / traj.S.front()[s] - 1.0));
        }
    }
    for (std::size_t s = 0; s < ns; ++s) rep.max_growth = std::max(rep.max_growth, rep.growth[s]);

    const Lattice& lat = *traj.lattice;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        for (const auto& tr : triples.sum_triples) {
            if (!rep.populated[tr.sa] || !rep.populated[tr.sb] || !rep.populated[tr.sc]) continue;
            const double a2 = static_cast<double>(lat.shell(tr.sa).n);
            const double b2 = static_cast<double>(lat.shell(tr.sb).n);
            const double c2 = static_cast<double>(lat.shell(tr.sc).n);
            const double om =
                a2 * traj.S[i][tr.sa] + b2 * traj.S[i][tr.sb] - c2 * traj.S[i][tr.sc];
            const double Om =
                a2 * traj.S[i][tr.sa] + b2 * traj.S[i][tr.sb] + c2 * traj.S[i][tr.sc];
            if (Om > 0.0) {
                worst = std::min(worst, std::abs(om) / Om);
                rep.has_margin = true;
            }
        }
    }
    rep.min_margin = rep.has_margin ? worst : 0.0;
    return rep;
}

}  // namespace kirchlab
