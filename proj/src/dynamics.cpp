#include "kirchlab/dynamics.hpp"

#include <cmath>
#include <stdexcept>

namespace kirchlab {

double m1_of_dim(int d) { return d == 1 ? 1.0 : 2.0; }
double m0_of_dim(int d) { return d == 1 ? 1.0 : 1.5; }

double gradient_square(const SpectralField& a) {
    const Lattice& lat = *a.lattice();
    double acc = 0.0;
    for (std::size_t s = 0; s < lat.num_shells(); ++s) {
        const Shell& sh = lat.shell(s);
        Complex sum{0.0, 0.0};
        for (auto i : sh.members) sum += a[i] * a[lat.neg_point(i)];
        acc += static_cast<double>(sh.n) * sum.real();
    }
    return acc;
}

PhysicalState kirchhoff_rhs(const PhysicalState& state) {
    const Lattice& lat = *state.a.lattice();
    const double factor = 1.0 + gradient_square(state.a);
    PhysicalState out{state.b, SpectralField(state.a.lattice())};
    for (std::size_t i = 0; i < state.a.size(); ++i) {
        const double n = static_cast<double>(lat.shell(lat.shell_of_point(i)).n);
        out.b[i] = -n * factor * state.a[i];
    }
    return out;
}

double hamiltonian(const PhysicalState& state) {
    const Lattice& lat = *state.a.lattice();
    double kin = 0.0, grad = 0.0;
    for (std::size_t i = 0; i < state.a.size(); ++i) {
        const auto ni = lat.neg_point(i);
        kin += (state.b[i] * state.b[ni]).real();
        grad += static_cast<double>(lat.shell(lat.shell_of_point(i)).n) *
                (state.a[i] * state.a[ni]).real();
    }
    return 0.5 * kin + 0.5 * grad + 0.25 * grad * grad;
}

namespace {

DiagnosticsRow diagnostics_of(double t, const PhysicalState& st) {
    const int d = st.a.lattice()->dim();
    const double m1 = m1_of_dim(d);
    DiagnosticsRow row;
    row.t = t;
    row.H = hamiltonian(st);
    row.norm_m1 = sobolev_norm(st.a, m1 + 0.5) + sobolev_norm(st.b, m1 - 0.5);
    row.U = u_lambda(st);
    return row;
}

void check_finite(const PhysicalState& st, std::size_t step) {
    for (std::size_t i = 0; i < st.a.size(); ++i)
        if (!std::isfinite(st.a[i].real()) || !std::isfinite(st.a[i].imag()) ||
            !std::isfinite(st.b[i].real()) || !std::isfinite(st.b[i].imag()))
            throw NumericError("integrate_physical: non-finite value at step " +
                               std::to_string(step));
}

// kick: b += dt/2 * F(a), with F_k = -|k|²(1+P) a_k
void kick(PhysicalState& st, double half_dt) {
    const Lattice& lat = *st.a.lattice();
    const double factor = 1.0 + gradient_square(st.a);
    for (std::size_t i = 0; i < st.a.size(); ++i) {
        const double n = static_cast<double>(lat.shell(lat.shell_of_point(i)).n);
        st.b[i] -= half_dt * n * factor * st.a[i];
    }
}

void drift(PhysicalState& st, double dt) {
    for (std::size_t i = 0; i < st.a.size(); ++i) st.a[i] += dt * st.b[i];
}

void rk4_step(PhysicalState& st, double dt) {
    const auto k1 = kirchhoff_rhs(st);
    PhysicalState tmp{st.a, st.b};
    for (std::size_t i = 0; i < st.a.size(); ++i) {
        tmp.a[i] = st.a[i] + 0.5 * dt * k1.a[i];
        tmp.b[i] = st.b[i] + 0.5 * dt * k1.b[i];
    }
    const auto k2 = kirchhoff_rhs(tmp);
    for (std::size_t i = 0; i < st.a.size(); ++i) {
        tmp.a[i] = st.a[i] + 0.5 * dt * k2.a[i];
        tmp.b[i] = st.b[i] + 0.5 * dt * k2.b[i];
    }
    const auto k3 = kirchhoff_rhs(tmp);
    for (std::size_t i = 0; i < st.a.size(); ++i) {
        tmp.a[i] = st.a[i] + dt * k3.a[i];
        tmp.b[i] = st.b[i] + dt * k3.b[i];
    }
    const auto k4 = kirchhoff_rhs(tmp);
    for (std::size_t i = 0; i < st.a.size(); ++i) {
        st.a[i] += dt / 6.0 * (k1.a[i] + 2.0 * k2.a[i] + 2.0 * k3.a[i] + k4.a[i]);
        st.b[i] += dt / 6.0 * (k1.b[i] + 2.0 * k2.b[i] + 2.0 * k3.b[i] + k4.b[i]);
    }
}

}  // namespace

double suggested_dt(const PhysicalState& state, double user_dt) {
    const double lam_max = state.a.lattice()->lambda_max();
    const double p0 = gradient_square(state.a);
    return std::min(user_dt, 0.1 / (lam_max * std::sqrt(1.0 + p0)));
}

Trajectory integrate_physical(const PhysicalState& initial, double dt, double T,
                              PhysicalScheme scheme, std::size_t stride, bool keep_states) {
    if (dt <= 0.0) throw std::invalid_argument("integrate_physical: dt must be > 0");
    if (T < 0.0) throw std::invalid_argument("integrate_physical: T must be >= 0");
    if (stride == 0) stride = 1;

    const double lam_max = initial.a.lattice()->lambda_max();
    const double p0 = gradient_square(initial.a);
    const double guard = 0.2 / (lam_max * std::sqrt(1.0 + p0));
    if (dt > guard)
        throw NumericError("integrate_physical: dt violates the CFL guard dt <= " +
                           std::to_string(guard));

    Trajectory traj;
    PhysicalState st = initial;
    const auto record = [&](double t) {
        traj.times.push_back(t);
        if (keep_states) traj.states.push_back(st);
        traj.diagnostics.push_back(diagnostics_of(t, st));
    };
    record(0.0);

    const auto nsteps = static_cast<std::size_t>(std::ceil(T / dt - 1e-12));
    for (std::size_t step = 1; step <= nsteps; ++step) {
        if (scheme == PhysicalScheme::Leapfrog) {
            kick(st, 0.5 * dt);
            drift(st, dt);
            kick(st, 0.5 * dt);
        } else {
            rk4_step(st, dt);
        }
        if (step % 4096 == 0 || step == nsteps) check_finite(st, step);
        if (step % stride == 0 || step == nsteps)
            record(static_cast<double>(step) * dt);
    }
    return traj;
}

}  // namespace kirchlab
