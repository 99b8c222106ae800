// dynamics.hpp — the original wave system in spectral form and its integrators
//
// Hamiltonian system:
//     ∂_t u = v
//     ∂_t v = Δu (1 + ∫ |∇u|²)
// i.e. per mode  ∂_t a_k = b_k,  ∂_t b_k = -|k|² (1 + P) a_k  with
// P = ⟨Λa, Λa⟩ = Σ_j |j|² a_j a_{-j}, and energy
//     H = ½⟨v,v⟩ + ½⟨Λu,Λu⟩ + ¼⟨Λu,Λu⟩².
//
// H is exactly separable (kinetic in b, potential in a), so Störmer–Verlet
// applies with one force evaluation per step; RK4 is kept as the
// non-symplectic cross-check.

#pragma once

#include "kirchlab/spectral.hpp"

#include <functional>
#include <vector>

namespace kirchlab {

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Σ_j |j|² a_j a_{-j}; real for real fields.
double gradient_square(const SpectralField& a);

PhysicalState kirchhoff_rhs(const PhysicalState& state);
double hamiltonian(const PhysicalState& state);

struct DiagnosticsRow {
    double t = 0.0;
    double H = 0.0;
    double norm_m1 = 0.0;  // ‖a‖_{m1+1/2} + ‖b‖_{m1-1/2}
    std::vector<double> U;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PhysicalState> states;
    std::vector<DiagnosticsRow> diagnostics;
};

enum class PhysicalScheme { Leapfrog, Rk4 };

// dt respecting the stiffest linear frequency at t=0
double suggested_dt(const PhysicalState& state, double user_dt);

// Integrates on [0,T], storing every `stride`-th step (plus the endpoints).
// Throws NumericError when dt violates the guard dt ≤ 0.2/(λ_max √(1+P(0)))
// or when a non-finite value appears (message carries the step index).
Trajectory integrate_physical(const PhysicalState& initial, double dt, double T,
                              PhysicalScheme scheme, std::size_t stride = 1,
                              bool keep_states = true);

double m1_of_dim(int d);  // 1 in d=1, 2 in d>=2
double m0_of_dim(int d);  // 1 in d=1, 3/2 in d>=2

}  // namespace kirchlab
