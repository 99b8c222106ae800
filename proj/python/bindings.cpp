// pybind11 bindings for the kirchlab core
//
// Exposes the main operations: lattice/shell arithmetic, spectral states and
// observables, the normal-form chain, the effective shell system, and the
// nonresonance toolbox.  Fields travel as dicts {(k...): complex} keyed by
// lattice points.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "kirchlab/experiment.hpp"
#include "kirchlab/io.hpp"
#include "kirchlab/normal_form.hpp"

#include <sstream>

namespace py = pybind11;
using namespace kirchlab;

namespace {

using FieldDict = py::dict;  // {(k_1,...,k_d): complex}

SpectralField field_from_dict(const LatticeRef& lat, const FieldDict& d) {
    SpectralField f(lat);
    for (const auto& [key, val] : d) {
        const auto k = key.cast<std::vector<int>>();
        const auto idx = lat->find_point(k);
        if (!idx) throw std::invalid_argument("coefficient on point outside lattice");
        f[*idx] = val.cast<Complex>();
    }
    return f;
}

FieldDict dict_from_field(const SpectralField& f) {
    FieldDict d;
    const Lattice& lat = *f.lattice();
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == Complex{0.0, 0.0}) continue;
        const auto pt = lat.point(i);
        py::tuple key(pt.size());
        for (std::size_t c = 0; c < pt.size(); ++c) key[c] = pt[c];
        d[key] = f[i];
    }
    return d;
}

}  // namespace

PYBIND11_MODULE(_kirchlab, m) {
    m.doc() = "spectral laboratory for the Kirchhoff equation on the torus";

    py::class_<Shell>(m, "Shell")
        .def_readonly("n", &Shell::n)
        .def_readonly("m", &Shell::m)
        .def_readonly("p", &Shell::p)
        .def_readonly("lam", &Shell::lambda)
        .def("__repr__", [](const Shell& s) {
            std::ostringstream os;
            os << "Shell(n=" << s.n << ", m=" << s.m << ", p=" << s.p << ")";
            return os.str();
        });

    py::class_<Lattice, std::shared_ptr<Lattice>>(m, "Lattice")
        .def_static("build", &Lattice::build, py::arg("dimension"), py::arg("n_max"))
        .def_property_readonly("d", &Lattice::dim)
        .def_property_readonly("n_max", &Lattice::n_max)
        .def_property_readonly("num_points", &Lattice::num_points)
        .def_property_readonly("num_shells", &Lattice::num_shells)
        .def("shell", &Lattice::shell, py::return_value_policy::reference_internal)
        .def("shell_keys", [](const Lattice& lat) {
            std::vector<std::int64_t> ns;
            for (const auto& sh : lat.shells()) ns.push_back(sh.n);
            return ns;
        });

    m.def("squarefree_decompose", [](std::int64_t n) {
        const auto parts = squarefree_decompose(n);
        return py::make_tuple(parts.m, parts.p);
    });

    m.def("resonant_triples", [](const LatticeRef& lat) {
        const auto ts = resonant_triples(*lat);
        std::vector<std::tuple<std::int64_t, std::int64_t, std::int64_t>> out;
        for (const auto& tr : ts.sum_triples)
            out.emplace_back(lat->shell(tr.sa).n, lat->shell(tr.sb).n, lat->shell(tr.sc).n);
        return out;
    });

    py::class_<PhysicalState>(m, "PhysicalState")
        .def(py::init([](const LatticeRef& lat, const FieldDict& a, const FieldDict& b) {
                 return PhysicalState{field_from_dict(lat, a), field_from_dict(lat, b)};
             }),
             py::arg("lattice"), py::arg("a"), py::arg("b"))
        .def_property_readonly("a", [](const PhysicalState& s) { return dict_from_field(s.a); })
        .def_property_readonly("b", [](const PhysicalState& s) { return dict_from_field(s.b); });

    py::class_<ConjugatePair>(m, "ConjugatePair")
        .def(py::init([](const LatticeRef& lat, const FieldDict& u) {
                 return conjugate_pair_from_u(field_from_dict(lat, u));
             }),
             py::arg("lattice"), py::arg("u"))
        .def_property_readonly("u", [](const ConjugatePair& s) { return dict_from_field(s.u); })
        .def_property_readonly("v", [](const ConjugatePair& s) { return dict_from_field(s.v); });

    m.def("sobolev_norm",
          [](const LatticeRef& lat, const FieldDict& f, double s) {
              return sobolev_norm(field_from_dict(lat, f), s);
          },
          py::arg("lattice"), py::arg("coeffs"), py::arg("s"));

    m.def("hamiltonian", &hamiltonian);
    m.def("kirchhoff_rhs", &kirchhoff_rhs);
    m.def("u_lambda", [](const PhysicalState& st) {
        const auto U = u_lambda(st);
        std::map<std::int64_t, double> out;
        for (std::size_t s = 0; s < U.size(); ++s)
            out[st.a.lattice()->shell(s).n] = U[s];
        return out;
    });
    m.def("shell_observables", [](const ConjugatePair& pair) {
        const auto obs = shell_observables(pair);
        std::map<std::int64_t, std::pair<double, Complex>> out;
        for (std::size_t s = 0; s < obs.S.size(); ++s)
            out[pair.u.lattice()->shell(s).n] = {obs.S[s], obs.B[s]};
        return out;
    });

    m.def("synth_physical",
          [](const LatticeRef& lat, const std::map<std::int64_t, double>& targets,
             bool random_phases, std::uint64_t seed) {
              std::vector<std::pair<std::int64_t, double>> t(targets.begin(), targets.end());
              return synth_physical_from_targets(
                  lat, t, random_phases ? PhasePolicy::SeededRandom : PhasePolicy::Zero, seed);
          },
          py::arg("lattice"), py::arg("U_targets"), py::arg("random_phases") = false,
          py::arg("seed") = 0);

    m.def("integrate_physical",
          [](const PhysicalState& st, double dt, double T, const std::string& scheme,
             std::size_t stride) {
              const auto traj = integrate_physical(
                  st, dt, T, scheme == "rk4" ? PhysicalScheme::Rk4 : PhysicalScheme::Leapfrog,
                  stride, false);
              py::dict out;
              out["times"] = traj.times;
              std::vector<double> H;
              for (const auto& row : traj.diagnostics) H.push_back(row.H);
              out["H"] = H;
              return out;
          },
          py::arg("state"), py::arg("dt"), py::arg("T"), py::arg("scheme") = "leapfrog",
          py::arg("stride") = 100);

    py::class_<NormalForm>(m, "NormalForm")
        .def(py::init([](const std::shared_ptr<Lattice>& lat) { return NormalForm(lat); }))
        .def("chain_forward", &NormalForm::chain_forward)
        .def("chain_inverse", &NormalForm::chain_inverse)
        .def("x3plus", &NormalForm::x3plus)
        .def("w5", &NormalForm::w5)
        .def("calP_at", &NormalForm::calP_at)
        .def("w7_exponent", [](const NormalForm& nf, const ConjugatePair& uv) {
            return nf.w7_residual(uv).exponent;
        });

    m.def("phi_of", &phi_of);
    m.def("rho_of", &rho_of);

    m.def("effective_run",
          [](const ConjugatePair& pair, double dt, double T, std::size_t stride) {
              const auto lat = pair.u.lattice();
              const auto triples = resonant_triples(*lat);
              const auto st = effective_from_pair(pair);
              const auto traj =
                  integrate_effective(st, triples, dt, T, EffectiveScheme::RotFrame, stride);
              const auto rep = growth_report(traj, triples);
              py::dict out;
              out["times"] = traj.times;
              out["S"] = traj.S;
              out["max_growth"] = rep.max_growth;
              out["min_margin"] = rep.min_margin;
              return out;
          },
          py::arg("pair"), py::arg("dt"), py::arg("T"), py::arg("stride") = 100);

    m.def("check_nonres",
          [](const LatticeRef& lat, const std::map<std::int64_t, double>& values, double c0) {
              std::vector<double> v(lat->num_shells(), 0.0);
              for (const auto& [n, val] : values) {
                  const auto s = lat->shell_index_of(n);
                  if (!s) throw std::invalid_argument("value on missing shell");
                  v[*s] = val;
              }
              const auto triples = resonant_triples(*lat);
              const auto rep = check_nonres(v, *lat, triples, c0, NonresForm::U);
              py::dict out;
              out["pass"] = rep.pass;
              out["worst_margin"] = rep.worst_margin;
              out["triples_checked"] = rep.triples_checked;
              return out;
          },
          py::arg("lattice"), py::arg("U_values"), py::arg("c0"));

    m.def("make_nonresonant",
          [](const std::string& kind, const LatticeRef& lat, double epsilon, double sigma) {
              DataRecipe recipe = DataRecipe::PowerDecay;
              if (kind == "decreasing") recipe = DataRecipe::Decreasing;
              else if (kind == "power-decay") recipe = DataRecipe::PowerDecay;
              else if (kind == "sequential") recipe = DataRecipe::Sequential;
              else if (kind == "odd-support") recipe = DataRecipe::OddSupport;
              else if (kind == "primes-pattern") recipe = DataRecipe::PrimesPattern;
              else throw std::invalid_argument("unknown recipe " + kind);
              MakeOptions opts;
              opts.sigma = sigma;
              const auto data = make_nonresonant(recipe, lat, epsilon, opts);
              py::dict out;
              out["state"] = data.state;
              out["c0"] = data.certificate.c0;
              out["measured_margin"] = data.certificate.measured_margin;
              return out;
          },
          py::arg("kind"), py::arg("lattice"), py::arg("epsilon"), py::arg("sigma") = 3.0);

    m.def("fit_scaling", [](const std::vector<std::pair<double, double>>& series) {
        const auto fit = fit_scaling(series);
        return py::make_tuple(fit.exponent, fit.width);
    });

#ifdef KIRCHLAB_VERSION
    m.attr("__version__") = KIRCHLAB_VERSION;
#else
    m.attr("__version__") = "dev";
#endif
}
