// kirchlab — Kirchhoff spectral laboratory command line
//
// verbs: simulate, transform, effective, nonres, experiment
// exit codes: 0 success, 2 config error, 3 certification failure, 4 numeric abort

#include "kirchlab/experiment.hpp"
#include "kirchlab/io.hpp"
#include "kirchlab/normal_form.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace kirchlab;
using nlohmann::json;

struct GlobalOpts {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned threads = 0;
};

int run_config_verb(const GlobalOpts& g, RunMode forced_mode, bool force = true) {
    if (g.config.empty()) throw ConfigError("--config is required");
    ExperimentConfig cfg = load_config(g.config);
    if (g.seed_set) cfg.seed = g.seed;
    if (force) cfg.mode = forced_mode;
    const auto result = run_experiment(cfg, g.out, g.threads);
    std::cout << "wrote " << result.manifest_path << "\n";
    for (const auto& rr : result.runs)
        std::cout << "  eps=" << rr.epsilon << " T=" << rr.T << " growth=" << rr.max_growth
                  << " dU=" << rr.max_u_change << " dH=" << rr.hamiltonian_drift << "\n";
    if (result.runs.size() >= 2 && result.growth_exponent != 0.0)
        std::cout << "growth exponent vs eps: " << result.growth_exponent << " +- "
                  << result.exponent_width << "\n";
    return 0;
}

double norm_of_variant(const StateVariant& st) {
    if (std::holds_alternative<PhysicalState>(st)) {
        const auto& p = std::get<PhysicalState>(st);
        const double m1 = m1_of_dim(p.a.lattice()->dim());
        return sobolev_norm(p.a, m1 + 0.5) + sobolev_norm(p.b, m1 - 0.5);
    }
    const auto& c = std::get<ConjugatePair>(st);
    return sobolev_norm(c.u, m1_of_dim(c.u.lattice()->dim()));
}

double diff_of_variants(const StateVariant& a, const StateVariant& b) {
    if (std::holds_alternative<PhysicalState>(a)) {
        const auto& pa = std::get<PhysicalState>(a);
        const auto& pb = std::get<PhysicalState>(b);
        const double m1 = m1_of_dim(pa.a.lattice()->dim());
        return sobolev_norm(pa.a - pb.a, m1 + 0.5) + sobolev_norm(pa.b - pb.b, m1 - 0.5);
    }
    const auto& ca = std::get<ConjugatePair>(a);
    const auto& cb = std::get<ConjugatePair>(b);
    return sobolev_norm(ca.u - cb.u, m1_of_dim(ca.u.lattice()->dim()));
}

int run_transform(const std::string& in_path, const std::string& stage, const std::string& dir,
                  const std::string& out_path, const std::string& report_path) {
    const StateVariant input = read_state_file(in_path);
    const bool forward = dir == "forward";
    if (!forward && dir != "inverse") throw ConfigError("--dir must be forward or inverse");

    StateVariant output = input;
    json report;

    const auto lattice_of = [](const StateVariant& st) {
        return std::holds_alternative<PhysicalState>(st)
                   ? std::get<PhysicalState>(st).a.lattice()
                   : std::get<ConjugatePair>(st).u.lattice();
    };
    NormalForm nf(lattice_of(input));

    const auto as_phys = [](const StateVariant& st) -> const PhysicalState& {
        if (!std::holds_alternative<PhysicalState>(st))
            throw ConfigError("transform: this stage expects a physical-kind state file");
        return std::get<PhysicalState>(st);
    };
    const auto as_pair = [](const StateVariant& st) -> const ConjugatePair& {
        if (!std::holds_alternative<ConjugatePair>(st))
            throw ConfigError("transform: this stage expects a conjugate-kind state file");
        return std::get<ConjugatePair>(st);
    };

    if (stage == "full") {
        if (forward) {
            const auto uv = nf.chain_forward(as_phys(input));
            const auto back = nf.chain_inverse(uv);
            report["round_trip_error"] = diff_of_variants(input, StateVariant{back});
            const auto s = phi3_scalars(uv);
            report["Q"] = s.Q;
            report["P"] = s.P;
            report["rho"] = s.rho;
            report["calP"] = nf.calP_at(uv);
            output = uv;
        } else {
            const auto ab = nf.chain_inverse(as_pair(input));
            const auto back = nf.chain_forward(ab);
            report["round_trip_error"] = diff_of_variants(input, StateVariant{back});
            const auto s = phi3_scalars(as_pair(input));
            report["Q"] = s.Q;
            report["P"] = s.P;
            report["rho"] = s.rho;
            report["calP"] = nf.calP_at(as_pair(input));
            output = ab;
        }
    } else if (stage == "1") {
        const auto& p = as_phys(input);
        if (forward)
            output = phi1_forward(RealPair{p.a, p.b});
        else {
            const auto qp = phi1_inverse(p);
            output = PhysicalState{qp.q, qp.p};
        }
    } else if (stage == "2") {
        if (forward) {
            const auto qp = phi2_forward(as_pair(input));
            output = PhysicalState{qp.q, qp.p};
        } else {
            const auto& p = as_phys(input);
            output = phi2_inverse(RealPair{p.a, p.b});
        }
    } else if (stage == "3" || stage == "4" || stage == "5") {
        const auto& pair = as_pair(input);
        const auto d = forward ? StageDir::Forward : StageDir::Inverse;
        ConjugatePair out{SpectralField(pair.u.lattice()), SpectralField(pair.u.lattice())};
        if (stage == "3")
            out = phi3(d, pair);
        else if (stage == "4")
            out = phi4(d, pair);
        else
            out = nf.phi5(d, pair);
        const auto s = phi3_scalars(pair);
        report["Q"] = s.Q;
        report["P"] = s.P;
        report["rho"] = s.rho;
        report["calP"] = s.calP;
        output = out;
    } else {
        throw ConfigError("--stage must be one of full, 1, 2, 3, 4, 5");
    }

    report["input_norm"] = norm_of_variant(input);
    report["output_norm"] = norm_of_variant(output);
    write_state_file(out_path, output);
    if (!report_path.empty()) write_text_file(report_path, report.dump(2) + "\n");
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int run_nonres_check(const std::string& in_path, double c0, const std::string& form_str,
                     bool melnikov, double tau, const std::string& report_path) {
    const StateVariant input = read_state_file(in_path);
    if (!std::holds_alternative<PhysicalState>(input))
        throw ConfigError("nonres check expects a physical-kind state file");
    const auto& st = std::get<PhysicalState>(input);
    const auto lat = st.a.lattice();
    const auto triples = resonant_triples(*lat);

    NonresForm form = NonresForm::U;
    std::vector<double> values;
    if (form_str == "U") {
        values = u_lambda(st);
    } else if (form_str == "S") {
        NormalForm nf(lat);
        const auto uv = nf.chain_forward(st);
        values = shell_observables(uv).S;
        form = NonresForm::S;
    } else {
        throw ConfigError("--form must be U or S");
    }

    const CheckReport rep = melnikov ? check_melnikov(values, *lat, triples, c0, tau, form)
                                     : check_nonres(values, *lat, triples, c0, form);
    json j;
    j["pass"] = rep.pass;
    j["worst_margin"] =
        rep.triples_checked > 0 ? json(rep.worst_margin) : json(nullptr);
    j["triples_checked"] = rep.triples_checked;
    j["violations"] = json::array();
    for (const auto& v : rep.violations)
        j["violations"].push_back({{"n_a", v.n_a},
                                   {"n_b", v.n_b},
                                   {"n_l", v.n_l},
                                   {"margin", v.margin},
                                   {"threshold", v.threshold}});
    const std::string text = j.dump(2) + "\n";
    if (!report_path.empty()) write_text_file(report_path, text);
    std::cout << text;
    return rep.pass ? 0 : 3;
}

int run_nonres_make(const std::string& kind, int d, std::int64_t n_max, double epsilon,
                    double sigma, const std::string& c0_str, std::uint64_t seed,
                    const std::string& out_path, const std::string& cert_path) {
    DataRecipe recipe;
    if (kind == "decreasing") recipe = DataRecipe::Decreasing;
    else if (kind == "power-decay") recipe = DataRecipe::PowerDecay;
    else if (kind == "sequential") recipe = DataRecipe::Sequential;
    else if (kind == "odd-support") recipe = DataRecipe::OddSupport;
    else if (kind == "primes-pattern") recipe = DataRecipe::PrimesPattern;
    else throw ConfigError("unknown --kind: " + kind);

    auto lat = Lattice::build(d, n_max);
    MakeOptions opts;
    opts.sigma = sigma;
    opts.seed = seed;
    if (!c0_str.empty()) {
        const auto slash = c0_str.find('/');
        opts.c0 = slash == std::string::npos
                      ? Rational(std::stoll(c0_str), 1)
                      : Rational(std::stoll(c0_str.substr(0, slash)),
                                 std::stoll(c0_str.substr(slash + 1)));
    }
    const NonresData data = make_nonresonant(recipe, lat, epsilon, opts);
    write_state_file(out_path, StateVariant{data.state});

    json cert;
    cert["recipe"] = data.certificate.recipe;
    cert["c0"] = data.certificate.c0;
    if (data.certificate.c0_exact) cert["c0_exact"] = data.certificate.c0_exact->str();
    cert["measured_margin"] = data.certificate.measured_margin;
    cert["triples_checked"] = data.certificate.triples_checked;
    cert["epsilon"] = epsilon;
    const std::string text = cert.dump(2) + "\n";
    if (!cert_path.empty()) write_text_file(cert_path, text);
    std::cout << text;
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kirchlab — spectral laboratory for the Kirchhoff equation on the torus"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config, "config file (key = value)");
    app.add_option("--out", g.out, "output directory");
    auto* seed_opt = app.add_option("--seed", g.seed, "experiment seed override");
    app.add_option("--threads", g.threads, "worker threads (0 = hardware)");

    auto* simulate = app.add_subcommand("simulate", "integrate the full wave system");
    auto* effective = app.add_subcommand("effective", "integrate the truncated shell system");
    auto* experiment = app.add_subcommand("experiment", "run the config as written");
    for (auto* sub : {simulate, effective, experiment}) sub->fallthrough();

    auto* transform = app.add_subcommand("transform", "apply normal-form stages to a state file");
    std::string t_in, t_stage = "full", t_dir = "forward", t_out = "out.state", t_report;
    transform->add_option("--in", t_in, "input state file")->required();
    transform->add_option("--stage", t_stage, "full, 1, 2, 3, 4 or 5");
    transform->add_option("--dir", t_dir, "forward (physical→normal) or inverse");
    transform->add_option("--out-file", t_out, "output state file");
    transform->add_option("--report", t_report, "JSON report path");

    auto* nonres = app.add_subcommand("nonres", "nonresonance checks and constructions");
    nonres->require_subcommand(1);
    auto* ncheck = nonres->add_subcommand("check", "check a state file");
    std::string c_in, c_form = "U", c_report;
    double c_c0 = 1.0 / 3.0, c_tau = 2.0;
    bool c_melnikov = false;
    ncheck->add_option("--in", c_in, "input state file (physical kind)")->required();
    ncheck->add_option("--c0", c_c0, "required constant");
    ncheck->add_option("--form", c_form, "U or S");
    ncheck->add_flag("--melnikov", c_melnikov, "use the Melnikov-like condition");
    ncheck->add_option("--tau", c_tau, "Melnikov exponent");
    ncheck->add_option("--report", c_report, "JSON report path");

    auto* nmake = nonres->add_subcommand("make", "construct certified data");
    std::string m_kind = "power-decay", m_c0, m_out = "data.state", m_cert;
    int m_d = 1;
    std::int64_t m_nmax = 64;
    double m_eps = 0.05, m_sigma = 3.0;
    nmake->add_option("--kind", m_kind,
                      "decreasing, power-decay, sequential, odd-support, primes-pattern");
    nmake->add_option("--d", m_d, "dimension");
    nmake->add_option("--n-max", m_nmax, "shell cutoff");
    nmake->add_option("--epsilon", m_eps, "data size |a|_{m1+1/2} + |b|_{m1-1/2}");
    nmake->add_option("--sigma", m_sigma, "power-decay exponent");
    nmake->add_option("--c0", m_c0, "sequential constant (rational like 1/9)");
    nmake->add_option("--out-file", m_out, "output state file");
    nmake->add_option("--cert", m_cert, "certificate JSON path");

    try {
        app.parse(argc, argv);
        g.seed_set = seed_opt->count() > 0;
        if (simulate->parsed()) return run_config_verb(g, RunMode::Physical);
        if (effective->parsed()) return run_config_verb(g, RunMode::Effective);
        if (experiment->parsed()) return run_config_verb(g, RunMode::Both, /*force=*/false);
        if (transform->parsed()) return run_transform(t_in, t_stage, t_dir, t_out, t_report);
        if (ncheck->parsed())
            return run_nonres_check(c_in, c_c0, c_form, c_melnikov, c_tau, c_report);
        if (nmake->parsed())
            return run_nonres_make(m_kind, m_d, m_nmax, m_eps, m_sigma, m_c0, g.seed, m_out,
                                   m_cert);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const kirchlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const kirchlab::CertificationError& e) {
        std::cerr << "certification failure: " << e.what() << "\n";
        return 3;
    } catch (const kirchlab::NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
