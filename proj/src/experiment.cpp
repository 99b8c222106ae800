#include "kirchlab/experiment.hpp"

#include "kirchlab/io.hpp"
#include "kirchlab/normal_form.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace kirchlab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

Rational parse_rational(const std::string& text) {
    const auto slash = text.find('/');
    if (slash != std::string::npos) {
        return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    }
    // decimal fallback: denominator a power of ten
    const auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(text), 1);
    const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    std::int64_t den = 1;
    for (std::size_t i = dot + 1; i < text.size(); ++i) den *= 10;
    return Rational(std::stoll(digits), den);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.raw = text;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    bool have_eps = false;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        try {
            if (key == "lattice.d") {
                cfg.dimension = std::stoi(val);
            } else if (key == "lattice.n_max") {
                cfg.n_max = std::stoll(val);
            } else if (key == "data.kind") {
                if (val == "decreasing") cfg.recipe = DataRecipe::Decreasing;
                else if (val == "power-decay") cfg.recipe = DataRecipe::PowerDecay;
                else if (val == "sequential") cfg.recipe = DataRecipe::Sequential;
                else if (val == "odd-support") cfg.recipe = DataRecipe::OddSupport;
                else if (val == "primes-pattern") cfg.recipe = DataRecipe::PrimesPattern;
                else throw ConfigError("unknown data.kind: " + val);
            } else if (key == "data.sigma") {
                cfg.sigma = std::stod(val);
            } else if (key == "data.c0") {
                cfg.seq_c0 = parse_rational(val);
            } else if (key == "data.phase") {
                if (val == "zero") cfg.phases = PhasePolicy::Zero;
                else if (val == "random") cfg.phases = PhasePolicy::SeededRandom;
                else throw ConfigError("unknown data.phase: " + val);
            } else if (key == "run.check_c0") {
                cfg.check_c0 = parse_rational(val).value();
            } else if (key == "run.epsilons") {
                cfg.epsilons.clear();
                std::istringstream es(val);
                std::string tok;
                while (std::getline(es, tok, ',')) cfg.epsilons.push_back(std::stod(trim(tok)));
                have_eps = true;
            } else if (key == "run.horizon_p") {
                cfg.horizon_p = std::stoi(val);
            } else if (key == "run.horizon_A") {
                cfg.horizon_A = std::stod(val);
            } else if (key == "run.T") {
                cfg.fixed_T = std::stod(val);
            } else if (key == "run.mode") {
                if (val == "physical") cfg.mode = RunMode::Physical;
                else if (val == "effective") cfg.mode = RunMode::Effective;
                else if (val == "both") cfg.mode = RunMode::Both;
                else throw ConfigError("unknown run.mode: " + val);
            } else if (key == "run.scheme") {
                if (val == "rotframe") cfg.eff_scheme = EffectiveScheme::RotFrame;
                else if (val == "rk4") {
                    cfg.eff_scheme = EffectiveScheme::Rk4;
                    cfg.phys_scheme = PhysicalScheme::Rk4;
                } else if (val == "leapfrog") cfg.phys_scheme = PhysicalScheme::Leapfrog;
                else throw ConfigError("unknown run.scheme: " + val);
            } else if (key == "run.dt") {
                cfg.dt = std::stod(val);
            } else if (key == "run.stride") {
                cfg.stride = static_cast<std::size_t>(std::stoull(val));
            } else if (key == "seed") {
                cfg.seed = std::stoull(val);
            } else {
                throw ConfigError("unknown config key: " + key);
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("config line " + std::to_string(lineno) + " (" + key +
                              "): " + e.what());
        }
    }
    if (!have_eps) cfg.epsilons = {0.05};
    if (cfg.epsilons.empty()) throw ConfigError("run.epsilons: empty grid");
    for (std::size_t i = 1; i < cfg.epsilons.size(); ++i)
        if (!(cfg.epsilons[i] < cfg.epsilons[i - 1]))
            throw ConfigError("run.epsilons must be strictly decreasing");
    if (cfg.horizon_p != 0 && cfg.horizon_p != 2 && cfg.horizon_p != 4 && cfg.horizon_p != 6)
        throw ConfigError("run.horizon_p must be one of 0, 2, 4, 6");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_text_file(path));
}

ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& series) {
    if (series.size() < 2) throw std::invalid_argument("fit_scaling: need at least two points");
    std::vector<double> x, y;
    for (const auto& [eps, q] : series) {
        if (!(eps > 0.0) || !(q > 0.0))
            throw std::invalid_argument("fit_scaling: nonpositive value");
        x.push_back(std::log(eps));
        y.push_back(std::log(q));
    }
    const auto n = static_cast<double>(x.size());
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xm += x[i];
        ym += y[i];
    }
    xm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_scaling: degenerate abscissae");
    ScalingFit fit;
    fit.exponent = sxy / sxx;
    if (x.size() > 2) {
        double ssr = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - ym - fit.exponent * (x[i] - xm);
            ssr += r * r;
        }
        fit.width = std::sqrt(ssr / (n - 2.0) / sxx);
    }
    return fit;
}

namespace {

using nlohmann::json;

RunResult run_single(const ExperimentConfig& cfg, const LatticeRef& lat, const TripleSet& triples,
                     double epsilon, const std::string& out_dir, int index) {
    MakeOptions opts;
    opts.sigma = cfg.sigma;
    opts.c0 = cfg.seq_c0;
    opts.phases = cfg.phases;
    opts.seed = cfg.seed;
    NonresData data = make_nonresonant(cfg.recipe, lat, epsilon, opts);

    const auto check = check_nonres(data.U, *lat, triples, cfg.check_c0, NonresForm::U);
    if (!check.pass)
        throw CertificationError("run_experiment: data misses requested c0 (worst margin " +
                                 std::to_string(check.worst_margin) + ")");

    RunResult rr;
    rr.epsilon = epsilon;
    rr.certificate_c0 = data.certificate.c0;
    rr.T = cfg.fixed_T > 0.0 ? cfg.fixed_T
                             : cfg.horizon_A * cfg.check_c0 * std::pow(epsilon, -cfg.horizon_p);

    const std::string prefix = out_dir + "/run" + std::to_string(index);

    if (cfg.mode == RunMode::Effective || cfg.mode == RunMode::Both) {
        NormalForm nf(lat);
        const auto uv = nf.chain_forward(data.state);
        const auto eff0 = effective_from_pair(uv);
        const double dt = cfg.dt > 0.0 ? cfg.dt : 0.5 / lat->lambda_max();
        const auto traj = integrate_effective(eff0, triples, dt, rr.T, cfg.eff_scheme, cfg.stride);
        const auto rep = growth_report(traj, triples);
        rr.max_growth = rep.max_growth;
        {
            std::ofstream os(prefix + "_effective.csv");
            write_effective_csv(os, *lat, traj);
            rr.outputs.push_back(prefix + "_effective.csv");
        }
        {
            std::ofstream os(prefix + "_triples.csv");
            write_triple_csv(os, *lat, traj, triples);
            rr.outputs.push_back(prefix + "_triples.csv");
        }
    }
    if (cfg.mode == RunMode::Physical || cfg.mode == RunMode::Both) {
        const double dt = cfg.dt > 0.0 ? cfg.dt : suggested_dt(data.state, 1.0);
        const auto traj = integrate_physical(data.state, dt, rr.T, cfg.phys_scheme, cfg.stride,
                                             /*keep_states=*/false);
        const auto& d0 = traj.diagnostics.front();
        for (const auto& row : traj.diagnostics) {
            rr.hamiltonian_drift =
                std::max(rr.hamiltonian_drift, std::abs(row.H - d0.H) / std::abs(d0.H));
            for (std::size_t s = 0; s < row.U.size(); ++s)
                if (d0.U[s] > 0.0)
                    rr.max_u_change =
                        std::max(rr.max_u_change, std::abs(row.U[s] / d0.U[s] - 1.0));
        }
        std::ofstream os(prefix + "_physical.csv");
        write_physical_csv(os, *lat, traj);
        rr.outputs.push_back(prefix + "_physical.csv");
    }
    return rr;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                unsigned threads) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    auto lat = Lattice::build(cfg.dimension, cfg.n_max);
    const auto triples = resonant_triples(*lat);
    write_text_file(out_dir + "/shells.csv", shell_table_csv(*lat));

    ExperimentResult result;
    result.runs.resize(cfg.epsilons.size());

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, cfg.epsilons.size());

    std::mutex mtx;
    std::size_t next = 0;
    std::exception_ptr first_error;
    const auto worker = [&]() {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mtx);
                if (next >= cfg.epsilons.size() || first_error) return;
                i = next++;
            }
            try {
                auto rr = run_single(cfg, lat, triples, cfg.epsilons[i], out_dir,
                                     static_cast<int>(i));
                std::lock_guard lock(mtx);
                result.runs[i] = std::move(rr);
            } catch (...) {
                std::lock_guard lock(mtx);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    if (cfg.epsilons.size() >= 2 &&
        (cfg.mode == RunMode::Effective || cfg.mode == RunMode::Both)) {
        std::vector<std::pair<double, double>> series;
        for (const auto& rr : result.runs)
            if (rr.max_growth > 0.0) series.emplace_back(rr.epsilon, rr.max_growth);
        if (series.size() >= 2) {
            const auto fit = fit_scaling(series);
            result.growth_exponent = fit.exponent;
            result.exponent_width = fit.width;
        }
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json manifest;
    manifest["version"] = "kirchlab 0.1.0";
    manifest["config_hash"] = fnv1a_hex(cfg.raw);
    manifest["seed"] = cfg.seed;
    manifest["wall_time_s"] = wall;
    manifest["lattice"] = {{"d", cfg.dimension}, {"n_max", cfg.n_max},
                           {"shells", lat->num_shells()}};
    manifest["outputs"] = json::array({out_dir + "/shells.csv"});
    manifest["runs"] = json::array();
    for (const auto& rr : result.runs) {
        json jr;
        jr["epsilon"] = rr.epsilon;
        jr["T"] = rr.T;
        jr["certificate_c0"] = rr.certificate_c0;
        jr["max_growth"] = rr.max_growth;
        jr["max_u_change"] = rr.max_u_change;
        jr["hamiltonian_drift"] = rr.hamiltonian_drift;
        jr["outputs"] = rr.outputs;
        manifest["runs"].push_back(jr);
    }
    if (result.runs.size() >= 2) {
        manifest["growth_fit"] = {{"exponent", result.growth_exponent},
                                  {"width", result.exponent_width}};
    }
    result.manifest_path = out_dir + "/manifest.json";
    write_text_file(result.manifest_path, manifest.dump(2) + "\n");
    return result;
}

}  // namespace kirchlab
