// experiment.hpp — config-driven experiment runs with persistent artifacts
//
// The config is a flat key = value text file with section prefixes
// (lattice., data., run.); unknown keys are hard errors so a typo cannot
// silently invalidate a long run.  Every run writes CSV diagnostics plus a
// JSON manifest carrying the config hash and seed, so any output row is
// traceable to its inputs.

#pragma once

#include "kirchlab/dynamics.hpp"
#include "kirchlab/effective.hpp"
#include "kirchlab/nonres.hpp"

#include <map>
#include <string>
#include <vector>

namespace kirchlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RunMode { Physical, Effective, Both };

struct ExperimentConfig {
    int dimension = 1;
    std::int64_t n_max = 64;

    DataRecipe recipe = DataRecipe::PowerDecay;
    double sigma = 3.0;
    Rational seq_c0{1, 9};
    PhasePolicy phases = PhasePolicy::Zero;

    double check_c0 = 1.0 / 3.0;           // certification threshold
    std::vector<double> epsilons;          // strictly decreasing
    int horizon_p = 4;                     // T = A·c0·ε^{-p}
    double horizon_A = 1.0;
    double fixed_T = 0.0;                  // overrides the horizon rule when > 0

    RunMode mode = RunMode::Effective;
    EffectiveScheme eff_scheme = EffectiveScheme::RotFrame;
    PhysicalScheme phys_scheme = PhysicalScheme::Leapfrog;
    double dt = 0.0;                       // 0: pick from the lattice
    std::size_t stride = 100;

    std::uint64_t seed = 0;
    std::string raw;                       // original text (hashed into manifests)
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

struct ScalingFit {
    double exponent = 0.0;
    double width = 0.0;  // standard error of the slope from the residuals
};

// least squares in log-log coordinates; throws on nonpositive values
ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& series);

struct RunResult {
    double epsilon = 0.0;
    double T = 0.0;
    double certificate_c0 = 0.0;
    double max_growth = 0.0;      // effective runs
    double max_u_change = 0.0;    // physical runs
    double hamiltonian_drift = 0.0;
    std::vector<std::string> outputs;
};

struct ExperimentResult {
    std::vector<RunResult> runs;
    double growth_exponent = 0.0;  // fit of max_growth vs ε when ≥ 2 runs
    double exponent_width = 0.0;
    std::string manifest_path;
};

// Runs every ε of the grid (concurrently up to `threads`), writes artifacts
// under out_dir.  Throws CertificationError when the synthesized data fails
// the requested check_c0, NumericError on integrator aborts.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                unsigned threads = 0);

}  // namespace kirchlab
