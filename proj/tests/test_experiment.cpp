#include "kirchlab/experiment.hpp"

#include "kirchlab/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kirchlab;

TEST_CASE("config parsing and validation") {
    const std::string good = R"(
# comment
lattice.d = 1
lattice.n_max = 16
data.kind = power-decay
data.sigma = 3
run.mode = effective
run.epsilons = 0.1, 0.05
run.horizon_p = 2
run.dt = 0.1
run.stride = 10
seed = 7
)";
    const auto cfg = parse_config(good);
    CHECK(cfg.dimension == 1);
    CHECK(cfg.n_max == 16);
    CHECK(cfg.recipe == DataRecipe::PowerDecay);
    CHECK(cfg.epsilons == std::vector<double>{0.1, 0.05});
    CHECK(cfg.horizon_p == 2);
    CHECK(cfg.seed == 7);

    CHECK_THROWS_AS(parse_config("lattice.d = 1\nbogus.key = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("run.epsilons = 0.05, 0.1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("run.horizon_p = 3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("data.kind = nonsense\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("lattice.d 1\n"), ConfigError);
}

TEST_CASE("fit_scaling on exact laws") {
    const auto sq = fit_scaling({{0.1, 0.01}, {0.05, 0.0025}});
    CHECK(sq.exponent == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(sq.width == 0.0);

    const auto flat = fit_scaling({{0.1, 3.0}, {0.05, 3.0}, {0.025, 3.0}});
    CHECK(flat.exponent == doctest::Approx(0.0));

    CHECK_THROWS_AS(fit_scaling({{0.1, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(fit_scaling({{0.1, -1.0}, {0.05, 1.0}}), std::invalid_argument);
}

TEST_CASE("smoke experiment writes artifacts and a manifest") {
    const std::string dir = "exp_smoke_out";
    std::filesystem::remove_all(dir);
    ExperimentConfig cfg = parse_config(R"(
lattice.d = 1
lattice.n_max = 16
data.kind = power-decay
run.mode = both
run.epsilons = 0.1
run.T = 1.0
run.stride = 5
seed = 3
)");
    const auto result = run_experiment(cfg, dir, 1);
    REQUIRE(result.runs.size() == 1);
    CHECK(result.runs[0].certificate_c0 == doctest::Approx(1.0 / 3.0));
    CHECK(result.runs[0].T == 1.0);
    CHECK(std::filesystem::exists(dir + "/manifest.json"));
    CHECK(std::filesystem::exists(dir + "/shells.csv"));
    CHECK(std::filesystem::exists(dir + "/run0_effective.csv"));
    CHECK(std::filesystem::exists(dir + "/run0_physical.csv"));
    CHECK(std::filesystem::exists(dir + "/run0_triples.csv"));

    const std::string manifest = read_text_file(dir + "/manifest.json");
    CHECK(manifest.find("config_hash") != std::string::npos);
    CHECK(manifest.find(fnv1a_hex(cfg.raw)) != std::string::npos);

    // identical config + seed => identical CSV bytes
    const std::string first = read_text_file(dir + "/run0_effective.csv");
    std::filesystem::remove_all(dir);
    run_experiment(cfg, dir, 1);
    CHECK(read_text_file(dir + "/run0_effective.csv") == first);
    std::filesystem::remove_all(dir);
}

TEST_CASE("certification failure carries through") {
    // flat profile fails at c0 just above 1/3
    ExperimentConfig cfg = parse_config(R"(
lattice.d = 1
lattice.n_max = 16
data.kind = power-decay
run.check_c0 = 0.999
run.mode = effective
run.epsilons = 0.1
run.T = 0.5
)");
    // power-decay margins exceed 0.98 on this lattice but not 0.999
    CHECK_THROWS_AS(run_experiment(cfg, "exp_cert_out", 1), CertificationError);
    std::filesystem::remove_all("exp_cert_out");
}

TEST_CASE("state files round trip through the text format") {
    auto lat = Lattice::build(2, 4);
    PhysicalState st{SpectralField(lat), SpectralField(lat)};
    std::size_t idx = 0;
    for (auto i : lat->shell(0).members) st.a[i] = Complex{0.25, 0.0};
    for (auto i : lat->shell(1).members) st.b[i] = Complex{0.0, 0.125 * ++idx};
    std::ostringstream os;
    write_state(os, st);
    std::istringstream is(os.str());
    const auto loaded = read_state(is);
    REQUIRE(std::holds_alternative<PhysicalState>(loaded));
    const auto& l = std::get<PhysicalState>(loaded);
    for (std::size_t i = 0; i < st.a.size(); ++i) {
        CHECK(l.a[i] == st.a[i]);
        CHECK(l.b[i] == st.b[i]);
    }

    std::istringstream bad("kirchlab-state v2\n");
    CHECK_THROWS(read_state(bad));
}
