#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "spider/experiment.hpp"

using namespace spider;
using namespace spider::exp;
using nlohmann::json;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("spider3p_exp_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    static int counter;
};
int TempDir::counter = 0;

json toy_config() {
    return json::parse(R"({
      "problem": {"type": "quadratic_toy", "n": 10, "q": 3, "radius": 1.0, "seed": 5},
      "algorithm": "vmfb",
      "run": {"epochs": 8, "b": 10, "stepsize": [[0, 0.2]], "record_objective": true},
      "replicates": 1,
      "master_seed": 99
    })");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("config validation rejects unknown keys with field paths") {
    json j = toy_config();
    j["runn"] = 1;
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("runn"), ConfigError);

    json j2 = toy_config();
    j2["run"]["typo"] = true;
    CHECK_THROWS_WITH_AS(parse_config(j2), doctest::Contains("run.typo"),
                         ConfigError);

    json j3 = toy_config();
    j3["problem"]["extra"] = 0;
    CHECK_THROWS_WITH_AS(parse_config(j3), doctest::Contains("problem.extra"),
                         ConfigError);

    json j4 = toy_config();
    j4["algorithm"] = "sgd";
    CHECK_THROWS_AS(parse_config(j4), ConfigError);

    json j5 = toy_config();
    j5["run"]["stepsize"] = json::array({json::array({1.0, 0.2})});
    CHECK_THROWS_WITH_AS(parse_config(j5), doctest::Contains("stepsize"),
                         ConfigError);

    json j6 = toy_config();
    j6["replicates"] = 0;
    CHECK_THROWS_AS(parse_config(j6), ConfigError);
}

TEST_CASE("quadratic toy under vmfb yields decreasing stationarity") {
    TempDir dir;
    const auto config = parse_config(toy_config());
    const auto outcome = run_experiment(config, dir.path);
    REQUIRE(outcome.trace_files.size() == 1);

    // read back the trace and check the delta column trend after the first
    // epoch (convex exact problem with a constant stepsize)
    std::ifstream in(outcome.trace_files.front());
    std::string line;
    std::getline(in, line);
    CHECK(line == std::string(kTraceCsvHeader));
    std::vector<double> deltas, epochs;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        REQUIRE(cells.size() == 9);
        deltas.push_back(std::stod(cells[2]));
        epochs.push_back(std::stod(cells[7]));
    }
    REQUIRE(deltas.size() >= 4);
    for (std::size_t i = 1; i < deltas.size(); ++i) {
        if (epochs[i] > 1.0) CHECK(deltas[i] <= deltas[i - 1] * (1.0 + 1e-9));
    }
}

TEST_CASE("experiment outputs replay byte-identically") {
    TempDir dir1, dir2;
    json j = toy_config();
    j["replicates"] = 3;
    const auto config = parse_config(j);
    const auto out1 = run_experiment(config, dir1.path);
    const auto out2 = run_experiment(config, dir2.path);
    REQUIRE(out1.trace_files.size() == out2.trace_files.size());
    for (std::size_t i = 0; i < out1.trace_files.size(); ++i)
        CHECK(slurp(out1.trace_files[i]) == slurp(out2.trace_files[i]));
    CHECK(slurp(out1.summary_file) == slurp(out2.summary_file));
}

TEST_CASE("summary envelope invariant holds") {
    TempDir dir;
    json j = toy_config();
    j["replicates"] = 4;
    j["master_seed"] = 7;
    const auto outcome = run_experiment(parse_config(j), dir.path);
    const auto& env = outcome.summary.at("envelope").at("last5_mean_delta");
    CHECK(env.at("min").get<double>() <= env.at("mean").get<double>());
    CHECK(env.at("mean").get<double>() <= env.at("max").get<double>());
}

TEST_CASE("epoch accounting: full refresh consumes exactly one epoch") {
    TempDir dir;
    json j = json::parse(R"({
      "problem": {"type": "gaussian_em_fixture", "n": 40, "theta_star": 1.5, "seed": 3},
      "algorithm": "spider",
      "run": {"epochs": 6, "b": 8, "kin": 5, "stepsize": [[0, 0.5]]},
      "replicates": 1,
      "master_seed": 11
    })");
    const auto outcome = run_experiment(parse_config(j), dir.path);
    std::ifstream in(outcome.trace_files.front());
    std::string line;
    std::getline(in, line);
    // first row: refresh (40 calls = 1 epoch) plus the free first inner step
    std::getline(in, line);
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    CHECK(std::stod(cells[7]) == doctest::Approx(1.0));
    CHECK(std::stoll(cells[5]) == 40);
}

TEST_CASE("em with full batches equals vmfb on the exact fixture") {
    TempDir dir;
    json base = json::parse(R"({
      "problem": {"type": "gaussian_em_fixture", "n": 30, "theta_star": 2.0, "seed": 9},
      "algorithm": "em",
      "run": {"epochs": 12, "b": 30, "stepsize": [[0, 0.7]]},
      "replicates": 1,
      "master_seed": 1
    })");
    const auto em_out = run_experiment(parse_config(base), dir.path / "em");
    base["algorithm"] = "vmfb";
    const auto vm_out = run_experiment(parse_config(base), dir.path / "vmfb");

    const std::string em_csv = slurp(em_out.trace_files.front());
    const std::string vm_csv = slurp(vm_out.trace_files.front());
    // identical delta columns row by row
    std::istringstream ea(em_csv), va(vm_csv);
    std::string el, vl;
    std::getline(ea, el);
    std::getline(va, vl);
    int rows = 0;
    while (std::getline(ea, el) && std::getline(va, vl)) {
        std::stringstream es(el), vs(vl);
        std::string ec, vc;
        for (int col = 0; col <= 2; ++col) {
            std::getline(es, ec, ',');
            std::getline(vs, vc, ',');
        }
        CHECK(std::abs(std::stod(ec) - std::stod(vc)) <= 1e-12);
        ++rows;
    }
    CHECK(rows == 12);
}

TEST_CASE("spider and spider_corr differ only in the coupling flag") {
    json j = json::parse(R"({
      "problem": {"type": "synthetic", "n": 24, "d": 3, "sigma2": 0.05, "tau": 1.0, "seed": 13},
      "algorithm": "spider",
      "oracle": {"class": "mcmc", "m0": 10, "mt": 10, "burn_in": 10},
      "run": {"epochs": 3, "b": 6, "kin": 4, "stepsize": [[0, 0.4]]},
      "replicates": 1,
      "master_seed": 21
    })");
    const auto plain = parse_config(j);
    j["algorithm"] = "spider_corr";
    const auto corr = parse_config(j);

    // wrap the assembled oracle with a call logger recording crn flags
    struct LoggingOracle final : ForwardOracle {
        std::shared_ptr<ForwardOracle> inner;
        mutable std::vector<bool> crn_flags;
        int components() const override { return inner->components(); }
        Exactness exactness() const override { return inner->exactness(); }
        const ErrorProfile& error_profile() const override {
            return inner->error_profile();
        }
        Vec eval_single(int i, const Vec& s, const MetricOperator& B,
                        std::int64_t budget, std::uint64_t seed) const override {
            return inner->eval_single(i, s, B, budget, seed);
        }
        Vec eval_diff(int i, const Vec& sc, const MetricOperator& Bc, const Vec& sp,
                      const MetricOperator& Bp, std::int64_t budget,
                      std::uint64_t seed, bool crn) const override {
            crn_flags.push_back(crn);
            return inner->eval_diff(i, sc, Bc, sp, Bp, budget, seed, crn);
        }
    };

    for (const auto* config : {&plain, &corr}) {
        const auto ap = assemble_problem(*config);
        LoggingOracle logger;
        logger.inner = ap.oracle;
        RunConfig rc;
        rc.kout = 1;
        rc.kin_schedule = [](std::int64_t) { return std::int64_t{3}; };
        rc.batch_size = 6;
        rc.crn = config->algorithm == "spider_corr";
        rc.budgets.refresh = 10;
        rc.budgets.inner = 10;
        rc.metric_fn = ap.metric_fn;
        rc.stepsize_schedule = [](std::int64_t, std::int64_t) { return 0.4; };
        run_3p_spider(rc, logger, ap.g, ap.s_init, ap.B_init);
        REQUIRE(!logger.crn_flags.empty());
        for (const bool f : logger.crn_flags)
            CHECK(f == (config->algorithm == "spider_corr"));
    }
}

TEST_CASE("compare merges identical configs into identical columns") {
    TempDir dir;
    json j = toy_config();
    j["algorithm"] = "vmfb";
    const auto c1 = parse_config(j);
    const auto c2 = parse_config(j);
    const auto merged = compare({c1, c2}, dir.path);
    const auto& a0 = merged.at("algorithms").at(0);
    const auto& a1 = merged.at("algorithms").at(1);
    CHECK(a0.at("median_last5_mean_delta") == a1.at("median_last5_mean_delta"));
    CHECK(a0.at("replicates") == a1.at("replicates"));

    // mismatched problems are rejected
    json other = toy_config();
    other["problem"]["seed"] = 6;
    CHECK_THROWS_AS(compare({c1, parse_config(other)}, dir.path), ConfigError);
}
