#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "spider/experiment.hpp"

namespace {

std::filesystem::path resolve_outdir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("SPIDER3P_OUTDIR")) return env;
    return "out";
}

void print_error(const std::string& field, const std::string& message) {
    nlohmann::json err;
    err["error"] = message;
    if (!field.empty()) err["field"] = field;
    std::cerr << err.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3P-SPIDER experiment runner"};
    app.require_subcommand(1);

    std::string outdir_flag;

    std::string run_config;
    auto* run_cmd = app.add_subcommand("run", "run one experiment config");
    run_cmd->add_option("config", run_config, "config JSON file")->required();
    run_cmd->add_option("--out", outdir_flag,
                        "output directory (overrides SPIDER3P_OUTDIR)");

    std::vector<std::string> compare_configs;
    auto* compare_cmd =
        app.add_subcommand("compare", "run several configs and merge summaries");
    compare_cmd->add_option("configs", compare_configs, "config JSON files")
        ->required()
        ->expected(-1);
    compare_cmd->add_option("--out", outdir_flag,
                            "output directory (overrides SPIDER3P_OUTDIR)");

    std::string validate_config;
    auto* validate_cmd = app.add_subcommand("validate", "check a config file");
    validate_cmd->add_option("config", validate_config, "config JSON file")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const auto outdir = resolve_outdir(outdir_flag);
        if (*run_cmd) {
            const auto config = spider::exp::load_config(run_config);
            const auto outcome = spider::exp::run_experiment(config, outdir);
            std::cout << "wrote " << outcome.trace_files.size()
                      << " trace file(s) and " << outcome.summary_file.string()
                      << std::endl;
        } else if (*compare_cmd) {
            std::vector<spider::exp::ExperimentConfig> configs;
            configs.reserve(compare_configs.size());
            for (const auto& path : compare_configs)
                configs.push_back(spider::exp::load_config(path));
            const auto merged = spider::exp::compare(configs, outdir);
            if (merged.contains("ordering_verdict"))
                std::cout << merged.at("ordering_verdict").dump(2) << std::endl;
            std::cout << "wrote " << (outdir / "compare.json").string() << std::endl;
        } else if (*validate_cmd) {
            const auto config = spider::exp::load_config(validate_config);
            std::cout << "ok: algorithm=" << config.algorithm
                      << " replicates=" << config.replicates << std::endl;
        }
    } catch (const spider::exp::ConfigError& e) {
        print_error(e.field, e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("", e.what());
        return 1;
    }
    return 0;
}
