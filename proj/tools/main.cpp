#include <iostream>
#include <thread>

#include "CLI11.hpp"

#include "collapsim/cli.hpp"
#include "collapsim/observables.hpp"

namespace cli = collapsim::cli;

int main(int argc, char** argv) {
    CLI::App app{"collapsim: spontaneous-collapse trajectory simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    std::string out_dir;
    std::uint64_t seed = 0;

    auto* run = app.add_subcommand("run", "run a scenario and write manifest, time series and summary");
    run->add_option("config", config_path, "scenario file (YAML)")->required()->check(CLI::ExistingFile);
    run->add_option("--workers", workers, "maximum worker threads")->check(CLI::PositiveNumber);
    auto* out_opt = run->add_option("--out", out_dir, "output directory");
    auto* seed_opt = run->add_option("--seed", seed, "master seed, overrides the config");

    auto* validate = app.add_subcommand("validate", "check a scenario file without running it");
    validate->add_option("config", config_path, "scenario file (YAML)")->required();

    app.add_subcommand("presets", "list collapse parameter presets");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("presets")) {
            std::cout << collapsim::presets_table();
            return cli::kExitOk;
        }
        if (app.got_subcommand("validate")) {
            const auto cfg = cli::load_config(config_path);
            cli::build_scenario(cfg);
            std::cout << "valid: " << cfg.name << "\n";
            return cli::kExitOk;
        }
        cli::RunOptions opts;
        opts.workers = workers;
        if (*out_opt) opts.out = out_dir;
        if (*seed_opt) opts.seed = seed;
        const auto result = cli::run_scenario(cli::load_config(config_path), opts);
        for (const auto& line : result.summary["report"]) std::cout << line.get<std::string>() << "\n";
        std::cout << "status: " << result.summary["status"].get<std::string>() << "\n"
                  << "output: " << result.directory.string() << "\n";
        return result.exit_code;
    } catch (const cli::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return cli::kExitConfig;
    } catch (const collapsim::Error& e) {
        std::cerr << "error (" << collapsim::to_string(e.kind()) << "): " << e.what() << "\n";
        return cli::exit_code_for(e.kind());
    }
}
