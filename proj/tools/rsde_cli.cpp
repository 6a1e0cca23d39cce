#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "rsde/config.hpp"
#include "rsde/error.hpp"
#include "rsde/presets.hpp"
#include "rsde/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Reflected diffusion simulator and diagnostics"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Run the experiment described by a YAML config");
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    unsigned threads = 1;
    run_cmd->add_option("config", config_path, "Path to the run config")->required();
    run_cmd->add_option("--seed", seed, "Override the config seed");
    run_cmd->add_option("--out", out, "Override the output directory");
    run_cmd->add_option("--threads", threads, "Worker threads (0 = hardware); results do not depend on it");

    auto* list_cmd = app.add_subcommand("list-presets", "List geometry, model, potential, hydro and suite presets");

    CLI11_PARSE(app, argc, argv);

    if (list_cmd->parsed()) {
        std::cout << rsde::list_presets(rsde::default_registry());
        return 0;
    }
    try {
        rsde::RunOptions options;
        options.seed = seed;
        if (out) options.out = *out;
        options.threads = threads;
        const rsde::RunResult result = rsde::run(rsde::load_config(config_path), options);
        if (!result.reports.empty()) rsde::write_reports_text(std::cout, result.reports);
        std::cout << "artifacts written to " << result.directory.string() << '\n';
        return result.exit_code;
    } catch (const rsde::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == rsde::ErrorCode::ConfigError ? 2 : 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
