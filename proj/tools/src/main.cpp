#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "geval/parallel.hpp"
#include "geval_cli/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Evaluations, g-expectations and BSDEs on Brownian scenario lattices"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    app.add_option("--config", config_path, "Scenario JSON document")->required()->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Seed for every randomized instance");
    auto* out_opt = app.add_option("--out", out_path, "Write the JSON report here instead of standard output");
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads for slice-parallel loops")->check(CLI::PositiveNumber);
    // Options may follow the command name.
    app.fallthrough();
    const std::map<std::string, std::string> blurbs{
        {"solve", "Solve the BSDE for the configured driver and claim"},
        {"evaluate", "Apply the configured evaluation at time s"},
        {"verify-axioms", "Sample instances and measure every evaluation axiom"},
        {"decompose", "Doob-Meyer decomposition of a supermartingale"},
        {"recover", "Reconstruct the generator of a black-box evaluation"},
        {"fixpoint", "BSDE driven by an abstract evaluation, by contraction"},
        {"probe", "Probe the generator at single (t, y, z) points"},
        {"report", "Driver diagnostics and a-priori bounds"}};
    for (const auto& name : geval::cli::command_names()) {
        const auto it = blurbs.find(name);
        app.add_subcommand(name, it == blurbs.end() ? name : it->second);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : geval::cli::kConfigError;
    }

    if (*threads_opt) {
        geval::set_thread_count(threads);
    } else if (const char* env = std::getenv("GEVAL_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n > 0) geval::set_thread_count(static_cast<unsigned>(n));
    }

    nlohmann::json config;
    try {
        std::ifstream in(config_path);
        config = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "ConfigError: " << e.what() << "\n";
        return geval::cli::kConfigError;
    }

    geval::cli::CommandOptions options;
    if (*seed_opt) options.seed = seed;
    options.base_dir = std::filesystem::path(config_path).parent_path();

    const std::string command = app.get_subcommands().front()->get_name();
    const auto result = geval::cli::run_command(command, config, options);
    if (result.exit_code == geval::cli::kConfigError || result.exit_code == geval::cli::kNumericalFailure) {
        std::cerr << result.error << "\n";
        return result.exit_code;
    }
    const std::string json_text = result.report.dump(2) + "\n";
    if (*out_opt) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "ConfigError: cannot write '" << out_path << "'\n";
            return geval::cli::kConfigError;
        }
        out << json_text;
    } else {
        std::cout << json_text;
    }
    if (!result.report["result"].is_null() && !config.value("output", nlohmann::json::object()).contains("text"))
        std::cerr << result.text;
    return result.exit_code;
}
