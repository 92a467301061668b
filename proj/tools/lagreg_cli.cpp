#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "lagreg/app.hpp"
#include "lagreg/errors.hpp"

namespace fs = std::filesystem;
using namespace lagreg;

namespace {

struct Flags {
    std::string config;
    std::string scenario;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool force = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
    auto* config = cmd->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    auto* scenario = cmd->add_option("--scenario", f.scenario, "built-in scenario name");
    config->excludes(scenario);
    cmd->add_option("--seed", f.seed, "sampling seed");
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_flag("--force", f.force, "continue past a failed hypothesis");
}

app::RunConfig load(const Flags& f) {
    app::RunConfig config;
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        app::Json doc;
        try {
            doc = app::Json::parse(in);
        } catch (const app::Json::parse_error& e) {
            throw ConfigError(f.config + ": " + e.what());
        }
        config = app::parse_config(doc);
    } else if (!f.scenario.empty()) {
        config = app::scenario_config(f.scenario);
    } else {
        throw ConfigError("one of --config and --scenario is required");
    }
    if (f.seed) config.sampling.seed = *f.seed;
    if (!f.out.empty()) config.out_dir = f.out;
    config.force = config.force || f.force;
    return config;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Regularization of degenerate Lagrangian systems"};
    cli.require_subcommand(1);
    Flags flags;
    auto* analyze = cli.add_subcommand("analyze", "kernel, complete-lift and consistency report");
    auto* regularize = cli.add_subcommand("regularize", "build and verify the regularized Lagrangian");
    auto* simulate = cli.add_subcommand("simulate", "integrate the (regularized) Euler-Lagrange equations");
    cli.add_subcommand("list-scenarios", "print the built-in scenarios");
    for (auto* cmd : {analyze, regularize, simulate}) add_flags(cmd, flags);

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : app::ConfigFailure;
    }

    try {
        if (cli.got_subcommand("list-scenarios")) {
            std::cout << app::dump(app::list_scenarios());
            return app::Success;
        }
        const app::RunConfig config = load(flags);
        app::CommandResult result;
        std::string name;
        if (analyze->parsed()) {
            name = "analyze";
            result = app::cmd_analyze(config);
        } else if (regularize->parsed()) {
            name = "regularize";
            result = app::cmd_regularize(config);
        } else {
            name = "simulate";
            result = app::cmd_simulate(config);
        }
        const std::string text = app::dump(result.report);
        std::cout << text;
        if (!flags.out.empty() || result.csv) {
            const fs::path dir = config.out_dir;
            fs::create_directories(dir);
            write_file(dir / (name + ".json"), text);
            if (result.csv) write_file(dir / "trajectory.csv", *result.csv);
        }
        return result.exit_code;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return app::ConfigFailure;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return app::VerificationFailure;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return app::ConfigFailure;
    }
}
