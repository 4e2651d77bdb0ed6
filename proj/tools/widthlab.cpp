#include <iostream>

#include <CLI11.hpp>

#include "widthlab/commands.hpp"
#include "widthlab/errors.hpp"

using namespace widthlab;

int main(int argc, char** argv) {
    CLI::App app{"widthlab: infinite- and finite-width network kernels, criticality and training dynamics"};
    std::string command, config_path, out, suite;
    long long seed = -1;
    int workers = -1;
    app.add_option("command", command, "kernel | ntk | phase-diagram | gp-predict | train-compare | finite-width | "
                                       "catapult | validate")
        ->required()
        ->check(CLI::IsMember(kCommands));
    app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "master seed (overrides config)")->check(CLI::NonNegativeNumber);
    app.add_option("--workers", workers, "worker threads, 0 = machine parallelism")->check(CLI::NonNegativeNumber);
    app.add_option("--out", out, "output directory");
    app.add_option("--suite", suite, "validate: criterion slug, id, or all");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }
    try {
        RunConfig c = config_path.empty() ? parse_config(nlohmann::json::object()) : load_config(config_path);
        c.command = command;
        if (seed >= 0) c.seed = std::uint64_t(seed);
        if (workers >= 0) c.workers = workers;
        if (!out.empty()) c.out = out;
        if (!suite.empty()) c.suite = suite;
        return run_command(c, std::cout);
    } catch (const Error& e) {
        std::cerr << "widthlab: " << e.what() << "\n";
        return e.code() == Errc::ConfigInvalid ? kExitConfig : kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "widthlab: " << e.what() << "\n";
        return kExitFailure;
    }
}
