#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "cgb/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Corruption-robust kernelized bandit experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(CGB_VERSION));

    cgb::RunOptions opt;
    std::string out;
    int trials = 0;
    std::uint64_t seed = 0;
    const auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (overrides 'out')");
        sub->add_option("--trials", trials, "number of trials (overrides 'trials')");
        sub->add_option("--seed", seed, "base seed (overrides 'seed')");
    };
    auto* run = app.add_subcommand("run", "run trials and write traces");
    add_run_flags(run);
    auto* audit = app.add_subcommand("audit", "run trials and check the per-epoch invariants");
    add_run_flags(audit);
    auto* newton = app.add_subcommand("newton", "build the interpolation basis and dump its centers");
    add_run_flags(newton);

    std::vector<std::string> inputs;
    std::string svg = "regret.svg";
    auto* plot = app.add_subcommand("plot", "render aggregate CSVs as an SVG");
    plot->add_option("inputs", inputs, "aggregate CSV files, one series each")->required();
    plot->add_option("-o,--output", svg, "output SVG path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : cgb::kExitConfig;
    }

    const auto finish = [&](CLI::App* sub) {
        if (sub->count("--out")) opt.out = out;
        if (sub->count("--trials")) opt.trials = trials;
        if (sub->count("--seed")) opt.seed = seed;
    };
    if (run->parsed()) {
        finish(run);
        return cgb::cmd_run(opt, std::cerr);
    }
    if (audit->parsed()) {
        finish(audit);
        return cgb::cmd_audit(opt, std::cerr);
    }
    if (newton->parsed()) {
        finish(newton);
        return cgb::cmd_newton(opt, std::cerr);
    }
    return cgb::cmd_plot(inputs, svg, std::cerr);
}
