#include <CLI11.hpp>
#include <iostream>
#include <map>

#include "cli_app.hpp"

int main(int argc, char** argv) {
    using namespace fppf::cli;
    RunConfig cfg;
    CLI::App app{"Fixed-point power flow solver and solvability certificates for lossless radial networks"};
    app.require_subcommand(1);

    const std::map<std::string, Format> formats{{"json", Format::Json}, {"csv", Format::Csv}};
    const std::map<std::string, fppf::LoadingScenario> scenarios{
        {"i", fppf::LoadingScenario::I}, {"ii", fppf::LoadingScenario::II}, {"iii", fppf::LoadingScenario::III}};
    double tol = 0.0;
    int max_iter = 0;

    auto add_common = [&](CLI::App* sub, bool with_case) {
        if (with_case) sub->add_option("case", cfg.case_path, "case file (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("-o,--output", cfg.output_path, "output file (default: stdout)");
    };
    auto add_solver = [&](CLI::App* sub) {
        sub->add_option("--tol", tol, "fixed-point step tolerance");
        sub->add_option("--max-iter", max_iter, "iteration limit");
    };
    auto add_format = [&](CLI::App* sub) {
        sub->add_option("--format", cfg.format, "json or csv")->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    };

    auto* solve = app.add_subcommand("solve", "solve the power flow by fixed-point iteration");
    add_common(solve, true);
    add_solver(solve);
    add_format(solve);

    auto* cert = app.add_subcommand("certify", "evaluate the solvability certificate");
    add_common(cert, true);

    auto* sweep = app.add_subcommand("sweep", "scale a loading profile and tabulate stresses and voltage bounds");
    add_common(sweep, true);
    add_solver(sweep);
    add_format(sweep);
    sweep->add_option("--scenario", cfg.sweep.scenario, "loading profile: i, ii or iii")
        ->transform(CLI::CheckedTransformer(scenarios, CLI::ignore_case));
    sweep->add_option("--alpha-min", cfg.sweep.alpha_min, "first alpha");
    sweep->add_option("--alpha-max", cfg.sweep.alpha_max, "last alpha (< 1)");
    sweep->add_option("--steps", cfg.sweep.steps, "number of alpha values");

    auto* twobus = app.add_subcommand("twobus", "closed-form two-bus roots for given stresses");
    add_common(twobus, false);
    twobus->add_option("--gamma", cfg.gamma, "active power stress")->required();
    twobus->add_option("--delta", cfg.delta, "reactive power stress")->required();

    auto* verify = app.add_subcommand("verify", "cross-check the fixed-point solution against Newton-Raphson");
    add_common(verify, true);
    add_solver(verify);
    verify->add_option("--starts", cfg.starts, "random Newton starts");
    verify->add_option("--seed", cfg.seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return BadInput;
    }

    for (CLI::App* sub : {solve, sweep, verify}) {
        if (!sub->parsed()) continue;
        if (sub->count("--tol")) cfg.tol = tol;
        if (sub->count("--max-iter")) cfg.max_iter = max_iter;
    }
    if (solve->parsed()) cfg.command = Command::Solve;
    if (cert->parsed()) cfg.command = Command::Certify;
    if (sweep->parsed()) cfg.command = Command::Sweep;
    if (twobus->parsed()) cfg.command = Command::TwoBus;
    if (verify->parsed()) cfg.command = Command::Verify;
    return run(cfg, std::cout, std::cerr);
}
