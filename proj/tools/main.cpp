#include <CLI11.hpp>

#include "gridbp/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Streaming DC state estimator (Gaussian belief propagation)"};
    app.require_subcommand(1);

    gridbp::RunConfig cfg;
    std::uint64_t seed = 0;

    auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
        cmd->add_option("--case", cfg.case_path, "case file")->required();
        auto* scn = cmd->add_option("--scenario", cfg.scenario_path, "scenario file");
        if (needs_scenario) scn->required();
        cmd->add_option("--eps", cfg.eps, "convergence threshold, radians");
        cmd->add_option("--max-sweeps", cfg.max_sweeps, "sweep budget for convergence runs");
        cmd->add_option("--sweep-interval", cfg.sweep_interval,
                        "simulated seconds per sweep (overrides scenario)");
        cmd->add_option("--snapshot-interval", cfg.snapshot_interval,
                        "seconds between snapshots (overrides scenario)");
        cmd->add_option("--damping", cfg.damping, "factor-to-variable damping in (0,1]");
        cmd->add_option("--seed", seed, "override every scenario seed")
            ->each([&](const std::string&) { cfg.seed = seed; });
        cmd->add_option("--threads", cfg.threads, "sweep worker threads (speed only)");
    };

    auto* run = app.add_subcommand("run", "simulate a scenario and write the snapshot CSV");
    add_common(run, true);
    run->add_option("--out", cfg.out_path, "output CSV path")->required();
    run->add_flag("--emit-plotdata", cfg.emit_plotdata,
                  "also write per-bus time/angle .dat files");

    auto* solve = app.add_subcommand("solve", "static solve at --at: BP vs dense WLS");
    add_common(solve, true);
    solve->add_option("--at", cfg.at, "evaluation time, seconds");

    auto* probe = app.add_subcommand("probe", "per-sweep trace after a single arrival");
    add_common(probe, true);
    probe->add_option("--out", cfg.out_path, "output CSV path (default stdout)");
    probe->add_option("--watch", cfg.watch, "bus ids to trace (default: all)")
        ->delimiter(',');

    auto* export_graph = app.add_subcommand("export-graph", "dump the factor graph edge list");
    add_common(export_graph, false);
    export_graph->add_option("--at", cfg.at, "evaluation time, seconds");
    export_graph->add_option("--out", cfg.out_path, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return gridbp::cmd_run(cfg);
    if (solve->parsed()) return gridbp::cmd_solve(cfg);
    if (probe->parsed()) return gridbp::cmd_probe(cfg);
    if (export_graph->parsed()) return gridbp::cmd_export_graph(cfg);
    return 1;
}
