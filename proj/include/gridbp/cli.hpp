#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gridbp {

/// Everything a subcommand needs; flags override scenario-file values.
struct RunConfig {
    std::string case_path;
    std::string scenario_path;
    std::string out_path;
    double eps = 1e-9;
    int max_sweeps = 50000;
    std::optional<double> sweep_interval;
    std::optional<double> snapshot_interval;
    double damping = 1.0;
    std::optional<std::uint64_t> seed;
    int threads = 1;
    double at = 0.0;
    std::vector<int> watch;
    bool emit_plotdata = false;
};

int cmd_run(const RunConfig& cfg);
int cmd_solve(const RunConfig& cfg);
int cmd_probe(const RunConfig& cfg);
int cmd_export_graph(const RunConfig& cfg);

}  // namespace gridbp
