#include "gridbp/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gridbp/reference.hpp"
#include "gridbp/simulator.hpp"

namespace gridbp {

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path);
}

SimOptions sim_options(const RunConfig& cfg) {
    SimOptions opts;
    opts.damping = cfg.damping;
    opts.threads = cfg.threads;
    opts.sweep_interval = cfg.sweep_interval;
    opts.snapshot_interval = cfg.snapshot_interval;
    opts.seed = cfg.seed;
    return opts;
}

std::string plotdata_path(const std::string& out_path, int bus_id) {
    std::string stem = out_path;
    if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > stem.rfind('/') + 1)
        stem.erase(dot);
    return stem + "_theta" + std::to_string(bus_id) + ".dat";
}

}  // namespace

int cmd_run(const RunConfig& cfg) {
    try {
        Network net = Network::parse_case(read_file(cfg.case_path));
        Scenario sc = load_scenario(read_file(cfg.scenario_path));
        Simulation sim(net, sc, sim_options(cfg));
        auto snaps = sim.run();
        write_file(cfg.out_path, snapshots_to_csv(net, snaps));
        if (cfg.emit_plotdata) {
            for (int i = 0; i < net.bus_count(); ++i) {
                std::ostringstream os;
                char buf[64];
                for (const auto& s : snaps) {
                    std::snprintf(buf, sizeof(buf), "%.17g %.17g", s.time,
                                  s.theta_deg[static_cast<size_t>(i)]);
                    os << buf << "\n";
                }
                write_file(plotdata_path(cfg.out_path, net.bus_id_at(i)), os.str());
            }
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_solve(const RunConfig& cfg) {
    try {
        Network net = Network::parse_case(read_file(cfg.case_path));
        Scenario sc = load_scenario(read_file(cfg.scenario_path));
        MeasurementSet set = scenario_state_at(net, sc, cfg.at, sim_options(cfg));

        FactorGraph graph = FactorGraph::build(net, set, cfg.at);
        MessageState state(graph);
        auto bp = run_to_convergence(graph, state, cfg.eps, cfg.max_sweeps,
                                     {.damping = cfg.damping, .threads = cfg.threads});
        WlsResult wls = wls_solve(net, set.devices(), cfg.at);

        std::printf("# state at t=%g  (bp %s after %d sweeps)\n", cfg.at,
                    bp.converged ? "converged" : "NOT converged", bp.sweeps_used);
        std::printf("%-6s %18s %18s %14s\n", "bus", "bp_theta_deg", "wls_theta_deg", "delta_deg");
        double max_delta = 0.0;
        for (int i = 0; i < net.bus_count(); ++i) {
            double bp_deg = bp.marginals[static_cast<size_t>(i)].mean * kDegPerRad;
            if (wls.ok) {
                double wls_deg = wls.angles_rad[static_cast<size_t>(i)] * kDegPerRad;
                double delta = std::abs(bp_deg - wls_deg);
                max_delta = std::max(max_delta, delta);
                std::printf("%-6d %18.10f %18.10f %14.3e\n", net.bus_id_at(i), bp_deg, wls_deg,
                            delta);
            } else {
                std::printf("%-6d %18.10f %18s %14s\n", net.bus_id_at(i), bp_deg, "n/a", "n/a");
            }
        }
        if (wls.ok) {
            std::printf("max |delta|: %.6e deg\n", max_delta);
            std::printf("wls condition estimate: %.3e\n", wls.condition);
        } else {
            std::printf("wls solve failed (condition estimate %.3e)\n", wls.condition);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_probe(const RunConfig& cfg) {
    try {
        Network net = Network::parse_case(read_file(cfg.case_path));
        Scenario sc = load_scenario(read_file(cfg.scenario_path));
        Simulation sim(net, sc, sim_options(cfg));
        std::vector<int> watch = cfg.watch;
        if (watch.empty())
            for (const Bus& b : net.buses()) watch.push_back(b.id);
        auto trace = sim.convergence_probe(watch, cfg.eps, cfg.max_sweeps);

        double dt = cfg.sweep_interval.value_or(sc.sweep_interval);
        std::ostringstream os;
        os << "sweep,time_s";
        for (int bus : watch) os << ",theta_" << bus << "_deg";
        os << "\n";
        char buf[64];
        for (const auto& p : trace) {
            os << p.sweep;
            std::snprintf(buf, sizeof(buf), "%.17g", p.sweep * dt);
            os << ',' << buf;
            for (double v : p.theta_deg) {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                os << ',' << buf;
            }
            os << "\n";
        }
        if (cfg.out_path.empty())
            std::cout << os.str();
        else
            write_file(cfg.out_path, os.str());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_export_graph(const RunConfig& cfg) {
    try {
        Network net = Network::parse_case(read_file(cfg.case_path));
        MeasurementSet set = cfg.scenario_path.empty()
                                 ? MeasurementSet::make_pseudo_set(net)
                                 : scenario_state_at(net, load_scenario(read_file(cfg.scenario_path)),
                                                     cfg.at, sim_options(cfg));
        FactorGraph graph = FactorGraph::build(net, set, cfg.at);
        std::ostringstream os;
        for (const MeasurementDevice& dev : set.devices())
            os << "# f" << dev.id << " = " << dev.name << "\n";
        os << graph.export_edges();
        if (cfg.out_path.empty())
            std::cout << os.str();
        else
            write_file(cfg.out_path, os.str());
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace gridbp
