#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gridbp/factor_graph.hpp"
#include "gridbp/gbp.hpp"
#include "gridbp/measurements.hpp"
#include "gridbp/network.hpp"
#include "gridbp/rng.hpp"

namespace gridbp {

struct ScriptedArrival {
    double time = 0.0;
    std::string device;
    std::optional<double> value_si;  // empty: sample truth + N(0, sigma2_rt)
    double sigma2_rt = 0.0;
    double t_ps = kNever;  // absolute instant
};

struct PoissonSpec {
    std::string device_class;  // flow | injection | power | angle
    double lambda = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    double sigma2_rt = 0.0;
    double aging = kNever;  // t_ps - t_rt for each generated arrival
    std::uint64_t seed = 0;
};

struct TruthChange {
    double time = 0.0;
    int bus = 0;
    double injection_mw = 0.0;
};

struct Scenario {
    std::map<std::string, double> pseudo_priors;
    std::vector<ScriptedArrival> arrivals;
    std::vector<PoissonSpec> poisson;
    std::vector<TruthChange> truth_changes;
    double horizon = 0.0;
    double sweep_interval = 1e-4;      // simulated seconds per BP sweep
    double aging_refresh = 0.0;        // 0: every sweep
    double snapshot_interval = 1e-2;
    std::uint64_t seed = 0;
};

/// Parse a scenario file. Device names are validated later, when the
/// scenario meets a network (Simulation or scenario_state_at).
Scenario load_scenario(const std::string& text);

struct EstimateSnapshot {
    double time = 0.0;
    long sweeps = 0;
    std::vector<double> theta_deg;  // internal bus order
    std::vector<double> var_deg2;
};

struct SimOptions {
    double damping = 1.0;
    int threads = 1;
    std::optional<double> sweep_interval;
    std::optional<double> snapshot_interval;
    std::optional<double> aging_refresh;
    std::optional<std::uint64_t> seed;
};

/// Measurement set as of time t: scripted and Poisson arrivals up to and
/// including t applied on top of the pseudo priors, aging left to the
/// caller (evaluate variance_at(dev, t)).
MeasurementSet scenario_state_at(const Network& net, const Scenario& sc, double t,
                                 const SimOptions& opts = {});

/// Event-driven run: the clock advances in sweep_interval ticks; arrivals and
/// truth changes apply ahead of the next sweep, aged variances are refreshed,
/// one synchronous sweep runs per tick, snapshots are recorded on their own
/// cadence.
class Simulation {
  public:
    Simulation(const Network& net, const Scenario& sc, const SimOptions& opts = {});

    double time() const { return time_; }
    long sweeps() const { return state_.iteration(); }

    /// Advance to `until`, processing every event with time < until (events
    /// exactly at `until` wait for a later step).
    void step(double until);

    /// step(horizon) and return the recorded snapshot series.
    std::vector<EstimateSnapshot> run();

    const std::vector<EstimateSnapshot>& snapshots() const { return snapshots_; }
    const MeasurementSet& measurements() const { return set_; }
    const Network& network() const { return net_; }
    std::vector<Marginal> current_marginals() const { return state_.marginals(graph_); }
    /// Truth angles (radians) implied by the truth schedule applied so far.
    std::vector<double> truth_angles() const { return truth_theta_; }

    struct ProbePoint {
        int sweep = 0;
        std::vector<double> theta_deg;  // watched buses, in watch order
    };

    /// Single-arrival scenarios only: converge the pre-arrival state, apply
    /// the arrival, then record watched marginals after every sweep until the
    /// largest marginal change drops below eps. Point 0 is the pre-arrival
    /// state. An empty watch list yields an empty trace.
    std::vector<ProbePoint> convergence_probe(std::span<const int> watch_buses, double eps = 1e-9,
                                              int max_sweeps = 50000);

  private:
    struct SimEvent {
        double time = 0.0;
        int kind = 0;  // 0 truth change, 1 arrival; ties resolve (time, kind, device, seq)
        int device_id = -1;
        std::optional<double> value_si;
        double sigma2_rt = 0.0;
        double t_ps = kNever;
        std::vector<std::pair<int, double>> injections_mw;
        int seq = 0;
    };

    friend MeasurementSet scenario_state_at(const Network&, const Scenario&, double,
                                            const SimOptions&);
    static std::vector<SimEvent> expand_events(const Network& net, const MeasurementSet& set,
                                               const Scenario& sc, std::uint64_t base_seed);

    void apply_event(const SimEvent& ev);
    void refresh_factors(double t);
    void record_pending_snapshots(double through, bool inclusive);
    void advance_tick(double tick_time);

    const Network& net_;
    Scenario sc_;
    SimOptions opts_;
    double dt_;
    double snap_dt_;
    long aging_stride_;
    MeasurementSet set_;
    FactorGraph graph_;
    MessageState state_;
    std::vector<SimEvent> events_;
    size_t next_event_ = 0;
    double next_snapshot_ = 0.0;
    std::map<int, double> injections_pu_;
    std::vector<double> truth_theta_;
    Rng noise_;
    double time_ = 0.0;
    long tick_ = 0;
    std::vector<EstimateSnapshot> snapshots_;
};

std::string snapshots_to_csv(const Network& net, const std::vector<EstimateSnapshot>& snaps);

}  // namespace gridbp
