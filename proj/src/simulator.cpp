#include "gridbp/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "gridbp/reference.hpp"

namespace gridbp {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

double parse_time_or_inf(const std::string& tok, int line_no) {
    if (tok == "inf" || tok == "+inf") return kNever;
    try {
        size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos == tok.size()) return v;
    } catch (const std::exception&) {
    }
    throw ParseError("bad numeric value '" + tok + "'", line_no);
}

double parse_num(const std::string& tok, int line_no) {
    double v = parse_time_or_inf(tok, line_no);
    if (std::isinf(v)) throw ParseError("value may not be infinite here", line_no);
    return v;
}

}  // namespace

Scenario load_scenario(const std::string& text) {
    Scenario sc;
    enum class Section { none, pseudo, arrivals, poisson, truth } section = Section::none;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    bool have_horizon = false;

    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line == "[pseudo]") { section = Section::pseudo; continue; }
        if (line == "[arrivals]") { section = Section::arrivals; continue; }
        if (line == "[poisson]") { section = Section::poisson; continue; }
        if (line == "[truth]") { section = Section::truth; continue; }
        if (line.front() == '[') throw ParseError("unknown section " + line, line_no);

        if (section == Section::none) {
            auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ParseError("expected key=value header, got '" + line + "'", line_no);
            std::string key = trim(line.substr(0, eq));
            std::string val = trim(line.substr(eq + 1));
            if (key == "horizon") { sc.horizon = parse_num(val, line_no); have_horizon = true; }
            else if (key == "sweep_interval") sc.sweep_interval = parse_num(val, line_no);
            else if (key == "aging_refresh") sc.aging_refresh = parse_num(val, line_no);
            else if (key == "snapshot_interval") sc.snapshot_interval = parse_num(val, line_no);
            else if (key == "seed") sc.seed = static_cast<std::uint64_t>(std::stoull(val));
            else throw ParseError("unknown header key '" + key + "'", line_no);
            continue;
        }

        std::istringstream ls(line);
        std::vector<std::string> toks;
        std::string t;
        while (ls >> t) toks.push_back(t);

        switch (section) {
            case Section::pseudo: {
                if (toks.size() != 2)
                    throw ParseError("expected 'device value' in [pseudo]", line_no);
                sc.pseudo_priors[toks[0]] = parse_num(toks[1], line_no);
                break;
            }
            case Section::arrivals: {
                if (toks.size() != 5)
                    throw ParseError("expected 'time device value sigma2_rt t_ps' in [arrivals]",
                                     line_no);
                ScriptedArrival a;
                a.time = parse_num(toks[0], line_no);
                a.device = toks[1];
                if (toks[2] != "truth") a.value_si = parse_num(toks[2], line_no);
                a.sigma2_rt = parse_num(toks[3], line_no);
                a.t_ps = parse_time_or_inf(toks[4], line_no);
                if (a.sigma2_rt <= 0.0)
                    throw ParseError("arrival sigma2_rt must be positive", line_no);
                if (a.time < 0.0) throw ParseError("arrival time must be nonnegative", line_no);
                sc.arrivals.push_back(std::move(a));
                break;
            }
            case Section::poisson: {
                if (toks.size() != 7)
                    throw ParseError(
                        "expected 'class lambda t_start t_end sigma2_rt aging seed' in [poisson]",
                        line_no);
                PoissonSpec p;
                p.device_class = toks[0];
                if (p.device_class != "flow" && p.device_class != "injection" &&
                    p.device_class != "power" && p.device_class != "angle")
                    throw ParseError("unknown device class '" + p.device_class + "'", line_no);
                p.lambda = parse_num(toks[1], line_no);
                p.t_start = parse_num(toks[2], line_no);
                p.t_end = parse_num(toks[3], line_no);
                p.sigma2_rt = parse_num(toks[4], line_no);
                p.aging = parse_time_or_inf(toks[5], line_no);
                p.seed = static_cast<std::uint64_t>(std::stoull(toks[6]));
                if (p.lambda <= 0.0 || !(p.t_start < p.t_end))
                    throw ParseError("bad poisson rate or window", line_no);
                if (p.sigma2_rt <= 0.0) throw ParseError("sigma2_rt must be positive", line_no);
                sc.poisson.push_back(std::move(p));
                break;
            }
            case Section::truth: {
                if (toks.size() != 3)
                    throw ParseError("expected 'time bus injection_mw' in [truth]", line_no);
                TruthChange c;
                c.time = parse_num(toks[0], line_no);
                size_t pos = 0;
                c.bus = std::stoi(toks[1], &pos);
                if (pos != toks[1].size()) throw ParseError("bad bus id '" + toks[1] + "'", line_no);
                c.injection_mw = parse_num(toks[2], line_no);
                sc.truth_changes.push_back(c);
                break;
            }
            case Section::none: break;
        }
    }

    if (!have_horizon) throw ParseError("scenario is missing the horizon header");
    if (sc.horizon < 0.0) throw ParseError("horizon must be nonnegative");
    if (sc.sweep_interval <= 0.0) throw ParseError("sweep_interval must be positive");
    if (sc.snapshot_interval <= 0.0) throw ParseError("snapshot_interval must be positive");
    for (const auto& a : sc.arrivals)
        if (a.time >= sc.horizon && sc.horizon > 0.0)
            throw ParseError("arrival for " + a.device + " at t=" + std::to_string(a.time) +
                             " is beyond the horizon");
    for (const auto& c : sc.truth_changes)
        if (c.time > sc.horizon)
            throw ParseError("truth change at t=" + std::to_string(c.time) +
                             " is beyond the horizon");
    return sc;
}

std::vector<Simulation::SimEvent> Simulation::expand_events(const Network& net,
                                                            const MeasurementSet& set,
                                                            const Scenario& sc,
                                                            std::uint64_t base_seed) {
    std::vector<SimEvent> events;
    int seq = 0;

    // truth lines grouped per timestamp into a single re-solve event
    std::map<double, std::vector<std::pair<int, double>>> truth_by_time;
    for (const TruthChange& c : sc.truth_changes) {
        net.index_of(c.bus);
        truth_by_time[c.time].emplace_back(c.bus, c.injection_mw);
    }
    for (auto& [time, injections] : truth_by_time) {
        SimEvent ev;
        ev.time = time;
        ev.kind = 0;
        ev.injections_mw = std::move(injections);
        ev.seq = seq++;
        events.push_back(std::move(ev));
    }

    for (const ScriptedArrival& a : sc.arrivals) {
        SimEvent ev;
        ev.time = a.time;
        ev.kind = 1;
        ev.device_id = set.find(a.device);
        ev.value_si = a.value_si;
        ev.sigma2_rt = a.sigma2_rt;
        ev.t_ps = a.t_ps;
        ev.seq = seq++;
        events.push_back(std::move(ev));
    }

    int slack_anchor = set.find("T:" + std::to_string(net.slack_bus()));
    for (size_t si = 0; si < sc.poisson.size(); ++si) {
        const PoissonSpec& spec = sc.poisson[si];
        for (const MeasurementDevice& dev : set.devices()) {
            bool matches = (spec.device_class == "flow" && dev.kind == MeasurementKind::flow) ||
                           (spec.device_class == "injection" &&
                            dev.kind == MeasurementKind::injection) ||
                           (spec.device_class == "power" && dev.kind != MeasurementKind::angle) ||
                           (spec.device_class == "angle" && dev.kind == MeasurementKind::angle);
            if (!matches) continue;
            if (dev.id == slack_anchor) continue;  // the anchor never ages or re-arrives
            std::uint64_t seed =
                mix_seed(mix_seed(base_seed, spec.seed), static_cast<std::uint64_t>(dev.id));
            for (double t : sample_poisson_schedule(spec.lambda, spec.t_start,
                                                    std::min(spec.t_end, sc.horizon), seed)) {
                SimEvent ev;
                ev.time = t;
                ev.kind = 1;
                ev.device_id = dev.id;
                ev.sigma2_rt = spec.sigma2_rt;
                ev.t_ps = std::isinf(spec.aging) ? kNever : t + spec.aging;
                ev.seq = seq++;
                events.push_back(std::move(ev));
            }
        }
    }

    std::stable_sort(events.begin(), events.end(), [](const SimEvent& a, const SimEvent& b) {
        if (a.time != b.time) return a.time < b.time;
        if (a.kind != b.kind) return a.kind < b.kind;
        if (a.device_id != b.device_id) return a.device_id < b.device_id;
        return a.seq < b.seq;
    });
    return events;
}

Simulation::Simulation(const Network& net, const Scenario& sc, const SimOptions& opts)
    : net_(net),
      sc_(sc),
      opts_(opts),
      dt_(opts.sweep_interval.value_or(sc.sweep_interval)),
      snap_dt_(opts.snapshot_interval.value_or(sc.snapshot_interval)),
      set_(MeasurementSet::make_pseudo_set(net, sc.pseudo_priors)),
      graph_(FactorGraph::build(net, set_, 0.0)),
      state_(graph_),
      noise_(mix_seed(opts.seed.value_or(sc.seed), 0x6e6f697365ULL)) {
    if (dt_ <= 0.0) throw std::invalid_argument("sweep interval must be positive");
    if (snap_dt_ <= 0.0) throw std::invalid_argument("snapshot interval must be positive");
    double aging = opts.aging_refresh.value_or(sc.aging_refresh);
    aging_stride_ = aging <= dt_ ? 1 : static_cast<long>(std::llround(aging / dt_));
    events_ = expand_events(net_, set_, sc_, opts.seed.value_or(sc.seed));
    for (const Bus& b : net.buses())
        if (!b.is_slack) injections_pu_[b.id] = 0.0;
    truth_theta_.assign(net.bus_count(), 0.0);
}

void Simulation::apply_event(const SimEvent& ev) {
    if (ev.kind == 0) {
        for (const auto& [bus, mw] : ev.injections_mw) {
            if (bus == net_.slack_bus()) continue;
            injections_pu_[bus] = mw / net_.base_mva();
        }
        truth_theta_ = dc_power_flow(net_, injections_pu_, net_.slack_bus());
        return;
    }
    const MeasurementDevice& dev = set_.device(ev.device_id);
    ArrivalEvent arrival;
    arrival.device_id = ev.device_id;
    arrival.time = ev.time;
    arrival.sigma2_rt = ev.sigma2_rt;
    arrival.t_ps = ev.t_ps;
    if (ev.value_si) {
        arrival.value_si = *ev.value_si;
    } else {
        double truth_internal = 0.0;
        for (const auto& [bus_id, c] : net_.measurement_coefficients(dev.kind, dev.location))
            truth_internal += c * truth_theta_[static_cast<size_t>(net_.index_of(bus_id))];
        double truth_si = from_internal_value(dev.kind, truth_internal, net_.base_mva());
        arrival.value_si = truth_si + noise_.normal(0.0, ev.sigma2_rt);
    }
    set_.apply_arrival(arrival);
}

void Simulation::refresh_factors(double t) {
    for (const MeasurementDevice& dev : set_.devices()) {
        graph_.update_factor(dev.id, to_internal_value(dev.kind, dev.value_si, net_.base_mva()),
                             to_internal_variance(dev.kind, variance_at(dev, t), net_.base_mva()));
    }
}

void Simulation::record_pending_snapshots(double through, bool inclusive) {
    while (next_snapshot_ <= sc_.horizon &&
           (inclusive ? next_snapshot_ <= through : next_snapshot_ < through)) {
        EstimateSnapshot snap;
        snap.time = next_snapshot_;
        snap.sweeps = state_.iteration();
        auto margs = state_.marginals(graph_);
        snap.theta_deg.reserve(margs.size());
        snap.var_deg2.reserve(margs.size());
        for (const Marginal& m : margs) {
            snap.theta_deg.push_back(m.mean * kDegPerRad);
            snap.var_deg2.push_back(m.variance * kDegPerRad * kDegPerRad);
        }
        snapshots_.push_back(std::move(snap));
        next_snapshot_ += snap_dt_;
    }
}

void Simulation::advance_tick(double tick_time) {
    // snapshots strictly before this tick see the pre-tick state
    record_pending_snapshots(tick_time, false);
    bool arrived = false;
    while (next_event_ < events_.size() && events_[next_event_].time <= tick_time) {
        arrived |= events_[next_event_].kind == 1;
        apply_event(events_[next_event_]);
        ++next_event_;
    }
    if (arrived || tick_ % aging_stride_ == 0) refresh_factors(tick_time);
    state_.sweep(graph_, {.damping = opts_.damping, .threads = opts_.threads});
    ++tick_;
    record_pending_snapshots(tick_time, true);
}

void Simulation::step(double until) {
    if (until < time_) throw std::invalid_argument("step() cannot move backwards");
    for (;;) {
        double next_tick = static_cast<double>(tick_ + 1) * dt_;
        if (next_tick > until) break;
        advance_tick(next_tick);
    }
    while (next_event_ < events_.size() && events_[next_event_].time < until) {
        apply_event(events_[next_event_]);
        ++next_event_;
    }
    record_pending_snapshots(until, false);
    time_ = until;
}

std::vector<EstimateSnapshot> Simulation::run() {
    step(sc_.horizon);
    // events and snapshots exactly at the horizon still belong to the run
    while (next_event_ < events_.size() && events_[next_event_].time <= sc_.horizon) {
        apply_event(events_[next_event_]);
        ++next_event_;
    }
    record_pending_snapshots(sc_.horizon, true);
    return snapshots_;
}

std::vector<Simulation::ProbePoint> Simulation::convergence_probe(std::span<const int> watch_buses,
                                                                  double eps, int max_sweeps) {
    int arrival_count = 0;
    const SimEvent* arrival = nullptr;
    for (const SimEvent& ev : events_)
        if (ev.kind == 1) {
            ++arrival_count;
            arrival = &ev;
        }
    if (arrival_count != 1)
        throw std::invalid_argument("convergence probe needs exactly one arrival, scenario has " +
                                    std::to_string(arrival_count));

    SweepOptions sweep_opts{.damping = opts_.damping, .threads = opts_.threads};

    // truth state as of the arrival, then a converged pre-arrival baseline
    for (const SimEvent& ev : events_) {
        if (ev.kind == 0 && ev.time <= arrival->time) apply_event(ev);
    }
    refresh_factors(arrival->time);
    run_to_convergence(graph_, state_, 1e-12, max_sweeps, sweep_opts);

    apply_event(*arrival);
    refresh_factors(arrival->time);

    std::vector<ProbePoint> trace;
    if (watch_buses.empty()) return trace;
    std::vector<int> watch_idx;
    for (int bus : watch_buses) watch_idx.push_back(net_.index_of(bus));

    auto watched = [&](const std::vector<Marginal>& margs) {
        std::vector<double> out;
        out.reserve(watch_idx.size());
        for (int idx : watch_idx) out.push_back(margs[static_cast<size_t>(idx)].mean * kDegPerRad);
        return out;
    };

    std::vector<Marginal> prev = state_.marginals(graph_);
    trace.push_back({0, watched(prev)});
    for (int k = 1; k <= max_sweeps; ++k) {
        state_.sweep(graph_, sweep_opts);
        std::vector<Marginal> cur = state_.marginals(graph_);
        trace.push_back({k, watched(cur)});
        double delta = 0.0;
        for (size_t i = 0; i < cur.size(); ++i)
            delta = std::max(delta, std::abs(cur[i].mean - prev[i].mean));
        if (delta < eps) break;
        prev = std::move(cur);
    }
    return trace;
}

MeasurementSet scenario_state_at(const Network& net, const Scenario& sc, double t,
                                 const SimOptions& opts) {
    Simulation sim(net, sc, opts);
    while (sim.next_event_ < sim.events_.size() && sim.events_[sim.next_event_].time <= t) {
        sim.apply_event(sim.events_[sim.next_event_]);
        ++sim.next_event_;
    }
    return sim.set_;
}

std::string snapshots_to_csv(const Network& net, const std::vector<EstimateSnapshot>& snaps) {
    std::ostringstream os;
    os << "time_s,sweeps";
    for (const Bus& b : net.buses()) os << ",theta_" << b.id << "_deg";
    for (const Bus& b : net.buses()) os << ",var_" << b.id << "_deg2";
    os << "\n";
    char buf[64];
    for (const EstimateSnapshot& s : snaps) {
        std::snprintf(buf, sizeof(buf), "%.17g", s.time);
        os << buf << ',' << s.sweeps;
        for (double v : s.theta_deg) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            os << ',' << buf;
        }
        for (double v : s.var_deg2) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            os << ',' << buf;
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace gridbp
