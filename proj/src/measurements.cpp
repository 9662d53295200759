#include "gridbp/measurements.hpp"

#include <cmath>
#include <stdexcept>

#include "gridbp/rng.hpp"

namespace gridbp {

double to_internal_value(MeasurementKind kind, double value_si, double base_mva) {
    return kind == MeasurementKind::angle ? value_si / kDegPerRad : value_si / base_mva;
}

double to_internal_variance(MeasurementKind kind, double variance_si, double base_mva) {
    return kind == MeasurementKind::angle ? variance_si / (kDegPerRad * kDegPerRad)
                                          : variance_si / (base_mva * base_mva);
}

double from_internal_value(MeasurementKind kind, double value_internal, double base_mva) {
    return kind == MeasurementKind::angle ? value_internal * kDegPerRad
                                          : value_internal * base_mva;
}

double variance_at(const MeasurementDevice& dev, double t) {
    if (!dev.t_rt || t < *dev.t_rt || t >= dev.t_ps) return dev.sigma2_ps;
    if (std::isinf(dev.t_ps)) return dev.sigma2_rt;
    double frac = (t - *dev.t_rt) / (dev.t_ps - *dev.t_rt);
    return dev.sigma2_rt + (dev.sigma2_ps - dev.sigma2_rt) * frac;
}

MeasurementClass classify(const MeasurementDevice& dev, double t) {
    return (dev.t_rt && t >= *dev.t_rt && t < dev.t_ps) ? MeasurementClass::real_time
                                                        : MeasurementClass::pseudo;
}

namespace {

std::string flow_name(const Network& net, int branch_index) {
    const Branch& br = net.branches().at(branch_index);
    std::string base = "P:" + std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus);
    // parallel branches get a #k suffix so names stay unique
    int dup = 1;
    for (int i = 0; i < branch_index; ++i) {
        const Branch& other = net.branches()[i];
        if (other.from_bus == br.from_bus && other.to_bus == br.to_bus) ++dup;
    }
    return dup == 1 ? base : base + "#" + std::to_string(dup);
}

}  // namespace

MeasurementSet MeasurementSet::make_pseudo_set(const Network& net,
                                               const std::map<std::string, double>& priors) {
    std::vector<MeasurementDevice> devices;
    devices.reserve(2 * net.bus_count() + net.branch_count());
    auto add = [&devices](MeasurementKind kind, int location, std::string name) {
        MeasurementDevice d;
        d.id = static_cast<int>(devices.size());
        d.kind = kind;
        d.location = location;
        d.name = std::move(name);
        devices.push_back(std::move(d));
    };
    for (const Bus& b : net.buses()) add(MeasurementKind::angle, b.id, "T:" + std::to_string(b.id));
    for (const Bus& b : net.buses())
        add(MeasurementKind::injection, b.id, "P:" + std::to_string(b.id));
    for (int i = 0; i < net.branch_count(); ++i) add(MeasurementKind::flow, i, flow_name(net, i));

    MeasurementSet set(net, std::move(devices));
    for (const auto& [name, value] : priors) {
        auto it = set.by_name_.find(name);
        if (it == set.by_name_.end())
            throw std::out_of_range("prior for unknown device '" + name + "'");
        set.devices_[it->second].value_si = value;
        set.devices_[it->second].pseudo_value_si = value;
    }
    // slack anchor: a permanently fresh angle measurement of 0
    MeasurementDevice& anchor = set.devices_[set.find("T:" + std::to_string(net.slack_bus()))];
    anchor.value_si = 0.0;
    anchor.pseudo_value_si = 0.0;
    anchor.sigma2_rt = kSlackVariance;
    anchor.t_rt = 0.0;
    anchor.t_ps = kNever;
    return set;
}

MeasurementSet::MeasurementSet(const Network& net, std::vector<MeasurementDevice> devices)
    : devices_(std::move(devices)) {
    for (int i = 0; i < static_cast<int>(devices_.size()); ++i) {
        MeasurementDevice& d = devices_[i];
        d.id = i;
        if (d.kind == MeasurementKind::flow) {
            if (d.location < 0 || d.location >= net.branch_count())
                throw std::out_of_range("flow device on unknown branch index " +
                                        std::to_string(d.location));
        } else {
            net.index_of(d.location);
        }
        if (d.name.empty()) d.name = "dev" + std::to_string(i);
        if (!by_name_.emplace(d.name, i).second)
            throw std::invalid_argument("duplicate device name '" + d.name + "'");
        if (d.sigma2_rt <= 0.0 || d.sigma2_ps <= 0.0)
            throw std::invalid_argument("device '" + d.name + "' has nonpositive variance");
        if (d.sigma2_rt > d.sigma2_ps)
            throw std::invalid_argument("device '" + d.name + "' has sigma2_rt > sigma2_ps");
    }
}

int MeasurementSet::find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::out_of_range("unknown device '" + name + "'");
    return it->second;
}

void MeasurementSet::apply_arrival(const ArrivalEvent& ev) {
    if (ev.device_id < 0 || ev.device_id >= size())
        throw std::out_of_range("unknown device id " + std::to_string(ev.device_id));
    if (ev.sigma2_rt <= 0.0) throw std::invalid_argument("arrival with nonpositive variance");
    MeasurementDevice& dev = devices_[ev.device_id];
    if (ev.sigma2_rt > dev.sigma2_ps)
        throw std::invalid_argument("arrival variance above sigma2_ps for '" + dev.name + "'");
    if (std::isfinite(ev.t_ps) && ev.t_ps <= ev.time)
        throw std::invalid_argument("arrival with t_ps <= arrival time for '" + dev.name + "'");
    dev.value_si = ev.value_si;
    dev.sigma2_rt = ev.sigma2_rt;
    dev.t_rt = ev.time;
    dev.t_ps = ev.t_ps;
}

std::vector<double> sample_poisson_schedule(double rate, double t_start, double t_end,
                                            std::uint64_t seed) {
    if (rate <= 0.0) throw std::invalid_argument("poisson rate must be positive");
    if (!(t_start < t_end)) throw std::invalid_argument("poisson window must be nonempty");
    Rng rng(seed);
    std::vector<double> times;
    double t = t_start;
    for (;;) {
        t += rng.exponential(rate);
        if (t >= t_end) break;
        times.push_back(t);
    }
    return times;
}

}  // namespace gridbp
