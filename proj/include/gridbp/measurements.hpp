#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gridbp/network.hpp"

namespace gridbp {

constexpr double kPseudoVariance = 1e60;   // squared SI units (MW^2 or deg^2)
constexpr double kSlackVariance = 1e-60;   // deg^2
constexpr double kNever = std::numeric_limits<double>::infinity();

constexpr double kDegPerRad = 180.0 / 3.14159265358979323846;

/// SI value -> internal unit (per-unit power, radian angle).
double to_internal_value(MeasurementKind kind, double value_si, double base_mva);
double to_internal_variance(MeasurementKind kind, double variance_si, double base_mva);
double from_internal_value(MeasurementKind kind, double value_internal, double base_mva);

enum class MeasurementClass { real_time, pseudo };

/// One potential measurement of the system. Values and variances are kept in
/// SI units (MW for power kinds, degrees for angles); conversion to per-unit
/// and radians happens when the value enters a solver.
struct MeasurementDevice {
    int id = -1;
    MeasurementKind kind = MeasurementKind::angle;
    int location = 0;  // branch index for flow, external bus id otherwise
    std::string name;  // "T:4", "P:4", "P:1-2"

    double value_si = 0.0;         // most recent value (prior or arrival)
    double pseudo_value_si = 0.0;  // the historical prior it started from
    double sigma2_rt = kPseudoVariance;
    double sigma2_ps = kPseudoVariance;
    std::optional<double> t_rt;  // latest arrival instant, if any
    double t_ps = kNever;        // instant the aging ramp reaches sigma2_ps
};

struct ArrivalEvent {
    int device_id = -1;
    double time = 0.0;
    double value_si = 0.0;
    double sigma2_rt = 0.0;
    double t_ps = kNever;
};

/// Effective variance at time t: sigma2_ps before the first arrival and from
/// t_ps onwards, sigma2_rt at the arrival instant, linear ramp in between,
/// sigma2_rt forever when t_ps is infinite.
double variance_at(const MeasurementDevice& dev, double t);

MeasurementClass classify(const MeasurementDevice& dev, double t);

/// The full measurement set M: one angle and one injection device per bus,
/// one flow device per branch (from->to orientation).
class MeasurementSet {
  public:
    /// Every device starts as a pseudo-measurement at kPseudoVariance with
    /// its value taken from `priors` (by device name, missing entries are 0).
    /// The slack bus angle device is anchored: value 0, sigma2_rt = 1e-60
    /// deg^2, t_rt = 0, t_ps = infinity.
    static MeasurementSet make_pseudo_set(const Network& net,
                                          const std::map<std::string, double>& priors = {});

    /// Custom device list (oracle and test construction). Locations are
    /// validated against the network.
    MeasurementSet(const Network& net, std::vector<MeasurementDevice> devices);

    int size() const { return static_cast<int>(devices_.size()); }
    const std::vector<MeasurementDevice>& devices() const { return devices_; }
    const MeasurementDevice& device(int id) const { return devices_.at(id); }
    MeasurementDevice& device(int id) { return devices_.at(id); }

    /// Device id for a name like "P:1-2"; throws std::out_of_range if absent.
    int find(const std::string& name) const;
    bool has(const std::string& name) const { return by_name_.count(name) != 0; }

    /// Replace value, sigma2_rt, t_rt and t_ps from the event. The previous
    /// aging state is discarded; sigma2_ps is untouched.
    void apply_arrival(const ArrivalEvent& ev);

  private:
    std::vector<MeasurementDevice> devices_;
    std::map<std::string, int> by_name_;
};

/// Arrival instants of a Poisson process with the given rate on
/// [t_start, t_end), strictly increasing, reproducible per seed.
std::vector<double> sample_poisson_schedule(double rate, double t_start, double t_end,
                                            std::uint64_t seed);

}  // namespace gridbp
