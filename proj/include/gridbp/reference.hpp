#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "gridbp/measurements.hpp"
#include "gridbp/network.hpp"

namespace gridbp {

/// Dense k x n Jacobian of the measurement functions, rows in device order,
/// columns in internal bus order, entries in per-unit/radian form.
using JacobianMatrix = Eigen::MatrixXd;
/// Diagonal of the weight matrix: 1/sigma_i^2 in internal units at time t.
using WeightVector = Eigen::VectorXd;

JacobianMatrix build_jacobian(const Network& net, std::span<const MeasurementDevice> devices);
WeightVector build_weights(const Network& net, std::span<const MeasurementDevice> devices,
                           double t);
/// Measurement values in internal units (per-unit / radians), device order.
Eigen::VectorXd build_values(const Network& net, std::span<const MeasurementDevice> devices);

/// Angles (radians, internal bus order) satisfying the injection balance at
/// every non-slack bus; slack angle pinned to 0. `injections_pu` is keyed by
/// external bus id and must cover every non-slack bus.
std::vector<double> dc_power_flow(const Network& net, const std::map<int, double>& injections_pu,
                                  int slack_bus);

struct WlsResult {
    std::vector<double> angles_rad;  // internal bus order; empty when !ok
    double condition = 0.0;          // 2-norm condition estimate of H^T W H
    bool ok = false;
};

constexpr double kConditionLimit = 1e14;  // beyond this a dense solve is reported as failed

/// Dense normal-equation solve of the weighted least-squares problem at time
/// t. Ill-conditioning is an expected outcome, reported through `ok` and
/// `condition` rather than thrown.
WlsResult wls_solve(const Network& net, std::span<const MeasurementDevice> devices, double t);

/// diag((H^T W H)^-1): the exact posterior variances of the angle estimates,
/// in radians^2.
std::vector<double> posterior_variance_diagonal(const Network& net,
                                                std::span<const MeasurementDevice> devices,
                                                double t);

/// Sum of squared weighted residuals of `angles_rad` against the device set.
double objective(const Network& net, std::span<const MeasurementDevice> devices, double t,
                 std::span<const double> angles_rad);

/// values[i] + N(0, variances[i]), reproducible per seed.
std::vector<double> add_measurement_noise(std::span<const double> values,
                                          std::span<const double> variances, std::uint64_t seed);

}  // namespace gridbp
