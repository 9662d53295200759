#include "gridbp/reference.hpp"

#include <cmath>
#include <stdexcept>

#include "gridbp/rng.hpp"

namespace gridbp {

JacobianMatrix build_jacobian(const Network& net, std::span<const MeasurementDevice> devices) {
    JacobianMatrix h = JacobianMatrix::Zero(static_cast<Eigen::Index>(devices.size()),
                                            net.bus_count());
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
        const MeasurementDevice& dev = devices[static_cast<size_t>(r)];
        for (const auto& [bus_id, c] : net.measurement_coefficients(dev.kind, dev.location))
            h(r, net.index_of(bus_id)) = c;
    }
    return h;
}

WeightVector build_weights(const Network& net, std::span<const MeasurementDevice> devices,
                           double t) {
    WeightVector w(static_cast<Eigen::Index>(devices.size()));
    for (Eigen::Index r = 0; r < w.size(); ++r) {
        const MeasurementDevice& dev = devices[static_cast<size_t>(r)];
        double var = to_internal_variance(dev.kind, variance_at(dev, t), net.base_mva());
        if (!(var > 0.0)) throw std::invalid_argument("nonpositive variance in weight matrix");
        w(r) = 1.0 / var;
    }
    return w;
}

Eigen::VectorXd build_values(const Network& net, std::span<const MeasurementDevice> devices) {
    Eigen::VectorXd z(static_cast<Eigen::Index>(devices.size()));
    for (Eigen::Index r = 0; r < z.size(); ++r) {
        const MeasurementDevice& dev = devices[static_cast<size_t>(r)];
        z(r) = to_internal_value(dev.kind, dev.value_si, net.base_mva());
    }
    return z;
}

std::vector<double> dc_power_flow(const Network& net, const std::map<int, double>& injections_pu,
                                  int slack_bus) {
    int n = net.bus_count();
    int slack = net.index_of(slack_bus);
    Eigen::MatrixXd b_mat = Eigen::MatrixXd::Zero(n, n);
    for (const Branch& br : net.branches()) {
        int i = net.index_of(br.from_bus), j = net.index_of(br.to_bus);
        b_mat(i, i) += -br.susceptance_pu;
        b_mat(j, j) += -br.susceptance_pu;
        b_mat(i, j) += br.susceptance_pu;
        b_mat(j, i) += br.susceptance_pu;
    }
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    for (const auto& [bus_id, inj] : injections_pu) {
        int idx = net.index_of(bus_id);
        if (idx == slack) continue;  // slack injection is implied by balance
        p(idx) = inj;
    }
    for (const Bus& bus : net.buses())
        if (bus.id != slack_bus && !injections_pu.count(bus.id))
            throw std::invalid_argument("missing injection for bus " + std::to_string(bus.id));

    // eliminate the slack row/column and solve the reduced system
    std::vector<int> keep;
    keep.reserve(n - 1);
    for (int i = 0; i < n; ++i)
        if (i != slack) keep.push_back(i);
    Eigen::MatrixXd b_red(n - 1, n - 1);
    Eigen::VectorXd p_red(n - 1);
    for (int r = 0; r < n - 1; ++r) {
        p_red(r) = p(keep[r]);
        for (int c = 0; c < n - 1; ++c) b_red(r, c) = b_mat(keep[r], keep[c]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(b_red);
    if (!lu.isInvertible())
        throw std::runtime_error("singular susceptance matrix (disconnected network?)");
    Eigen::VectorXd theta_red = lu.solve(p_red);

    std::vector<double> theta(n, 0.0);
    for (int r = 0; r < n - 1; ++r) theta[keep[r]] = theta_red(r);
    return theta;
}

WlsResult wls_solve(const Network& net, std::span<const MeasurementDevice> devices, double t) {
    JacobianMatrix h = build_jacobian(net, devices);
    WeightVector w = build_weights(net, devices, t);
    Eigen::VectorXd z = build_values(net, devices);

    Eigen::MatrixXd a = h.transpose() * w.asDiagonal() * h;
    Eigen::VectorXd rhs = h.transpose() * (w.asDiagonal() * z);

    WlsResult res;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    double smax = svd.singularValues().maxCoeff();
    double smin = svd.singularValues().minCoeff();
    res.condition = (smin > 0.0 && std::isfinite(smax))
                        ? smax / smin
                        : std::numeric_limits<double>::infinity();
    if (!std::isfinite(res.condition) || res.condition > kConditionLimit) return res;

    Eigen::VectorXd x = svd.solve(rhs);
    if (!x.allFinite()) return res;
    res.angles_rad.assign(x.data(), x.data() + x.size());
    res.ok = true;
    return res;
}

std::vector<double> posterior_variance_diagonal(const Network& net,
                                                std::span<const MeasurementDevice> devices,
                                                double t) {
    JacobianMatrix h = build_jacobian(net, devices);
    WeightVector w = build_weights(net, devices, t);
    Eigen::MatrixXd a = h.transpose() * w.asDiagonal() * h;
    Eigen::MatrixXd inv = a.fullPivLu().inverse();
    std::vector<double> diag(static_cast<size_t>(inv.rows()));
    for (Eigen::Index i = 0; i < inv.rows(); ++i) diag[static_cast<size_t>(i)] = inv(i, i);
    return diag;
}

double objective(const Network& net, std::span<const MeasurementDevice> devices, double t,
                 std::span<const double> angles_rad) {
    if (static_cast<int>(angles_rad.size()) != net.bus_count())
        throw std::invalid_argument("angle vector has wrong dimension");
    double total = 0.0;
    for (const MeasurementDevice& dev : devices) {
        double predicted = 0.0;
        for (const auto& [bus_id, c] : net.measurement_coefficients(dev.kind, dev.location))
            predicted += c * angles_rad[static_cast<size_t>(net.index_of(bus_id))];
        double z = to_internal_value(dev.kind, dev.value_si, net.base_mva());
        double var = to_internal_variance(dev.kind, variance_at(dev, t), net.base_mva());
        double r = z - predicted;
        total += r * r / var;
    }
    return total;
}

std::vector<double> add_measurement_noise(std::span<const double> values,
                                          std::span<const double> variances, std::uint64_t seed) {
    if (values.size() != variances.size())
        throw std::invalid_argument("values/variances size mismatch");
    Rng rng(seed);
    std::vector<double> out(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        if (!(variances[i] > 0.0)) throw std::invalid_argument("nonpositive noise variance");
        out[i] = values[i] + rng.normal(0.0, variances[i]);
    }
    return out;
}

}  // namespace gridbp
