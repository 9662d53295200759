#include "gridbp/factor_graph.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace gridbp {

double FactorNode::coefficient_for(int variable_index) const {
    for (size_t i = 0; i < variables.size(); ++i)
        if (variables[i] == variable_index) return coefficients[i];
    throw std::out_of_range("factor not adjacent to variable " + std::to_string(variable_index));
}

FactorGraph FactorGraph::build(const Network& net, const MeasurementSet& set, double t) {
    FactorGraph g;
    g.variables_.resize(net.bus_count());
    for (int i = 0; i < net.bus_count(); ++i) {
        g.variables_[i].bus_id = net.bus_id_at(i);
        g.variables_[i].index = i;
    }

    g.factors_.reserve(set.size());
    for (const MeasurementDevice& dev : set.devices()) {
        FactorNode f;
        f.device_id = dev.id;
        auto coeffs = net.measurement_coefficients(dev.kind, dev.location);
        for (const auto& [bus_id, c] : coeffs) {
            if (c == 0.0) continue;  // cancelled parallel branches drop the edge
            f.variables.push_back(net.index_of(bus_id));
            f.coefficients.push_back(c);
        }
        f.value_pu = to_internal_value(dev.kind, dev.value_si, net.base_mva());
        f.variance_pu = to_internal_variance(dev.kind, variance_at(dev, t), net.base_mva());
        if (f.variance_pu <= 0.0)
            throw std::invalid_argument("nonpositive variance for device '" + dev.name + "'");
        g.factors_.push_back(std::move(f));
    }

    for (int fi = 0; fi < g.factor_count(); ++fi)
        for (int vi : g.factors_[fi].variables) {
            g.variables_[vi].factors.push_back(fi);
            g.edges_.emplace_back(fi, vi);
        }
    // edges_ is already (factor, variable)-lexicographic: factors were added
    // in device order and each factor's variables ascend.
    for (auto& v : g.variables_)
        if (v.factors.empty())
            throw std::invalid_argument("bus " + std::to_string(v.bus_id) +
                                        " has no incident factor");
    return g;
}

void FactorGraph::update_factor(int device_id, double value_pu, double variance_pu) {
    if (device_id < 0 || device_id >= factor_count())
        throw std::out_of_range("unknown factor id " + std::to_string(device_id));
    if (variance_pu <= 0.0) throw std::invalid_argument("nonpositive factor variance");
    factors_[device_id].value_pu = value_pu;
    factors_[device_id].variance_pu = variance_pu;
}

std::string FactorGraph::export_edges() const {
    std::ostringstream os;
    char buf[64];
    for (const auto& [fi, vi] : edges_) {
        std::snprintf(buf, sizeof(buf), "%.17g", factors_[fi].coefficient_for(vi));
        os << 'f' << fi << " -- x" << variables_[vi].bus_id << " [C=" << buf << "]\n";
    }
    return os.str();
}

}  // namespace gridbp
