#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gridbp/measurements.hpp"
#include "gridbp/network.hpp"

namespace gridbp {

struct VariableNode {
    int bus_id = 0;   // external id
    int index = 0;    // position in FactorGraph::variables()
    std::vector<int> factors;  // incident factor ids, ascending
};

struct FactorNode {
    int device_id = 0;
    std::vector<int> variables;        // incident variable indices, ascending
    std::vector<double> coefficients;  // parallel to `variables`
    double value_pu = 0.0;
    double variance_pu = kPseudoVariance;

    int degree() const { return static_cast<int>(variables.size()); }
    double coefficient_for(int variable_index) const;
};

/// Bipartite measurement/state graph. Topology is fixed at build time; only
/// factor parameters (value, variance) change afterwards, via update_factor,
/// which leaves any message state attached to the graph untouched.
class FactorGraph {
  public:
    /// One factor per device; values and variances converted to per-unit and
    /// radians, variance evaluated by variance_at(dev, t).
    static FactorGraph build(const Network& net, const MeasurementSet& set, double t);

    const std::vector<VariableNode>& variables() const { return variables_; }
    const std::vector<FactorNode>& factors() const { return factors_; }
    /// (factor id, variable index) pairs, sorted lexicographically.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    int variable_count() const { return static_cast<int>(variables_.size()); }
    int factor_count() const { return static_cast<int>(factors_.size()); }

    const FactorNode& factor(int id) const { return factors_.at(id); }
    const VariableNode& variable(int index) const { return variables_.at(index); }
    int bus_id_of(int variable_index) const { return variables_.at(variable_index).bus_id; }

    /// Factor ids equal device ids, so this validates and updates in place.
    void update_factor(int device_id, double value_pu, double variance_pu);

    /// Text edge list for inspection: one "f<id> -- x<bus> [C=<coeff>]" line
    /// per edge.
    std::string export_edges() const;

  private:
    std::vector<VariableNode> variables_;
    std::vector<FactorNode> factors_;
    std::vector<std::pair<int, int>> edges_;
};

}  // namespace gridbp
