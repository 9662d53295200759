#pragma once

#include <span>
#include <utility>
#include <vector>

#include "gridbp/factor_graph.hpp"

namespace gridbp {

constexpr double kVarianceFloor = 1e-60;
constexpr double kVarianceCeil = 1e60;

inline double clamp_variance(double v) {
    if (!(v > kVarianceFloor)) return kVarianceFloor;  // also catches NaN
    if (v > kVarianceCeil) return kVarianceCeil;
    return v;
}

struct GaussianMessage {
    double mean = 0.0;
    double variance = kVarianceCeil;
};

struct Marginal {
    double mean = 0.0;
    double variance = kVarianceCeil;
};

/// Combine messages arriving at a variable node, excluding none: precision
/// adds, means combine precision-weighted. Empty input degrades to the
/// uninformative (0, 1e60).
GaussianMessage variable_to_factor(std::span<const GaussianMessage> incoming);

/// Message from a factor with measurement (value, variance) to the variable
/// whose coefficient is c_target, given (coefficient, message) pairs from
/// every other adjacent variable.
GaussianMessage factor_to_variable(double value, double variance, double c_target,
                                   std::span<const std::pair<double, GaussianMessage>> incoming);

/// Posterior from all factor-to-variable messages into one variable node.
/// Throws std::invalid_argument on empty input.
Marginal combine_marginal(std::span<const GaussianMessage> incoming);

struct SweepOptions {
    double damping = 1.0;  // 1 = undamped; (0,1) blends new f2v into old
    int threads = 1;       // affects speed only, never results
};

struct ConvergenceResult {
    std::vector<Marginal> marginals;
    int sweeps_used = 0;
    bool converged = false;
};

/// All messages of one factor graph, double-buffered by construction: a sweep
/// first recomputes every variable-to-factor message from the stored
/// factor-to-variable messages, then every factor-to-variable message from
/// the fresh variable-to-factor ones. Each sum runs in adjacency order, so
/// results are independent of edge processing order and thread count.
class MessageState {
  public:
    explicit MessageState(const FactorGraph& g);

    /// Reset to the cold start: degree-1 factors send (value, variance),
    /// everything else (0, 1e60); one variable-to-factor pass; iteration 0.
    void init_messages(const FactorGraph& g);

    void sweep(const FactorGraph& g, const SweepOptions& opts = {});

    std::vector<Marginal> marginals(const FactorGraph& g) const;
    Marginal marginal_of(const FactorGraph& g, int variable_index) const;

    long iteration() const { return iteration_; }

    /// Messages on the edge (factor id, variable index); test access.
    GaussianMessage v2f(const FactorGraph& g, int factor, int variable) const;
    GaussianMessage f2v(const FactorGraph& g, int factor, int variable) const;

  private:
    int edge_index(const FactorGraph& g, int factor, int variable) const;

    // flat per-edge storage, index-aligned with FactorGraph::edges()
    std::vector<double> v2f_mean_, v2f_var_, f2v_mean_, f2v_var_;
    std::vector<int> edge_var_, edge_fac_;
    std::vector<double> edge_coeff_;
    std::vector<std::vector<int>> var_edges_, fac_edges_;
    long iteration_ = 0;
};

void sweep(const FactorGraph& g, MessageState& s, const SweepOptions& opts = {});
std::vector<Marginal> marginals(const FactorGraph& g, const MessageState& s);

/// Sweep until the largest marginal-mean change drops below eps (radians) or
/// max_sweeps is hit. Non-convergence is reported through the flag.
ConvergenceResult run_to_convergence(const FactorGraph& g, MessageState& s, double eps,
                                     int max_sweeps, const SweepOptions& opts = {});

}  // namespace gridbp
