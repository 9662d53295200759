#include "gridbp/gbp.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace gridbp {

GaussianMessage variable_to_factor(std::span<const GaussianMessage> incoming) {
    double lambda = 0.0, eta = 0.0;
    for (const GaussianMessage& m : incoming) {
        double p = 1.0 / m.variance;
        lambda += p;
        eta += m.mean * p;
    }
    if (lambda <= 0.0) return {0.0, kVarianceCeil};
    return {eta / lambda, clamp_variance(1.0 / lambda)};
}

GaussianMessage factor_to_variable(double value, double variance, double c_target,
                                   std::span<const std::pair<double, GaussianMessage>> incoming) {
    if (c_target == 0.0) throw std::invalid_argument("zero coefficient for target variable");
    double mean = value;
    double var = variance;
    for (const auto& [c, m] : incoming) {
        mean -= c * m.mean;
        var += c * c * m.variance;
    }
    return {mean / c_target, clamp_variance(var / (c_target * c_target))};
}

Marginal combine_marginal(std::span<const GaussianMessage> incoming) {
    if (incoming.empty()) throw std::invalid_argument("marginal of empty message set");
    double lambda = 0.0, eta = 0.0;
    for (const GaussianMessage& m : incoming) {
        double p = 1.0 / m.variance;
        lambda += p;
        eta += m.mean * p;
    }
    return {eta / lambda, clamp_variance(1.0 / lambda)};
}

MessageState::MessageState(const FactorGraph& g) {
    const auto& edges = g.edges();
    size_t ne = edges.size();
    v2f_mean_.resize(ne);
    v2f_var_.resize(ne);
    f2v_mean_.resize(ne);
    f2v_var_.resize(ne);
    edge_fac_.resize(ne);
    edge_var_.resize(ne);
    edge_coeff_.resize(ne);
    var_edges_.resize(g.variable_count());
    fac_edges_.resize(g.factor_count());
    for (size_t e = 0; e < ne; ++e) {
        auto [fi, vi] = edges[e];
        edge_fac_[e] = fi;
        edge_var_[e] = vi;
        edge_coeff_[e] = g.factor(fi).coefficient_for(vi);
        var_edges_[vi].push_back(static_cast<int>(e));
        fac_edges_[fi].push_back(static_cast<int>(e));
    }
    init_messages(g);
}

void MessageState::init_messages(const FactorGraph& g) {
    for (size_t e = 0; e < f2v_mean_.size(); ++e) {
        const FactorNode& f = g.factor(edge_fac_[e]);
        if (f.degree() == 1) {
            f2v_mean_[e] = f.value_pu;
            f2v_var_[e] = clamp_variance(f.variance_pu);
        } else {
            f2v_mean_[e] = 0.0;
            f2v_var_[e] = kVarianceCeil;
        }
    }
    for (size_t e = 0; e < v2f_mean_.size(); ++e) {
        double lambda = 0.0, eta = 0.0;
        for (int other : var_edges_[edge_var_[e]]) {
            if (other == static_cast<int>(e)) continue;
            double p = 1.0 / f2v_var_[other];
            lambda += p;
            eta += f2v_mean_[other] * p;
        }
        if (lambda <= 0.0) {
            v2f_mean_[e] = 0.0;
            v2f_var_[e] = kVarianceCeil;
        } else {
            v2f_mean_[e] = eta / lambda;
            v2f_var_[e] = clamp_variance(1.0 / lambda);
        }
    }
    iteration_ = 0;
}

namespace {

// Run fn(begin, end) over [0, n) in `threads` contiguous chunks. Each output
// slot is written by exactly one chunk and inputs come from the other message
// direction, so the partition cannot change results.
template <typename Fn>
void parallel_ranges(size_t n, int threads, Fn fn) {
    if (threads <= 1 || n < 2) {
        fn(size_t{0}, n);
        return;
    }
    size_t chunks = std::min<size_t>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    size_t step = (n + chunks - 1) / chunks;
    for (size_t c = 0; c < chunks; ++c) {
        size_t b = c * step, e = std::min(n, b + step);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

void MessageState::sweep(const FactorGraph& g, const SweepOptions& opts) {
    const double alpha = opts.damping;
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("damping must be in (0,1]");
    size_t ne = v2f_mean_.size();

    // variable -> factor, from the stored factor -> variable messages
    parallel_ranges(ne, opts.threads, [this](size_t begin, size_t end) {
        for (size_t e = begin; e < end; ++e) {
            double lambda = 0.0, eta = 0.0;
            for (int other : var_edges_[edge_var_[e]]) {
                if (other == static_cast<int>(e)) continue;
                double p = 1.0 / f2v_var_[other];
                lambda += p;
                eta += f2v_mean_[other] * p;
            }
            if (lambda <= 0.0) {
                v2f_mean_[e] = 0.0;
                v2f_var_[e] = kVarianceCeil;
            } else {
                v2f_mean_[e] = eta / lambda;
                v2f_var_[e] = clamp_variance(1.0 / lambda);
            }
        }
    });

    // factor -> variable, from the fresh variable -> factor messages
    parallel_ranges(ne, opts.threads, [this, &g, alpha](size_t begin, size_t end) {
        for (size_t e = begin; e < end; ++e) {
            const FactorNode& f = g.factor(edge_fac_[e]);
            double mean = f.value_pu;
            double var = f.variance_pu;
            for (int other : fac_edges_[edge_fac_[e]]) {
                if (other == static_cast<int>(e)) continue;
                double c = edge_coeff_[other];
                mean -= c * v2f_mean_[other];
                var += c * c * v2f_var_[other];
            }
            double c_s = edge_coeff_[e];
            double new_mean = mean / c_s;
            double new_var = clamp_variance(var / (c_s * c_s));
            f2v_mean_[e] = alpha * new_mean + (1.0 - alpha) * f2v_mean_[e];
            f2v_var_[e] = clamp_variance(alpha * new_var + (1.0 - alpha) * f2v_var_[e]);
        }
    });

    ++iteration_;
}

Marginal MessageState::marginal_of(const FactorGraph&, int variable_index) const {
    const auto& edges = var_edges_.at(variable_index);
    if (edges.empty()) throw std::invalid_argument("variable with no incident factors");
    double lambda = 0.0, eta = 0.0;
    for (int e : edges) {
        double p = 1.0 / f2v_var_[e];
        lambda += p;
        eta += f2v_mean_[e] * p;
    }
    return {eta / lambda, clamp_variance(1.0 / lambda)};
}

std::vector<Marginal> MessageState::marginals(const FactorGraph& g) const {
    std::vector<Marginal> out(var_edges_.size());
    for (size_t v = 0; v < var_edges_.size(); ++v)
        out[v] = marginal_of(g, static_cast<int>(v));
    return out;
}

int MessageState::edge_index(const FactorGraph& g, int factor, int variable) const {
    for (int e : fac_edges_.at(factor))
        if (edge_var_[e] == variable) return e;
    (void)g;
    throw std::out_of_range("no edge between factor " + std::to_string(factor) +
                            " and variable " + std::to_string(variable));
}

GaussianMessage MessageState::v2f(const FactorGraph& g, int factor, int variable) const {
    int e = edge_index(g, factor, variable);
    return {v2f_mean_[e], v2f_var_[e]};
}

GaussianMessage MessageState::f2v(const FactorGraph& g, int factor, int variable) const {
    int e = edge_index(g, factor, variable);
    return {f2v_mean_[e], f2v_var_[e]};
}

void sweep(const FactorGraph& g, MessageState& s, const SweepOptions& opts) { s.sweep(g, opts); }

std::vector<Marginal> marginals(const FactorGraph& g, const MessageState& s) {
    return s.marginals(g);
}

ConvergenceResult run_to_convergence(const FactorGraph& g, MessageState& s, double eps,
                                     int max_sweeps, const SweepOptions& opts) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    std::vector<Marginal> prev = s.marginals(g);
    for (int k = 1; k <= max_sweeps; ++k) {
        s.sweep(g, opts);
        std::vector<Marginal> cur = s.marginals(g);
        double delta = 0.0;
        for (size_t i = 0; i < cur.size(); ++i)
            delta = std::max(delta, std::abs(cur[i].mean - prev[i].mean));
        if (delta < eps) return {std::move(cur), k, true};
        prev = std::move(cur);
    }
    return {std::move(prev), max_sweeps, false};
}

}  // namespace gridbp
