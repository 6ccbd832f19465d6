#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "dglm/block_solver.hpp"
#include "dglm/loss.hpp"
#include "dglm/shard.hpp"
#include "dglm/transport.hpp"

namespace dglm {

struct SolverConfig {
    LossKind loss = LossKind::logistic;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double nu = 1e-6;
    double eta1 = 2.0;
    double eta2 = 2.0;
    double b = 0.5;       // backtracking factor
    double sigma = 0.01;  // sufficient-decrease constant
    double gamma = 0.0;   // weight of the quadratic term in D
    double delta = 1e-3;  // lower end of the alpha_init search interval
    double kappa = 0.75;  // ALB completion fraction
    SolveMode mode = SolveMode::bsp;
    bool mu_adaptive = true;
    double mu_init = 1.0;
    std::size_t max_outer = 100;
    double tol = 1e-8;
    std::size_t alpha_grid_size = 8;
    std::size_t max_backtracks = 50;

    ElasticNetPenalty penalty() const noexcept { return {lambda1, lambda2}; }

    /// Throws std::invalid_argument on out-of-range hyperparameters.
    void validate() const;
};

/// Per-worker solver state. `margins` and `mu` are replicated across ranks.
struct ModelState {
    std::vector<double> beta_m;   // indexed like shard.columns
    std::vector<double> margins;  // X * beta
    double mu = 1.0;
    std::uint64_t iteration = 0;
};

struct IterationStats {
    std::size_t iteration = 0;
    double objective = 0.0;  // f after the step
    double alpha = 1.0;
    double mu = 1.0;         // curvature multiplier the step was computed with
    std::size_t nnz = 0;     // global nonzero weights after the step
    double wall_time = 0.0;  // seconds since fit started
    std::uint64_t reduce_bytes = 0;  // payload bytes this rank contributed during the step
};

/// Everything outer_step learned, beyond the public stats.
struct StepReport {
    IterationStats stats;
    double f_before = 0.0;
    double directional = 0.0;  // D
    bool zero_step = false;    // delta beta == 0 globally (or below rounding)
    bool stopped_early = false;
    std::size_t coordinates_visited = 0;
};

/// sum_i g_i (X delta)_i + gamma * quad_form_total + (R(beta + delta) - R(beta))
double directional_D(const WorkingSet& working, std::span<const double> global_margin_delta,
                     double penalty_new_minus_old, double quad_form_total, double gamma);

/// Batched objective evaluation: out[k] = f(beta + alphas[k] * delta).
using CandidateEvaluator =
    std::function<void(std::span<const double> alphas, std::span<double> out)>;

/// Logarithmic grid of `size` points in (delta, 1], ending at 1.
std::vector<double> alpha_grid(double delta, std::size_t size);

struct LineSearchResult {
    double alpha = 1.0;
    double objective = 0.0;  // f(beta + alpha * delta)
    std::size_t evaluations = 0;
};

/// Unit step if it gives sufficient decrease; otherwise the best grid point
/// backtracked by powers of b until f <= f0 + alpha * sigma * D.
/// Throws NumericalFailure when no candidate qualifies.
LineSearchResult line_search(double f0, const CandidateEvaluator& evaluate, double D,
                             const SolverConfig& config);

inline double adapt_mu(double mu, double alpha, double eta1, double eta2) noexcept
{
    if (alpha < 1.0) return eta1 * mu;
    const double shrunk = mu / eta2;
    return shrunk < 1.0 ? 1.0 : shrunk;
}

struct FitHooks {
    /// Forwarded to solve_block.
    std::function<void(std::size_t)> before_coordinate;
    /// Called after every outer step on this rank.
    std::function<void(const ModelState&, const StepReport&)> after_step;
};

ModelState initial_state(const FeatureShard& shard, const SolverConfig& config);

/// One collective outer iteration. All ranks leave with identical margins and mu.
StepReport outer_step(ModelState& state, const FeatureShard& shard, const SolverConfig& config,
                      Transport& transport, BlockCursor& cursor, const FitHooks& hooks = {});

struct FitResult {
    std::vector<double> beta_m;
    std::vector<double> margins;
    std::vector<IterationStats> history;
    bool converged = false;
    double mu = 1.0;
};

FitResult fit(const FeatureShard& shard, const SolverConfig& config, Transport& transport,
              const FitHooks& hooks = {});

/// iteration,seconds,objective,alpha,mu,nnz,reduce_bytes
void write_history_csv(std::ostream& out, std::span<const IterationStats> history);

} // namespace dglm
