#include "dglm/driver.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dglm/error.hpp"
#include "dglm/kernels.hpp"
#include "dglm/text_format.hpp"

namespace dglm {

void SolverConfig::validate() const
{
    auto require = [](bool ok, const char* what) {
        if (!ok) throw std::invalid_argument(std::string("solver config: ") + what);
    };
    require(lambda1 >= 0.0 && std::isfinite(lambda1), "lambda1 must be >= 0");
    require(lambda2 >= 0.0 && std::isfinite(lambda2), "lambda2 must be >= 0");
    require(nu > 0.0 && std::isfinite(nu), "nu must be > 0");
    require(eta1 >= 1.0 && eta2 >= 1.0, "eta1, eta2 must be >= 1");
    require(b > 0.0 && b < 1.0, "b must be in (0, 1)");
    require(sigma > 0.0 && sigma < 1.0, "sigma must be in (0, 1)");
    require(gamma >= 0.0 && gamma < 1.0, "gamma must be in [0, 1)");
    require(delta > 0.0 && delta < 1.0, "delta must be in (0, 1)");
    require(kappa > 0.0 && kappa <= 1.0, "kappa must be in (0, 1]");
    require(mu_init >= 1.0 && std::isfinite(mu_init), "mu_init must be >= 1");
    require(tol > 0.0, "tol must be > 0");
    require(alpha_grid_size >= 1, "alpha_grid_size must be >= 1");
    require(max_backtracks >= 1, "max_backtracks must be >= 1");
}

double directional_D(const WorkingSet& working, std::span<const double> global_margin_delta,
                     double penalty_new_minus_old, double quad_form_total, double gamma)
{
    return kernels::omp::dot(working.g, global_margin_delta) + gamma * quad_form_total +
           penalty_new_minus_old;
}

std::vector<double> alpha_grid(double delta, std::size_t size)
{
    std::vector<double> grid(size);
    const double log_delta = std::log(delta);
    for (std::size_t k = 1; k <= size; ++k) {
        grid[k - 1] = k == size ? 1.0
                                : std::exp(log_delta * (1.0 - static_cast<double>(k) /
                                                                  static_cast<double>(size)));
    }
    return grid;
}

LineSearchResult line_search(double f0, const CandidateEvaluator& evaluate, double D,
                             const SolverConfig& config)
{
    if (!(D < 0.0)) {
        throw NumericalFailure("line search: D = " + format_double(D) + " is not a descent value");
    }
    LineSearchResult result;
    const std::vector<double> grid = alpha_grid(config.delta, config.alpha_grid_size);
    std::vector<double> f_grid(grid.size());
    evaluate(grid, f_grid);
    result.evaluations += grid.size();

    auto armijo = [&](double alpha, double f) { return f <= f0 + alpha * config.sigma * D; };

    if (armijo(1.0, f_grid.back())) {
        result.alpha = 1.0;
        result.objective = f_grid.back();
        return result;
    }

    // argmin over the grid; ties go to the larger step
    std::size_t best = grid.size() - 1;
    for (std::size_t k = grid.size(); k-- > 0;) {
        if (f_grid[k] < f_grid[best]) best = k;
    }
    const double alpha_init = grid[best];
    if (armijo(alpha_init, f_grid[best])) {
        result.alpha = alpha_init;
        result.objective = f_grid[best];
        return result;
    }

    std::vector<double> steps(config.max_backtracks);
    double a = alpha_init;
    for (auto& s : steps) {
        a *= config.b;
        s = a;
    }
    std::vector<double> f_steps(steps.size());
    evaluate(steps, f_steps);
    result.evaluations += steps.size();
    for (std::size_t j = 0; j < steps.size(); ++j) {
        if (armijo(steps[j], f_steps[j])) {
            result.alpha = steps[j];
            result.objective = f_steps[j];
            return result;
        }
    }
    std::ostringstream msg;
    msg << "line search failed: f0=" << format_double(f0) << " D=" << format_double(D)
        << " alpha_init=" << format_double(alpha_init) << " f(alpha_init)="
        << format_double(f_grid[best]) << " after " << config.max_backtracks << " backtracks";
    throw NumericalFailure(msg.str());
}

ModelState initial_state(const FeatureShard& shard, const SolverConfig& config)
{
    ModelState state;
    state.beta_m.assign(shard.columns.size(), 0.0);
    state.margins.assign(shard.n, 0.0);
    state.mu = config.mu_init;
    return state;
}

namespace {

// Slot layout of the first scalar reduction.
enum : std::size_t {
    slot_quad = 0,
    slot_penalty = 1,
    slot_step_l1 = 2,
    slot_nnz = 3,
    slot_candidates = 4,
};

struct PenaltyTable {
    std::vector<double> alphas;
    std::vector<double> penalty;  // global R(beta + alpha * delta)
    std::vector<double> nnz;      // global count of nonzero beta + alpha * delta

    std::size_t find(double alpha) const
    {
        for (std::size_t k = 0; k < alphas.size(); ++k) {
            if (alphas[k] == alpha) return k;
        }
        return alphas.size();
    }
};

void local_candidate_terms(std::span<const double> beta, std::span<const double> delta,
                           const ElasticNetPenalty& penalty, double alpha, double& r, double& nnz)
{
    r = 0.0;
    nnz = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
        const double v = beta[j] + alpha * delta[j];
        r += penalty.coordinate(v);
        if (v != 0.0) nnz += 1.0;
    }
}

} // namespace

StepReport outer_step(ModelState& state, const FeatureShard& shard, const SolverConfig& config,
                      Transport& transport, BlockCursor& cursor, const FitHooks& hooks)
{
    const LossFunction loss(config.loss);
    const ElasticNetPenalty penalty = config.penalty();
    const std::uint64_t payload_before = transport.counters().payload_bytes();
    const std::uint64_t generation = state.iteration;

    StepReport report;
    report.stats.iteration = static_cast<std::size_t>(state.iteration + 1);
    report.stats.mu = state.mu;

    // (1) working set at the current margins
    const WorkingSet working = compute_working_set(loss, shard.labels, state.margins);

    // (2) local block pass
    BlockSolveOptions options{state.mu, config.nu, penalty, config.mode};
    BlockHooks block_hooks;
    block_hooks.before_coordinate = hooks.before_coordinate;
    StopSignal stop;
    if (config.mode == SolveMode::alb) {
        stop = transport.stop_signal(generation);
        block_hooks.on_pass_complete = [&] { transport.report_pass_complete(generation); };
    }
    BlockDelta delta = solve_block(shard, working, state.beta_m, options, cursor, stop, block_hooks);
    report.stopped_early = delta.stopped_early;
    report.coordinates_visited = delta.coordinates_visited;

    // (3) X delta = sum over blocks, then the batched scalars
    std::vector<double> xd = std::move(delta.local_margin_delta);
    transport.allreduce_sum(xd, Collective::vector_sum);

    PenaltyTable table;
    table.alphas = alpha_grid(config.delta, config.alpha_grid_size);
    std::vector<double> slots(slot_candidates + 2 * table.alphas.size());
    slots[slot_quad] = delta.quad_form;
    slots[slot_penalty] = penalty_value(penalty, state.beta_m);
    for (double v : delta.delta_beta) slots[slot_step_l1] += std::fabs(v);
    for (double v : state.beta_m) slots[slot_nnz] += v != 0.0 ? 1.0 : 0.0;
    for (std::size_t k = 0; k < table.alphas.size(); ++k) {
        local_candidate_terms(state.beta_m, delta.delta_beta, penalty, table.alphas[k],
                              slots[slot_candidates + 2 * k], slots[slot_candidates + 2 * k + 1]);
    }
    transport.allreduce_sum(slots, Collective::scalar_sum);

    const double quad_total = state.mu * slots[slot_quad];
    const double r0 = slots[slot_penalty];
    for (std::size_t k = 0; k < table.alphas.size(); ++k) {
        table.penalty.push_back(slots[slot_candidates + 2 * k]);
        table.nnz.push_back(slots[slot_candidates + 2 * k + 1]);
    }

    const double f0 = total_loss(loss, shard.labels, state.margins) + r0;
    report.f_before = f0;

    auto finish_without_step = [&] {
        report.zero_step = true;
        report.stats.alpha = 1.0;
        report.stats.objective = f0;
        report.stats.nnz = static_cast<std::size_t>(slots[slot_nnz]);
    };

    if (slots[slot_step_l1] == 0.0) {
        finish_without_step();
    } else {
        const std::size_t unit = table.find(1.0);
        const double D = directional_D(working, xd, table.penalty[unit] - r0, quad_total, config.gamma);
        report.directional = D;
        // Below this the predicted decrease is indistinguishable from rounding in f.
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::fabs(f0));
        if (D > -noise) {
            finish_without_step();
        } else {
            CandidateEvaluator evaluate = [&](std::span<const double> alphas, std::span<double> out) {
                std::vector<double> missing;
                for (double a : alphas) {
                    if (table.find(a) == table.alphas.size()) missing.push_back(a);
                }
                if (!missing.empty()) {
                    std::vector<double> extra(2 * missing.size());
                    for (std::size_t k = 0; k < missing.size(); ++k) {
                        local_candidate_terms(state.beta_m, delta.delta_beta, penalty, missing[k],
                                              extra[2 * k], extra[2 * k + 1]);
                    }
                    transport.allreduce_sum(extra, Collective::scalar_sum);
                    for (std::size_t k = 0; k < missing.size(); ++k) {
                        table.alphas.push_back(missing[k]);
                        table.penalty.push_back(extra[2 * k]);
                        table.nnz.push_back(extra[2 * k + 1]);
                    }
                }
                kernels::omp::shifted_loss_sums(config.loss, shard.labels, state.margins, xd, alphas, out);
                for (std::size_t k = 0; k < alphas.size(); ++k) out[k] += table.penalty[table.find(alphas[k])];
            };
            const LineSearchResult ls = line_search(f0, evaluate, D, config);

            // (5) apply the step with the same arithmetic the candidates used
            for (std::size_t j = 0; j < state.beta_m.size(); ++j) {
                state.beta_m[j] = state.beta_m[j] + ls.alpha * delta.delta_beta[j];
            }
            kernels::omp::axpy(ls.alpha, xd, state.margins);

            report.stats.alpha = ls.alpha;
            report.stats.objective = ls.objective;
            report.stats.nnz = static_cast<std::size_t>(table.nnz[table.find(ls.alpha)]);

            // (6) curvature multiplier for the next iteration
            if (config.mu_adaptive) state.mu = adapt_mu(state.mu, ls.alpha, config.eta1, config.eta2);
        }
    }

    state.iteration += 1;
    report.stats.reduce_bytes = transport.counters().payload_bytes() - payload_before;
    if (hooks.after_step) hooks.after_step(state, report);
    return report;
}

FitResult fit(const FeatureShard& shard, const SolverConfig& config, Transport& transport,
              const FitHooks& hooks)
{
    config.validate();
    shard.validate();
    if (shard.world_size != transport.world_size() || shard.node_id != transport.rank()) {
        throw std::invalid_argument("fit: shard node " + std::to_string(shard.node_id) + "/" +
                                    std::to_string(shard.world_size) + " does not match rank " +
                                    std::to_string(transport.rank()) + "/" +
                                    std::to_string(transport.world_size()));
    }
    const LossFunction loss(config.loss);
    validate_labels(loss, shard.labels);
    transport.set_kappa(config.kappa);

    const auto start = std::chrono::steady_clock::now();
    ModelState state = initial_state(shard, config);
    BlockCursor cursor;
    FitResult result;

    for (std::size_t k = 0; k < config.max_outer; ++k) {
        StepReport step = outer_step(state, shard, config, transport, cursor, hooks);
        step.stats.wall_time =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.history.push_back(step.stats);
        if (step.zero_step) {
            result.converged = true;
            break;
        }
        const double f_new = step.stats.objective;
        if (std::fabs(step.f_before - f_new) <= config.tol * (1.0 + std::fabs(f_new))) {
            result.converged = true;
            break;
        }
    }

    result.beta_m = std::move(state.beta_m);
    result.margins = std::move(state.margins);
    result.mu = state.mu;
    return result;
}

void write_history_csv(std::ostream& out, std::span<const IterationStats> history)
{
    out << "iteration,seconds,objective,alpha,mu,nnz,reduce_bytes\n";
    for (const auto& s : history) {
        out << s.iteration << ',' << format_double(s.wall_time) << ',' << format_double(s.objective)
            << ',' << format_double(s.alpha) << ',' << format_double(s.mu) << ',' << s.nnz << ','
            << s.reduce_bytes << '\n';
    }
}

} // namespace dglm
