#include "dglm/block_solver.hpp"

#include "dglm/kernels.hpp"

namespace dglm {

double coordinate_delta(const SparseColumn& column, const WorkingSet& working,
                        std::span<const double> margin_delta, double beta_j,
                        double delta_beta_j, double mu, double nu,
                        const ElasticNetPenalty& penalty) noexcept
{
    const double current = beta_j + delta_beta_j;
    double grad_part = 0.0;  // sum x (-g - mu w d)
    double curvature = 0.0;  // sum w x^2
    for (std::size_t e = 0; e < column.rows.size(); ++e) {
        const std::size_t i = column.rows[e];
        const double x = column.values[e];
        const double wx = working.w[i] * x;
        grad_part += x * (-working.g[i]) - mu * wx * margin_delta[i];
        curvature += wx * x;
    }
    const double num = grad_part + mu * curvature * current + mu * nu * beta_j;
    const double den = mu * (curvature + nu) + penalty.lambda2;
    return soft_threshold(num, penalty.lambda1) / den - beta_j;
}

double block_quadratic_form(std::span<const double> delta_beta,
                            std::span<const double> margin_delta,
                            std::span<const double> w, double mu, double nu)
{
    double sq = 0.0;
    for (double v : delta_beta) sq += v * v;
    return mu * (kernels::omp::weighted_sq_sum(w, margin_delta) + nu * sq);
}

BlockDelta solve_block(const FeatureShard& shard, const WorkingSet& working,
                       std::span<const double> beta_m, const BlockSolveOptions& options,
                       BlockCursor& cursor, const StopSignal& stop, const BlockHooks& hooks)
{
    const std::size_t features = shard.columns.size();
    BlockDelta out;
    out.delta_beta.assign(features, 0.0);
    out.local_margin_delta.assign(shard.n, 0.0);
    cursor.passes_completed_this_iteration = 0;

    auto pass_done = [&] {
        ++cursor.passes_completed_this_iteration;
        if (cursor.passes_completed_this_iteration == 1 && hooks.on_pass_complete) {
            hooks.on_pass_complete();
        }
    };

    if (features == 0) {
        pass_done();
    } else {
        if (cursor.next_index >= features) cursor.next_index = 0;
        std::size_t in_pass = 0;
        for (;;) {
            if (stop.fired()) {
                out.stopped_early = cursor.passes_completed_this_iteration == 0;
                break;
            }
            const std::size_t k = cursor.next_index;
            if (hooks.before_coordinate) hooks.before_coordinate(k);

            const SparseColumn& col = shard.columns[k];
            const double updated =
                coordinate_delta(col, working, out.local_margin_delta, beta_m[k],
                                 out.delta_beta[k], options.mu, options.nu, options.penalty);
            const double step = updated - out.delta_beta[k];
            if (step != 0.0) {
                for (std::size_t e = 0; e < col.rows.size(); ++e) {
                    out.local_margin_delta[col.rows[e]] += step * col.values[e];
                }
            }
            out.delta_beta[k] = updated;
            ++out.coordinates_visited;

            cursor.next_index = (k + 1 == features) ? 0 : k + 1;
            if (++in_pass == features) {
                in_pass = 0;
                pass_done();
                if (options.mode == SolveMode::bsp) break;
            }
        }
    }

    double sq = 0.0;
    for (double v : out.delta_beta) sq += v * v;
    out.quad_form = kernels::omp::weighted_sq_sum(working.w, out.local_margin_delta) +
                    options.nu * sq;
    return out;
}

} // namespace dglm
