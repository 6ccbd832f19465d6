#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "dglm/loss.hpp"
#include "dglm/shard.hpp"

namespace dglm {

enum class SolveMode { bsp, alb };

/// Wait-free view of "stop the block pass for iteration `generation`".
/// Fires once the shared counter has moved past the generation.
class StopSignal {
public:
    StopSignal() = default;
    StopSignal(const std::atomic<std::uint64_t>& fired_through, std::uint64_t generation)
        : fired_through_(&fired_through), generation_(generation) {}

    bool fired() const noexcept
    {
        return fired_through_ != nullptr &&
               fired_through_->load(std::memory_order_acquire) > generation_;
    }

private:
    const std::atomic<std::uint64_t>* fired_through_ = nullptr;
    std::uint64_t generation_ = 0;
};

/// Position in the shard's fixed cyclic feature order; survives across
/// outer iterations so an interrupted pass resumes where it stopped.
struct BlockCursor {
    std::size_t next_index = 0;
    std::size_t passes_completed_this_iteration = 0;
};

struct BlockDelta {
    std::vector<double> delta_beta;          // indexed like shard.columns
    std::vector<double> local_margin_delta;  // X^m * delta_beta, length n
    double quad_form = 0.0;                  // sum w d^2 + nu |delta_beta|^2, before the mu factor
    std::size_t coordinates_visited = 0;
    bool stopped_early = false;              // stop fired before a full pass
};

struct BlockSolveOptions {
    double mu = 1.0;
    double nu = 1e-6;
    ElasticNetPenalty penalty;
    SolveMode mode = SolveMode::bsp;
};

struct BlockHooks {
    /// Called once, the first time a full pass over the shard completes.
    std::function<void()> on_pass_complete;
    /// Called before each coordinate update with the local feature index.
    std::function<void(std::size_t)> before_coordinate;
};

/// sgn(x) * max(|x| - a, 0)
inline double soft_threshold(double x, double a) noexcept
{
    if (x > a) return x - a;
    if (x < -a) return x + a;
    return 0.0;
}

/// Exact minimizer of the one-dimensional restriction of
///   g'd + (mu/2) (d'Wd + nu |delta|^2) + R(beta + delta)
/// in coordinate j, returned as the new total delta for that coordinate.
/// `margin_delta` is the block's current X^m * delta including this coordinate.
double coordinate_delta(const SparseColumn& column, const WorkingSet& working,
                        std::span<const double> margin_delta, double beta_j,
                        double delta_beta_j, double mu, double nu,
                        const ElasticNetPenalty& penalty) noexcept;

/// One cyclic coordinate-descent pass (BSP) or an open-ended run of passes
/// cut by `stop` (ALB) over the shard's features, starting at the cursor.
BlockDelta solve_block(const FeatureShard& shard, const WorkingSet& working,
                       std::span<const double> beta_m, const BlockSolveOptions& options,
                       BlockCursor& cursor, const StopSignal& stop,
                       const BlockHooks& hooks = {});

/// mu * (sum_i w_i d_i^2 + nu |delta_beta|^2)
inline double block_quadratic_form(const BlockDelta& delta, double mu) noexcept
{
    return mu * delta.quad_form;
}

double block_quadratic_form(std::span<const double> delta_beta,
                            std::span<const double> margin_delta,
                            std::span<const double> w, double mu, double nu);

} // namespace dglm
