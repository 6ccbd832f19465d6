#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <vector>

#include "dglm/block_solver.hpp"

namespace dglm {

/// Counts workers that finished a full pass over their block in the current
/// iteration and fires the stop signal once ceil(kappa * M) have.
///
/// State is keyed by iteration number, so no explicit reset is needed: the
/// first report for a newer iteration discards the previous flags.
class ProgressMonitor {
public:
    ProgressMonitor(int world_size, double kappa);

    static std::size_t threshold_for(int world_size, double kappa);

    int world_size() const noexcept { return world_size_; }
    std::size_t threshold() const noexcept { return threshold_.load(std::memory_order_relaxed); }
    void set_kappa(double kappa);

    /// Idempotent per (rank, iteration). Returns true if this call fired the stop.
    bool report_complete(int rank, std::uint64_t iteration);

    bool should_stop(std::uint64_t iteration) const noexcept
    {
        return fired_through_.load(std::memory_order_acquire) > iteration;
    }

    StopSignal signal(std::uint64_t iteration) const noexcept
    {
        return StopSignal(fired_through_, iteration);
    }

    /// Marks the iteration stopped without counting (used by wire followers).
    void force_stop(std::uint64_t iteration) noexcept;

    std::size_t completed(std::uint64_t iteration) const;

private:
    int world_size_;
    std::atomic<std::size_t> threshold_;
    std::atomic<std::uint64_t> fired_through_{0};
    mutable std::mutex mutex_;
    std::uint64_t current_iteration_ = 0;
    std::vector<bool> flags_;
    std::size_t count_ = 0;
};

inline bool alb_should_stop(const ProgressMonitor& monitor, std::uint64_t iteration)
{
    return monitor.should_stop(iteration);
}

inline void alb_report_complete(ProgressMonitor& monitor, int rank, std::uint64_t iteration)
{
    monitor.report_complete(rank, iteration);
}

} // namespace dglm
