#include "dglm/progress.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dglm {

std::size_t ProgressMonitor::threshold_for(int world_size, double kappa)
{
    if (world_size < 1) throw std::invalid_argument("world size must be positive");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must be in (0, 1]");
    // Slack keeps products like 0.7 * 10 from rounding up past the integer.
    const double raw = std::ceil(kappa * world_size - 1e-9);
    return std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1,
                                   static_cast<std::size_t>(world_size));
}

ProgressMonitor::ProgressMonitor(int world_size, double kappa)
    : world_size_(world_size),
      threshold_(threshold_for(world_size, kappa)),
      flags_(static_cast<std::size_t>(world_size), false)
{
}

void ProgressMonitor::set_kappa(double kappa)
{
    threshold_.store(threshold_for(world_size_, kappa), std::memory_order_relaxed);
}

bool ProgressMonitor::report_complete(int rank, std::uint64_t iteration)
{
    if (rank < 0 || rank >= world_size_) throw std::out_of_range("report_complete: bad rank");
    std::lock_guard lock(mutex_);
    if (iteration < current_iteration_) return false;  // stale
    if (iteration > current_iteration_) {
        current_iteration_ = iteration;
        std::fill(flags_.begin(), flags_.end(), false);
        count_ = 0;
    }
    if (flags_[static_cast<std::size_t>(rank)]) return false;
    flags_[static_cast<std::size_t>(rank)] = true;
    ++count_;
    if (count_ >= threshold() && !should_stop(iteration)) {
        fired_through_.store(iteration + 1, std::memory_order_release);
        return true;
    }
    return false;
}

void ProgressMonitor::force_stop(std::uint64_t iteration) noexcept
{
    std::uint64_t cur = fired_through_.load(std::memory_order_relaxed);
    while (cur < iteration + 1 &&
           !fired_through_.compare_exchange_weak(cur, iteration + 1, std::memory_order_release)) {
    }
}

std::size_t ProgressMonitor::completed(std::uint64_t iteration) const
{
    std::lock_guard lock(mutex_);
    return iteration == current_iteration_ ? count_ : 0;
}

} // namespace dglm
