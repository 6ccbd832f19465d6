#pragma once

#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

#include "dglm/progress.hpp"
#include "dglm/transport.hpp"

namespace dglm {

/// Shared state for M workers running as threads in one process.
///
/// Collectives are generation barriers: each rank deposits its contribution,
/// the last to arrive checks that every rank used the same tag and length,
/// sums in rank order, and releases the others. A rank that leaves the world
/// (normally or by exception) aborts every pending and future collective.
class InProcessWorld {
public:
    InProcessWorld(int world_size, double kappa = 0.75);

    int world_size() const noexcept { return world_size_; }
    ProgressMonitor& progress() noexcept { return progress_; }

    void allreduce_sum(int rank, std::uint32_t tag, std::span<double> data);
    void depart(int rank);

private:
    int world_size_;
    ProgressMonitor progress_;

    std::mutex mutex_;
    std::condition_variable cv_;
    std::uint64_t generation_ = 0;
    int arrived_ = 0;
    int departed_ = -1;  // first rank that left, or -1
    std::vector<std::vector<double>> contributions_;
    std::vector<std::uint32_t> tags_;
    std::vector<double> result_;
    bool round_failed_ = false;
    std::string failure_;
};

class InProcessTransport final : public Transport {
public:
    InProcessTransport(std::shared_ptr<InProcessWorld> world, int rank);
    ~InProcessTransport() override;

    InProcessTransport(const InProcessTransport&) = delete;
    InProcessTransport& operator=(const InProcessTransport&) = delete;

    int rank() const noexcept override { return rank_; }
    int world_size() const noexcept override { return world_->world_size(); }

    void allreduce_sum(std::span<double> data, Collective kind) override;

    void set_kappa(double kappa) override { world_->progress().set_kappa(kappa); }
    void report_pass_complete(std::uint64_t iteration) override;
    StopSignal stop_signal(std::uint64_t iteration) const override;

    /// Leave the world; pending collectives on other ranks fail instead of hanging.
    void depart();

private:
    std::shared_ptr<InProcessWorld> world_;
    int rank_;
    std::uint64_t sequence_ = 0;
    bool departed_ = false;
};

} // namespace dglm
