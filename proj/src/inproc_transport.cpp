#include "dglm/inproc_transport.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "dglm/error.hpp"

namespace dglm {

InProcessWorld::InProcessWorld(int world_size, double kappa)
    : world_size_(world_size),
      progress_(world_size, kappa),
      contributions_(static_cast<std::size_t>(world_size)),
      tags_(static_cast<std::size_t>(world_size), 0)
{
}

void InProcessWorld::allreduce_sum(int rank, std::uint32_t tag, std::span<double> data)
{
    std::unique_lock lock(mutex_);
    if (departed_ >= 0) {
        throw TransportError("collective aborted: rank " + std::to_string(departed_) +
                             " left the world");
    }
    const auto r = static_cast<std::size_t>(rank);
    contributions_[r].assign(data.begin(), data.end());
    tags_[r] = tag;
    const std::uint64_t my_generation = generation_;

    if (++arrived_ == world_size_) {
        round_failed_ = false;
        for (std::size_t k = 1; k < tags_.size(); ++k) {
            if (tags_[k] != tags_[0] || contributions_[k].size() != contributions_[0].size()) {
                std::ostringstream msg;
                msg << "collective mismatch: rank 0 entered tag 0x" << std::hex << tags_[0]
                    << std::dec << " len " << contributions_[0].size() << ", rank " << k
                    << " entered tag 0x" << std::hex << tags_[k] << std::dec << " len "
                    << contributions_[k].size();
                round_failed_ = true;
                failure_ = msg.str();
                break;
            }
        }
        if (!round_failed_) {
            result_ = contributions_[0];
            for (std::size_t k = 1; k < contributions_.size(); ++k) {
                const auto& c = contributions_[k];
                for (std::size_t i = 0; i < result_.size(); ++i) result_[i] += c[i];
            }
        }
        arrived_ = 0;
        ++generation_;
        cv_.notify_all();
    } else {
        cv_.wait(lock, [&] { return generation_ != my_generation || departed_ >= 0; });
        if (generation_ == my_generation) {
            throw TransportError("collective aborted: rank " + std::to_string(departed_) +
                                 " left the world");
        }
    }
    if (round_failed_) throw ProtocolError(failure_);
    std::copy(result_.begin(), result_.end(), data.begin());
}

void InProcessWorld::depart(int rank)
{
    std::lock_guard lock(mutex_);
    if (departed_ < 0) departed_ = rank;
    cv_.notify_all();
}

InProcessTransport::InProcessTransport(std::shared_ptr<InProcessWorld> world, int rank)
    : world_(std::move(world)), rank_(rank)
{
    if (rank_ < 0 || rank_ >= world_->world_size()) {
        throw std::invalid_argument("in-process transport: rank out of range");
    }
}

InProcessTransport::~InProcessTransport() { depart(); }

void InProcessTransport::allreduce_sum(std::span<double> data, Collective kind)
{
    const std::uint32_t tag = collective_tag(kind, sequence_++);
    world_->allreduce_sum(rank_, tag, data);
    count(kind, data.size());
}

void InProcessTransport::report_pass_complete(std::uint64_t iteration)
{
    world_->progress().report_complete(rank_, iteration);
}

StopSignal InProcessTransport::stop_signal(std::uint64_t iteration) const
{
    return world_->progress().signal(iteration);
}

void InProcessTransport::depart()
{
    if (!departed_) {
        departed_ = true;
        world_->depart(rank_);
    }
}

} // namespace dglm
