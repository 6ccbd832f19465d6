#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "dglm/block_solver.hpp"

namespace dglm {

/// Shape tag carried by every collective; ranks must agree on it call by call.
enum class Collective : std::uint8_t {
    vector_sum = 1,  // the length-n margin delta
    scalar_sum = 2,  // batched scalar slots
    gather_sum = 3,  // anything else (weights gather, tests)
};

struct TransportCounters {
    std::uint64_t vector_reduces = 0;
    std::uint64_t scalar_reduces = 0;
    std::uint64_t other_reduces = 0;
    std::uint64_t vector_payload_bytes = 0;  // bytes this rank contributed
    std::uint64_t scalar_payload_bytes = 0;
    std::uint64_t other_payload_bytes = 0;
    std::uint64_t wire_bytes_sent = 0;       // zero for in-process transports
    std::uint64_t wire_bytes_received = 0;

    std::uint64_t payload_bytes() const noexcept
    {
        return vector_payload_bytes + scalar_payload_bytes + other_payload_bytes;
    }
};

/// Per-rank handle onto the SPMD world: ordered blocking collectives plus the
/// asynchronous pass-completion channel used by ALB.
///
/// allreduce_sum results are bitwise identical on every rank: contributions are
/// always added in rank order 0, 1, ..., M-1.
class Transport {
public:
    virtual ~Transport() = default;

    virtual int rank() const noexcept = 0;
    virtual int world_size() const noexcept = 0;

    /// Replaces `data` with the elementwise sum over all ranks.
    virtual void allreduce_sum(std::span<double> data, Collective kind) = 0;

    virtual void set_kappa(double kappa) = 0;
    virtual void report_pass_complete(std::uint64_t iteration) = 0;
    virtual StopSignal stop_signal(std::uint64_t iteration) const = 0;

    const TransportCounters& counters() const noexcept { return counters_; }

protected:
    void count(Collective kind, std::size_t doubles) noexcept;

    TransportCounters counters_;
};

/// Collective sequence tag layout shared by both transports.
inline std::uint32_t collective_tag(Collective kind, std::uint64_t sequence) noexcept
{
    return (static_cast<std::uint32_t>(kind) << 24) |
           static_cast<std::uint32_t>(sequence & 0xFFFFFFu);
}

inline std::span<double> as_span(double& x) noexcept { return {&x, 1}; }

} // namespace dglm
