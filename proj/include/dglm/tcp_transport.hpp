#pragma once

// Wire transport: M processes (or threads) connected to rank 0 over TCP.
//
// Frame layout, all little-endian:
//   [u32 tag][u32 payload length in bytes][payload]
// Data frames carry IEEE-754 doubles and a tag of collective_tag(kind, seq)
// (bit 31 clear). Control frames set bit 31 of the tag, carry one payload
// byte naming the message, and reuse the low 31 tag bits as an argument
// (sender rank for hello, iteration number for pass/stop).
//
// Rank 0 is the root of a depth-one reduction tree: it adds child
// contributions in rank order and sends the sum back. It is also the ALB
// coordinator that counts pass completions and broadcasts stop messages.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "dglm/progress.hpp"
#include "dglm/transport.hpp"

namespace dglm {

namespace wire {

inline constexpr std::uint32_t control_bit = 0x80000000u;

enum class ControlKind : std::uint8_t { hello = 1, pass_complete = 2, stop = 3, abort = 4 };

struct Frame {
    std::uint32_t tag = 0;
    std::vector<std::uint8_t> payload;

    bool is_control() const noexcept { return (tag & control_bit) != 0; }
};

std::vector<std::uint8_t> encode_frame(std::uint32_t tag, std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode_doubles(std::span<const double> values);
std::vector<double> decode_doubles(std::span<const std::uint8_t> bytes);
std::uint32_t read_u32_le(const std::uint8_t* p) noexcept;
void write_u32_le(std::uint8_t* p, std::uint32_t v) noexcept;

} // namespace wire

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    /// "host:port"
    static Endpoint parse(const std::string& text);
};

/// Bound, listening socket for rank 0. Port 0 picks an ephemeral port.
class TcpListener {
public:
    explicit TcpListener(const Endpoint& endpoint);
    ~TcpListener();
    TcpListener(TcpListener&& other) noexcept;
    TcpListener& operator=(TcpListener&&) = delete;
    TcpListener(const TcpListener&) = delete;

    std::uint16_t port() const noexcept { return port_; }
    int release() noexcept;

private:
    int fd_ = -1;
    std::uint16_t port_ = 0;
};

class TcpTransport final : public Transport {
public:
    using Clock = std::chrono::steady_clock;

    /// Rank 0: accept world_size - 1 peers on the listener.
    static std::unique_ptr<TcpTransport> serve(TcpListener listener, int world_size, double kappa,
                                               std::chrono::milliseconds timeout = std::chrono::seconds(60));
    /// Rank > 0: connect to rank 0, retrying until the timeout.
    static std::unique_ptr<TcpTransport> connect(int rank, int world_size, const Endpoint& root,
                                                 double kappa,
                                                 std::chrono::milliseconds timeout = std::chrono::seconds(60));

    ~TcpTransport() override;

    int rank() const noexcept override { return rank_; }
    int world_size() const noexcept override { return world_size_; }

    void allreduce_sum(std::span<double> data, Collective kind) override;

    void set_kappa(double kappa) override { monitor_.set_kappa(kappa); }
    void report_pass_complete(std::uint64_t iteration) override;
    StopSignal stop_signal(std::uint64_t iteration) const override
    {
        return monitor_.signal(iteration);
    }

    /// Sends a raw data frame outside the collective protocol (fault injection in tests).
    void send_raw_for_testing(std::uint32_t tag, std::span<const double> payload);

private:
    struct Link {
        int fd = -1;
        int peer_rank = -1;
        std::mutex write_mutex;
        std::deque<wire::Frame> inbox;
        bool closed = false;
        std::thread reader;
    };

    TcpTransport(int rank, int world_size, double kappa);

    void start_readers();
    void reader_loop(Link& link);
    void handle_control(Link& link, const wire::Frame& frame);
    void send_frame(Link& link, std::uint32_t tag, std::span<const std::uint8_t> payload);
    void send_control(Link& link, wire::ControlKind kind, std::uint32_t argument);
    wire::Frame wait_frame(Link& link);
    void broadcast_stop(std::uint64_t iteration);
    void abort_world(const std::string& why);

    int rank_;
    int world_size_;
    ProgressMonitor monitor_;
    std::uint64_t sequence_ = 0;

    // Rank 0 holds one link per child (index = child rank); others hold one link to the root.
    std::vector<std::unique_ptr<Link>> links_;

    std::mutex inbox_mutex_;
    std::condition_variable inbox_cv_;
    bool aborted_ = false;
    std::string abort_reason_;

    // Written from reader threads too; folded into counters_ on the caller's thread.
    std::atomic<std::uint64_t> wire_sent_{0};
    std::atomic<std::uint64_t> wire_received_{0};
    void sync_wire_counters() noexcept;
};

/// Convenience: rank 0 listens on `root`, others connect to it.
std::unique_ptr<TcpTransport> make_tcp_transport(int rank, int world_size, const Endpoint& root,
                                                 double kappa);

} // namespace dglm
