#include "dglm/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "dglm/error.hpp"

namespace dglm {

namespace wire {

std::uint32_t read_u32_le(const std::uint8_t* p) noexcept
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void write_u32_le(std::uint8_t* p, std::uint32_t v) noexcept
{
    for (int k = 0; k < 4; ++k) p[k] = static_cast<std::uint8_t>(v >> (8 * k));
}

std::vector<std::uint8_t> encode_frame(std::uint32_t tag, std::span<const std::uint8_t> payload)
{
    std::vector<std::uint8_t> out(8 + payload.size());
    write_u32_le(out.data(), tag);
    write_u32_le(out.data() + 4, static_cast<std::uint32_t>(payload.size()));
    std::memcpy(out.data() + 8, payload.data(), payload.size());
    return out;
}

std::vector<std::uint8_t> encode_doubles(std::span<const double> values)
{
    std::vector<std::uint8_t> out(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (int k = 0; k < 8; ++k) out[i * 8 + k] = static_cast<std::uint8_t>(bits >> (8 * k));
    }
    return out;
}

std::vector<double> decode_doubles(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() % 8 != 0) throw TransportError("payload is not a whole number of doubles");
    std::vector<double> out(bytes.size() / 8);
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[i * 8 + k]) << (8 * k);
        out[i] = std::bit_cast<double>(bits);
    }
    return out;
}

} // namespace wire

namespace {

std::string errno_text(const char* what)
{
    return std::string(what) + ": " + std::strerror(errno);
}

bool write_all(int fd, const std::uint8_t* data, std::size_t size)
{
    while (size > 0) {
        const ssize_t k = ::send(fd, data, size, MSG_NOSIGNAL);
        if (k < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data += k;
        size -= static_cast<std::size_t>(k);
    }
    return true;
}

bool read_exact(int fd, std::uint8_t* data, std::size_t size)
{
    while (size > 0) {
        const ssize_t k = ::recv(fd, data, size, 0);
        if (k == 0) return false;
        if (k < 0) {
            if (errno == EINTR) continue;
            return false;
        }
        data += k;
        size -= static_cast<std::size_t>(k);
    }
    return true;
}

bool read_frame(int fd, wire::Frame& frame)
{
    std::uint8_t header[8];
    if (!read_exact(fd, header, 8)) return false;
    frame.tag = wire::read_u32_le(header);
    const std::uint32_t length = wire::read_u32_le(header + 4);
    frame.payload.resize(length);
    return length == 0 || read_exact(fd, frame.payload.data(), length);
}

void set_nodelay(int fd)
{
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

addrinfo* resolve(const Endpoint& ep, bool passive)
{
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (passive) hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    const std::string port = std::to_string(ep.port);
    const int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
    if (rc != 0) {
        throw TransportError("cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
    }
    return res;
}

} // namespace

Endpoint Endpoint::parse(const std::string& text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("endpoint must be host:port");
    Endpoint ep;
    ep.host = text.substr(0, colon);
    const int port = std::stoi(text.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

TcpListener::TcpListener(const Endpoint& endpoint)
{
    addrinfo* res = resolve(endpoint, true);
    fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd_ < 0) {
        ::freeaddrinfo(res);
        throw TransportError(errno_text("socket"));
    }
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd_, 64) != 0) {
        const std::string msg = errno_text("bind/listen");
        ::freeaddrinfo(res);
        ::close(fd_);
        throw TransportError(msg);
    }
    ::freeaddrinfo(res);
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener()
{
    if (fd_ >= 0) ::close(fd_);
}

TcpListener::TcpListener(TcpListener&& other) noexcept : fd_(other.fd_), port_(other.port_)
{
    other.fd_ = -1;
}

int TcpListener::release() noexcept
{
    const int fd = fd_;
    fd_ = -1;
    return fd;
}

TcpTransport::TcpTransport(int rank, int world_size, double kappa)
    : rank_(rank), world_size_(world_size), monitor_(world_size, kappa)
{
}

std::unique_ptr<TcpTransport> TcpTransport::serve(TcpListener listener, int world_size,
                                                  double kappa, std::chrono::milliseconds timeout)
{
    std::unique_ptr<TcpTransport> t(new TcpTransport(0, world_size, kappa));
    t->links_.resize(static_cast<std::size_t>(world_size));
    const int lfd = listener.release();
    const auto deadline = Clock::now() + timeout;
    int joined = 0;
    try {
        while (joined < world_size - 1) {
            const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
            if (left.count() <= 0) throw TransportError("timed out waiting for peers");
            pollfd pfd{lfd, POLLIN, 0};
            const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
            if (ready <= 0) continue;
            const int fd = ::accept(lfd, nullptr, nullptr);
            if (fd < 0) continue;
            set_nodelay(fd);
            wire::Frame hello;
            if (!read_frame(fd, hello) || !hello.is_control() || hello.payload.size() != 1 ||
                hello.payload[0] != static_cast<std::uint8_t>(wire::ControlKind::hello)) {
                ::close(fd);
                throw ProtocolError("peer did not open with a hello frame");
            }
            const auto peer = static_cast<int>(hello.tag & ~wire::control_bit);
            if (peer <= 0 || peer >= world_size || t->links_[static_cast<std::size_t>(peer)]) {
                ::close(fd);
                throw ProtocolError("hello from invalid or duplicate rank " + std::to_string(peer));
            }
            auto link = std::make_unique<Link>();
            link->fd = fd;
            link->peer_rank = peer;
            t->links_[static_cast<std::size_t>(peer)] = std::move(link);
            ++joined;
        }
    } catch (...) {
        ::close(lfd);
        throw;
    }
    ::close(lfd);
    t->start_readers();
    return t;
}

std::unique_ptr<TcpTransport> TcpTransport::connect(int rank, int world_size, const Endpoint& root,
                                                    double kappa, std::chrono::milliseconds timeout)
{
    if (rank <= 0 || rank >= world_size) throw std::invalid_argument("connect: rank must be in [1, M)");
    std::unique_ptr<TcpTransport> t(new TcpTransport(rank, world_size, kappa));
    const auto deadline = Clock::now() + timeout;
    int fd = -1;
    for (;;) {
        addrinfo* res = resolve(root, false);
        fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
        const bool ok = fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) == 0;
        ::freeaddrinfo(res);
        if (ok) break;
        if (fd >= 0) ::close(fd);
        if (Clock::now() > deadline) throw TransportError("timed out connecting to rank 0");
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    set_nodelay(fd);
    auto link = std::make_unique<Link>();
    link->fd = fd;
    link->peer_rank = 0;
    t->links_.push_back(std::move(link));
    t->send_control(*t->links_[0], wire::ControlKind::hello, static_cast<std::uint32_t>(rank));
    t->start_readers();
    return t;
}

TcpTransport::~TcpTransport()
{
    for (auto& link : links_) {
        if (link && link->fd >= 0) ::shutdown(link->fd, SHUT_RDWR);
    }
    for (auto& link : links_) {
        if (link && link->reader.joinable()) link->reader.join();
        if (link && link->fd >= 0) ::close(link->fd);
    }
}

void TcpTransport::start_readers()
{
    for (auto& link : links_) {
        if (link) link->reader = std::thread([this, l = link.get()] { reader_loop(*l); });
    }
}

void TcpTransport::reader_loop(Link& link)
{
    for (;;) {
        wire::Frame frame;
        if (!read_frame(link.fd, frame)) break;
        wire_received_ += 8 + frame.payload.size();
        if (frame.is_control()) {
            handle_control(link, frame);
            continue;
        }
        std::lock_guard lock(inbox_mutex_);
        link.inbox.push_back(std::move(frame));
        inbox_cv_.notify_all();
    }
    std::lock_guard lock(inbox_mutex_);
    link.closed = true;
    inbox_cv_.notify_all();
}

void TcpTransport::handle_control(Link& link, const wire::Frame& frame)
{
    if (frame.payload.size() != 1) return;
    const std::uint32_t arg = frame.tag & ~wire::control_bit;
    switch (static_cast<wire::ControlKind>(frame.payload[0])) {
    case wire::ControlKind::pass_complete:
        if (rank_ == 0 && monitor_.report_complete(link.peer_rank, arg)) broadcast_stop(arg);
        break;
    case wire::ControlKind::stop:
        monitor_.force_stop(arg);
        break;
    case wire::ControlKind::abort: {
        std::lock_guard lock(inbox_mutex_);
        aborted_ = true;
        abort_reason_ = "rank 0 aborted the collective (protocol mismatch)";
        inbox_cv_.notify_all();
        break;
    }
    case wire::ControlKind::hello:
        break;
    }
}

void TcpTransport::send_frame(Link& link, std::uint32_t tag, std::span<const std::uint8_t> payload)
{
    const auto bytes = wire::encode_frame(tag, payload);
    std::lock_guard lock(link.write_mutex);
    if (!write_all(link.fd, bytes.data(), bytes.size())) {
        throw TransportError("send to rank " + std::to_string(link.peer_rank) + " failed");
    }
    wire_sent_ += bytes.size();
}

void TcpTransport::send_control(Link& link, wire::ControlKind kind, std::uint32_t argument)
{
    const std::uint8_t byte = static_cast<std::uint8_t>(kind);
    send_frame(link, wire::control_bit | (argument & ~wire::control_bit), {&byte, 1});
}

wire::Frame TcpTransport::wait_frame(Link& link)
{
    std::unique_lock lock(inbox_mutex_);
    inbox_cv_.wait(lock, [&] { return !link.inbox.empty() || link.closed || aborted_; });
    if (!link.inbox.empty()) {
        wire::Frame f = std::move(link.inbox.front());
        link.inbox.pop_front();
        return f;
    }
    if (aborted_) throw ProtocolError(abort_reason_);
    throw TransportError("rank " + std::to_string(link.peer_rank) + " disconnected");
}

void TcpTransport::broadcast_stop(std::uint64_t iteration)
{
    for (auto& link : links_) {
        if (!link) continue;
        try {
            send_control(*link, wire::ControlKind::stop, static_cast<std::uint32_t>(iteration));
        } catch (const TransportError&) {
            // a dead child surfaces at the next collective
        }
    }
}

void TcpTransport::abort_world(const std::string& why)
{
    for (auto& link : links_) {
        if (!link) continue;
        try {
            send_control(*link, wire::ControlKind::abort, 0);
        } catch (const TransportError&) {
        }
    }
    throw ProtocolError(why);
}

void TcpTransport::sync_wire_counters() noexcept
{
    counters_.wire_bytes_sent = wire_sent_.load();
    counters_.wire_bytes_received = wire_received_.load();
}

void TcpTransport::allreduce_sum(std::span<double> data, Collective kind)
{
    const std::uint32_t tag = collective_tag(kind, sequence_++);
    if (world_size_ == 1) {
        count(kind, data.size());
        return;
    }
    if (rank_ == 0) {
        std::vector<double> acc(data.begin(), data.end());
        for (int r = 1; r < world_size_; ++r) {
            Link& link = *links_[static_cast<std::size_t>(r)];
            const wire::Frame frame = wait_frame(link);
            if (frame.tag != tag || frame.payload.size() != data.size() * 8) {
                std::ostringstream msg;
                msg << "collective mismatch: rank 0 expected tag 0x" << std::hex << tag << std::dec
                    << " len " << data.size() * 8 << ", rank " << r << " sent tag 0x" << std::hex
                    << frame.tag << std::dec << " len " << frame.payload.size();
                abort_world(msg.str());
            }
            const std::vector<double> part = wire::decode_doubles(frame.payload);
            for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += part[i];
        }
        const auto encoded = wire::encode_doubles(acc);
        for (int r = 1; r < world_size_; ++r) send_frame(*links_[static_cast<std::size_t>(r)], tag, encoded);
        std::copy(acc.begin(), acc.end(), data.begin());
    } else {
        Link& root = *links_[0];
        send_frame(root, tag, wire::encode_doubles(data));
        const wire::Frame frame = wait_frame(root);
        if (frame.tag != tag || frame.payload.size() != data.size() * 8) {
            throw ProtocolError("collective mismatch: result frame does not match the call");
        }
        const std::vector<double> sum = wire::decode_doubles(frame.payload);
        std::copy(sum.begin(), sum.end(), data.begin());
    }
    count(kind, data.size());
    sync_wire_counters();
}

void TcpTransport::report_pass_complete(std::uint64_t iteration)
{
    if (rank_ == 0) {
        if (monitor_.report_complete(0, iteration)) broadcast_stop(iteration);
    } else {
        send_control(*links_[0], wire::ControlKind::pass_complete, static_cast<std::uint32_t>(iteration));
    }
    sync_wire_counters();
}

void TcpTransport::send_raw_for_testing(std::uint32_t tag, std::span<const double> payload)
{
    const auto bytes = wire::encode_doubles(payload);
    send_frame(*links_[rank_ == 0 ? 1 : 0], tag, bytes);
}

std::unique_ptr<TcpTransport> make_tcp_transport(int rank, int world_size, const Endpoint& root,
                                                 double kappa)
{
    if (world_size < 1) throw std::invalid_argument("world size must be >= 1");
    if (rank == 0) return TcpTransport::serve(TcpListener(root), world_size, kappa);
    return TcpTransport::connect(rank, world_size, root, kappa);
}

} // namespace dglm
