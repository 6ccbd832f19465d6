#pragma once

#include <exception>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "dglm/inproc_transport.hpp"

namespace dglm {

/// A worker body failed; carries the failing rank and the original exception.
class SpmdError : public std::runtime_error {
public:
    SpmdError(int rank, std::exception_ptr cause, const std::string& what)
        : std::runtime_error("rank " + std::to_string(rank) + ": " + what),
          rank_(rank),
          cause_(std::move(cause)) {}

    int rank() const noexcept { return rank_; }
    const std::exception_ptr& cause() const noexcept { return cause_; }
    [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

private:
    int rank_;
    std::exception_ptr cause_;
};

/// Runs `body(transport)` on M threads sharing one in-process world and
/// returns the per-rank results in rank order. The first failure (in time)
/// is rethrown as SpmdError after every worker has joined.
template <class Body>
auto spawn_spmd(int world_size, Body&& body, double kappa = 0.75)
    -> std::vector<std::invoke_result_t<Body&, Transport&>>
{
    using Result = std::invoke_result_t<Body&, Transport&>;
    if (world_size < 1) throw std::invalid_argument("spawn_spmd: world size must be >= 1");

    auto world = std::make_shared<InProcessWorld>(world_size, kappa);
    std::vector<std::optional<Result>> results(static_cast<std::size_t>(world_size));
    std::mutex error_mutex;
    std::optional<SpmdError> first_error;

    auto run = [&](int rank) {
        InProcessTransport transport(world, rank);
        try {
            results[static_cast<std::size_t>(rank)].emplace(body(static_cast<Transport&>(transport)));
        } catch (const std::exception& e) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error.emplace(rank, std::current_exception(), e.what());
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error.emplace(rank, std::current_exception(), "unknown error");
        }
        transport.depart();
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(world_size));
    for (int r = 0; r < world_size; ++r) threads.emplace_back(run, r);
    for (auto& t : threads) t.join();

    if (first_error) throw *first_error;
    std::vector<Result> out;
    out.reserve(results.size());
    for (auto& r : results) out.push_back(std::move(*r));
    return out;
}

} // namespace dglm
