#pragma once

// Shared generators and runners for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dglm/driver.hpp"
#include "dglm/libsvm.hpp"
#include "dglm/partition.hpp"
#include "dglm/reference.hpp"
#include "dglm/spmd.hpp"

namespace dglm::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    bool coin(double p) { return std::bernoulli_distribution(p)(engine_); }
    std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
    std::uint64_t bits() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// Random design with a planted model. Labels for the binary losses are
/// flipped with probability `flip` so the unpenalized optimum stays finite.
inline Dataset random_dataset(Rng& rng, std::size_t n, std::size_t p, LossKind loss,
                              double density = 1.0, double flip = 0.2)
{
    std::vector<double> x(n * p, 0.0), truth(p), y(n);
    for (auto& t : truth) t = rng.coin(0.5) ? rng.normal() : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (rng.coin(density)) {
                x[i * p + j] = rng.normal();
                m += x[i * p + j] * truth[j];
            }
        }
        if (loss == LossKind::squared) {
            y[i] = m + 0.5 * rng.normal();
        } else {
            y[i] = m >= 0.0 ? 1.0 : -1.0;
            if (rng.coin(flip)) y[i] = -y[i];
        }
    }
    return dataset_from_dense(n, p, x, y);
}

struct Snapshot {
    std::uint64_t iteration;
    std::vector<double> beta_m;
    std::vector<double> margins;
};

struct FitRun {
    std::vector<double> beta;             // global, by feature id
    std::vector<double> margins;          // rank 0's replicated X beta
    std::vector<IterationStats> history;  // rank 0
    std::vector<StepReport> steps;        // rank 0
    std::vector<std::vector<StepReport>> rank_steps;
    std::vector<std::vector<Snapshot>> snapshots;  // per rank, when requested
    std::vector<FeatureShard> shards;
    std::vector<TransportCounters> counters;
    bool converged = false;
    double mu = 1.0;
};

/// Fits `data` on M in-process workers. `before_coordinate(rank, index)` is
/// forwarded to every rank's block solver.
template <class BeforeCoordinate = std::nullptr_t>
FitRun run_fit(const Dataset& data, int M, const SolverConfig& config, std::uint64_t seed = 11,
               bool keep_snapshots = false, BeforeCoordinate before = nullptr)
{
    FitRun run;
    run.shards = build_shards(data, partition_features(M, seed));
    run.snapshots.resize(static_cast<std::size_t>(M));
    run.rank_steps.resize(static_cast<std::size_t>(M));

    struct Out {
        std::vector<double> beta;
        FitResult result;
        TransportCounters counters;
    };
    auto outs = spawn_spmd(
        M,
        [&](Transport& t) {
            const int rank = t.rank();
            const FeatureShard& shard = run.shards[static_cast<std::size_t>(rank)];
            FitHooks hooks;
            hooks.after_step = [&](const ModelState& s, const StepReport& r) {
                run.rank_steps[static_cast<std::size_t>(rank)].push_back(r);
                if (keep_snapshots) {
                    run.snapshots[static_cast<std::size_t>(rank)].push_back({s.iteration, s.beta_m, s.margins});
                }
            };
            if constexpr (!std::is_same_v<BeforeCoordinate, std::nullptr_t>) {
                hooks.before_coordinate = [&, rank](std::size_t k) { before(rank, k); };
            }
            FitResult r = fit(shard, config, t, hooks);
            const TransportCounters counters = t.counters();
            std::vector<double> w(shard.p, 0.0);
            for (std::size_t k = 0; k < shard.columns.size(); ++k) w[shard.columns[k].feature_id] = r.beta_m[k];
            t.allreduce_sum(w, Collective::gather_sum);
            return Out{std::move(w), std::move(r), counters};
        },
        config.kappa);
    run.beta = outs[0].beta;
    run.steps = run.rank_steps[0];
    run.history = outs[0].result.history;
    run.margins = outs[0].result.margins;
    run.converged = outs[0].result.converged;
    run.mu = outs[0].result.mu;
    for (auto& o : outs) run.counters.push_back(o.counters);
    return run;
}

/// Every step that moved must not increase f beyond rounding.
inline bool monotone(const std::vector<StepReport>& steps)
{
    for (const auto& s : steps) {
        if (s.zero_step) continue;
        if (!(s.stats.objective <= s.f_before + 1e-12 * (1.0 + std::fabs(s.f_before)))) return false;
    }
    return true;
}

inline double rel_diff(double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); }

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

/// The identity-design lasso: X = I3, y = (3, 0.5, -2); with lambda1 = 1 the optimum is (2, 0, -1).
inline Dataset identity_lasso()
{
    return dataset_from_dense(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, {3.0, 0.5, -2.0});
}

} // namespace dglm::testing
