#include <doctest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "dglm/block_solver.hpp"
#include "support.hpp"

using namespace dglm;

namespace {

SparseColumn column(std::size_t id, std::vector<std::uint32_t> rows, std::vector<double> values)
{
    return SparseColumn{id, std::move(rows), std::move(values)};
}

FeatureShard shard_of(std::size_t n, std::vector<SparseColumn> cols, std::size_t p = 0)
{
    FeatureShard s;
    s.n = n;
    s.p = p ? p : cols.size();
    s.columns = std::move(cols);
    s.labels.assign(n, 1.0);
    return s;
}

// Random shard with a dense copy of its block.
struct RandomBlock {
    FeatureShard shard;
    std::vector<std::vector<double>> dense;  // dense[k][i]
    WorkingSet working;
    std::vector<double> beta;
};

RandomBlock random_block(testing::Rng& rng, std::size_t n, std::size_t features, double density)
{
    RandomBlock b;
    std::vector<SparseColumn> cols;
    b.dense.assign(features, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < features; ++k) {
        SparseColumn c{k, {}, {}};
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.coin(density)) {
                const double v = rng.normal();
                c.rows.push_back(static_cast<std::uint32_t>(i));
                c.values.push_back(v);
                b.dense[k][i] = v;
            }
        }
        cols.push_back(std::move(c));
    }
    b.shard = shard_of(n, std::move(cols));
    for (std::size_t i = 0; i < n; ++i) {
        b.working.g.push_back(rng.normal());
        b.working.w.push_back(rng.uniform(0.0, 1.0));
    }
    for (std::size_t k = 0; k < features; ++k) b.beta.push_back(rng.coin(0.5) ? rng.normal() : 0.0);
    return b;
}

std::vector<double> dense_product(const RandomBlock& b, const std::vector<double>& delta)
{
    std::vector<double> d(b.shard.n, 0.0);
    for (std::size_t k = 0; k < delta.size(); ++k)
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += b.dense[k][i] * delta[k];
    return d;
}

} // namespace

TEST_CASE("soft_threshold")
{
    CHECK(soft_threshold(3, 1) == 2);
    CHECK(soft_threshold(-0.5, 1) == 0);
    CHECK(soft_threshold(-2.5, 0) == -2.5);
    CHECK(soft_threshold(-3, 1) == -2);
    CHECK(soft_threshold(1, 1) == 0);
}

TEST_CASE("coordinate_delta worked values")
{
    const SparseColumn c = column(0, {0}, {1.0});
    const WorkingSet ws{{-2.0}, {1.0}};
    const std::vector<double> d{0.0};
    CHECK(coordinate_delta(c, ws, d, 0.0, 0.0, 1.0, 0.1, {0, 0}) == doctest::Approx(2.0 / 1.1).epsilon(1e-15));
    CHECK(std::fabs(coordinate_delta(c, ws, d, 0.0, 0.0, 1.0, 0.1, {0, 0}) - 1.818182) < 1e-6);
    CHECK(std::fabs(coordinate_delta(c, ws, d, 0.0, 0.0, 1.0, 0.1, {1, 0}) - 0.909091) < 1e-6);

    const SparseColumn empty = column(1, {}, {});
    CHECK(coordinate_delta(empty, ws, d, 1.0, 0.0, 1.0, 0.1, {0, 0}) == 0.0);
}

TEST_CASE("solve_block on a single feature")
{
    const FeatureShard s = shard_of(1, {column(0, {0}, {1.0})});
    const WorkingSet ws{{-2.0}, {1.0}};
    BlockCursor cursor;
    const BlockDelta out = solve_block(s, ws, std::vector<double>{0.0}, {1.0, 0.1, {0, 0}, SolveMode::bsp}, cursor, {});
    CHECK(out.delta_beta[0] == doctest::Approx(2.0 / 1.1).epsilon(1e-15));
    CHECK(out.local_margin_delta[0] == doctest::Approx(2.0 / 1.1).epsilon(1e-15));
    CHECK(out.coordinates_visited == 1);
    CHECK(cursor.passes_completed_this_iteration == 1);
    CHECK(cursor.next_index == 0);
    CHECK(!out.stopped_early);
}

TEST_CASE("stop fired before any coordinate")
{
    testing::Rng rng(1);
    RandomBlock b = random_block(rng, 20, 5, 0.5);
    std::atomic<std::uint64_t> fired_through{4};
    BlockCursor cursor{3, 0};
    const BlockDelta out = solve_block(b.shard, b.working, b.beta, {1.0, 1e-6, {0, 0}, SolveMode::alb}, cursor,
                                       StopSignal(fired_through, 3));
    CHECK(out.coordinates_visited == 0);
    CHECK(out.stopped_early);
    CHECK(cursor.next_index == 3);
    for (double v : out.delta_beta) CHECK(v == 0.0);
    for (double v : out.local_margin_delta) CHECK(v == 0.0);
    CHECK(out.quad_form == 0.0);
}

TEST_CASE("duplicate columns: the second update sees the first")
{
    const FeatureShard s = shard_of(3, {column(0, {0, 1, 2}, {1, 2, -1}), column(1, {0, 1, 2}, {1, 2, -1})});
    // squared loss at y = (1, 2, 0.5), margins 0
    const WorkingSet ws{{-1, -2, -0.5}, {1, 1, 1}};
    BlockCursor cursor;
    const BlockDelta out = solve_block(s, ws, std::vector<double>{0, 0}, {1.0, 1e-6, {0, 0}, SolveMode::bsp}, cursor, {});
    CHECK(out.delta_beta[0] != 0.0);
    CHECK(std::fabs(out.delta_beta[1]) < std::fabs(out.delta_beta[0]));
    const std::vector<double> x{1, 2, -1};
    for (int i = 0; i < 3; ++i) {
        const double exact = x[i] * out.delta_beta[0] + x[i] * out.delta_beta[1];
        CHECK(std::fabs(out.local_margin_delta[i] - exact) <= 1e-15 * (1 + std::fabs(exact)));
    }
}

TEST_CASE("margin delta equals the recomputed sparse product")
{
    testing::Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        RandomBlock b = random_block(rng, 1 + rng.index(40), 1 + rng.index(15), rng.uniform(0.1, 1.0));
        BlockCursor cursor;
        const ElasticNetPenalty pen{rng.coin(0.5) ? rng.uniform(0, 1) : 0.0, rng.uniform(0, 1)};
        const BlockDelta out = solve_block(b.shard, b.working, b.beta, {1 + 3 * rng.uniform(), 1e-3, pen, SolveMode::bsp},
                                           cursor, {});
        const auto d = dense_product(b, out.delta_beta);
        for (std::size_t i = 0; i < d.size(); ++i)
            CHECK(std::fabs(out.local_margin_delta[i] - d[i]) <= 1e-10 * (1 + std::fabs(d[i])));
        CHECK(out.coordinates_visited == b.shard.columns.size());
    }
}

TEST_CASE("each coordinate minimizes its one-dimensional model")
{
    testing::Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        RandomBlock b = random_block(rng, 1 + rng.index(30), 1 + rng.index(6), rng.uniform(0.2, 1.0));
        const std::size_t features = b.shard.columns.size();
        const double mu = rng.coin(0.5) ? 1.0 : 1 + 7 * rng.uniform();
        const double nu = rng.uniform(1e-6, 0.5);
        const ElasticNetPenalty pen{rng.coin(0.6) ? rng.uniform(0, 2) : 0.0, rng.coin(0.5) ? rng.uniform(0, 2) : 0.0};
        std::vector<double> delta(features);
        for (auto& v : delta) v = rng.coin(0.5) ? rng.normal() : 0.0;
        const std::size_t j = rng.index(features);

        // model value as a function of the block step, computed densely
        auto model = [&](const std::vector<double>& step) {
            const auto d = dense_product(b, step);
            double v = 0.0;
            for (std::size_t i = 0; i < d.size(); ++i) v += b.working.g[i] * d[i] + 0.5 * mu * b.working.w[i] * d[i] * d[i];
            for (std::size_t k = 0; k < features; ++k) v += 0.5 * mu * nu * step[k] * step[k] + pen.coordinate(b.beta[k] + step[k]);
            return v;
        };
        const auto d = dense_product(b, delta);
        const double star = coordinate_delta(b.shard.columns[j], b.working, d, b.beta[j], delta[j], mu, nu, pen);
        std::vector<double> at = delta;
        at[j] = star;
        const double best = model(at);
        for (double eps : {1e-5, 1e-7}) {
            for (double sgn : {-1.0, 1.0}) {
                std::vector<double> moved = at;
                moved[j] = star + sgn * eps;
                CHECK(model(moved) >= best - 1e-12);
            }
        }
    }
}

TEST_CASE("bsp block pass is deterministic")
{
    testing::Rng rng(4);
    RandomBlock b = random_block(rng, 60, 12, 0.4);
    BlockCursor c1, c2;
    const BlockSolveOptions opt{2.0, 1e-4, {0.05, 0.1}, SolveMode::bsp};
    const BlockDelta a = solve_block(b.shard, b.working, b.beta, opt, c1, {});
    const BlockDelta c = solve_block(b.shard, b.working, b.beta, opt, c2, {});
    CHECK(a.delta_beta == c.delta_beta);
    CHECK(a.local_margin_delta == c.local_margin_delta);
    CHECK(a.quad_form == c.quad_form);
}

TEST_CASE("dead zone: large lambda1 keeps a zero block at zero")
{
    testing::Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        RandomBlock b = random_block(rng, 25, 8, 0.5);
        std::fill(b.beta.begin(), b.beta.end(), 0.0);
        double lam = 0.0;
        for (const auto& c : b.shard.columns) {
            double s = 0.0;
            for (std::size_t e = 0; e < c.rows.size(); ++e) s += c.values[e] * b.working.g[c.rows[e]];
            lam = std::max(lam, std::fabs(s));
        }
        BlockCursor cursor;
        const BlockDelta out = solve_block(b.shard, b.working, b.beta, {1.0, 1e-6, {lam, 0.0}, SolveMode::bsp}, cursor, {});
        for (double v : out.delta_beta) CHECK(v == 0.0);
        CHECK(out.quad_form == 0.0);
    }
}

TEST_CASE("alb keeps cycling until stopped and resumes from the cursor")
{
    testing::Rng rng(6);
    RandomBlock b = random_block(rng, 30, 5, 0.6);
    std::atomic<std::uint64_t> fired_through{0};

    SUBCASE("stop after two full passes")
    {
        int passes = 0;
        BlockHooks hooks;
        hooks.on_pass_complete = [&] { ++passes; };
        std::size_t visited = 0;
        hooks.before_coordinate = [&](std::size_t) {
            if (++visited == 11) fired_through = 1;
        };
        BlockCursor cursor{2, 0};
        const BlockDelta out = solve_block(b.shard, b.working, b.beta, {1.0, 1e-6, {0, 0}, SolveMode::alb}, cursor,
                                           StopSignal(fired_through, 0), hooks);
        CHECK(out.coordinates_visited == 11);
        CHECK(passes == 1);  // reported once per iteration
        CHECK(cursor.passes_completed_this_iteration == 2);
        CHECK(cursor.next_index == (2 + 11) % 5);
        CHECK(!out.stopped_early);
    }
    SUBCASE("stop mid pass")
    {
        std::size_t visited = 0;
        BlockHooks hooks;
        hooks.before_coordinate = [&](std::size_t) {
            if (++visited == 3) fired_through = 1;
        };
        BlockCursor cursor{4, 0};
        const BlockDelta out = solve_block(b.shard, b.working, b.beta, {1.0, 1e-6, {0, 0}, SolveMode::alb}, cursor,
                                           StopSignal(fired_through, 0), hooks);
        CHECK(out.coordinates_visited == 3);
        CHECK(out.stopped_early);
        CHECK(cursor.next_index == 2);
        CHECK(out.delta_beta[3] == 0.0);  // not visited
        CHECK(out.delta_beta[4] != 0.0);
    }
}

TEST_CASE("empty shard completes its pass at once")
{
    FeatureShard s = shard_of(4, {}, 3);
    WorkingSet ws{{0.1, 0.2, 0.3, 0.4}, {1, 1, 1, 1}};
    int passes = 0;
    BlockHooks hooks;
    hooks.on_pass_complete = [&] { ++passes; };
    BlockCursor cursor;
    const BlockDelta out = solve_block(s, ws, std::vector<double>{}, {1.0, 1e-6, {0, 0}, SolveMode::alb}, cursor, {}, hooks);
    CHECK(passes == 1);
    CHECK(out.delta_beta.empty());
    CHECK(out.local_margin_delta == std::vector<double>(4, 0.0));
}

TEST_CASE("block_quadratic_form")
{
    BlockDelta d;
    d.delta_beta = {1};
    d.local_margin_delta = {1};
    CHECK(block_quadratic_form(std::vector<double>{1}, std::vector<double>{1}, std::vector<double>{1}, 2.0, 0.5) == 3.0);
    CHECK(block_quadratic_form(std::vector<double>{0, 0}, std::vector<double>{0}, std::vector<double>{1}, 2.0, 0.5) == 0.0);

    testing::Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng.index(10), p = 1 + rng.index(10);
        RandomBlock b = random_block(rng, n, p, 0.7);
        const double mu = 1 + 3 * rng.uniform(), nu = rng.uniform(1e-4, 1.0);
        BlockCursor cursor;
        const BlockDelta out = solve_block(b.shard, b.working, b.beta, {mu, nu, {0.1, 0.2}, SolveMode::bsp}, cursor, {});

        Eigen::MatrixXd X(n, p);
        for (std::size_t k = 0; k < p; ++k)
            for (std::size_t i = 0; i < n; ++i) X(i, k) = b.dense[k][i];
        Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(b.working.w.data(), n);
        Eigen::MatrixXd H = X.transpose() * w.asDiagonal() * X + nu * Eigen::MatrixXd::Identity(p, p);
        Eigen::VectorXd db = Eigen::Map<const Eigen::VectorXd>(out.delta_beta.data(), p);
        const double oracle = mu * db.dot(H * db);
        CHECK(std::fabs(block_quadratic_form(out, mu) - oracle) <= 1e-10 * (1 + oracle));
        CHECK(block_quadratic_form(out, mu) >= 0.0);
    }
}
