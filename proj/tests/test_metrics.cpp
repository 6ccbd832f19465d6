#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "dglm/metrics.hpp"
#include "support.hpp"

using namespace dglm;

namespace {

// Set counting at every distinct threshold, straight from the definitions:
// Pr(a) = |{p >= a, y = +1}| / |{p >= a}|, Rc(a) = |{p >= a, y = +1}| / |{y = +1}|.
double brute_force_auprc(const std::vector<double>& s, const std::vector<double>& y)
{
    std::set<double, std::greater<>> thresholds(s.begin(), s.end());
    double positives = 0;
    for (double v : y) positives += v == 1.0;
    double area = 0.0, prev = 0.0;
    for (double a : thresholds) {
        double hit = 0, above = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= a) {
                above += 1;
                hit += y[i] == 1.0;
            }
        }
        const double rc = hit / positives, pr = hit / above;
        area += (rc - prev) * pr;
        prev = rc;
    }
    return area;
}

} // namespace

TEST_CASE("auprc worked values")
{
    CHECK(auprc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, std::vector<double>{1, 1, -1, -1}) == 1.0);
    CHECK(auprc(std::vector<double>{0.3}, std::vector<double>{1}) == 1.0);
    CHECK(auprc(std::vector<double>{0.9, 0.8, 0.7}, std::vector<double>{1, -1, 1}) ==
          doctest::Approx(5.0 / 6.0).epsilon(1e-15));
    // all tied: one threshold, precision = base rate
    CHECK(auprc(std::vector<double>{1, 1, 1, 1}, std::vector<double>{1, -1, -1, -1}) == 0.25);
    CHECK(auprc(std::vector<double>{0.1, 0.9}, std::vector<double>{1, -1}) == 0.5);
}

TEST_CASE("auprc errors")
{
    CHECK_THROWS_AS(auprc(std::vector<double>{0.1, 0.2}, std::vector<double>{-1, -1}), std::domain_error);
    CHECK_THROWS_AS(auprc(std::vector<double>{}, std::vector<double>{}), std::domain_error);
    CHECK_THROWS_AS(auprc(std::vector<double>{0.1}, std::vector<double>{1, -1}), std::invalid_argument);
    CHECK_THROWS_AS(auprc(std::vector<double>{0.1}, std::vector<double>{0}), std::invalid_argument);
    CHECK_THROWS_AS(auprc(std::vector<double>{NAN}, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("auprc equals brute-force set counting")
{
    testing::Rng rng(41);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.index(50);
        std::vector<double> s(n), y(n);
        const bool ties = rng.coin(0.5);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = ties ? static_cast<double>(rng.index(6)) : rng.normal();
            y[i] = rng.coin(0.4) ? 1 : -1;
        }
        y[rng.index(n)] = 1;
        const double got = auprc(s, y);
        CHECK(std::fabs(got - brute_force_auprc(s, y)) <= 1e-12);
        CHECK(got >= 0.0);
        CHECK(got <= 1.0 + 1e-15);
    }
}

TEST_CASE("precision recall curve")
{
    const auto c = precision_recall_curve(std::vector<double>{0.9, 0.8, 0.8, 0.1}, std::vector<double>{1, -1, 1, -1});
    REQUIRE(c.size() == 3);
    CHECK(c[0].threshold == 0.9);
    CHECK(c[0].precision == 1.0);
    CHECK(c[0].recall == 0.5);
    CHECK(c[1].threshold == 0.8);
    CHECK(c[1].precision == doctest::Approx(2.0 / 3));
    CHECK(c[1].recall == 1.0);
    CHECK(c[2].recall == 1.0);
    CHECK(c[2].precision == 0.5);
}

TEST_CASE("relative_suboptimality and nnz")
{
    CHECK(relative_suboptimality(2.0, 2.0) == 0.0);
    CHECK(relative_suboptimality(1.1, 1.0) == doctest::Approx(0.1));
    CHECK(relative_suboptimality(0.999999, 1.0) < 0.0);
    CHECK_THROWS_AS(relative_suboptimality(1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(relative_suboptimality(1.0, -2.0), std::invalid_argument);
    CHECK(count_nonzero(std::vector<double>{0, -0.0, 1e-300, 3}) == 2);
}
