#include <doctest.h>

#include <cmath>
#include <vector>

#include <omp.h>

#include "dglm/kernels.hpp"
#include "support.hpp"

using namespace dglm;
namespace ks = dglm::kernels::serial;
namespace ko = dglm::kernels::omp;

namespace {

struct Inputs {
    std::vector<double> y, m, d, w;
};

Inputs make_inputs(std::size_t n, LossKind kind, std::uint64_t seed)
{
    testing::Rng rng(seed);
    Inputs in;
    for (std::size_t i = 0; i < n; ++i) {
        in.y.push_back(kind == LossKind::squared ? rng.normal() : (rng.coin(0.5) ? 1.0 : -1.0));
        in.m.push_back(3 * rng.normal());
        in.d.push_back(rng.normal());
        in.w.push_back(rng.uniform());
    }
    return in;
}

} // namespace

TEST_CASE("omp kernels agree with the serial reference")
{
    for (std::size_t n : {0u, 1u, 17u, 4096u, 4097u, 30000u}) {
        for (LossKind kind : {LossKind::squared, LossKind::logistic, LossKind::probit}) {
            const Inputs in = make_inputs(n, kind, n + 7);
            std::vector<double> gs(n), ws(n), go(n), wo(n);
            ks::working_set(kind, in.y, in.m, gs, ws);
            ko::working_set(kind, in.y, in.m, go, wo);
            CHECK(gs == go);
            CHECK(ws == wo);

            const double ls = ks::loss_sum(kind, in.y, in.m);
            const double lo = ko::loss_sum(kind, in.y, in.m);
            if (n <= kernels::chunk_size) CHECK(ls == lo);
            CHECK(std::fabs(ls - lo) <= 1e-12 * (1 + std::fabs(ls)));

            const std::vector<double> alphas{1.0, 0.5, 1e-3};
            std::vector<double> ss(3), so(3);
            ks::shifted_loss_sums(kind, in.y, in.m, in.d, alphas, ss);
            ko::shifted_loss_sums(kind, in.y, in.m, in.d, alphas, so);
            for (int k = 0; k < 3; ++k) CHECK(std::fabs(ss[k] - so[k]) <= 1e-12 * (1 + std::fabs(ss[k])));
        }
        const Inputs in = make_inputs(n, LossKind::squared, n + 1);
        CHECK(std::fabs(ks::dot(in.m, in.d) - ko::dot(in.m, in.d)) <= 1e-11 * (1 + n));
        CHECK(std::fabs(ks::weighted_sq_sum(in.w, in.d) - ko::weighted_sq_sum(in.w, in.d)) <= 1e-11 * (1 + n));
        std::vector<double> a = in.m, b = in.m;
        ks::axpy(0.37, in.d, a);
        ko::axpy(0.37, in.d, b);
        CHECK(a == b);
    }
}

TEST_CASE("omp reductions are independent of the thread count")
{
    const Inputs in = make_inputs(50000, LossKind::logistic, 99);
    const int saved = omp_get_max_threads();
    std::vector<double> reference;
    for (int threads : {1, 2, 3, 8}) {
        omp_set_num_threads(threads);
        std::vector<double> alphas{1.0, 0.25}, out(2);
        ko::shifted_loss_sums(LossKind::logistic, in.y, in.m, in.d, alphas, out);
        const std::vector<double> got{ko::loss_sum(LossKind::logistic, in.y, in.m), ko::dot(in.m, in.d),
                                      ko::weighted_sq_sum(in.w, in.d), out[0], out[1]};
        if (reference.empty()) reference = got;
        CHECK(got == reference);
    }
    omp_set_num_threads(saved);
}

TEST_CASE("candidate sums match the loss of the updated margins bitwise")
{
    // The line search's f(alpha) and the next iteration's f0 must be the same number.
    const Inputs in = make_inputs(20000, LossKind::probit, 5);
    const std::vector<double> alphas{0.3125};
    std::vector<double> out(1);
    ko::shifted_loss_sums(LossKind::probit, in.y, in.m, in.d, alphas, out);
    std::vector<double> m = in.m;
    ko::axpy(alphas[0], in.d, m);
    CHECK(ko::loss_sum(LossKind::probit, in.y, m) == out[0]);
}
