#include "dglm/kernels.hpp"

#include <algorithm>
#include <vector>

#include "dglm/detail/loss_math.hpp"

namespace dglm::kernels {

namespace {

std::size_t chunk_count(std::size_t n) { return (n + chunk_size - 1) / chunk_size; }

template <class ChunkSum>
double chunked_sum(std::size_t n, ChunkSum&& chunk_sum)
{
    const std::size_t chunks = chunk_count(n);
    if (chunks <= 1) {
        return chunk_sum(std::size_t{0}, n);
    }
    std::vector<double> partial(chunks);
    const long long nc = static_cast<long long>(chunks);
#pragma omp parallel for schedule(static)
    for (long long c = 0; c < nc; ++c) {
        const std::size_t lo = static_cast<std::size_t>(c) * chunk_size;
        partial[static_cast<std::size_t>(c)] = chunk_sum(lo, std::min(n, lo + chunk_size));
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

} // namespace

namespace serial {

void working_set(LossKind kind, std::span<const double> y, std::span<const double> margins,
                 std::span<double> g, std::span<double> w)
{
    for (std::size_t i = 0; i < y.size(); ++i) {
        const LossValue v = detail::loss_eval(kind, y[i], margins[i]);
        g[i] = v.grad;
        w[i] = v.hess;
    }
}

double loss_sum(LossKind kind, std::span<const double> y, std::span<const double> margins)
{
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        s += detail::loss_value(kind, y[i], margins[i]);
    }
    return s;
}

void shifted_loss_sums(LossKind kind, std::span<const double> y,
                       std::span<const double> margins, std::span<const double> direction,
                       std::span<const double> alphas, std::span<double> out)
{
    for (std::size_t k = 0; k < alphas.size(); ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            s += detail::loss_value(kind, y[i], margins[i] + alphas[k] * direction[i]);
        }
        out[k] = s;
    }
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double weighted_sq_sum(std::span<const double> w, std::span<const double> d)
{
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * d[i] * d[i];
    return s;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = y[i] + alpha * x[i];
}

} // namespace serial

namespace omp {

void working_set(LossKind kind, std::span<const double> y, std::span<const double> margins,
                 std::span<double> g, std::span<double> w)
{
    const long long n = static_cast<long long>(y.size());
#pragma omp parallel for schedule(static) if (n > static_cast<long long>(chunk_size))
    for (long long i = 0; i < n; ++i) {
        const LossValue v = detail::loss_eval(kind, y[i], margins[i]);
        g[i] = v.grad;
        w[i] = v.hess;
    }
}

double loss_sum(LossKind kind, std::span<const double> y, std::span<const double> margins)
{
    return chunked_sum(y.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            s += detail::loss_value(kind, y[i], margins[i]);
        }
        return s;
    });
}

void shifted_loss_sums(LossKind kind, std::span<const double> y,
                       std::span<const double> margins, std::span<const double> direction,
                       std::span<const double> alphas, std::span<double> out)
{
    // One pass over the examples per chunk, all candidates at once.
    const std::size_t n = y.size();
    const std::size_t k_count = alphas.size();
    const std::size_t chunks = std::max<std::size_t>(1, chunk_count(n));
    std::vector<double> partial(chunks * k_count, 0.0);
    const long long nc = static_cast<long long>(chunks);
#pragma omp parallel for schedule(static) if (chunks > 1)
    for (long long c = 0; c < nc; ++c) {
        const std::size_t lo = static_cast<std::size_t>(c) * chunk_size;
        const std::size_t hi = std::min(n, lo + chunk_size);
        double* row = partial.data() + static_cast<std::size_t>(c) * k_count;
        for (std::size_t k = 0; k < k_count; ++k) {
            double s = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                s += detail::loss_value(kind, y[i], margins[i] + alphas[k] * direction[i]);
            }
            row[k] = s;
        }
    }
    for (std::size_t k = 0; k < k_count; ++k) {
        double total = 0.0;
        for (std::size_t c = 0; c < chunks; ++c) total += partial[c * k_count + k];
        out[k] = total;
    }
}

double dot(std::span<const double> a, std::span<const double> b)
{
    return chunked_sum(a.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
        return s;
    });
}

double weighted_sq_sum(std::span<const double> w, std::span<const double> d)
{
    return chunked_sum(w.size(), [&](std::size_t lo, std::size_t hi) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += w[i] * d[i] * d[i];
        return s;
    });
}

void axpy(double alpha, std::span<const double> x, std::span<double> y)
{
    const long long n = static_cast<long long>(x.size());
#pragma omp parallel for schedule(static) if (n > static_cast<long long>(chunk_size))
    for (long long i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

} // namespace omp

} // namespace dglm::kernels
