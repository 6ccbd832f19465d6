#pragma once

// Scalar loss formulas shared by LossFunction and the vector kernels.
// Labels are assumed validated and inputs finite.

#include <cmath>

#include "dglm/loss.hpp"

namespace dglm::detail {

inline constexpr double inv_sqrt_2pi = 0.398942280401432677939946059934;
inline constexpr double inv_sqrt_2 = 0.707106781186547524400844362105;
inline constexpr double log_sqrt_2pi = 0.918938533204672741780329736406;

// Left tail switches from erfc to the continued fraction of the Mills ratio.
inline constexpr double probit_tail_cut = -5.0;

/// For s >= 5 returns 1/(s + 2/(s + 3/(s + ...))), so that
/// pdf(-s)/cdf(-s) == s + tail and the hessian avoids cancellation.
inline double mills_tail(double s) noexcept
{
    double f = s;
    for (int k = 200; k >= 2; --k) {
        f = s + k / f;
    }
    return 1.0 / f;
}

inline double normal_pdf(double x) noexcept
{
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) noexcept
{
    return 0.5 * std::erfc(-x * inv_sqrt_2);
}

inline double normal_log_cdf(double x) noexcept
{
    if (x > 0.0) {
        return std::log1p(-0.5 * std::erfc(x * inv_sqrt_2));
    }
    if (x >= probit_tail_cut) {
        return std::log(normal_cdf(x));
    }
    const double s = -x;
    // log cdf = log pdf - log(pdf/cdf)
    return -0.5 * x * x - log_sqrt_2pi - std::log(s + mills_tail(s));
}

struct ProbitRatio {
    double lambda;        // pdf(t) / cdf(t)
    double lambda_plus_t; // lambda + t, formed without cancellation in the tail
};

inline ProbitRatio probit_ratio(double t) noexcept
{
    if (t >= probit_tail_cut) {
        const double lambda = normal_pdf(t) / normal_cdf(t);
        return {lambda, lambda + t};
    }
    const double tail = mills_tail(-t);
    return {-t + tail, tail};
}

inline double squared_value(double y, double yhat) noexcept
{
    const double r = y - yhat;
    return 0.5 * r * r;
}

inline double logistic_value(double y, double yhat) noexcept
{
    const double t = y * yhat;
    return t >= 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

inline double probit_value(double y, double yhat) noexcept
{
    return -normal_log_cdf(y * yhat);
}

inline LossValue squared_eval(double y, double yhat) noexcept
{
    return {squared_value(y, yhat), yhat - y, 1.0};
}

inline LossValue logistic_eval(double y, double yhat) noexcept
{
    const double t = y * yhat;
    const double e = std::exp(-std::fabs(t));
    // sigma(-t): probability assigned to the wrong sign
    const double wrong = t >= 0.0 ? e / (1.0 + e) : 1.0 / (1.0 + e);
    const double hess = e / ((1.0 + e) * (1.0 + e));
    return {logistic_value(y, yhat), -y * wrong, hess};
}

inline LossValue probit_eval(double y, double yhat) noexcept
{
    const double t = y * yhat;
    const ProbitRatio r = probit_ratio(t);
    return {-normal_log_cdf(t), -y * r.lambda, r.lambda * r.lambda_plus_t};
}

inline double loss_value(LossKind kind, double y, double yhat) noexcept
{
    switch (kind) {
    case LossKind::squared:
        return squared_value(y, yhat);
    case LossKind::logistic:
        return logistic_value(y, yhat);
    case LossKind::probit:
        return probit_value(y, yhat);
    }
    return 0.0;
}

inline LossValue loss_eval(LossKind kind, double y, double yhat) noexcept
{
    switch (kind) {
    case LossKind::squared:
        return squared_eval(y, yhat);
    case LossKind::logistic:
        return logistic_eval(y, yhat);
    case LossKind::probit:
        return probit_eval(y, yhat);
    }
    return {0.0, 0.0, 0.0};
}

} // namespace dglm::detail
