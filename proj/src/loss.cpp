#include "dglm/loss.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "dglm/detail/loss_math.hpp"
#include "dglm/kernels.hpp"

namespace dglm {

LossKind parse_loss_kind(std::string_view name)
{
    if (name == "squared") return LossKind::squared;
    if (name == "logistic") return LossKind::logistic;
    if (name == "probit") return LossKind::probit;
    throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

std::string_view to_string(LossKind kind)
{
    switch (kind) {
    case LossKind::squared:
        return "squared";
    case LossKind::logistic:
        return "logistic";
    case LossKind::probit:
        return "probit";
    }
    return "?";
}

double LossFunction::hess_bound() const noexcept
{
    switch (kind_) {
    case LossKind::squared:
        return 1.0;
    case LossKind::logistic:
        return 0.25;
    case LossKind::probit:
        // Bounded for all margins; 3.0 covers every branch of the analytic bound.
        return 3.0;
    }
    return 0.0;
}

bool LossFunction::label_valid(double y) const noexcept
{
    if (!std::isfinite(y)) return false;
    if (kind_ == LossKind::squared) return true;
    return y == 1.0 || y == -1.0;
}

LossValue LossFunction::eval(double y, double yhat) const
{
    if (!std::isfinite(y) || !std::isfinite(yhat)) {
        throw std::invalid_argument("loss_eval: non-finite input");
    }
    if (!label_valid(y)) {
        throw std::invalid_argument("loss_eval: label must be +1 or -1 for " +
                                    std::string(to_string(kind_)));
    }
    return detail::loss_eval(kind_, y, yhat);
}

double LossFunction::value_unchecked(double y, double yhat) const noexcept
{
    return detail::loss_value(kind_, y, yhat);
}

LossValue LossFunction::eval_unchecked(double y, double yhat) const noexcept
{
    return detail::loss_eval(kind_, y, yhat);
}

void validate_labels(const LossFunction& loss, std::span<const double> labels)
{
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!loss.label_valid(labels[i])) {
            throw std::invalid_argument("label " + std::to_string(i) + " (" +
                                        std::to_string(labels[i]) + ") is invalid for " +
                                        std::string(to_string(loss.kind())) + " loss");
        }
    }
}

namespace {

void check_lengths(std::span<const double> labels, std::span<const double> margins,
                   const char* who)
{
    if (labels.size() != margins.size()) {
        throw std::invalid_argument(std::string(who) + ": labels and margins differ in length");
    }
}

} // namespace

WorkingSet compute_working_set(const LossFunction& loss,
                               std::span<const double> labels,
                               std::span<const double> margins)
{
    check_lengths(labels, margins, "compute_working_set");
    WorkingSet ws;
    ws.g.resize(labels.size());
    ws.w.resize(labels.size());
    kernels::omp::working_set(loss.kind(), labels, margins, ws.g, ws.w);
    return ws;
}

double total_loss(const LossFunction& loss,
                  std::span<const double> labels,
                  std::span<const double> margins)
{
    check_lengths(labels, margins, "total_loss");
    return kernels::omp::loss_sum(loss.kind(), labels, margins);
}

double penalty_value(const ElasticNetPenalty& penalty, std::span<const double> beta)
{
    double sum = 0.0;
    for (double b : beta) {
        if (!std::isfinite(b)) {
            throw std::invalid_argument("penalty_value: non-finite weight");
        }
        sum += penalty.coordinate(b);
    }
    return sum;
}

namespace normal {

double pdf(double x) noexcept { return detail::normal_pdf(x); }
double cdf(double x) noexcept { return detail::normal_cdf(x); }
double log_cdf(double x) noexcept { return detail::normal_log_cdf(x); }
double inverse_mills(double x) noexcept { return detail::probit_ratio(x).lambda; }

} // namespace normal

} // namespace dglm
