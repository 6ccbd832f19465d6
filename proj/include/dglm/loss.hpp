#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace dglm {

enum class LossKind { squared, logistic, probit };

LossKind parse_loss_kind(std::string_view name);
std::string_view to_string(LossKind kind);

struct LossValue {
    double value;
    double grad;
    double hess;
};

/// Example-wise loss l(y, yhat) with its first two derivatives in yhat.
class LossFunction {
public:
    explicit LossFunction(LossKind kind) : kind_(kind) {}

    LossKind kind() const noexcept { return kind_; }

    /// Uniform upper bound on d2l/dyhat2 over all labels and margins.
    double hess_bound() const noexcept;

    /// Labels must be +1/-1 for the classification losses.
    bool label_valid(double y) const noexcept;

    /// Throws std::invalid_argument on non-finite input or an invalid label.
    LossValue eval(double y, double yhat) const;

    /// Unchecked fast paths used by the kernels.
    double value_unchecked(double y, double yhat) const noexcept;
    LossValue eval_unchecked(double y, double yhat) const noexcept;

private:
    LossKind kind_;
};

inline LossValue loss_eval(const LossFunction& loss, double y, double yhat)
{
    return loss.eval(y, yhat);
}

/// Rejects labels the loss cannot interpret (non-binary for logistic/probit).
void validate_labels(const LossFunction& loss, std::span<const double> labels);

/// Per-example first and second derivatives at the current margins.
/// The IRLS working response z is never formed; w*z == -g is used instead.
struct WorkingSet {
    std::vector<double> g;
    std::vector<double> w;

    std::size_t size() const noexcept { return g.size(); }
};

WorkingSet compute_working_set(const LossFunction& loss,
                               std::span<const double> labels,
                               std::span<const double> margins);

double total_loss(const LossFunction& loss,
                  std::span<const double> labels,
                  std::span<const double> margins);

struct ElasticNetPenalty {
    double lambda1 = 0.0;
    double lambda2 = 0.0;

    /// Contribution of a single coordinate.
    double coordinate(double b) const noexcept
    {
        const double a = b < 0 ? -b : b;
        return lambda1 * a + 0.5 * lambda2 * b * b;
    }
};

double penalty_value(const ElasticNetPenalty& penalty, std::span<const double> beta);

namespace normal {

double pdf(double x) noexcept;
double cdf(double x) noexcept;
double log_cdf(double x) noexcept;
/// pdf(x) / cdf(x), accurate in the far left tail.
double inverse_mills(double x) noexcept;

} // namespace normal

} // namespace dglm
