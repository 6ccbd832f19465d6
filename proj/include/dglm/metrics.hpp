#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dglm {

struct PRPoint {
    double threshold;
    double precision;
    double recall;
};

/// Precision/recall at every distinct score, highest threshold first.
/// Labels are +1/-1; at least one positive is required.
std::vector<PRPoint> precision_recall_curve(std::span<const double> scores,
                                            std::span<const double> labels);

/// Area under the PR curve by recall-step rectangles: sum of
/// (Rc(a_k) - Rc(a_{k-1})) * Pr(a_k) over descending distinct thresholds.
double auprc(std::span<const double> scores, std::span<const double> labels);

/// (f - f_star) / f_star; may be slightly negative when the oracle is loose.
double relative_suboptimality(double f, double f_star);

std::size_t count_nonzero(std::span<const double> beta) noexcept;

} // namespace dglm
