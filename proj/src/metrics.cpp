#include "dglm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dglm {

std::vector<PRPoint> precision_recall_curve(std::span<const double> scores,
                                            std::span<const double> labels)
{
    if (scores.size() != labels.size()) throw std::invalid_argument("auprc: length mismatch");
    std::size_t positives = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 1.0 && labels[i] != -1.0) throw std::invalid_argument("auprc: labels must be +1/-1");
        if (!std::isfinite(scores[i])) throw std::invalid_argument("auprc: non-finite score");
        positives += labels[i] == 1.0;
    }
    if (positives == 0) throw std::domain_error("auprc: undefined without positive examples");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    std::vector<PRPoint> curve;
    std::size_t tp = 0, taken = 0;
    for (std::size_t k = 0; k < order.size();) {
        const double a = scores[order[k]];
        while (k < order.size() && scores[order[k]] == a) {
            tp += labels[order[k]] == 1.0;
            ++taken;
            ++k;
        }
        curve.push_back({a, static_cast<double>(tp) / static_cast<double>(taken),
                         static_cast<double>(tp) / static_cast<double>(positives)});
    }
    return curve;
}

double auprc(std::span<const double> scores, std::span<const double> labels)
{
    double area = 0.0;
    double prev_recall = 0.0;
    for (const PRPoint& pt : precision_recall_curve(scores, labels)) {
        if (pt.recall > prev_recall) {
            area += (pt.recall - prev_recall) * pt.precision;
            prev_recall = pt.recall;
        }
    }
    return area;
}

double relative_suboptimality(double f, double f_star)
{
    if (!(f_star > 0.0)) throw std::invalid_argument("relative_suboptimality: f* must be positive");
    return (f - f_star) / f_star;
}

std::size_t count_nonzero(std::span<const double> beta) noexcept
{
    return static_cast<std::size_t>(std::count_if(beta.begin(), beta.end(), [](double b) { return b != 0.0; }));
}

} // namespace dglm
