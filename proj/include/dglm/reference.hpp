#pragma once

// Serial dense solver used as the correctness oracle for the distributed
// one. It runs proximal Newton on the full Hessian: cyclic coordinate descent
// on each quadratic model until the model is solved, then a backtracking
// line search on the true objective, and stops on coordinate-wise optimality.

#include <cstddef>
#include <vector>

#include "dglm/libsvm.hpp"
#include "dglm/loss.hpp"

namespace dglm {

struct DenseProblem {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> x;  // row-major n x p
    std::vector<double> y;

    double at(std::size_t i, std::size_t j) const noexcept { return x[i * p + j]; }
    std::vector<double> margins(const std::vector<double>& beta) const;

    static DenseProblem from_dataset(const Dataset& data);
};

struct ReferenceSolution {
    std::vector<double> beta;
    double objective = 0.0;
    double grad_norm_smooth_part = 0.0;  // |grad L + lambda2 beta|_inf
    double kkt_violation = 0.0;
    std::size_t iterations = 0;
};

double dense_objective(const DenseProblem& problem, const ElasticNetPenalty& penalty,
                       LossKind loss, const std::vector<double>& beta);

/// max_j of the distance of grad_j (L + lambda2/2 |b|^2) from -lambda1 * subdiff|b_j|.
double kkt_violation(const DenseProblem& problem, const ElasticNetPenalty& penalty, LossKind loss,
                     const std::vector<double>& beta);

/// Throws OracleFailure when `max_iterations` Newton steps do not reach `tolerance`.
ReferenceSolution reference_fit(const DenseProblem& problem, const ElasticNetPenalty& penalty,
                                LossKind loss, double tolerance, std::size_t max_iterations = 5000);

} // namespace dglm
