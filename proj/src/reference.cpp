#include "dglm/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dglm/block_solver.hpp"
#include "dglm/error.hpp"
#include "dglm/kernels.hpp"

namespace dglm {

std::vector<double> DenseProblem::margins(const std::vector<double>& beta) const
{
    std::vector<double> m(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) s += at(i, j) * beta[j];
        m[i] = s;
    }
    return m;
}

DenseProblem DenseProblem::from_dataset(const Dataset& data)
{
    DenseProblem prob;
    prob.n = data.n();
    prob.p = data.p();
    prob.y = data.labels;
    prob.x.assign(prob.n * prob.p, 0.0);
    for (std::size_t i = 0; i < prob.n; ++i) {
        for (const auto& e : data.rows[i]) prob.x[i * prob.p + e.id] = e.value;
    }
    return prob;
}

namespace {

struct Derivs {
    std::vector<double> g, w;
};

Derivs derivatives(const DenseProblem& prob, LossKind loss, const std::vector<double>& m)
{
    Derivs d{std::vector<double>(prob.n), std::vector<double>(prob.n)};
    kernels::serial::working_set(loss, prob.y, m, d.g, d.w);
    return d;
}

double smooth_gradient(const DenseProblem& prob, const std::vector<double>& g,
                       const std::vector<double>& beta, double lambda2, std::size_t j)
{
    double s = 0.0;
    for (std::size_t i = 0; i < prob.n; ++i) s += prob.at(i, j) * g[i];
    return s + lambda2 * beta[j];
}

double kkt_from_gradient(const DenseProblem& prob, const ElasticNetPenalty& pen,
                         const std::vector<double>& g, const std::vector<double>& beta)
{
    double worst = 0.0;
    for (std::size_t j = 0; j < prob.p; ++j) {
        const double grad = smooth_gradient(prob, g, beta, pen.lambda2, j);
        double v;
        if (beta[j] > 0.0) v = std::fabs(grad + pen.lambda1);
        else if (beta[j] < 0.0) v = std::fabs(grad - pen.lambda1);
        else v = std::max(0.0, std::fabs(grad) - pen.lambda1);
        worst = std::max(worst, v);
    }
    return worst;
}

} // namespace

double dense_objective(const DenseProblem& prob, const ElasticNetPenalty& pen, LossKind loss,
                       const std::vector<double>& beta)
{
    return kernels::serial::loss_sum(loss, prob.y, prob.margins(beta)) + penalty_value(pen, beta);
}

double kkt_violation(const DenseProblem& prob, const ElasticNetPenalty& pen, LossKind loss,
                     const std::vector<double>& beta)
{
    const Derivs d = derivatives(prob, loss, prob.margins(beta));
    return kkt_from_gradient(prob, pen, d.g, beta);
}

ReferenceSolution reference_fit(const DenseProblem& prob, const ElasticNetPenalty& pen, LossKind loss,
                                double tolerance, std::size_t max_iterations)
{
    if (prob.x.size() != prob.n * prob.p || prob.y.size() != prob.n) {
        throw std::invalid_argument("reference_fit: inconsistent problem dimensions");
    }
    validate_labels(LossFunction(loss), prob.y);

    const std::size_t n = prob.n, p = prob.p;
    // column-major copy for the inner loops
    std::vector<double> xc(n * p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) xc[j * n + i] = prob.at(i, j);

    ReferenceSolution sol;
    sol.beta.assign(p, 0.0);
    std::vector<double> m(n, 0.0);
    double f = kernels::serial::loss_sum(loss, prob.y, m);

    for (std::size_t it = 0; it < max_iterations; ++it) {
        const Derivs d = derivatives(prob, loss, m);
        sol.kkt_violation = kkt_from_gradient(prob, pen, d.g, sol.beta);
        if (sol.kkt_violation <= tolerance) {
            sol.iterations = it;
            sol.objective = f;
            double gn = 0.0;
            for (std::size_t j = 0; j < p; ++j)
                gn = std::max(gn, std::fabs(smooth_gradient(prob, d.g, sol.beta, pen.lambda2, j)));
            sol.grad_norm_smooth_part = gn;
            return sol;
        }

        // Solve the full quadratic model by cyclic coordinate descent.
        std::vector<double> step(p, 0.0), r(n, 0.0), curv(p, 0.0);
        for (std::size_t j = 0; j < p; ++j) {
            const double* col = &xc[j * n];
            for (std::size_t i = 0; i < n; ++i) curv[j] += d.w[i] * col[i] * col[i];
        }
        for (int pass = 0; pass < 10000; ++pass) {
            double biggest = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const double den = curv[j] + pen.lambda2;
                if (den <= 0.0) continue;
                const double* col = &xc[j * n];
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += col[i] * (d.g[i] + d.w[i] * r[i]);
                const double u_cur = sol.beta[j] + step[j];
                const double u = soft_threshold(curv[j] * u_cur - s, pen.lambda1) / den;
                const double change = u - u_cur;
                if (change != 0.0) {
                    for (std::size_t i = 0; i < n; ++i) r[i] += change * col[i];
                    step[j] += change;
                    biggest = std::max(biggest, std::fabs(change) * std::sqrt(den));
                }
            }
            if (biggest <= 1e-3 * tolerance) break;
        }

        // Backtracking on the true objective.
        const double r0 = penalty_value(pen, sol.beta);
        std::vector<double> trial(p);
        for (std::size_t j = 0; j < p; ++j) trial[j] = sol.beta[j] + step[j];
        double D = 0.0;
        for (std::size_t i = 0; i < n; ++i) D += d.g[i] * r[i];
        D += penalty_value(pen, trial) - r0;

        double alpha = 1.0;
        bool accepted = false;
        std::vector<double> m_trial(n);
        for (int k = 0; k < 60; ++k, alpha *= 0.5) {
            for (std::size_t j = 0; j < p; ++j) trial[j] = sol.beta[j] + alpha * step[j];
            for (std::size_t i = 0; i < n; ++i) m_trial[i] = m[i] + alpha * r[i];
            const double f_trial = kernels::serial::loss_sum(loss, prob.y, m_trial) + penalty_value(pen, trial);
            if (f_trial <= f + 1e-4 * alpha * std::min(D, 0.0)) {
                if (trial == sol.beta) break;  // rounding floor: nothing moves
                sol.beta = trial;
                m = prob.margins(sol.beta);  // fresh product, no drift
                f = kernels::serial::loss_sum(loss, prob.y, m) + penalty_value(pen, sol.beta);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            throw OracleFailure("reference_fit: line search stalled with KKT violation " +
                                std::to_string(sol.kkt_violation));
        }
    }
    throw OracleFailure("reference_fit: no convergence within " + std::to_string(max_iterations) +
                        " iterations (KKT violation " + std::to_string(sol.kkt_violation) + ")");
}

} // namespace dglm
