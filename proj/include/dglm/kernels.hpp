#pragma once

// Per-example vector kernels used by the solver.
//
// Two implementations are kept side by side: `serial` is the plain loop used
// as the test reference, `omp` is the OpenMP version the library calls.
// Reductions in `omp` are summed over fixed chunks of `chunk_size` elements and
// the chunk partials are combined in index order, so the result does not depend
// on the thread count. For n <= chunk_size both produce identical bits.

#include <cstddef>
#include <span>

#include "dglm/loss.hpp"

namespace dglm::kernels {

inline constexpr std::size_t chunk_size = 4096;

namespace serial {

void working_set(LossKind kind, std::span<const double> y, std::span<const double> margins,
                 std::span<double> g, std::span<double> w);

double loss_sum(LossKind kind, std::span<const double> y, std::span<const double> margins);

/// out[k] = sum_i loss(y_i, margins_i + alphas[k] * direction_i)
void shifted_loss_sums(LossKind kind, std::span<const double> y,
                       std::span<const double> margins, std::span<const double> direction,
                       std::span<const double> alphas, std::span<double> out);

double dot(std::span<const double> a, std::span<const double> b);

/// sum_i w_i d_i^2
double weighted_sq_sum(std::span<const double> w, std::span<const double> d);

/// y_i = y_i + alpha * x_i
void axpy(double alpha, std::span<const double> x, std::span<double> y);

} // namespace serial

namespace omp {

void working_set(LossKind kind, std::span<const double> y, std::span<const double> margins,
                 std::span<double> g, std::span<double> w);

double loss_sum(LossKind kind, std::span<const double> y, std::span<const double> margins);

void shifted_loss_sums(LossKind kind, std::span<const double> y,
                       std::span<const double> margins, std::span<const double> direction,
                       std::span<const double> alphas, std::span<double> out);

double dot(std::span<const double> a, std::span<const double> b);

double weighted_sq_sum(std::span<const double> w, std::span<const double> d);

void axpy(double alpha, std::span<const double> x, std::span<double> y);

} // namespace omp

} // namespace dglm::kernels
