#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flaudit/tensor.hpp"

// Layer mathematics, in 64-bit floats with fixed summation orders so that a
// point recomputation is bit-identical to the full pass. Full passes call the
// same *_at kernels the auditor calls.
//
// Indices are 0-based throughout. A convolution input is an alpha_x * alpha_x
// matrix scanned by n_f filters of side alpha_f with stride `stride` and no
// padding; the output side is alpha_y = floor(1 + (alpha_x - alpha_f)/stride).

namespace flaudit {

struct ConvSpec {
  size_t n_f = 1;       // filter count
  size_t alpha_f = 1;   // filter side length
  size_t stride = 1;
  size_t alpha_x = 1;   // input side length
  double eta = 0.01;    // learning rate
};

/// Output side length. Throws invalid_spec when the spec is degenerate.
size_t conv_output_dim(const ConvSpec& spec);

/// One output element: Y^(t)[r,c] = sum_{i,j} X[r*d+i, c*d+j] * F[i,j],
/// accumulated in ascending (i, j).
double conv_forward_at(const ConvSpec& spec, const Tensor& x,
                       const Tensor& filter, size_t r, size_t c);

/// All filtered images; result shape {n_f, alpha_y, alpha_y}.
Tensor conv_forward(const ConvSpec& spec, const Tensor& x,
                    std::span<const Tensor> filters);

/// One input-gradient contribution for filter t:
///   dX^(t)[i,j] = sum over (u,v) with 0 <= i-u*d < alpha_f and
///   0 <= j-v*d < alpha_f of dY^(t)[u,v] * F^(t)[i-u*d, j-v*d],
/// accumulated in ascending (u, v).
double conv_dx_at(const ConvSpec& spec, const Tensor& filter,
                  const Tensor& grad_y_t, size_t i, size_t j);

/// One entry of the expanded filter-gradient vector (stored pre-eta):
///   dF^(t)_{i,j}[u] = sum_v dY^(t)[u,v] * X[u*d+i, v*d+j], ascending v.
double conv_df_expanded_at(const ConvSpec& spec, const Tensor& x,
                           const Tensor& grad_y_t, size_t i, size_t j,
                           size_t u);

struct ConvBackward {
  Tensor grad_x;                           // {alpha_x, alpha_x}, sum over t
  std::vector<Tensor> grad_x_per_filter;   // n_f of {alpha_x, alpha_x}
  std::vector<Tensor> grad_f;              // n_f of {alpha_f, alpha_f}, -eta applied
  // pre-eta partial sums, shape {n_f, alpha_f, alpha_f, alpha_y}
  Tensor grad_f_expanded;

  std::span<const double> expanded_vector(const ConvSpec& spec, size_t t,
                                          size_t i, size_t j) const;
};

ConvBackward conv_backward(const ConvSpec& spec, const Tensor& x,
                           std::span<const Tensor> filters,
                           const Tensor& grad_y);

struct FcSpec {
  size_t l_x = 1;  // input length
  size_t l_y = 1;  // output length
  double eta = 0.01;
};

/// y[i] = sum_j theta[j,i] * x[j], ascending j. theta is {l_x, l_y}.
std::vector<double> fc_forward(const FcSpec& spec, const Tensor& theta,
                               std::span<const double> x);

struct FcBackward {
  std::vector<double> grad_x;  // l_x, grad_x[j] = sum_i theta[j,i]*grad_y[i]
  Tensor grad_theta;           // {l_x, l_y}, [j,i] = -eta*grad_y[i]*x[j]
};

FcBackward fc_backward(const FcSpec& spec, const Tensor& theta,
                       std::span<const double> x,
                       std::span<const double> grad_y);

enum class ActivationKind { relu, sigmoid, identity };

const char* activation_name(ActivationKind kind);
ActivationKind activation_from_name(const std::string& name);

double activation_at(ActivationKind kind, double x);
/// a'(x) * grad_out, with relu'(0) := 0.
double activation_grad_at(ActivationKind kind, double x, double grad_out);

std::vector<double> activation_apply(ActivationKind kind,
                                     std::span<const double> x);
std::vector<double> activation_grad(ActivationKind kind,
                                    std::span<const double> x,
                                    std::span<const double> grad_out);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d yhat
};

/// Mean squared error: loss = (1/n) sum (yhat-y)^2, grad = (2/n)(yhat-y).
LossResult loss_eval(std::span<const double> yhat, std::span<const double> y);

}  // namespace flaudit
