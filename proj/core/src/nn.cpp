#include "flaudit/nn.hpp"

#include <cmath>
#include <string>

namespace flaudit {

size_t conv_output_dim(const ConvSpec& spec) {
  require(spec.stride >= 1, ErrorCode::invalid_spec, "stride must be >= 1");
  require(spec.alpha_f >= 1 && spec.alpha_f <= spec.alpha_x,
          ErrorCode::invalid_spec, "filter must fit the input");
  size_t alpha_y = 1 + (spec.alpha_x - spec.alpha_f) / spec.stride;
  require(alpha_y >= 1, ErrorCode::invalid_spec, "empty output");
  return alpha_y;
}

namespace {

void check_conv_shapes(const ConvSpec& spec, const Tensor& x,
                       std::span<const Tensor> filters) {
  require(x.shape == std::vector<size_t>{spec.alpha_x, spec.alpha_x},
          ErrorCode::shape_mismatch, "conv input shape");
  require(filters.size() == spec.n_f, ErrorCode::shape_mismatch,
          "filter count");
  for (const auto& f : filters) {
    require(f.shape == std::vector<size_t>{spec.alpha_f, spec.alpha_f},
            ErrorCode::shape_mismatch, "filter shape");
  }
}

}  // namespace

double conv_forward_at(const ConvSpec& spec, const Tensor& x,
                       const Tensor& filter, size_t r, size_t c) {
  double acc = 0.0;
  size_t r0 = r * spec.stride;
  size_t c0 = c * spec.stride;
  for (size_t i = 0; i < spec.alpha_f; i++) {
    for (size_t j = 0; j < spec.alpha_f; j++) {
      acc += x.at2(r0 + i, c0 + j) * filter.at2(i, j);
    }
  }
  return acc;
}

Tensor conv_forward(const ConvSpec& spec, const Tensor& x,
                    std::span<const Tensor> filters) {
  check_conv_shapes(spec, x, filters);
  size_t ay = conv_output_dim(spec);
  Tensor y = Tensor::zeros({spec.n_f, ay, ay});
  size_t pos = 0;
  for (size_t t = 0; t < spec.n_f; t++) {
    for (size_t r = 0; r < ay; r++) {
      for (size_t c = 0; c < ay; c++) {
        y.values[pos++] = conv_forward_at(spec, x, filters[t], r, c);
      }
    }
  }
  return y;
}

double conv_dx_at(const ConvSpec& spec, const Tensor& filter,
                  const Tensor& grad_y_t, size_t i, size_t j) {
  size_t ay = grad_y_t.shape[0];
  double acc = 0.0;
  for (size_t u = 0; u < ay; u++) {
    size_t ru = u * spec.stride;
    if (i < ru || i - ru >= spec.alpha_f) continue;
    for (size_t v = 0; v < ay; v++) {
      size_t cv = v * spec.stride;
      if (j < cv || j - cv >= spec.alpha_f) continue;
      acc += grad_y_t.at2(u, v) * filter.values[(i - ru) * spec.alpha_f + (j - cv)];
    }
  }
  return acc;
}

double conv_df_expanded_at(const ConvSpec& spec, const Tensor& x,
                           const Tensor& grad_y_t, size_t i, size_t j,
                           size_t u) {
  size_t ay = grad_y_t.shape[0];
  double acc = 0.0;
  for (size_t v = 0; v < ay; v++) {
    acc += grad_y_t.at2(u, v) * x.at2(u * spec.stride + i, v * spec.stride + j);
  }
  return acc;
}

std::span<const double> ConvBackward::expanded_vector(const ConvSpec& spec,
                                                      size_t t, size_t i,
                                                      size_t j) const {
  size_t ay = grad_f_expanded.shape[3];
  size_t offset = ((t * spec.alpha_f + i) * spec.alpha_f + j) * ay;
  return std::span<const double>(grad_f_expanded.values.data() + offset, ay);
}

ConvBackward conv_backward(const ConvSpec& spec, const Tensor& x,
                           std::span<const Tensor> filters,
                           const Tensor& grad_y) {
  check_conv_shapes(spec, x, filters);
  size_t ay = conv_output_dim(spec);
  require(grad_y.shape == std::vector<size_t>{spec.n_f, ay, ay},
          ErrorCode::shape_mismatch, "grad_y shape");

  ConvBackward out;
  out.grad_x_per_filter.reserve(spec.n_f);
  out.grad_f.reserve(spec.n_f);
  out.grad_f_expanded = Tensor::zeros({spec.n_f, spec.alpha_f, spec.alpha_f, ay});

  for (size_t t = 0; t < spec.n_f; t++) {
    Tensor grad_y_t({ay, ay},
                    std::vector<double>(grad_y.values.begin() + t * ay * ay,
                                        grad_y.values.begin() + (t + 1) * ay * ay));
    Tensor gx = Tensor::zeros({spec.alpha_x, spec.alpha_x});
    for (size_t i = 0; i < spec.alpha_x; i++) {
      for (size_t j = 0; j < spec.alpha_x; j++) {
        gx.at2(i, j) = conv_dx_at(spec, filters[t], grad_y_t, i, j);
      }
    }
    out.grad_x_per_filter.push_back(std::move(gx));

    Tensor gf = Tensor::zeros({spec.alpha_f, spec.alpha_f});
    for (size_t i = 0; i < spec.alpha_f; i++) {
      for (size_t j = 0; j < spec.alpha_f; j++) {
        double total = 0.0;
        for (size_t u = 0; u < ay; u++) {
          double e = conv_df_expanded_at(spec, x, grad_y_t, i, j, u);
          out.grad_f_expanded.values[((t * spec.alpha_f + i) * spec.alpha_f + j) * ay + u] = e;
          total += e;
        }
        // -eta is applied here, at the fold; the expanded entries stay pre-eta
        gf.at2(i, j) = -spec.eta * total;
      }
    }
    out.grad_f.push_back(std::move(gf));
  }

  out.grad_x = Tensor::zeros({spec.alpha_x, spec.alpha_x});
  for (size_t t = 0; t < spec.n_f; t++) {
    for (size_t k = 0; k < out.grad_x.values.size(); k++) {
      out.grad_x.values[k] += out.grad_x_per_filter[t].values[k];
    }
  }
  return out;
}

std::vector<double> fc_forward(const FcSpec& spec, const Tensor& theta,
                               std::span<const double> x) {
  require(theta.shape == std::vector<size_t>{spec.l_x, spec.l_y},
          ErrorCode::shape_mismatch, "theta shape");
  require(x.size() == spec.l_x, ErrorCode::shape_mismatch, "fc input length");
  std::vector<double> y(spec.l_y, 0.0);
  for (size_t i = 0; i < spec.l_y; i++) {
    double acc = 0.0;
    for (size_t j = 0; j < spec.l_x; j++) acc += theta.at2(j, i) * x[j];
    y[i] = acc;
  }
  return y;
}

FcBackward fc_backward(const FcSpec& spec, const Tensor& theta,
                       std::span<const double> x,
                       std::span<const double> grad_y) {
  require(theta.shape == std::vector<size_t>{spec.l_x, spec.l_y},
          ErrorCode::shape_mismatch, "theta shape");
  require(x.size() == spec.l_x, ErrorCode::shape_mismatch, "fc input length");
  require(grad_y.size() == spec.l_y, ErrorCode::shape_mismatch,
          "fc grad_y length");
  FcBackward out;
  out.grad_x.assign(spec.l_x, 0.0);
  for (size_t j = 0; j < spec.l_x; j++) {
    double acc = 0.0;
    for (size_t i = 0; i < spec.l_y; i++) acc += theta.at2(j, i) * grad_y[i];
    out.grad_x[j] = acc;
  }
  out.grad_theta = Tensor::zeros({spec.l_x, spec.l_y});
  for (size_t j = 0; j < spec.l_x; j++) {
    for (size_t i = 0; i < spec.l_y; i++) {
      out.grad_theta.at2(j, i) = -spec.eta * grad_y[i] * x[j];
    }
  }
  return out;
}

const char* activation_name(ActivationKind kind) {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::identity: return "identity";
  }
  return "?";
}

ActivationKind activation_from_name(const std::string& name) {
  if (name == "relu") return ActivationKind::relu;
  if (name == "sigmoid") return ActivationKind::sigmoid;
  if (name == "identity") return ActivationKind::identity;
  fail(ErrorCode::config_error, "unknown activation: " + name);
}

double activation_at(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::relu: return x > 0.0 ? x : 0.0;
    case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::identity: return x;
  }
  return x;
}

double activation_grad_at(ActivationKind kind, double x, double grad_out) {
  switch (kind) {
    case ActivationKind::relu: return x > 0.0 ? grad_out : 0.0;
    case ActivationKind::sigmoid: {
      double s = 1.0 / (1.0 + std::exp(-x));
      return s * (1.0 - s) * grad_out;
    }
    case ActivationKind::identity: return grad_out;
  }
  return grad_out;
}

std::vector<double> activation_apply(ActivationKind kind,
                                     std::span<const double> x) {
  std::vector<double> y(x.size());
  for (size_t i = 0; i < x.size(); i++) y[i] = activation_at(kind, x[i]);
  return y;
}

std::vector<double> activation_grad(ActivationKind kind,
                                    std::span<const double> x,
                                    std::span<const double> grad_out) {
  require(x.size() == grad_out.size(), ErrorCode::shape_mismatch,
          "activation grad shapes");
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); i++) {
    g[i] = activation_grad_at(kind, x[i], grad_out[i]);
  }
  return g;
}

LossResult loss_eval(std::span<const double> yhat, std::span<const double> y) {
  require(yhat.size() == y.size() && !yhat.empty(), ErrorCode::shape_mismatch,
          "loss input lengths");
  double n = double(yhat.size());
  LossResult out;
  out.grad.resize(yhat.size());
  double acc = 0.0;
  for (size_t i = 0; i < yhat.size(); i++) {
    double d = yhat[i] - y[i];
    acc += d * d;
    out.grad[i] = 2.0 * d / n;
  }
  out.loss = acc / n;
  return out;
}

}  // namespace flaudit
