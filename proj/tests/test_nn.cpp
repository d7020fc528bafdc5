#include <cmath>

#include "doctest.h"
#include "flaudit/nn.hpp"
#include "flaudit/rng.hpp"

using namespace flaudit;

namespace {

std::vector<Tensor> random_filters(Rng& rng, const ConvSpec& spec) {
  std::vector<Tensor> filters;
  for (size_t t = 0; t < spec.n_f; t++) {
    Tensor f = Tensor::zeros({spec.alpha_f, spec.alpha_f});
    for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
    filters.push_back(std::move(f));
  }
  return filters;
}

Tensor random_matrix(Rng& rng, size_t r, size_t c, double lo = -1.0,
                     double hi = 1.0) {
  Tensor m = Tensor::zeros({r, c});
  for (auto& v : m.values) v = rng.uniform(lo, hi);
  return m;
}

// scalar objective for finite differences: MSE of conv output vs target
double conv_loss(const ConvSpec& spec, const Tensor& x,
                 const std::vector<Tensor>& filters,
                 const std::vector<double>& target) {
  Tensor y = conv_forward(spec, x, filters);
  return loss_eval(y.values, target).loss;
}

constexpr double kFdStep = 1e-6;

}  // namespace

TEST_CASE("conv_output_dim formula and errors") {
  CHECK(conv_output_dim(ConvSpec{16, 8, 2, 256, 0.01}) == 125);
  CHECK(conv_output_dim(ConvSpec{1, 8, 3, 8, 0.01}) == 1);  // alpha_x == alpha_f
  CHECK(conv_output_dim(ConvSpec{1, 8, 2, 16, 0.01}) == 5);
  CHECK_THROWS_AS(conv_output_dim(ConvSpec{1, 9, 1, 8, 0.01}), Error);
  CHECK_THROWS_AS(conv_output_dim(ConvSpec{1, 2, 0, 8, 0.01}), Error);
}

TEST_CASE("conv_forward identity filter and known case") {
  // 1x1 identity filter, stride 1: output equals input
  ConvSpec spec{1, 1, 1, 4, 0.01};
  Tensor x = Tensor::zeros({4, 4});
  Rng rng(5);
  for (auto& v : x.values) v = rng.uniform();
  Tensor f({1, 1}, {1.0});
  Tensor y = conv_forward(spec, x, std::vector<Tensor>{f});
  REQUIRE(y.shape == std::vector<size_t>{1, 4, 4});
  for (size_t k = 0; k < 16; k++) CHECK(y.values[k] == x.values[k]);

  // X=[[1,2],[3,4]], F=[[1,0],[0,1]] -> Y=[[5]]
  ConvSpec s2{1, 2, 1, 2, 0.01};
  Tensor x2({2, 2}, {1, 2, 3, 4});
  Tensor f2({2, 2}, {1, 0, 0, 1});
  Tensor y2 = conv_forward(s2, x2, std::vector<Tensor>{f2});
  REQUIRE(y2.values.size() == 1);
  CHECK(y2.values[0] == doctest::Approx(5.0));

  // 16 filters on 128x128, stride 2, filter 8x8 -> shape (16, 61, 61)
  ConvSpec s3{16, 8, 2, 128, 0.01};
  CHECK(conv_output_dim(s3) == 61);

  // shape errors
  CHECK_THROWS_AS(conv_forward(s2, Tensor::zeros({3, 3}),
                               std::vector<Tensor>{f2}),
                  Error);
}

TEST_CASE("conv_forward direct-summation oracle on random cases") {
  Rng rng(17);
  for (int rep = 0; rep < 20; rep++) {
    ConvSpec spec;
    spec.alpha_x = 4 + rng.below(8);
    spec.alpha_f = 1 + rng.below(std::min<uint64_t>(4, spec.alpha_x));
    spec.stride = 1 + rng.below(3);
    spec.n_f = 1 + rng.below(3);
    spec.eta = 0.01;
    size_t ay = conv_output_dim(spec);
    Tensor x = random_matrix(rng, spec.alpha_x, spec.alpha_x);
    auto filters = random_filters(rng, spec);
    Tensor y = conv_forward(spec, x, filters);
    for (size_t t = 0; t < spec.n_f; t++) {
      for (size_t r = 0; r < ay; r++) {
        for (size_t c = 0; c < ay; c++) {
          double want = 0.0;
          for (size_t i = 0; i < spec.alpha_f; i++) {
            for (size_t j = 0; j < spec.alpha_f; j++) {
              want += x.at2(r * spec.stride + i, c * spec.stride + j) *
                      filters[t].at2(i, j);
            }
          }
          CHECK(y.values[(t * ay + r) * ay + c] == doctest::Approx(want).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("conv_backward zero gradient and 1x1 reduction") {
  ConvSpec spec{2, 2, 1, 4, 0.05};
  Rng rng(23);
  Tensor x = random_matrix(rng, 4, 4);
  auto filters = random_filters(rng, spec);
  size_t ay = conv_output_dim(spec);
  Tensor zeros = Tensor::zeros({2, ay, ay});
  ConvBackward bwd = conv_backward(spec, x, filters, zeros);
  for (double v : bwd.grad_x.values) CHECK(v == 0.0);
  for (const auto& gf : bwd.grad_f) {
    for (double v : gf.values) CHECK(v == 0.0);
  }
  for (double v : bwd.grad_f_expanded.values) CHECK(v == 0.0);

  // alpha_f = 1, stride 1, single filter f: dX[i,j] = dY[i,j] * f and
  // dF = -eta * sum(dY o X)
  ConvSpec s1{1, 1, 1, 3, 0.1};
  Tensor x1 = random_matrix(rng, 3, 3);
  Tensor f1({1, 1}, {rng.uniform(-1.0, 1.0)});
  Tensor gy = Tensor::zeros({1, 3, 3});
  for (auto& v : gy.values) v = rng.uniform(-1.0, 1.0);
  ConvBackward b1 = conv_backward(s1, x1, std::vector<Tensor>{f1}, gy);
  double df_expect = 0.0;
  for (size_t k = 0; k < 9; k++) {
    CHECK(b1.grad_x.values[k] ==
          doctest::Approx(gy.values[k] * f1.values[0]).epsilon(1e-15));
    df_expect += gy.values[k] * x1.values[k];
  }
  CHECK(b1.grad_f[0].values[0] == doctest::Approx(-0.1 * df_expect).epsilon(1e-12));
}

TEST_CASE("conv gradients vs central finite differences") {
  Rng rng(29);
  ConvSpec spec{2, 3, 2, 8, 1.0};  // eta=1 so grad_f == -dL/dF
  Tensor x = random_matrix(rng, 8, 8);
  auto filters = random_filters(rng, spec);
  size_t ay = conv_output_dim(spec);
  std::vector<double> target(spec.n_f * ay * ay);
  for (auto& v : target) v = rng.uniform(-1.0, 1.0);

  Tensor y = conv_forward(spec, x, filters);
  LossResult loss = loss_eval(y.values, target);
  Tensor grad_y({spec.n_f, ay, ay}, loss.grad);
  ConvBackward bwd = conv_backward(spec, x, filters, grad_y);

  for (size_t k = 0; k < x.values.size(); k++) {
    Tensor xp = x, xm = x;
    xp.values[k] += kFdStep;
    xm.values[k] -= kFdStep;
    double fd = (conv_loss(spec, xp, filters, target) -
                 conv_loss(spec, xm, filters, target)) /
                (2 * kFdStep);
    double got = bwd.grad_x.values[k];
    CHECK(std::abs(got - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  }
  for (size_t t = 0; t < spec.n_f; t++) {
    for (size_t k = 0; k < filters[t].values.size(); k++) {
      auto fp = filters, fm = filters;
      fp[t].values[k] += kFdStep;
      fm[t].values[k] -= kFdStep;
      double fd = (conv_loss(spec, x, fp, target) -
                   conv_loss(spec, x, fm, target)) /
                  (2 * kFdStep);
      double got = -bwd.grad_f[t].values[k];  // eta = 1
      CHECK(std::abs(got - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("expanded filter gradients reconstruct Eq-direct values") {
  Rng rng(31);
  ConvSpec spec{3, 3, 2, 9, 0.07};
  Tensor x = random_matrix(rng, 9, 9, 0.25, 1.25);  // positive data
  auto filters = random_filters(rng, spec);
  size_t ay = conv_output_dim(spec);
  Tensor grad_y = Tensor::zeros({spec.n_f, ay, ay});
  for (auto& v : grad_y.values) v = rng.uniform(0.25, 1.25);

  ConvBackward bwd = conv_backward(spec, x, filters, grad_y);
  for (size_t t = 0; t < spec.n_f; t++) {
    Tensor gyt({ay, ay},
               std::vector<double>(grad_y.values.begin() + t * ay * ay,
                                   grad_y.values.begin() + (t + 1) * ay * ay));
    for (size_t i = 0; i < spec.alpha_f; i++) {
      for (size_t j = 0; j < spec.alpha_f; j++) {
        // direct flat double sum, ascending (u, v)
        double direct = 0.0;
        for (size_t u = 0; u < ay; u++) {
          for (size_t v = 0; v < ay; v++) {
            direct += gyt.at2(u, v) *
                      x.at2(u * spec.stride + i, v * spec.stride + j);
          }
        }
        double folded = 0.0;
        for (double e : bwd.expanded_vector(spec, t, i, j)) folded += e;
        CHECK(std::abs(-spec.eta * folded - (-spec.eta * direct)) <=
              1e-9 * std::abs(spec.eta * direct));
        CHECK(bwd.grad_f[t].at2(i, j) == -spec.eta * folded);
      }
    }
  }
}

TEST_CASE("per-filter input gradients reconstruct the total exactly") {
  Rng rng(37);
  ConvSpec spec{4, 2, 1, 6, 0.01};
  Tensor x = random_matrix(rng, 6, 6);
  auto filters = random_filters(rng, spec);
  size_t ay = conv_output_dim(spec);
  Tensor grad_y = Tensor::zeros({spec.n_f, ay, ay});
  for (auto& v : grad_y.values) v = rng.uniform(-1.0, 1.0);
  ConvBackward bwd = conv_backward(spec, x, filters, grad_y);
  for (size_t k = 0; k < bwd.grad_x.values.size(); k++) {
    double sum = 0.0;
    for (size_t t = 0; t < spec.n_f; t++) {
      sum += bwd.grad_x_per_filter[t].values[k];
    }
    CHECK(sum == bwd.grad_x.values[k]);  // same fold order: bit-exact
  }
}

TEST_CASE("fc_forward basics") {
  FcSpec spec{2, 2, 0.01};
  Tensor eye({2, 2}, {1, 0, 0, 1});
  std::vector<double> x{3.5, -1.25};
  auto y = fc_forward(spec, eye, x);
  CHECK(y == x);

  Tensor theta({2, 2}, {1, 2, 3, 4});
  auto y2 = fc_forward(spec, theta, std::vector<double>{1.0, 1.0});
  CHECK(y2[0] == doctest::Approx(4.0));
  CHECK(y2[1] == doctest::Approx(6.0));

  Tensor zero = Tensor::zeros({2, 2});
  auto y3 = fc_forward(spec, zero, x);
  CHECK(y3[0] == 0.0);
  CHECK(y3[1] == 0.0);

  CHECK_THROWS_AS(fc_forward(spec, theta, std::vector<double>{1.0}), Error);
}

TEST_CASE("fc_backward formulas and finite differences") {
  FcSpec spec{1, 1, 0.1};
  Tensor th({1, 1}, {0.0});
  FcBackward direct = fc_backward(spec, th, std::vector<double>{3.0},
                                  std::vector<double>{2.0});
  CHECK(direct.grad_theta.values[0] == doctest::Approx(-0.6));

  FcSpec id_spec{3, 3, 0.1};
  Tensor eye({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  std::vector<double> g{0.5, -1.0, 2.0};
  FcBackward idb = fc_backward(id_spec, eye, std::vector<double>{1, 2, 3}, g);
  CHECK(idb.grad_x == g);

  // 16 -> 8 layer against central differences
  Rng rng(41);
  FcSpec fd_spec{16, 8, 1.0};
  Tensor theta = random_matrix(rng, 16, 8);
  std::vector<double> x(16), target(8);
  for (auto& v : x) v = rng.uniform(-1.0, 1.0);
  for (auto& v : target) v = rng.uniform(-1.0, 1.0);
  auto objective = [&](const Tensor& th_, const std::vector<double>& x_) {
    return loss_eval(fc_forward(fd_spec, th_, x_), target).loss;
  };
  LossResult loss = loss_eval(fc_forward(fd_spec, theta, x), target);
  FcBackward bwd = fc_backward(fd_spec, theta, x, loss.grad);
  for (size_t k = 0; k < x.size(); k++) {
    auto xp = x, xm = x;
    xp[k] += kFdStep;
    xm[k] -= kFdStep;
    double fd = (objective(theta, xp) - objective(theta, xm)) / (2 * kFdStep);
    CHECK(std::abs(bwd.grad_x[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
  }
  for (size_t k = 0; k < theta.values.size(); k++) {
    Tensor tp = theta, tm = theta;
    tp.values[k] += kFdStep;
    tm.values[k] -= kFdStep;
    double fd = (objective(tp, x) - objective(tm, x)) / (2 * kFdStep);
    CHECK(std::abs(-bwd.grad_theta.values[k] - fd) <=
          1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("activations") {
  std::vector<double> in{-1.0, 0.0, 2.0};
  auto out = activation_apply(ActivationKind::relu, in);
  CHECK(out == std::vector<double>{0.0, 0.0, 2.0});
  CHECK(activation_at(ActivationKind::sigmoid, 0.0) == doctest::Approx(0.5));
  CHECK(activation_grad_at(ActivationKind::relu, 0.0, 5.0) == 0.0);

  // sigmoid gradient vs finite differences, tight tolerance
  Rng rng(43);
  for (int k = 0; k < 200; k++) {
    double x = rng.uniform(-4.0, 4.0);
    double g = rng.uniform(-2.0, 2.0);
    double fd = (activation_at(ActivationKind::sigmoid, x + kFdStep) -
                 activation_at(ActivationKind::sigmoid, x - kFdStep)) /
                (2 * kFdStep) * g;
    double got = activation_grad_at(ActivationKind::sigmoid, x, g);
    CHECK(std::abs(got - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("mse loss and gradient") {
  std::vector<double> y{1.0, -2.0, 0.5};
  LossResult same = loss_eval(y, y);
  CHECK(same.loss == 0.0);
  for (double g : same.grad) CHECK(g == 0.0);

  LossResult l = loss_eval(std::vector<double>{1.0, 0.0},
                           std::vector<double>{0.0, 0.0});
  CHECK(l.loss == doctest::Approx(0.5));
  CHECK(l.grad[0] == doctest::Approx(1.0));
  CHECK(l.grad[1] == 0.0);

  Rng rng(47);
  std::vector<double> yhat(6), target(6);
  for (auto& v : yhat) v = rng.uniform(-1.0, 1.0);
  for (auto& v : target) v = rng.uniform(-1.0, 1.0);
  LossResult r = loss_eval(yhat, target);
  for (size_t k = 0; k < yhat.size(); k++) {
    auto p = yhat, m = yhat;
    p[k] += kFdStep;
    m[k] -= kFdStep;
    double fd =
        (loss_eval(p, target).loss - loss_eval(m, target).loss) / (2 * kFdStep);
    CHECK(std::abs(r.grad[k] - fd) <= 1e-7 * std::max(1.0, std::abs(fd)));
  }
  CHECK_THROWS_AS(loss_eval(yhat, std::vector<double>{1.0}), Error);
}

TEST_CASE("forward passes are linear in the input") {
  Rng rng(53);
  ConvSpec spec{2, 3, 1, 6, 0.01};
  auto filters = random_filters(rng, spec);
  Tensor x1 = random_matrix(rng, 6, 6);
  Tensor x2 = random_matrix(rng, 6, 6);
  double a = 0.75, b = -1.5;
  Tensor mix = Tensor::zeros({6, 6});
  for (size_t k = 0; k < 36; k++) {
    mix.values[k] = a * x1.values[k] + b * x2.values[k];
  }
  Tensor y1 = conv_forward(spec, x1, filters);
  Tensor y2 = conv_forward(spec, x2, filters);
  Tensor ym = conv_forward(spec, mix, filters);
  for (size_t k = 0; k < ym.values.size(); k++) {
    CHECK(std::abs(ym.values[k] - (a * y1.values[k] + b * y2.values[k])) <=
          1e-12 * std::max(1.0, std::abs(ym.values[k])));
  }

  FcSpec fs{12, 5, 0.01};
  Tensor theta = random_matrix(rng, 12, 5);
  std::vector<double> u(12), v(12), w(12);
  for (size_t k = 0; k < 12; k++) {
    u[k] = rng.uniform(-1.0, 1.0);
    v[k] = rng.uniform(-1.0, 1.0);
    w[k] = a * u[k] + b * v[k];
  }
  auto fu = fc_forward(fs, theta, u);
  auto fv = fc_forward(fs, theta, v);
  auto fw = fc_forward(fs, theta, w);
  for (size_t k = 0; k < 5; k++) {
    CHECK(std::abs(fw[k] - (a * fu[k] + b * fv[k])) <=
          1e-12 * std::max(1.0, std::abs(fw[k])));
  }
}
