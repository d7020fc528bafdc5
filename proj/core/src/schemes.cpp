#include "flaudit/schemes.hpp"

#include <algorithm>
#include <cmath>

namespace flaudit {

size_t landmark_side(const ConvSpec& spec) {
  return spec.stride * ((spec.alpha_f + spec.stride - 1) / spec.stride);
}

size_t landmark_blocks_per_side(const ConvSpec& spec) {
  size_t side = landmark_side(spec);
  return (spec.alpha_x + side - 1) / side;
}

size_t landmark_leaf_count(const ConvSpec& spec) {
  size_t b = landmark_blocks_per_side(spec);
  return b * b;
}

BlockRange landmark_block(const ConvSpec& spec, size_t bi, size_t bj) {
  size_t side = landmark_side(spec);
  BlockRange r;
  r.r0 = bi * side;
  r.r1 = std::min((bi + 1) * side, spec.alpha_x);
  r.c0 = bj * side;
  r.c1 = std::min((bj + 1) * side, spec.alpha_x);
  require(r.r0 < r.r1 && r.c0 < r.c1, ErrorCode::index_out_of_range,
          "landmark block outside input");
  return r;
}

std::vector<std::pair<size_t, size_t>> covering_blocks(const ConvSpec& spec,
                                                       size_t r, size_t c) {
  // geometric coverage of the receptive field rows [r*d, r*d+alpha_f) and
  // columns [c*d, c*d+alpha_f)
  size_t side = landmark_side(spec);
  size_t r_lo = (r * spec.stride) / side;
  size_t r_hi = (r * spec.stride + spec.alpha_f - 1) / side;
  size_t c_lo = (c * spec.stride) / side;
  size_t c_hi = (c * spec.stride + spec.alpha_f - 1) / side;
  std::vector<std::pair<size_t, size_t>> blocks;
  for (size_t bi = r_lo; bi <= r_hi; bi++) {
    for (size_t bj = c_lo; bj <= c_hi; bj++) blocks.emplace_back(bi, bj);
  }
  return blocks;
}

std::vector<double> landmark_values(const ConvSpec& spec, const Tensor& x,
                                    size_t bi, size_t bj) {
  BlockRange b = landmark_block(spec, bi, bj);
  std::vector<double> vals;
  vals.reserve((b.r1 - b.r0) * (b.c1 - b.c0));
  for (size_t r = b.r0; r < b.r1; r++) {
    for (size_t c = b.c0; c < b.c1; c++) vals.push_back(x.at2(r, c));
  }
  return vals;
}

std::vector<std::vector<double>> collect_landmark_leaves(const ConvSpec& spec,
                                                         const Tensor& x) {
  size_t b = landmark_blocks_per_side(spec);
  std::vector<std::vector<double>> groups;
  groups.reserve(b * b);
  for (size_t bi = 0; bi < b; bi++) {
    for (size_t bj = 0; bj < b; bj++) {
      groups.push_back(landmark_values(spec, x, bi, bj));
    }
  }
  return groups;
}

MerkleTree build_landmark_tree(const ConvSpec& spec, const Tensor& x) {
  return group_commit(collect_landmark_leaves(spec, x));
}

std::vector<double> y_row_values(const Tensor& y, size_t t, size_t r) {
  size_t ay = y.shape[1];
  size_t offset = (t * ay + r) * y.shape[2];
  return std::vector<double>(y.values.begin() + offset,
                             y.values.begin() + offset + y.shape[2]);
}

std::vector<std::vector<double>> collect_y_row_leaves(const Tensor& y) {
  require(y.shape.size() == 3, ErrorCode::shape_mismatch, "expected {n_f,ay,ay}");
  std::vector<std::vector<double>> groups;
  groups.reserve(y.shape[0] * y.shape[1]);
  for (size_t t = 0; t < y.shape[0]; t++) {
    for (size_t r = 0; r < y.shape[1]; r++) {
      groups.push_back(y_row_values(y, t, r));
    }
  }
  return groups;
}

MerkleTree build_y_rows_tree(const Tensor& y) {
  return group_commit(collect_y_row_leaves(y));
}

std::vector<double> grad_x_tuple(const std::vector<Tensor>& per_filter,
                                 size_t i, size_t j) {
  std::vector<double> vals;
  vals.reserve(per_filter.size());
  for (const auto& g : per_filter) vals.push_back(g.at2(i, j));
  return vals;
}

std::vector<std::vector<double>> collect_grad_x_leaves(
    const ConvSpec& spec, const std::vector<Tensor>& per_filter) {
  std::vector<std::vector<double>> groups;
  groups.reserve(spec.alpha_x * spec.alpha_x);
  for (size_t i = 0; i < spec.alpha_x; i++) {
    for (size_t j = 0; j < spec.alpha_x; j++) {
      groups.push_back(grad_x_tuple(per_filter, i, j));
    }
  }
  return groups;
}

MerkleTree build_grad_x_tree(const ConvSpec& spec,
                             const std::vector<Tensor>& per_filter) {
  return group_commit(collect_grad_x_leaves(spec, per_filter));
}

std::vector<std::vector<double>> collect_grad_f_leaves(const ConvSpec& spec,
                                                       const ConvBackward& bwd) {
  std::vector<std::vector<double>> groups;
  groups.reserve(grad_f_leaf_count(spec));
  for (size_t t = 0; t < spec.n_f; t++) {
    for (size_t i = 0; i < spec.alpha_f; i++) {
      for (size_t j = 0; j < spec.alpha_f; j++) {
        auto v = bwd.expanded_vector(spec, t, i, j);
        groups.emplace_back(v.begin(), v.end());
      }
    }
  }
  return groups;
}

MerkleTree build_grad_f_tree(const ConvSpec& spec, const ConvBackward& bwd) {
  return group_commit(collect_grad_f_leaves(spec, bwd));
}

std::vector<double> x_group_values(const ConvSpec& spec, const Tensor& x,
                                   size_t i, size_t j, size_t u) {
  size_t ay = conv_output_dim(spec);
  std::vector<double> vals;
  vals.reserve(ay);
  for (size_t v = 0; v < ay; v++) {
    vals.push_back(x.at2(u * spec.stride + i, v * spec.stride + j));
  }
  return vals;
}

std::vector<std::vector<double>> collect_x_group_leaves(const ConvSpec& spec,
                                                        const Tensor& x) {
  size_t ay = conv_output_dim(spec);
  std::vector<std::vector<double>> groups;
  groups.reserve(spec.alpha_f * spec.alpha_f * ay);
  for (size_t i = 0; i < spec.alpha_f; i++) {
    for (size_t j = 0; j < spec.alpha_f; j++) {
      for (size_t u = 0; u < ay; u++) {
        groups.push_back(x_group_values(spec, x, i, j, u));
      }
    }
  }
  return groups;
}

MerkleTree build_x_groups_tree(const ConvSpec& spec, const Tensor& x) {
  return group_commit(collect_x_group_leaves(spec, x));
}

size_t fc_split(size_t l) {
  require(l >= 1, ErrorCode::invalid_spec, "fc_split(0)");
  double target = std::sqrt(double(l));
  size_t best = 1;
  double best_dist = std::abs(1.0 - target);
  for (size_t d = 1; d <= l; d++) {
    if (l % d != 0) continue;
    double dist = std::abs(double(d) - target);
    if (dist < best_dist - 1e-12) {
      best = d;
      best_dist = dist;
    }
    // ties keep the smaller divisor (first seen)
  }
  return best;
}

FcSplit fc_layout(size_t l) {
  size_t n = fc_split(l);
  return FcSplit{n, l / n};
}

double fc_partial_at(const Tensor& theta, std::span<const double> x,
                     const FcSplit& split, size_t i, size_t j) {
  double acc = 0.0;
  size_t base = j * split.block;
  for (size_t u = 0; u < split.block; u++) {
    acc += x[base + u] * theta.at2(base + u, i);
  }
  return acc;
}

Tensor fc_partials(const FcSpec& spec, const Tensor& theta,
                   std::span<const double> x, const FcSplit& split) {
  require(split.n_blocks * split.block == spec.l_x, ErrorCode::shape_mismatch,
          "split does not tile l_x");
  require(x.size() == spec.l_x, ErrorCode::shape_mismatch, "fc input length");
  Tensor p = Tensor::zeros({spec.l_y, split.n_blocks});
  for (size_t i = 0; i < spec.l_y; i++) {
    for (size_t j = 0; j < split.n_blocks; j++) {
      p.at2(i, j) = fc_partial_at(theta, x, split, i, j);
    }
  }
  return p;
}

double fold_row(const Tensor& partials, size_t i) {
  double acc = 0.0;
  for (size_t j = 0; j < partials.cols(); j++) acc += partials.at2(i, j);
  return acc;
}

std::vector<std::vector<double>> collect_partial_row_leaves(
    const Tensor& partials) {
  std::vector<std::vector<double>> groups;
  groups.reserve(partials.rows());
  for (size_t i = 0; i < partials.rows(); i++) {
    std::vector<double> row(partials.cols());
    for (size_t j = 0; j < partials.cols(); j++) row[j] = partials.at2(i, j);
    groups.push_back(std::move(row));
  }
  return groups;
}

MerkleTree build_partial_rows_tree(const Tensor& partials) {
  return group_commit(collect_partial_row_leaves(partials));
}

std::vector<double> subvector_values(std::span<const double> x,
                                     const FcSplit& split, size_t j) {
  auto first = x.begin() + j * split.block;
  return std::vector<double>(first, first + split.block);
}

std::vector<std::vector<double>> collect_subvector_leaves(
    std::span<const double> x, const FcSplit& split) {
  std::vector<std::vector<double>> groups;
  groups.reserve(split.n_blocks);
  for (size_t j = 0; j < split.n_blocks; j++) {
    groups.push_back(subvector_values(x, split, j));
  }
  return groups;
}

MerkleTree build_subvector_tree(std::span<const double> x,
                                const FcSplit& split) {
  return group_commit(collect_subvector_leaves(x, split));
}

std::vector<double> theta_group_values(const Tensor& theta,
                                       const FcSplit& split, size_t j,
                                       size_t i) {
  std::vector<double> vals;
  vals.reserve(split.block);
  for (size_t u = 0; u < split.block; u++) {
    vals.push_back(theta.at2(j * split.block + u, i));
  }
  return vals;
}

std::vector<std::vector<double>> collect_theta_group_leaves(
    const Tensor& theta, const FcSplit& split) {
  size_t l_y = theta.cols();
  std::vector<std::vector<double>> groups;
  groups.reserve(split.n_blocks * l_y);
  for (size_t j = 0; j < split.n_blocks; j++) {
    for (size_t i = 0; i < l_y; i++) {
      groups.push_back(theta_group_values(theta, split, j, i));
    }
  }
  return groups;
}

MerkleTree build_theta_groups_tree(const Tensor& theta, const FcSplit& split) {
  return group_commit(collect_theta_group_leaves(theta, split));
}

double fc_bwd_partial_at(const Tensor& theta, std::span<const double> grad_y,
                         const FcSplit& split_y, size_t i, size_t j) {
  double acc = 0.0;
  size_t base = j * split_y.block;
  for (size_t u = 0; u < split_y.block; u++) {
    acc += theta.at2(i, base + u) * grad_y[base + u];
  }
  return acc;
}

Tensor fc_bwd_partials(const FcSpec& spec, const Tensor& theta,
                       std::span<const double> grad_y,
                       const FcSplit& split_y) {
  require(split_y.n_blocks * split_y.block == spec.l_y,
          ErrorCode::shape_mismatch, "split does not tile l_y");
  require(grad_y.size() == spec.l_y, ErrorCode::shape_mismatch,
          "grad_y length");
  Tensor p = Tensor::zeros({spec.l_x, split_y.n_blocks});
  for (size_t i = 0; i < spec.l_x; i++) {
    for (size_t j = 0; j < split_y.n_blocks; j++) {
      p.at2(i, j) = fc_bwd_partial_at(theta, grad_y, split_y, i, j);
    }
  }
  return p;
}

std::vector<double> theta_bwd_group_values(const Tensor& theta,
                                           const FcSplit& split_y, size_t i,
                                           size_t j) {
  std::vector<double> vals;
  vals.reserve(split_y.block);
  for (size_t u = 0; u < split_y.block; u++) {
    vals.push_back(theta.at2(i, j * split_y.block + u));
  }
  return vals;
}

std::vector<std::vector<double>> collect_theta_bwd_group_leaves(
    const Tensor& theta, const FcSplit& split_y) {
  size_t l_x = theta.rows();
  std::vector<std::vector<double>> groups;
  groups.reserve(l_x * split_y.n_blocks);
  for (size_t i = 0; i < l_x; i++) {
    for (size_t j = 0; j < split_y.n_blocks; j++) {
      groups.push_back(theta_bwd_group_values(theta, split_y, i, j));
    }
  }
  return groups;
}

MerkleTree build_theta_bwd_groups_tree(const Tensor& theta,
                                       const FcSplit& split_y) {
  return group_commit(collect_theta_bwd_group_leaves(theta, split_y));
}

}  // namespace flaudit
