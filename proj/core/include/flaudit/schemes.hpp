#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "flaudit/merkle.hpp"
#include "flaudit/nn.hpp"

// Commitment layouts shared by worker and monitor. Leaf orderings here are
// normative: the monitor derives leaf ordinals from structured index tuples
// on its own and never trusts ordinals supplied by the worker.
//
// Convolution forward commits the input as "landmark" sub-matrices of side
// alpha_f' = stride * ceil(alpha_f / stride) (>= alpha_f), so any receptive
// field is covered by at most 4 blocks, and commits the output as one leaf
// per (filter, row).
//
// Convolution backward commits:
//   grad_x  - one leaf per (i,j) holding the n_f per-filter gradients
//   grad_f  - one leaf per (t,i,j) holding the alpha_y expanded partial sums
//   grad_y  - one leaf per (t,u) row of grad_y
//   x_group - one leaf per (i,j,u) holding {x[u*d+i, v*d+j] : v in [alpha_y)}
//
// A fully-connected layer of length l splits into n_blocks = the divisor of
// l nearest sqrt(l) sub-vectors of s = l / n_blocks elements each; the
// partial-sum matrix has one leaf per output row, and theta is committed in
// groups of s column elements.

namespace flaudit {

// ---- convolution forward: landmark sub-matrices + output rows ----

size_t landmark_side(const ConvSpec& spec);            // alpha_f'
size_t landmark_blocks_per_side(const ConvSpec& spec); // ceil(alpha_x / alpha_f')

struct BlockRange {
  size_t r0, r1, c0, c1;  // half-open element ranges
};

BlockRange landmark_block(const ConvSpec& spec, size_t bi, size_t bj);

/// Landmark blocks (bi,bj) intersecting the receptive field of output (r,c),
/// row-major ascending. At most 4 entries.
std::vector<std::pair<size_t, size_t>> covering_blocks(const ConvSpec& spec,
                                                       size_t r, size_t c);

std::vector<double> landmark_values(const ConvSpec& spec, const Tensor& x,
                                    size_t bi, size_t bj);

inline uint64_t landmark_leaf(const ConvSpec& spec, size_t bi, size_t bj) {
  return bi * landmark_blocks_per_side(spec) + bj;
}

std::vector<std::vector<double>> collect_landmark_leaves(const ConvSpec& spec,
                                                         const Tensor& x);
MerkleTree build_landmark_tree(const ConvSpec& spec, const Tensor& x);

/// One leaf per (t, r): row r of Y^(t). y has shape {n_f, alpha_y, alpha_y}.
inline uint64_t y_row_leaf(size_t alpha_y, size_t t, size_t r) {
  return t * alpha_y + r;
}
std::vector<double> y_row_values(const Tensor& y, size_t t, size_t r);
std::vector<std::vector<double>> collect_y_row_leaves(const Tensor& y);
MerkleTree build_y_rows_tree(const Tensor& y);

// ---- convolution backward ----

inline uint64_t grad_x_leaf(const ConvSpec& spec, size_t i, size_t j) {
  return i * spec.alpha_x + j;
}
std::vector<double> grad_x_tuple(const std::vector<Tensor>& per_filter,
                                 size_t i, size_t j);
std::vector<std::vector<double>> collect_grad_x_leaves(
    const ConvSpec& spec, const std::vector<Tensor>& per_filter);
MerkleTree build_grad_x_tree(const ConvSpec& spec,
                             const std::vector<Tensor>& per_filter);

inline uint64_t grad_f_leaf(const ConvSpec& spec, size_t t, size_t i, size_t j) {
  return (t * spec.alpha_f + i) * spec.alpha_f + j;
}
std::vector<std::vector<double>> collect_grad_f_leaves(const ConvSpec& spec,
                                                       const ConvBackward& bwd);
MerkleTree build_grad_f_tree(const ConvSpec& spec, const ConvBackward& bwd);

inline uint64_t x_group_leaf(const ConvSpec& spec, size_t alpha_y, size_t i,
                             size_t j, size_t u) {
  return (i * spec.alpha_f + j) * alpha_y + u;
}
std::vector<double> x_group_values(const ConvSpec& spec, const Tensor& x,
                                   size_t i, size_t j, size_t u);
std::vector<std::vector<double>> collect_x_group_leaves(const ConvSpec& spec,
                                                        const Tensor& x);
MerkleTree build_x_groups_tree(const ConvSpec& spec, const Tensor& x);

// expected leaf counts, used by the monitor to vet commit messages
size_t landmark_leaf_count(const ConvSpec& spec);
inline size_t y_rows_leaf_count(const ConvSpec& spec) {
  return spec.n_f * conv_output_dim(spec);
}
inline size_t grad_x_leaf_count(const ConvSpec& spec) {
  return spec.alpha_x * spec.alpha_x;
}
inline size_t grad_f_leaf_count(const ConvSpec& spec) {
  return spec.n_f * spec.alpha_f * spec.alpha_f;
}
inline size_t x_groups_leaf_count(const ConvSpec& spec) {
  return spec.alpha_f * spec.alpha_f * conv_output_dim(spec);
}

// ---- fully-connected hierarchical split ----

/// Divisor of l nearest sqrt(l); ties go to the smaller divisor.
size_t fc_split(size_t l);

struct FcSplit {
  size_t n_blocks;  // number of sub-vectors
  size_t block;     // elements per sub-vector
};
FcSplit fc_layout(size_t l);

/// Partial sums Y'[i,j] = sum_{u < block} x[j*block+u] * theta[j*block+u, i],
/// ascending u. Result shape {l_y, n_blocks}; row sums reproduce fc_forward.
Tensor fc_partials(const FcSpec& spec, const Tensor& theta,
                   std::span<const double> x, const FcSplit& split);
double fc_partial_at(const Tensor& theta, std::span<const double> x,
                     const FcSplit& split, size_t i, size_t j);

/// Fold of one partial row, ascending j; this is the committed output value.
double fold_row(const Tensor& partials, size_t i);

std::vector<std::vector<double>> collect_partial_row_leaves(
    const Tensor& partials);
MerkleTree build_partial_rows_tree(const Tensor& partials);
std::vector<double> subvector_values(std::span<const double> x,
                                     const FcSplit& split, size_t j);
std::vector<std::vector<double>> collect_subvector_leaves(
    std::span<const double> x, const FcSplit& split);
MerkleTree build_subvector_tree(std::span<const double> x,
                                const FcSplit& split);

/// Forward theta group (j, i): column i restricted to rows of block j.
std::vector<double> theta_group_values(const Tensor& theta,
                                       const FcSplit& split, size_t j,
                                       size_t i);
inline uint64_t theta_group_leaf(size_t l_y, size_t j, size_t i) {
  return j * l_y + i;
}
std::vector<std::vector<double>> collect_theta_group_leaves(
    const Tensor& theta, const FcSplit& split);
MerkleTree build_theta_groups_tree(const Tensor& theta, const FcSplit& split);

/// Backward analogue down the other axis of theta: the contraction runs over
/// grad_y, split by `split_y`; partials have shape {l_x, n_blocks_y} and the
/// theta group (i, j) is row i restricted to columns of block j.
Tensor fc_bwd_partials(const FcSpec& spec, const Tensor& theta,
                       std::span<const double> grad_y, const FcSplit& split_y);
double fc_bwd_partial_at(const Tensor& theta, std::span<const double> grad_y,
                         const FcSplit& split_y, size_t i, size_t j);
std::vector<double> theta_bwd_group_values(const Tensor& theta,
                                           const FcSplit& split_y, size_t i,
                                           size_t j);
inline uint64_t theta_bwd_group_leaf(size_t n_blocks_y, size_t i, size_t j) {
  return i * n_blocks_y + j;
}
std::vector<std::vector<double>> collect_theta_bwd_group_leaves(
    const Tensor& theta, const FcSplit& split_y);
MerkleTree build_theta_bwd_groups_tree(const Tensor& theta,
                                       const FcSplit& split_y);

}  // namespace flaudit
