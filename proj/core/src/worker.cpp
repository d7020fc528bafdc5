#include "flaudit/worker.hpp"

#include <algorithm>

namespace flaudit {

namespace {

// tuple helpers shared by all ordinal lambdas
uint64_t need(std::span<const uint64_t> tuple, size_t arity, size_t pos,
              uint64_t bound) {
  require(tuple.size() == arity, ErrorCode::unknown_leaf, "bad probe arity");
  require(tuple[pos] < bound, ErrorCode::unknown_leaf, "probe index too large");
  return tuple[pos];
}

}  // namespace

Worker::Worker(std::string name, const RecordStore* store,
               ModelPackage package, CheatStrategy cheat)
    : name_(std::move(name)),
      store_(store),
      package_(std::move(package)),
      cheat_(std::move(cheat)),
      cheat_rng_(cheat_.seed) {
  package_.model.validate();
}

void Worker::set_package(ModelPackage package) {
  package_ = std::move(package);
  package_.model.validate();
}

void Worker::reset_counters() {
  scalars_served_ = 0;
  digests_served_ = 0;
}

bool Worker::targets(const StageId& id) const {
  return stage_name(package_.model, id) == cheat_.target_stage;
}

double Worker::fake_delta() {
  // a nonzero shift guarantees the bit pattern changes
  return cheat_rng_.uniform(0.5, 1.5);
}

std::vector<uint64_t> Worker::plan_fakes(const StageId& id) {
  if (cheat_.mode != CheatStrategy::Mode::fake_outputs || !targets(id)) {
    return {};
  }
  size_t n = stage_slot_count(package_.model, id, y_target_.size());
  uint64_t m = std::min<uint64_t>(cheat_.m, n);
  auto slots = cheat_rng_.sample_distinct(m, n);
  fakes_[stage_name(package_.model, id)] = slots;
  return slots;
}

const std::vector<uint64_t>& Worker::faked_slots(
    const std::string& stage) const {
  static const std::vector<uint64_t> empty;
  auto it = fakes_.find(stage);
  return it == fakes_.end() ? empty : it->second;
}

InitReply Worker::begin_round(uint64_t round, uint64_t requested_id) {
  round_ = round;
  trees_.clear();
  fakes_.clear();
  layers_.assign(package_.model.layers.size(), LayerBuffers{});
  program_ = stage_program(package_.model);
  next_stage_ = 0;

  record_id_ = requested_id;
  if (cheat_.mode == CheatStrategy::Mode::wrong_record) {
    record_id_ = requested_id % store_->count() + 1;  // some other id
    if (record_id_ == requested_id) {
      record_id_ = record_id_ % store_->count() + 1;
    }
  }
  const Record& rec = store_->record(record_id_);
  x0_ = rec.x;
  y_target_ = rec.y;

  // the per-record element tree answers final-layer y probes
  MerkleTree rec_tree = store_->per_record_tree(record_id_);
  std::vector<std::vector<double>> leaves;
  leaves.reserve(rec.x.size() + rec.y.size());
  for (double v : rec.x) leaves.push_back({v});
  for (double v : rec.y) leaves.push_back({v});
  size_t n_elems = leaves.size();
  trees_["init"].insert_or_assign(
      "record", CommittedTree{std::move(rec_tree), std::move(leaves),
                              [n_elems](std::span<const uint64_t> t) {
                                return need(t, 1, 0, n_elems);
                              }});

  InitReply reply;
  reply.record_id = record_id_;
  reply.sigma = rec.sigma;
  reply.record_root = record_hash(rec.x, rec.y);
  reply.evidence = store_->evidence_for(record_id_);
  return reply;
}

void Worker::install_tree(
    const std::string& stage, const std::string& tree_id,
    std::vector<std::vector<double>> leaves,
    std::function<uint64_t(std::span<const uint64_t>)> ord, CommitMsg& msg) {
  MerkleTree tree = group_commit(leaves);
  msg.roots.push_back(TreeRoot{tree_id, tree.root(), tree.leaf_count()});
  trees_[stage].insert_or_assign(
      tree_id, CommittedTree{std::move(tree), std::move(leaves), std::move(ord)});
}

CommitMsg Worker::run_stage(const StageId& id) {
  require(next_stage_ < program_.size(), ErrorCode::missing_prior_commitment,
          "round already complete");
  require(program_[next_stage_] == id, ErrorCode::missing_prior_commitment,
          "stage out of order: expected " +
              stage_name(package_.model, program_[next_stage_]));
  next_stage_++;
  switch (id.kind) {
    case StageKind::transform_fwd: return run_transform_fwd(id.layer);
    case StageKind::act_fwd: return run_act_fwd(id.layer);
    case StageKind::loss: return run_loss();
    case StageKind::act_bwd: return run_act_bwd(id.layer);
    case StageKind::transform_bwd: return run_transform_bwd(id.layer);
  }
  fail(ErrorCode::domain_error, "unreachable stage kind");
}

CommitMsg Worker::run_transform_fwd(size_t l) {
  const Layer& layer = package_.model.layers[l];
  LayerBuffers& buf = layers_[l];
  buf.input = (l == 0) ? x0_ : layers_[l - 1].act_out;
  require(buf.input.size() == layer.input_size(), ErrorCode::shape_mismatch,
          "layer input size");
  StageId id{l, StageKind::transform_fwd};
  std::string stage = stage_name(package_.model, id);
  CommitMsg msg;
  msg.stage = stage;
  bool skip = cheat_.mode == CheatStrategy::Mode::skip_computation && targets(id);

  if (layer.kind == Layer::Kind::conv) {
    const ConvSpec& spec = layer.conv;
    size_t ay = conv_output_dim(spec);
    Tensor x({spec.alpha_x, spec.alpha_x}, buf.input);
    Tensor y = skip ? Tensor::zeros({spec.n_f, ay, ay})
                    : conv_forward(spec, x, layer.filters);
    for (uint64_t slot : plan_fakes(id)) y.values[slot] += fake_delta();
    buf.transform_out = y.values;

    size_t blocks = landmark_blocks_per_side(spec);
    install_tree(stage, "x_landmark", collect_landmark_leaves(spec, x),
                 [blocks](std::span<const uint64_t> t) {
                   uint64_t bi = need(t, 2, 0, blocks);
                   uint64_t bj = need(t, 2, 1, blocks);
                   return bi * blocks + bj;
                 },
                 msg);
    install_tree(stage, "y_rows", collect_y_row_leaves(y),
                 [n_f = spec.n_f, ay](std::span<const uint64_t> t) {
                   uint64_t ft = need(t, 2, 0, n_f);
                   uint64_t r = need(t, 2, 1, ay);
                   return ft * ay + r;
                 },
                 msg);
  } else {
    const FcSpec& spec = layer.fc;
    FcSplit split = fc_layout(spec.l_x);
    Tensor partials =
        skip ? Tensor::zeros({spec.l_y, split.n_blocks})
             : fc_partials(spec, layer.theta, buf.input, split);
    for (uint64_t slot : plan_fakes(id)) partials.values[slot] += fake_delta();
    buf.partials = partials;
    buf.transform_out.assign(spec.l_y, 0.0);
    for (size_t i = 0; i < spec.l_y; i++) {
      buf.transform_out[i] = fold_row(partials, i);
    }

    install_tree(stage, "yprime_rows", collect_partial_row_leaves(partials),
                 [l_y = spec.l_y](std::span<const uint64_t> t) {
                   return need(t, 1, 0, l_y);
                 },
                 msg);
    install_tree(stage, "x_subvectors",
                 collect_subvector_leaves(buf.input, split),
                 [n = split.n_blocks](std::span<const uint64_t> t) {
                   return need(t, 1, 0, n);
                 },
                 msg);
    install_tree(stage, "theta_groups",
                 collect_theta_group_leaves(layer.theta, split),
                 [n = split.n_blocks, l_y = spec.l_y](
                     std::span<const uint64_t> t) {
                   uint64_t j = need(t, 2, 0, n);
                   uint64_t i = need(t, 2, 1, l_y);
                   return j * l_y + i;
                 },
                 msg);
  }
  return msg;
}

CommitMsg Worker::run_act_fwd(size_t l) {
  const Layer& layer = package_.model.layers[l];
  LayerBuffers& buf = layers_[l];
  StageId id{l, StageKind::act_fwd};
  std::string stage = stage_name(package_.model, id);
  bool skip = cheat_.mode == CheatStrategy::Mode::skip_computation && targets(id);

  buf.act_out = skip ? std::vector<double>(buf.transform_out.size(), 0.0)
                     : activation_apply(layer.activation, buf.transform_out);
  for (uint64_t slot : plan_fakes(id)) buf.act_out[slot] += fake_delta();

  CommitMsg msg;
  msg.stage = stage;
  std::vector<std::vector<double>> leaves;
  leaves.reserve(buf.act_out.size());
  for (double v : buf.act_out) leaves.push_back({v});
  size_t n = leaves.size();
  install_tree(stage, "out_elems", std::move(leaves),
               [n](std::span<const uint64_t> t) { return need(t, 1, 0, n); },
               msg);
  return msg;
}

CommitMsg Worker::run_loss() {
  StageId id{0, StageKind::loss};
  std::string stage = "loss";
  const std::vector<double>& yhat = layers_.back().act_out;
  bool skip = cheat_.mode == CheatStrategy::Mode::skip_computation && targets(id);

  if (skip) {
    loss_.loss = 0.0;
    loss_.grad.assign(y_target_.size(), 0.0);
  } else {
    loss_ = loss_eval(yhat, y_target_);
  }
  for (uint64_t slot : plan_fakes(id)) {
    if (slot < loss_.grad.size()) {
      loss_.grad[slot] += fake_delta();
    } else {
      loss_.loss += fake_delta();
    }
  }

  CommitMsg msg;
  msg.stage = stage;
  msg.scalars["loss"] = loss_.loss;
  std::vector<std::vector<double>> leaves;
  leaves.reserve(loss_.grad.size());
  for (double v : loss_.grad) leaves.push_back({v});
  size_t n = leaves.size();
  install_tree(stage, "grad_yhat_elems", std::move(leaves),
               [n](std::span<const uint64_t> t) { return need(t, 1, 0, n); },
               msg);
  return msg;
}

CommitMsg Worker::run_act_bwd(size_t l) {
  const Layer& layer = package_.model.layers[l];
  LayerBuffers& buf = layers_[l];
  StageId id{l, StageKind::act_bwd};
  std::string stage = stage_name(package_.model, id);
  bool skip = cheat_.mode == CheatStrategy::Mode::skip_computation && targets(id);

  buf.grad_act_out = (l + 1 == layers_.size()) ? loss_.grad
                                               : layers_[l + 1].grad_input;
  require(buf.grad_act_out.size() == buf.transform_out.size(),
          ErrorCode::shape_mismatch, "backward chain size");
  buf.grad_transform_out =
      skip ? std::vector<double>(buf.transform_out.size(), 0.0)
           : activation_grad(layer.activation, buf.transform_out,
                             buf.grad_act_out);
  for (uint64_t slot : plan_fakes(id)) {
    buf.grad_transform_out[slot] += fake_delta();
  }

  CommitMsg msg;
  msg.stage = stage;
  std::vector<std::vector<double>> leaves;
  leaves.reserve(buf.grad_transform_out.size());
  for (double v : buf.grad_transform_out) leaves.push_back({v});
  size_t n = leaves.size();
  install_tree(stage, "out_elems", std::move(leaves),
               [n](std::span<const uint64_t> t) { return need(t, 1, 0, n); },
               msg);
  return msg;
}

CommitMsg Worker::run_transform_bwd(size_t l) {
  const Layer& layer = package_.model.layers[l];
  LayerBuffers& buf = layers_[l];
  StageId id{l, StageKind::transform_bwd};
  std::string stage = stage_name(package_.model, id);
  CommitMsg msg;
  msg.stage = stage;
  bool skip = cheat_.mode == CheatStrategy::Mode::skip_computation && targets(id);

  if (layer.kind == Layer::Kind::conv) {
    const ConvSpec& spec = layer.conv;
    size_t ay = conv_output_dim(spec);
    Tensor x({spec.alpha_x, spec.alpha_x}, buf.input);
    Tensor grad_y({spec.n_f, ay, ay}, buf.grad_transform_out);
    if (skip) {
      buf.conv_bwd = ConvBackward{};
      buf.conv_bwd.grad_x = Tensor::zeros({spec.alpha_x, spec.alpha_x});
      buf.conv_bwd.grad_x_per_filter.assign(
          spec.n_f, Tensor::zeros({spec.alpha_x, spec.alpha_x}));
      buf.conv_bwd.grad_f.assign(spec.n_f,
                                 Tensor::zeros({spec.alpha_f, spec.alpha_f}));
      buf.conv_bwd.grad_f_expanded =
          Tensor::zeros({spec.n_f, spec.alpha_f, spec.alpha_f, ay});
    } else {
      buf.conv_bwd = conv_backward(spec, x, layer.filters, grad_y);
    }

    auto slots = plan_fakes(id);
    if (!slots.empty()) {
      size_t dx_slots = spec.n_f * spec.alpha_x * spec.alpha_x;
      for (uint64_t slot : slots) {
        if (slot < dx_slots) {
          size_t t = slot / (spec.alpha_x * spec.alpha_x);
          buf.conv_bwd.grad_x_per_filter[t]
              .values[slot % (spec.alpha_x * spec.alpha_x)] += fake_delta();
        } else {
          buf.conv_bwd.grad_f_expanded.values[slot - dx_slots] += fake_delta();
        }
      }
      // keep the fold consistent with the faked parts
      std::fill(buf.conv_bwd.grad_x.values.begin(),
                buf.conv_bwd.grad_x.values.end(), 0.0);
      for (size_t t = 0; t < spec.n_f; t++) {
        for (size_t k = 0; k < buf.conv_bwd.grad_x.values.size(); k++) {
          buf.conv_bwd.grad_x.values[k] +=
              buf.conv_bwd.grad_x_per_filter[t].values[k];
        }
      }
      for (size_t t = 0; t < spec.n_f; t++) {
        for (size_t i = 0; i < spec.alpha_f; i++) {
          for (size_t j = 0; j < spec.alpha_f; j++) {
            double total = 0.0;
            auto v = buf.conv_bwd.expanded_vector(spec, t, i, j);
            for (double e : v) total += e;
            buf.conv_bwd.grad_f[t].at2(i, j) = -spec.eta * total;
          }
        }
      }
    }
    buf.grad_input = buf.conv_bwd.grad_x.values;

    install_tree(stage, "grad_x",
                 collect_grad_x_leaves(spec, buf.conv_bwd.grad_x_per_filter),
                 [ax = spec.alpha_x](std::span<const uint64_t> t) {
                   uint64_t i = need(t, 2, 0, ax);
                   uint64_t j = need(t, 2, 1, ax);
                   return i * ax + j;
                 },
                 msg);
    install_tree(stage, "grad_f", collect_grad_f_leaves(spec, buf.conv_bwd),
                 [n_f = spec.n_f, af = spec.alpha_f](
                     std::span<const uint64_t> t) {
                   uint64_t ft = need(t, 3, 0, n_f);
                   uint64_t i = need(t, 3, 1, af);
                   uint64_t j = need(t, 3, 2, af);
                   return (ft * af + i) * af + j;
                 },
                 msg);
    install_tree(stage, "grad_y_rows", collect_y_row_leaves(grad_y),
                 [n_f = spec.n_f, ay](std::span<const uint64_t> t) {
                   uint64_t ft = need(t, 2, 0, n_f);
                   uint64_t u = need(t, 2, 1, ay);
                   return ft * ay + u;
                 },
                 msg);
    install_tree(stage, "x_groups", collect_x_group_leaves(spec, x),
                 [af = spec.alpha_f, ay](std::span<const uint64_t> t) {
                   uint64_t i = need(t, 3, 0, af);
                   uint64_t j = need(t, 3, 1, af);
                   uint64_t u = need(t, 3, 2, ay);
                   return (i * af + j) * ay + u;
                 },
                 msg);
  } else {
    const FcSpec& spec = layer.fc;
    FcSplit split_y = fc_layout(spec.l_y);
    Tensor bwd_partials =
        skip ? Tensor::zeros({spec.l_x, split_y.n_blocks})
             : fc_bwd_partials(spec, layer.theta, buf.grad_transform_out,
                               split_y);
    for (uint64_t slot : plan_fakes(id)) {
      bwd_partials.values[slot] += fake_delta();
    }
    buf.bwd_partials = bwd_partials;
    buf.grad_input.assign(spec.l_x, 0.0);
    for (size_t i = 0; i < spec.l_x; i++) {
      buf.grad_input[i] = fold_row(bwd_partials, i);
    }
    buf.grad_theta = Tensor::zeros({spec.l_x, spec.l_y});
    if (!skip) {
      for (size_t j = 0; j < spec.l_x; j++) {
        for (size_t i = 0; i < spec.l_y; i++) {
          buf.grad_theta.at2(j, i) =
              -spec.eta * buf.grad_transform_out[i] * buf.input[j];
        }
      }
    }

    install_tree(stage, "gradx_rows", collect_partial_row_leaves(bwd_partials),
                 [l_x = spec.l_x](std::span<const uint64_t> t) {
                   return need(t, 1, 0, l_x);
                 },
                 msg);
    install_tree(stage, "grady_subvectors",
                 collect_subvector_leaves(buf.grad_transform_out, split_y),
                 [n = split_y.n_blocks](std::span<const uint64_t> t) {
                   return need(t, 1, 0, n);
                 },
                 msg);
    install_tree(stage, "theta_bwd_groups",
                 collect_theta_bwd_group_leaves(layer.theta, split_y),
                 [l_x = spec.l_x, n = split_y.n_blocks](
                     std::span<const uint64_t> t) {
                   uint64_t i = need(t, 2, 0, l_x);
                   uint64_t j = need(t, 2, 1, n);
                   return i * n + j;
                 },
                 msg);
  }
  return msg;
}

Response Worker::answer(const Challenge& challenge) {
  auto sit = trees_.find(challenge.stage);
  require(sit != trees_.end(), ErrorCode::missing_prior_commitment,
          "no commitment for stage " + challenge.stage);
  bool forge = cheat_.mode == CheatStrategy::Mode::fake_evidence &&
               challenge.stage == cheat_.target_stage;
  Response resp;
  resp.stage = challenge.stage;
  for (const auto& probe : challenge.probes) {
    auto tit = sit->second.find(probe.tree);
    require(tit != sit->second.end(), ErrorCode::unknown_leaf,
            "unknown tree " + probe.tree);
    const CommittedTree& ct = tit->second;
    uint64_t ord = ct.ordinal_of(probe.index);
    ResponseEntry entry;
    entry.tree = probe.tree;
    entry.leaf = ord;
    entry.values = ct.leaves[ord];
    entry.evidence = ct.tree.evidence_for(ord);
    if (forge) {
      for (auto& step : entry.evidence.path) {
        for (auto& b : step.sibling.bytes) b = uint8_t(cheat_rng_.next());
      }
    }
    scalars_served_ += entry.values.size();
    digests_served_ += entry.evidence.path.size();
    resp.entries.push_back(std::move(entry));
  }
  return resp;
}

ModelUpdate Worker::round_update() const {
  require(next_stage_ == program_.size(), ErrorCode::missing_prior_commitment,
          "round not complete");
  ModelUpdate update;
  update.filter_deltas.resize(layers_.size());
  update.theta_deltas.resize(layers_.size());
  for (size_t l = 0; l < layers_.size(); l++) {
    const Layer& layer = package_.model.layers[l];
    if (layer.kind == Layer::Kind::conv) {
      update.filter_deltas[l] = layers_[l].conv_bwd.grad_f;
    } else {
      update.theta_deltas[l] = layers_[l].grad_theta;
    }
  }
  return update;
}

}  // namespace flaudit
