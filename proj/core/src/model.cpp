#include "flaudit/model.hpp"

#include "flaudit/encode.hpp"

namespace flaudit {

size_t Layer::input_size() const {
  return kind == Kind::conv ? conv.alpha_x * conv.alpha_x : fc.l_x;
}

size_t Layer::output_size() const {
  if (kind == Kind::conv) {
    size_t ay = conv_output_dim(conv);
    return conv.n_f * ay * ay;
  }
  return fc.l_y;
}

void GlobalModel::validate() const {
  require(!layers.empty(), ErrorCode::invalid_spec, "model has no layers");
  for (size_t l = 0; l < layers.size(); l++) {
    const Layer& layer = layers[l];
    if (layer.kind == Layer::Kind::conv) {
      conv_output_dim(layer.conv);
      require(layer.filters.size() == layer.conv.n_f, ErrorCode::shape_mismatch,
              "filter count");
      for (const auto& f : layer.filters) {
        require(f.shape == std::vector<size_t>{layer.conv.alpha_f,
                                               layer.conv.alpha_f},
                ErrorCode::shape_mismatch, "filter shape");
        require(f.all_finite(), ErrorCode::invalid_spec, "non-finite filter");
      }
    } else {
      require(layer.theta.shape ==
                  std::vector<size_t>{layer.fc.l_x, layer.fc.l_y},
              ErrorCode::shape_mismatch, "theta shape");
      require(layer.theta.all_finite(), ErrorCode::invalid_spec,
              "non-finite theta");
    }
    if (l + 1 < layers.size()) {
      require(layer.output_size() == layers[l + 1].input_size(),
              ErrorCode::shape_mismatch,
              "layer " + std::to_string(l) + " output does not feed layer " +
                  std::to_string(l + 1));
    }
  }
}

Bytes filter_sign_payload(uint64_t version, size_t layer, size_t t,
                          const Tensor& filter) {
  Bytes payload;
  append_u64_le(payload, version);
  append_u64_le(payload, layer);
  append_u64_le(payload, t);
  for (size_t d : filter.shape) append_u64_le(payload, d);
  for (double v : filter.values) append_f64(payload, v);
  return payload;
}

Bytes theta_sign_payload(uint64_t version, size_t layer, bool forward,
                         const Digest& root) {
  Bytes payload;
  append_u64_le(payload, version);
  append_u64_le(payload, layer);
  payload.push_back(forward ? 0x46 : 0x42);  // 'F' / 'B'
  append(payload, root.view());
  return payload;
}

Digest ModelUpdate::digest() const {
  Bytes payload;
  append_u64_le(payload, filter_deltas.size());
  for (size_t l = 0; l < filter_deltas.size(); l++) {
    append_u64_le(payload, filter_deltas[l].size());
    for (const auto& t : filter_deltas[l]) {
      for (size_t d : t.shape) append_u64_le(payload, d);
      for (double v : t.values) append_f64(payload, v);
    }
    if (l < theta_deltas.size() && !theta_deltas[l].values.empty()) {
      payload.push_back(0x54);  // 'T'
      for (size_t d : theta_deltas[l].shape) append_u64_le(payload, d);
      for (double v : theta_deltas[l].values) append_f64(payload, v);
    }
  }
  return sha256(payload);
}

std::string stage_name(const GlobalModel& model, const StageId& id) {
  if (id.kind == StageKind::loss) return "loss";
  const Layer& layer = model.layers.at(id.layer);
  std::string prefix = "L" + std::to_string(id.layer) + ".";
  switch (id.kind) {
    case StageKind::transform_fwd:
      return prefix + (layer.kind == Layer::Kind::conv ? "conv_fwd" : "fc_fwd");
    case StageKind::act_fwd:
      return prefix + "act_fwd";
    case StageKind::act_bwd:
      return prefix + "act_bwd";
    case StageKind::transform_bwd:
      return prefix + (layer.kind == Layer::Kind::conv ? "conv_bwd" : "fc_bwd");
    case StageKind::loss:
      break;
  }
  return "loss";
}

std::vector<StageId> stage_program(const GlobalModel& model) {
  std::vector<StageId> program;
  for (size_t l = 0; l < model.layers.size(); l++) {
    program.push_back({l, StageKind::transform_fwd});
    program.push_back({l, StageKind::act_fwd});
  }
  program.push_back({0, StageKind::loss});
  for (size_t l = model.layers.size(); l-- > 0;) {
    program.push_back({l, StageKind::act_bwd});
    program.push_back({l, StageKind::transform_bwd});
  }
  return program;
}

size_t stage_slot_count(const GlobalModel& model, const StageId& id,
                        size_t n_y) {
  if (id.kind == StageKind::loss) return n_y + 1;  // gradients plus the loss
  const Layer& layer = model.layers.at(id.layer);
  switch (id.kind) {
    case StageKind::transform_fwd:
      if (layer.kind == Layer::Kind::conv) return layer.output_size();
      return layer.fc.l_y * fc_layout(layer.fc.l_x).n_blocks;
    case StageKind::act_fwd:
    case StageKind::act_bwd:
      return layer.output_size();
    case StageKind::transform_bwd:
      if (layer.kind == Layer::Kind::conv) {
        const ConvSpec& s = layer.conv;
        size_t ay = conv_output_dim(s);
        return s.n_f * s.alpha_x * s.alpha_x +
               s.n_f * s.alpha_f * s.alpha_f * ay;
      }
      return layer.fc.l_x * fc_layout(layer.fc.l_y).n_blocks;
    case StageKind::loss:
      break;
  }
  return 0;
}

ProbeTarget stage_slot_target(const GlobalModel& model, const StageId& id,
                              uint64_t slot, size_t n_y) {
  using Battery = ProbeTarget::Battery;
  if (id.kind == StageKind::loss) {
    // final-layer audit retrieves everything; no tuple needed
    (void)n_y;
    return {Battery::final_layer, {}};
  }
  const Layer& layer = model.layers.at(id.layer);
  switch (id.kind) {
    case StageKind::transform_fwd:
      if (layer.kind == Layer::Kind::conv) {
        size_t ay = conv_output_dim(layer.conv);
        return {Battery::conv_fwd,
                {slot / (ay * ay), (slot / ay) % ay, slot % ay}};
      } else {
        size_t n_blocks = fc_layout(layer.fc.l_x).n_blocks;
        return {Battery::fc_fwd, {slot / n_blocks, slot % n_blocks}};
      }
    case StageKind::act_fwd:
    case StageKind::act_bwd:
      return {Battery::simd, {slot}};
    case StageKind::transform_bwd:
      if (layer.kind == Layer::Kind::conv) {
        const ConvSpec& s = layer.conv;
        size_t ay = conv_output_dim(s);
        size_t dx_slots = s.n_f * s.alpha_x * s.alpha_x;
        if (slot < dx_slots) {
          size_t per = s.alpha_x * s.alpha_x;
          return {Battery::conv_dx,
                  {slot / per, (slot / s.alpha_x) % s.alpha_x,
                   slot % s.alpha_x}};
        }
        uint64_t k = slot - dx_slots;
        size_t per_t = s.alpha_f * s.alpha_f * ay;
        return {Battery::conv_df,
                {k / per_t, (k / (s.alpha_f * ay)) % s.alpha_f,
                 (k / ay) % s.alpha_f, k % ay}};
      } else {
        size_t n_blocks = fc_layout(layer.fc.l_y).n_blocks;
        return {Battery::fc_bwd, {slot / n_blocks, slot % n_blocks}};
      }
    case StageKind::loss:
      break;
  }
  return {Battery::simd, {slot}};
}

}  // namespace flaudit
