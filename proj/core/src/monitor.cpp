#include "flaudit/monitor.hpp"

#include <bit>

#include "json.hpp"

namespace flaudit {

namespace {

inline bool bits_equal(double a, double b) {
  return std::bit_cast<uint64_t>(a) == std::bit_cast<uint64_t>(b);
}

}  // namespace

std::string battery_name(ProbeTarget::Battery battery) {
  using B = ProbeTarget::Battery;
  switch (battery) {
    case B::simd: return "simd";
    case B::conv_fwd: return "conv_fwd";
    case B::conv_dx: return "conv_dx";
    case B::conv_df: return "conv_df";
    case B::fc_fwd: return "fc_fwd";
    case B::fc_bwd: return "fc_bwd";
    case B::final_layer: return "final";
  }
  return "?";
}

std::string TestReport::to_json_line() const {
  nlohmann::json probes_json = nlohmann::json::array();
  for (const auto& p : probes) {
    probes_json.push_back({{"tuple", p.tuple}, {"failed", p.failed}});
  }
  return nlohmann::json{{"stage", stage},
                        {"battery", battery},
                        {"verdict", honest ? "honest" : "dishonest"},
                        {"reason", reason},
                        {"probes", probes_json},
                        {"reads_scalars", reads_scalars},
                        {"reads_digests", reads_digests},
                        {"recompute_mults", recompute_mults}}
      .dump();
}

Monitor::Monitor(RecordDigestInfo record_info, const ModelPackage& package,
                 const Signer& cs_key, const Signer& authority_key,
                 HmacSigner endorse_key, size_t p, uint64_t seed)
    : h_r_(record_info.h_r),
      n_r_(record_info.n_r),
      endorse_key_(std::move(endorse_key)),
      cs_key_(&cs_key),
      authority_key_(&authority_key),
      p_(p),
      rng_(seed) {
  require(p_ >= 2, ErrorCode::invalid_spec,
          "selective testing needs p >= 2 (deposit bound is undefined below)");
  require(n_r_ >= 1, ErrorCode::invalid_spec, "empty record store");
  set_package(package);
}

void Monitor::set_package(const ModelPackage& package) {
  verify_package(package, *cs_key_);
  trusted_ = package.model;
  signatures_ = package.signatures;
  for (auto& layer : trusted_.layers) layer.theta = Tensor{};  // not retained
  n_y_ = trusted_.layers.back().output_size();
  program_ = stage_program(trusted_);
}

uint64_t Monitor::begin_round(uint64_t round) {
  round_ = round;
  roots_.clear();
  stage_scalars_.clear();
  reports_.clear();
  commits_seen_ = 0;
  init_ok_ = false;
  record_id_ = rng_.below(n_r_) + 1;
  return record_id_;
}

bool Monitor::check_init(const InitReply& reply) {
  TestReport report;
  report.stage = "init";
  report.battery = "init";
  Bytes payload = record_leaf_payload(record_id_, reply.sigma);
  bool member = verify_element(payload, record_id_ - 1, h_r_, reply.evidence,
                               n_r_);
  bool signed_ok = authority_key_->verify(reply.record_root.view(), reply.sigma);
  report.reads_digests = reply.evidence.path.size();
  if (!member) {
    report.honest = false;
    report.reason = "record opening does not reach h_R";
  } else if (!signed_ok) {
    report.honest = false;
    report.reason = "record signature invalid";
  } else if (reply.record_id != record_id_) {
    report.honest = false;
    report.reason = "worker used a different record id";
  }
  init_ok_ = report.honest;
  record_root_ = reply.record_root;
  reports_.push_back(report);
  return init_ok_;
}

namespace {

struct ExpectedTree {
  std::string name;
  uint64_t leaves;
};

std::vector<ExpectedTree> expected_trees(const GlobalModel& model,
                                         const StageId& id, size_t n_y) {
  if (id.kind == StageKind::loss) return {{"grad_yhat_elems", n_y}};
  const Layer& layer = model.layers.at(id.layer);
  switch (id.kind) {
    case StageKind::transform_fwd:
      if (layer.kind == Layer::Kind::conv) {
        return {{"x_landmark", landmark_leaf_count(layer.conv)},
                {"y_rows", y_rows_leaf_count(layer.conv)}};
      } else {
        FcSplit split = fc_layout(layer.fc.l_x);
        return {{"yprime_rows", layer.fc.l_y},
                {"x_subvectors", split.n_blocks},
                {"theta_groups", split.n_blocks * layer.fc.l_y}};
      }
    case StageKind::act_fwd:
    case StageKind::act_bwd:
      return {{"out_elems", layer.output_size()}};
    case StageKind::transform_bwd:
      if (layer.kind == Layer::Kind::conv) {
        return {{"grad_x", grad_x_leaf_count(layer.conv)},
                {"grad_f", grad_f_leaf_count(layer.conv)},
                {"grad_y_rows", y_rows_leaf_count(layer.conv)},
                {"x_groups", x_groups_leaf_count(layer.conv)}};
      } else {
        FcSplit split = fc_layout(layer.fc.l_y);
        return {{"gradx_rows", layer.fc.l_x},
                {"grady_subvectors", split.n_blocks},
                {"theta_bwd_groups", layer.fc.l_x * split.n_blocks}};
      }
    case StageKind::loss:
      break;
  }
  return {};
}

}  // namespace

bool Monitor::on_commit(const CommitMsg& msg) {
  TestReport report;
  report.stage = msg.stage;
  report.battery = "commit";
  auto flag = [&](const std::string& why) {
    report.honest = false;
    report.reason = why;
    reports_.push_back(report);
    return false;
  };

  if (commits_seen_ >= program_.size()) return flag("unexpected extra stage");
  const StageId& expected = program_[commits_seen_];
  if (stage_name(trusted_, expected) != msg.stage) {
    return flag("stage out of order");
  }
  auto expect = expected_trees(trusted_, expected, n_y_);
  if (expect.size() != msg.roots.size()) return flag("tree set mismatch");
  for (size_t k = 0; k < expect.size(); k++) {
    if (msg.roots[k].tree != expect[k].name) return flag("tree name mismatch");
    if (msg.roots[k].leaves != expect[k].leaves) {
      return flag("leaf count mismatch for " + expect[k].name);
    }
    roots_[msg.stage][msg.roots[k].tree] =
        CommitmentRef{msg.roots[k].root, msg.roots[k].leaves};
  }
  if (expected.kind == StageKind::loss) {
    auto it = msg.scalars.find("loss");
    if (it == msg.scalars.end()) return flag("loss value missing");
    stage_scalars_["loss"] = it->second;
  }
  commits_seen_++;
  return true;
}

const Monitor::CommitmentRef* Monitor::find_root(const std::string& stage,
                                                 const std::string& tree) const {
  auto sit = roots_.find(stage);
  if (sit == roots_.end()) return nullptr;
  auto tit = sit->second.find(tree);
  if (tit == sit->second.end()) return nullptr;
  return &tit->second;
}

Response Monitor::ask(const WorkerChannel& channel, const Challenge& challenge,
                      TestReport& report) {
  Response resp = channel(challenge);
  report.reads_scalars += response_scalar_count(resp);
  report.reads_digests += response_digest_count(resp);
  return resp;
}

bool Monitor::check_entry(TestReport& report, const Response& resp, size_t at,
                          const std::string& stage, const std::string& tree,
                          uint64_t ordinal, size_t payload_len,
                          const std::string& subtest) {
  auto fail_with = [&](const std::string& why) {
    report.honest = false;
    if (report.reason.empty()) report.reason = subtest + ": " + why;
    return false;
  };
  if (at >= resp.entries.size()) return fail_with("missing response entry");
  const ResponseEntry& e = resp.entries[at];
  const CommitmentRef* ref = find_root(stage, tree);
  if (ref == nullptr) return fail_with("no committed root");
  if (e.tree != tree) return fail_with("tree id mismatch");
  if (e.leaf != ordinal) return fail_with("leaf ordinal mismatch");
  if (e.values.size() != payload_len) return fail_with("payload size");
  if (!verify_element(group_payload(e.values), ordinal, ref->root, e.evidence,
                      ref->leaves)) {
    return fail_with("evidence rejected");
  }
  return true;
}

std::vector<std::vector<uint64_t>> Monitor::draw_plan(
    const StageId& id, ProbeTarget::Battery battery) {
  using B = ProbeTarget::Battery;
  const Layer& layer = trusted_.layers.at(
      id.kind == StageKind::loss ? 0 : id.layer);
  size_t n = 0;
  switch (battery) {
    case B::simd: n = layer.output_size(); break;
    case B::conv_fwd: {
      size_t ay = conv_output_dim(layer.conv);
      n = layer.conv.n_f * ay * ay;
      break;
    }
    case B::conv_dx:
      n = layer.conv.n_f * layer.conv.alpha_x * layer.conv.alpha_x;
      break;
    case B::conv_df: {
      size_t ay = conv_output_dim(layer.conv);
      n = layer.conv.n_f * layer.conv.alpha_f * layer.conv.alpha_f * ay;
      break;
    }
    case B::fc_fwd:
      n = layer.fc.l_y * fc_layout(layer.fc.l_x).n_blocks;
      break;
    case B::fc_bwd:
      n = layer.fc.l_x * fc_layout(layer.fc.l_y).n_blocks;
      break;
    case B::final_layer:
      return {};
  }
  size_t picks = std::min(p_, n);
  auto flats = rng_.sample_distinct(picks, n);
  std::vector<std::vector<uint64_t>> plan;
  plan.reserve(picks);
  for (uint64_t flat : flats) {
    switch (battery) {
      case B::simd:
        plan.push_back({flat});
        break;
      case B::conv_fwd: {
        size_t ay = conv_output_dim(layer.conv);
        plan.push_back({flat / (ay * ay), (flat / ay) % ay, flat % ay});
        break;
      }
      case B::conv_dx: {
        size_t ax = layer.conv.alpha_x;
        plan.push_back({flat / (ax * ax), (flat / ax) % ax, flat % ax});
        break;
      }
      case B::conv_df: {
        size_t ay = conv_output_dim(layer.conv);
        size_t af = layer.conv.alpha_f;
        plan.push_back({flat / (af * af * ay), (flat / (af * ay)) % af,
                        (flat / ay) % af, flat % ay});
        break;
      }
      case B::fc_fwd: {
        size_t blocks = fc_layout(layer.fc.l_x).n_blocks;
        plan.push_back({flat / blocks, flat % blocks});
        break;
      }
      case B::fc_bwd: {
        size_t blocks = fc_layout(layer.fc.l_y).n_blocks;
        plan.push_back({flat / blocks, flat % blocks});
        break;
      }
      case B::final_layer:
        break;
    }
  }
  return plan;
}

// ---- committed-vector views ----

Monitor::VectorView Monitor::transform_output_view(size_t l) const {
  const Layer& layer = trusted_.layers.at(l);
  StageId id{l, StageKind::transform_fwd};
  VectorView view;
  view.stage = stage_name(trusted_, id);
  if (layer.kind == Layer::Kind::conv) {
    view.kind = VectorView::Kind::conv_rows;
    view.tree = "y_rows";
    view.dim0 = conv_output_dim(layer.conv);
    view.width = view.dim0;
  } else {
    view.kind = VectorView::Kind::row_fold;
    view.tree = "yprime_rows";
    view.width = fc_layout(layer.fc.l_x).n_blocks;
  }
  return view;
}

Monitor::VectorView Monitor::upstream_gradient_view(size_t l) const {
  VectorView view;
  if (l + 1 == trusted_.layers.size()) {
    view.kind = VectorView::Kind::element;
    view.stage = "loss";
    view.tree = "grad_yhat_elems";
    view.width = 1;
    return view;
  }
  const Layer& next = trusted_.layers.at(l + 1);
  StageId id{l + 1, StageKind::transform_bwd};
  view.stage = stage_name(trusted_, id);
  if (next.kind == Layer::Kind::conv) {
    view.kind = VectorView::Kind::tuple_fold;
    view.tree = "grad_x";
    view.dim0 = next.conv.alpha_x;
    view.width = next.conv.n_f;
  } else {
    view.kind = VectorView::Kind::row_fold;
    view.tree = "gradx_rows";
    view.width = fc_layout(next.fc.l_y).n_blocks;
  }
  return view;
}

void Monitor::view_probe(const VectorView& view, uint64_t flat,
                         Challenge& challenge) const {
  switch (view.kind) {
    case VectorView::Kind::element:
      challenge.probes.push_back({view.tree, {flat}});
      break;
    case VectorView::Kind::conv_rows: {
      uint64_t t = flat / (view.dim0 * view.dim0);
      uint64_t r = (flat / view.dim0) % view.dim0;
      challenge.probes.push_back({view.tree, {t, r}});
      break;
    }
    case VectorView::Kind::row_fold:
      challenge.probes.push_back({view.tree, {flat}});
      break;
    case VectorView::Kind::tuple_fold: {
      uint64_t i = flat / view.dim0;
      uint64_t j = flat % view.dim0;
      challenge.probes.push_back({view.tree, {i, j}});
      break;
    }
  }
}

std::optional<double> Monitor::view_value(const VectorView& view,
                                          uint64_t flat, const Response& resp,
                                          size_t at, TestReport& report,
                                          const std::string& subtest) {
  uint64_t ordinal = 0;
  size_t offset = 0;
  switch (view.kind) {
    case VectorView::Kind::element:
      ordinal = flat;
      offset = 0;
      break;
    case VectorView::Kind::conv_rows: {
      uint64_t t = flat / (view.dim0 * view.dim0);
      uint64_t r = (flat / view.dim0) % view.dim0;
      ordinal = t * view.dim0 + r;
      offset = flat % view.dim0;
      break;
    }
    case VectorView::Kind::row_fold:
      ordinal = flat;
      break;
    case VectorView::Kind::tuple_fold:
      ordinal = flat;  // flat already equals i*alpha_x + j
      break;
  }
  if (!check_entry(report, resp, at, view.stage, view.tree, ordinal,
                   view.width, subtest)) {
    return std::nullopt;
  }
  const auto& values = resp.entries[at].values;
  switch (view.kind) {
    case VectorView::Kind::element:
      return values[0];
    case VectorView::Kind::conv_rows:
      return values[offset];
    case VectorView::Kind::row_fold:
    case VectorView::Kind::tuple_fold: {
      double acc = 0.0;
      for (double v : values) acc += v;
      return acc;
    }
  }
  return std::nullopt;
}

// ---- batteries ----

TestReport Monitor::battery_simd(const StageId& id,
                                 const WorkerChannel& channel,
                                 const std::vector<std::vector<uint64_t>>& plan) {
  const Layer& layer = trusted_.layers.at(id.layer);
  bool forward = id.kind == StageKind::act_fwd;
  TestReport report;
  report.stage = stage_name(trusted_, id);
  report.battery = "simd";

  VectorView in_view = forward ? transform_output_view(id.layer)
                               : upstream_gradient_view(id.layer);
  VectorView aux_view = transform_output_view(id.layer);  // activation input
  bool needs_aux = !forward;

  Challenge challenge;
  challenge.stage = report.stage;
  // one entry per probe, in plan order: input, [aux], output
  Challenge in_challenge{in_view.stage, {}};
  Challenge aux_challenge{aux_view.stage, {}};
  for (const auto& tuple : plan) {
    uint64_t flat = tuple.at(0);
    view_probe(in_view, flat, in_challenge);
    if (needs_aux) view_probe(aux_view, flat, aux_challenge);
    challenge.probes.push_back({"out_elems", {flat}});
  }
  Response in_resp = ask(channel, in_challenge, report);
  Response aux_resp = needs_aux ? ask(channel, aux_challenge, report) : Response{};
  Response out_resp = ask(channel, challenge, report);

  for (size_t k = 0; k < plan.size(); k++) {
    uint64_t flat = plan[k].at(0);
    ProbeRecord probe{plan[k], ""};
    auto record_fail = [&](const std::string& name) {
      probe.failed = name;
      report.probes.push_back(probe);
    };
    std::optional<double> u0 =
        view_value(in_view, flat, in_resp, k, report, "input");
    if (!u0) { record_fail("input"); continue; }
    std::optional<double> aux;
    if (needs_aux) {
      aux = view_value(aux_view, flat, aux_resp, k, report, "aux");
      if (!aux) { record_fail("aux"); continue; }
    }
    std::optional<double> u1 =
        view_value({VectorView::Kind::element, report.stage, "out_elems", 0, 1},
                   flat, out_resp, k, report, "output");
    if (!u1) { record_fail("output"); continue; }

    double expect = forward ? activation_at(layer.activation, *u0)
                            : activation_grad_at(layer.activation, *aux, *u0);
    report.recompute_mults += 1;
    if (!bits_equal(expect, *u1)) {
      report.honest = false;
      if (report.reason.empty()) report.reason = "recompute: g(u0) != u1";
      record_fail("recompute");
      continue;
    }
    report.probes.push_back(probe);
  }
  return report;
}

TestReport Monitor::battery_conv_fwd(size_t l, const WorkerChannel& channel,
                                     const std::vector<std::vector<uint64_t>>& plan) {
  const Layer& layer = trusted_.layers.at(l);
  const ConvSpec& spec = layer.conv;
  size_t ay = conv_output_dim(spec);
  size_t side = landmark_side(spec);
  TestReport report;
  report.stage = stage_name(trusted_, StageId{l, StageKind::transform_fwd});
  report.battery = "conv_fwd";

  Challenge challenge{report.stage, {}};
  std::vector<std::vector<std::pair<size_t, size_t>>> block_list(plan.size());
  for (size_t k = 0; k < plan.size(); k++) {
    size_t r = plan[k].at(1), c = plan[k].at(2);
    block_list[k] = covering_blocks(spec, r, c);
    for (auto [bi, bj] : block_list[k]) {
      challenge.probes.push_back({"x_landmark", {bi, bj}});
    }
    challenge.probes.push_back({"y_rows", {plan[k].at(0), r}});
  }
  Response resp = ask(channel, challenge, report);

  size_t at = 0;
  for (size_t k = 0; k < plan.size(); k++) {
    size_t t = plan[k].at(0), r = plan[k].at(1), c = plan[k].at(2);
    ProbeRecord probe{plan[k], ""};
    auto record_fail = [&](const std::string& name) {
      probe.failed = name;
      report.probes.push_back(probe);
    };

    // T1: the filter itself is trusted only through the CS signature
    if (!cs_key_->verify(
            filter_sign_payload(trusted_.version, l, t, layer.filters[t]),
            signatures_.filter_sigs[l][t])) {
      report.honest = false;
      if (report.reason.empty()) report.reason = "T1: filter signature";
      record_fail("T1");
      at += block_list[k].size() + 1;
      continue;
    }

    // T2: landmark blocks covering the receptive field
    std::map<std::pair<size_t, size_t>, std::vector<double>> blocks;
    bool t2_ok = true;
    for (auto [bi, bj] : block_list[k]) {
      BlockRange range = landmark_block(spec, bi, bj);
      size_t len = (range.r1 - range.r0) * (range.c1 - range.c0);
      if (!check_entry(report, resp, at, report.stage, "x_landmark",
                       landmark_leaf(spec, bi, bj), len, "T2")) {
        t2_ok = false;
        at++;
        continue;
      }
      blocks[{bi, bj}] = resp.entries[at].values;
      at++;
    }
    if (!t2_ok) { record_fail("T2"); at++; continue; }

    // T3: the committed output row
    if (!check_entry(report, resp, at, report.stage, "y_rows",
                     y_row_leaf(ay, t, r), ay, "T3")) {
      record_fail("T3");
      at++;
      continue;
    }
    std::vector<double> row = resp.entries[at].values;
    at++;

    // T4: recompute the inner product from the retrieved blocks
    auto x_at = [&](size_t rr, size_t cc) {
      size_t bi = rr / side, bj = cc / side;
      BlockRange range = landmark_block(spec, bi, bj);
      const auto& vals = blocks.at({bi, bj});
      return vals[(rr - range.r0) * (range.c1 - range.c0) + (cc - range.c0)];
    };
    double acc = 0.0;
    for (size_t i = 0; i < spec.alpha_f; i++) {
      for (size_t j = 0; j < spec.alpha_f; j++) {
        acc += x_at(r * spec.stride + i, c * spec.stride + j) *
               layer.filters[t].at2(i, j);
      }
    }
    report.recompute_mults += spec.alpha_f * spec.alpha_f;
    if (!bits_equal(acc, row[c])) {
      report.honest = false;
      if (report.reason.empty()) report.reason = "T4: recompute mismatch";
      record_fail("T4");
      continue;
    }
    report.probes.push_back(probe);
  }
  return report;
}

TestReport Monitor::battery_conv_dx(size_t l, const WorkerChannel& channel,
                                    const std::vector<std::vector<uint64_t>>& plan) {
  const Layer& layer = trusted_.layers.at(l);
  const ConvSpec& spec = layer.conv;
  size_t ay = conv_output_dim(spec);
  TestReport report;
  report.stage = stage_name(trusted_, StageId{l, StageKind::transform_bwd});
  report.battery = "conv_dx";

  auto rows_for = [&](size_t i) {
    std::vector<size_t> rows;
    for (size_t u = 0; u < ay; u++) {
      size_t ru = u * spec.stride;
      if (i >= ru && i - ru < spec.alpha_f) rows.push_back(u);
    }
    return rows;
  };

  Challenge challenge{report.stage, {}};
  std::vector<std::vector<size_t>> row_list(plan.size());
  for (size_t k = 0; k < plan.size(); k++) {
    size_t t = plan[k].at(0), i = plan[k].at(1);
    challenge.probes.push_back({"grad_x", {i, plan[k].at(2)}});
    row_list[k] = rows_for(i);
    for (size_t u : row_list[k]) {
      challenge.probes.push_back({"grad_y_rows", {t, u}});
    }
  }
  Response resp = ask(channel, challenge, report);

  size_t at = 0;
  for (size_t k = 0; k < plan.size(); k++) {
    size_t t = plan[k].at(0), i = plan[k].at(1), j = plan[k].at(2);
    ProbeRecord probe{plan[k], ""};
    auto record_fail = [&](const std::string& name) {
      probe.failed = name;
      report.probes.push_back(probe);
    };

    // T1: the (i,j) leaf holding all per-filter gradients
    if (!check_entry(report, resp, at, report.stage, "grad_x",
                     grad_x_leaf(spec, i, j), spec.n_f, "T1")) {
      record_fail("T1");
      at += 1 + row_list[k].size();
      continue;
    }
    std::vector<double> tuple_vals = resp.entries[at].values;
    at++;

    // T2: every grad_y row feeding element (i, j)
    std::map<size_t, std::vector<double>> rows;
    bool t2_ok = true;
    for (size_t u : row_list[k]) {
      if (!check_entry(report, resp, at, report.stage, "grad_y_rows",
                       y_row_leaf(ay, t, u), ay, "T2")) {
        t2_ok = false;
        at++;
        continue;
      }
      rows[u] = resp.entries[at].values;
      at++;
    }
    if (!t2_ok) { record_fail("T2"); continue; }

    // T3: recompute the per-filter input gradient
    double acc = 0.0;
    for (size_t u = 0; u < ay; u++) {
      size_t ru = u * spec.stride;
      if (i < ru || i - ru >= spec.alpha_f) continue;
      const auto& row = rows.at(u);
      for (size_t v = 0; v < ay; v++) {
        size_t cv = v * spec.stride;
        if (j < cv || j - cv >= spec.alpha_f) continue;
        acc += row[v] *
               layer.filters[t].values[(i - ru) * spec.alpha_f + (j - cv)];
        report.recompute_mults++;
      }
    }
    if (!bits_equal(acc, tuple_vals[t])) {
      report.honest = false;
      if (report.reason.empty()) report.reason = "T3: recompute mismatch";
      record_fail("T3");
      continue;
    }
    report.probes.push_back(probe);
  }
  return report;
}

TestReport Monitor::battery_conv_df(size_t l, const WorkerChannel& channel,
                                    const std::vector<std::vector<uint64_t>>& plan) {
  const Layer& layer = trusted_.layers.at(l);
  const ConvSpec& spec = layer.conv;
  size_t ay = conv_output_dim(spec);
  TestReport report;
  report.stage = stage_name(trusted_, StageId{l, StageKind::transform_bwd});
  report.battery = "conv_df";

  Challenge challenge{report.stage, {}};
  for (const auto& tuple : plan) {
    size_t t = tuple.at(0), i = tuple.at(1), j = tuple.at(2), u = tuple.at(3);
    challenge.probes.push_back({"grad_f", {t, i, j}});
    challenge.probes.push_back({"grad_y_rows", {t, u}});
    challenge.probes.push_back({"x_groups", {i, j, u}});
  }
  Response resp = ask(channel, challenge, report);

  size_t at = 0;
  for (size_t k = 0; k < plan.size(); k++) {
    size_t t = plan[k].at(0), i = plan[k].at(1), j = plan[k].at(2),
           u = plan[k].at(3);
    ProbeRecord probe{plan[k], ""};
    auto record_fail = [&](const std::string& name) {
      probe.failed = name;
      report.probes.push_back(probe);
      at = (k + 1) * 3;
    };

    if (!check_entry(report, resp, at, report.stage, "grad_f",
                     grad_f_leaf(spec, t, i, j), ay, "T1")) {
      record_fail("T1");
      continue;
    }
    std::vector<double> expanded = resp.entries[at].values;
    at++;
    if (!check_entry(report, resp, at, report.stage, "grad_y_rows",
                     y_row_leaf(ay, t, u), ay, "T2")) {
      record_fail("T2");
      continue;
    }
    std::vector<double> row = resp.entries[at].values;
    at++;
    if (!check_entry(report, resp, at, report.stage, "x_groups",
                     x_group_leaf(spec, ay, i, j, u), ay, "T3")) {
      record_fail("T3");
      continue;
    }
    std::vector<double> xgroup = resp.entries[at].values;
    at++;

    double acc = 0.0;
    for (size_t v = 0; v < ay; v++) acc += row[v] * xgroup[v];
    report.recompute_mults += ay;
    if (!bits_equal(acc, expanded[u])) {
      report.honest = false;
      if (report.reason.empty()) report.reason = "T4: recompute mismatch";
      record_fail("T4");
      continue;
    }
    report.probes.push_back(probe);
  }
  return report;
}

TestReport Monitor::battery_fc(size_t l, bool forward,
                               const WorkerChannel& channel,
                               const std::vector<std::vector<uint64_t>>& plan) {
  const Layer& layer = trusted_.layers.at(l);
  const FcSpec& spec = layer.fc;
  FcSplit split = fc_layout(forward ? spec.l_x : spec.l_y);
  TestReport report;
  report.stage = stage_name(
      trusted_, StageId{l, forward ? StageKind::transform_fwd
                                   : StageKind::transform_bwd});
  report.battery = forward ? "fc_fwd" : "fc_bwd";
  const char* row_tree = forward ? "yprime_rows" : "gradx_rows";
  const char* vec_tree = forward ? "x_subvectors" : "grady_subvectors";
  const char* theta_tree = forward ? "theta_groups" : "theta_bwd_groups";

  // the committed theta grouping must be the one the coordinator signed
  const CommitmentRef* theta_ref = find_root(report.stage, theta_tree);
  const Digest& trusted_root = forward ? signatures_.theta_fwd_roots[l]
                                       : signatures_.theta_bwd_roots[l];
  if (theta_ref == nullptr || !(theta_ref->root == trusted_root)) {
    report.honest = false;
    report.reason = "T3: committed theta grouping differs from signed root";
    return report;
  }

  Challenge challenge{report.stage, {}};
  for (const auto& tuple : plan) {
    uint64_t i = tuple.at(0), j = tuple.at(1);
    challenge.probes.push_back({row_tree, {i}});
    challenge.probes.push_back({vec_tree, {j}});
    challenge.probes.push_back(
        {theta_tree, forward ? std::vector<uint64_t>{j, i}
                             : std::vector<uint64_t>{i, j}});
  }
  Response resp = ask(channel, challenge, report);

  size_t at = 0;
  for (size_t k = 0; k < plan.size(); k++) {
    uint64_t i = plan[k].at(0), j = plan[k].at(1);
    ProbeRecord probe{plan[k], ""};
    auto record_fail = [&](const std::string& name) {
      probe.failed = name;
      report.probes.push_back(probe);
      at = (k + 1) * 3;
    };

    if (!check_entry(report, resp, at, report.stage, row_tree, i,
                     split.n_blocks, "T1")) {
      record_fail("T1");
      continue;
    }
    std::vector<double> row = resp.entries[at].values;
    at++;
    if (!check_entry(report, resp, at, report.stage, vec_tree, j, split.block,
                     "T2")) {
      record_fail("T2");
      continue;
    }
    std::vector<double> sub = resp.entries[at].values;
    at++;
    uint64_t theta_ord = forward ? theta_group_leaf(spec.l_y, j, i)
                                 : theta_bwd_group_leaf(split.n_blocks, i, j);
    if (!check_entry(report, resp, at, report.stage, theta_tree, theta_ord,
                     split.block, "T3")) {
      record_fail("T3");
      continue;
    }
    std::vector<double> group = resp.entries[at].values;
    at++;

    double acc = 0.0;
    for (size_t u = 0; u < split.block; u++) acc += sub[u] * group[u];
    report.recompute_mults += split.block;
    if (!bits_equal(acc, row[j])) {
      report.honest = false;
      if (report.reason.empty()) report.reason = "T4: recompute mismatch";
      record_fail("T4");
      continue;
    }
    report.probes.push_back(probe);
  }
  return report;
}

TestReport Monitor::battery_final(const WorkerChannel& channel) {
  TestReport report;
  report.stage = "loss";
  report.battery = "final";
  size_t last = trusted_.layers.size() - 1;
  size_t n_x = trusted_.layers.front().input_size();
  std::string yhat_stage =
      stage_name(trusted_, StageId{last, StageKind::act_fwd});

  Challenge yhat_challenge{yhat_stage, {}};
  Challenge y_challenge{"init", {}};
  for (size_t i = 0; i < n_y_; i++) {
    yhat_challenge.probes.push_back({"out_elems", {i}});
    y_challenge.probes.push_back({"record", {n_x + i}});
  }
  Response yhat_resp = ask(channel, yhat_challenge, report);
  Response y_resp = ask(channel, y_challenge, report);

  std::vector<double> yhat(n_y_), y(n_y_);
  for (size_t i = 0; i < n_y_; i++) {
    if (!check_entry(report, yhat_resp, i, yhat_stage, "out_elems", i, 1,
                     "yhat")) {
      report.probes.push_back({{i}, "yhat"});
      return report;
    }
    yhat[i] = yhat_resp.entries[i].values[0];
    // the y element opens against the per-record tree fixed at round init
    bool ok = y_resp.entries.size() > i;
    if (ok) {
      const ResponseEntry& e = y_resp.entries[i];
      ok = e.tree == "record" && e.values.size() == 1 && e.leaf == n_x + i &&
           verify_element(group_payload(e.values), n_x + i, record_root_,
                          e.evidence, n_x + n_y_);
      if (ok) y[i] = e.values[0];
    }
    if (!ok) {
      report.honest = false;
      report.reason = "y: record evidence rejected";
      report.probes.push_back({{i}, "y"});
      return report;
    }
  }

  LossResult expect = loss_eval(yhat, y);
  report.recompute_mults += n_y_ * 2;
  auto it = stage_scalars_.find("loss");
  if (it == stage_scalars_.end() || !bits_equal(expect.loss, it->second)) {
    report.honest = false;
    report.reason = "loss value mismatch";
    return report;
  }
  // rebuild the gradient commitment wholesale; the final layer is small
  std::vector<Bytes> leaves;
  leaves.reserve(n_y_);
  for (double g : expect.grad) leaves.push_back(encode_f64(g));
  const CommitmentRef* ref = find_root("loss", "grad_yhat_elems");
  if (ref == nullptr ||
      !(MerkleTree::from_leaf_bytes(leaves).root() == ref->root)) {
    report.honest = false;
    report.reason = "gradient commitment mismatch";
    return report;
  }
  return report;
}

std::vector<TestReport> Monitor::test_stage(const StageId& id,
                                            const WorkerChannel& channel) {
  using B = ProbeTarget::Battery;
  std::vector<TestReport> out;
  const Layer& layer = trusted_.layers.at(
      id.kind == StageKind::loss ? 0 : id.layer);
  switch (id.kind) {
    case StageKind::transform_fwd:
      out.push_back(run_battery(id, layer.kind == Layer::Kind::conv
                                        ? B::conv_fwd
                                        : B::fc_fwd,
                                channel));
      break;
    case StageKind::act_fwd:
    case StageKind::act_bwd:
      out.push_back(run_battery(id, B::simd, channel));
      break;
    case StageKind::loss:
      out.push_back(run_battery(id, B::final_layer, channel));
      break;
    case StageKind::transform_bwd:
      if (layer.kind == Layer::Kind::conv) {
        out.push_back(run_battery(id, B::conv_dx, channel));
        out.push_back(run_battery(id, B::conv_df, channel));
      } else {
        out.push_back(run_battery(id, B::fc_bwd, channel));
      }
      break;
  }
  return out;
}

TestReport Monitor::run_battery(
    const StageId& id, ProbeTarget::Battery battery,
    const WorkerChannel& channel,
    const std::optional<std::vector<std::vector<uint64_t>>>& plan_override) {
  using B = ProbeTarget::Battery;
  std::vector<std::vector<uint64_t>> plan =
      plan_override ? *plan_override : draw_plan(id, battery);
  TestReport report;
  switch (battery) {
    case B::simd: report = battery_simd(id, channel, plan); break;
    case B::conv_fwd: report = battery_conv_fwd(id.layer, channel, plan); break;
    case B::conv_dx: report = battery_conv_dx(id.layer, channel, plan); break;
    case B::conv_df: report = battery_conv_df(id.layer, channel, plan); break;
    case B::fc_fwd: report = battery_fc(id.layer, true, channel, plan); break;
    case B::fc_bwd: report = battery_fc(id.layer, false, channel, plan); break;
    case B::final_layer: report = battery_final(channel); break;
  }
  reports_.push_back(report);
  return report;
}

bool Monitor::round_honest() const {
  if (!init_ok_) return false;
  for (const auto& r : reports_) {
    if (!r.honest) return false;
  }
  return true;
}

Bytes Monitor::endorse(const Digest& updates_digest) {
  require(commits_seen_ == program_.size(), ErrorCode::refused_dishonest,
          "round incomplete: missing stage commitments");
  require(round_honest(), ErrorCode::refused_dishonest,
          "refusing to endorse a dishonest round");
  Bytes message = encode_index(round_);
  append(message, updates_digest.view());
  return endorse_key_.sign(message);
}

}  // namespace flaudit
