#include "flaudit/messages.hpp"

#include "flaudit/errors.hpp"
#include "json.hpp"

namespace flaudit {

using nlohmann::json;

namespace {

json evidence_to_json(const Evidence& e) {
  json steps = json::array();
  for (const auto& s : e.path) {
    steps.push_back({{"sibling", s.sibling.hex()},
                     {"side", s.side == Side::left ? "l" : "r"}});
  }
  return {{"index", e.index}, {"path", steps}};
}

Evidence evidence_from_json(const json& j) {
  Evidence e;
  e.index = j.at("index").get<uint64_t>();
  for (const auto& sj : j.at("path")) {
    EvidenceStep step;
    Bytes raw = from_hex(sj.at("sibling").get<std::string>());
    require(raw.size() == 32, ErrorCode::domain_error, "bad sibling digest");
    std::copy(raw.begin(), raw.end(), step.sibling.bytes.begin());
    step.side = sj.at("side").get<std::string>() == "l" ? Side::left : Side::right;
    e.path.push_back(step);
  }
  return e;
}

Digest digest_from_hex(const std::string& hex) {
  Bytes raw = from_hex(hex);
  require(raw.size() == 32, ErrorCode::domain_error, "bad digest length");
  Digest d;
  std::copy(raw.begin(), raw.end(), d.bytes.begin());
  return d;
}

}  // namespace

uint64_t response_scalar_count(const Response& r) {
  uint64_t n = 0;
  for (const auto& e : r.entries) n += e.values.size();
  return n;
}

uint64_t response_digest_count(const Response& r) {
  uint64_t n = 0;
  for (const auto& e : r.entries) n += e.evidence.path.size();
  return n;
}

std::string to_json(const CommitMsg& m) {
  json roots = json::array();
  for (const auto& r : m.roots) {
    roots.push_back(
        {{"tree", r.tree}, {"root", r.root.hex()}, {"leaves", r.leaves}});
  }
  json j{{"type", "commit"}, {"stage", m.stage}, {"roots", roots}};
  if (!m.scalars.empty()) j["scalars"] = m.scalars;
  return j.dump();
}

std::string to_json(const Challenge& m) {
  json probes = json::array();
  for (const auto& p : m.probes) {
    probes.push_back({{"tree", p.tree}, {"index", p.index}});
  }
  return json{{"type", "challenge"}, {"stage", m.stage}, {"probes", probes}}
      .dump();
}

std::string to_json(const Response& m) {
  json entries = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"tree", e.tree},
                       {"leaf", e.leaf},
                       {"values", e.values},
                       {"evidence", evidence_to_json(e.evidence)}});
  }
  return json{{"type", "response"}, {"stage", m.stage}, {"entries", entries}}
      .dump();
}

CommitMsg commit_from_json(const std::string& text) {
  json j = json::parse(text);
  CommitMsg m;
  m.stage = j.at("stage").get<std::string>();
  for (const auto& rj : j.at("roots")) {
    TreeRoot r;
    r.tree = rj.at("tree").get<std::string>();
    r.root = digest_from_hex(rj.at("root").get<std::string>());
    r.leaves = rj.at("leaves").get<uint64_t>();
    m.roots.push_back(std::move(r));
  }
  if (j.contains("scalars")) {
    m.scalars = j.at("scalars").get<std::map<std::string, double>>();
  }
  return m;
}

Challenge challenge_from_json(const std::string& text) {
  json j = json::parse(text);
  Challenge m;
  m.stage = j.at("stage").get<std::string>();
  for (const auto& pj : j.at("probes")) {
    Probe p;
    p.tree = pj.at("tree").get<std::string>();
    p.index = pj.at("index").get<std::vector<uint64_t>>();
    m.probes.push_back(std::move(p));
  }
  return m;
}

Response response_from_json(const std::string& text) {
  json j = json::parse(text);
  Response m;
  m.stage = j.at("stage").get<std::string>();
  for (const auto& ej : j.at("entries")) {
    ResponseEntry e;
    e.tree = ej.at("tree").get<std::string>();
    e.leaf = ej.at("leaf").get<uint64_t>();
    e.values = ej.at("values").get<std::vector<double>>();
    e.evidence = evidence_from_json(ej.at("evidence"));
    m.entries.push_back(std::move(e));
  }
  return m;
}

}  // namespace flaudit
