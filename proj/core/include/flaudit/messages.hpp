#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flaudit/merkle.hpp"

// The in-process worker/monitor message contract:
//   Commit{stage, roots[]} -> Challenge{probes[]} -> Response{values, evidences}
// All three serialize to JSON for transcript logging. The worker finalizes
// its trees before any probe index is revealed; the monitor only issues a
// Challenge for a stage it has a CommitMsg for.

namespace flaudit {

struct TreeRoot {
  std::string tree;
  Digest root;
  uint64_t leaves = 0;

  bool operator==(const TreeRoot&) const = default;
};

struct CommitMsg {
  std::string stage;
  std::vector<TreeRoot> roots;
  // small stage-level claims, e.g. the loss value for the final layer
  std::map<std::string, double> scalars;
};

struct Probe {
  std::string tree;
  std::vector<uint64_t> index;  // structured tuple, layout defined per tree
};

struct Challenge {
  std::string stage;
  std::vector<Probe> probes;
};

struct ResponseEntry {
  std::string tree;
  uint64_t leaf = 0;           // ordinal claimed by the worker
  std::vector<double> values;  // full leaf payload
  Evidence evidence;
};

struct Response {
  std::string stage;
  std::vector<ResponseEntry> entries;
};

/// Scalars shipped in a response (the monitor's read-volume accounting).
uint64_t response_scalar_count(const Response& r);
/// Digests shipped across all evidences in a response.
uint64_t response_digest_count(const Response& r);

std::string to_json(const CommitMsg& m);
std::string to_json(const Challenge& m);
std::string to_json(const Response& m);

CommitMsg commit_from_json(const std::string& text);
Challenge challenge_from_json(const std::string& text);
Response response_from_json(const std::string& text);

}  // namespace flaudit
