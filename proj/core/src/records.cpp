#include "flaudit/records.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace flaudit {

MerkleTree build_record_tree(std::span<const double> x,
                             std::span<const double> y) {
  require(!x.empty() && !y.empty(), ErrorCode::empty_input,
          "record needs features and tags");
  std::vector<Bytes> leaves;
  leaves.reserve(x.size() + y.size());
  for (double v : x) leaves.push_back(encode_f64(v));
  for (double v : y) leaves.push_back(encode_f64(v));
  return MerkleTree::from_leaf_bytes(leaves);
}

Digest record_hash(std::span<const double> x, std::span<const double> y) {
  return build_record_tree(x, y).root();
}

bool validate_record(const Record& r, const Signer& authority) {
  if (r.x.empty() || r.y.empty()) return false;
  Digest h = record_hash(r.x, r.y);
  return authority.verify(h.view(), r.sigma);
}

Bytes record_leaf_payload(uint64_t id, ByteView sigma) {
  Bytes payload = encode_index(id);
  append(payload, sigma);
  return payload;
}

RecordStore RecordStore::build(std::vector<Record> records,
                               const Signer& authority) {
  require(!records.empty(), ErrorCode::empty_input, "no records");
  for (size_t i = 0; i < records.size(); i++) {
    records[i].id = i + 1;
    if (!validate_record(records[i], authority)) {
      fail(ErrorCode::invalid_record,
           "record " + std::to_string(i + 1) + " failed validation");
    }
  }
  std::vector<Bytes> leaves;
  leaves.reserve(records.size());
  for (const auto& r : records) {
    leaves.push_back(record_leaf_payload(r.id, r.sigma));
  }
  return RecordStore(std::move(records), MerkleTree::from_leaf_bytes(leaves));
}

const Record& RecordStore::record(uint64_t id) const {
  require(id >= 1 && id <= records_.size(), ErrorCode::index_out_of_range,
          "record id");
  return records_[id - 1];
}

Evidence RecordStore::evidence_for(uint64_t id) const {
  require(id >= 1 && id <= records_.size(), ErrorCode::index_out_of_range,
          "record id");
  return record_tree_.evidence_for(id - 1);
}

MerkleTree RecordStore::per_record_tree(uint64_t id) const {
  const Record& r = record(id);
  return build_record_tree(r.x, r.y);
}

RecordFile parse_records_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  RecordFile file;
  file.n_x = j.at("n_X").get<size_t>();
  file.n_y = j.at("n_Y").get<size_t>();
  require(file.n_x >= 1 && file.n_y >= 1, ErrorCode::config_error,
          "n_X and n_Y must be >= 1");
  for (const auto& rj : j.at("records")) {
    Record r;
    r.x = rj.at("x").get<std::vector<double>>();
    r.y = rj.at("y").get<std::vector<double>>();
    require(r.x.size() == file.n_x && r.y.size() == file.n_y,
            ErrorCode::config_error, "record dims do not match header");
    for (double v : r.x) {
      require(std::isfinite(v), ErrorCode::config_error, "non-finite feature");
    }
    for (double v : r.y) {
      require(std::isfinite(v), ErrorCode::config_error, "non-finite tag");
    }
    file.records.push_back(std::move(r));
  }
  return file;
}

RecordFile load_records_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::config_error, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_records_json(ss.str());
}

std::vector<Record> sign_records(std::vector<Record> records,
                                 const Signer& authority) {
  for (auto& r : records) {
    r.sigma = authority.sign(record_hash(r.x, r.y).view());
  }
  return records;
}

}  // namespace flaudit
