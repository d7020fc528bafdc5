#include "flaudit/ledger.hpp"

#include "flaudit/encode.hpp"
#include "json.hpp"

namespace flaudit {

using nlohmann::json;

std::string LedgerEvent::to_json_line() const {
  json j;
  switch (kind) {
    case Kind::join:
      j = {{"event", "join"}, {"worker", worker}, {"amount", amount}};
      break;
    case Kind::slash:
      j = {{"event", "slash"},
           {"worker", worker},
           {"amount", amount},
           {"reason", reason}};
      break;
    case Kind::endorsement:
      j = {{"event", "endorsement"},
           {"worker", worker},
           {"round", round},
           {"updates_digest", to_hex(updates_digest)},
           {"signature", to_hex(signature)}};
      break;
  }
  return j.dump();
}

LedgerEvent LedgerEvent::from_json_line(const std::string& line) {
  json j = json::parse(line);
  LedgerEvent ev;
  std::string kind = j.at("event").get<std::string>();
  ev.worker = j.at("worker").get<std::string>();
  if (kind == "join") {
    ev.kind = Kind::join;
    ev.amount = j.at("amount").get<int64_t>();
  } else if (kind == "slash") {
    ev.kind = Kind::slash;
    ev.amount = j.at("amount").get<int64_t>();
    ev.reason = j.at("reason").get<std::string>();
  } else if (kind == "endorsement") {
    ev.kind = Kind::endorsement;
    ev.round = j.at("round").get<uint64_t>();
    ev.updates_digest = from_hex(j.at("updates_digest").get<std::string>());
    ev.signature = from_hex(j.at("signature").get<std::string>());
  } else {
    fail(ErrorCode::domain_error, "unknown ledger event: " + kind);
  }
  return ev;
}

void Ledger::register_monitor_key(const std::string& worker, HmacSigner key) {
  monitor_keys_.insert_or_assign(worker, std::move(key));
}

void Ledger::apply(const LedgerEvent& ev) {
  switch (ev.kind) {
    case LedgerEvent::Kind::join:
      accounts_[ev.worker] = WorkerAccount{ev.amount, false};
      break;
    case LedgerEvent::Kind::slash: {
      auto& acct = accounts_.at(ev.worker);
      coordinator_balance_ += acct.balance;
      acct.balance = 0;
      acct.evicted = true;
      break;
    }
    case LedgerEvent::Kind::endorsement:
      endorsements_[{ev.worker, ev.round}] =
          EndorsementRecord{ev.round, ev.updates_digest, ev.signature};
      break;
  }
  events_.push_back(ev);
}

void Ledger::join(const std::string& worker, int64_t deposit,
                  int64_t required) {
  auto it = accounts_.find(worker);
  if (it != accounts_.end()) {
    require(!it->second.evicted, ErrorCode::not_active,
            worker + " was evicted and cannot rejoin");
    fail(ErrorCode::already_joined, worker + " already joined");
  }
  require(deposit >= required, ErrorCode::insufficient_deposit,
          "deposit below required minimum");
  LedgerEvent ev;
  ev.kind = LedgerEvent::Kind::join;
  ev.worker = worker;
  ev.amount = deposit;
  apply(ev);
}

void Ledger::slash(const std::string& worker, const std::string& reason) {
  auto it = accounts_.find(worker);
  require(it != accounts_.end() && !it->second.evicted, ErrorCode::not_active,
          worker + " is not active");
  LedgerEvent ev;
  ev.kind = LedgerEvent::Kind::slash;
  ev.worker = worker;
  ev.amount = it->second.balance;
  ev.reason = reason;
  apply(ev);
}

void Ledger::record_endorsement(const std::string& worker, uint64_t round,
                                const Bytes& updates_digest,
                                const Bytes& signature) {
  auto it = accounts_.find(worker);
  require(it != accounts_.end() && !it->second.evicted, ErrorCode::not_active,
          worker + " is not active");
  auto key = monitor_keys_.find(worker);
  require(key != monitor_keys_.end(), ErrorCode::bad_signature,
          "no monitor key registered for " + worker);
  Bytes message = encode_index(round);
  append(message, updates_digest);
  require(key->second.verify(message, signature), ErrorCode::bad_signature,
          "endorsement signature did not verify");
  LedgerEvent ev;
  ev.kind = LedgerEvent::Kind::endorsement;
  ev.worker = worker;
  ev.round = round;
  ev.updates_digest = updates_digest;
  ev.signature = signature;
  apply(ev);
}

bool Ledger::is_active(const std::string& worker) const {
  auto it = accounts_.find(worker);
  return it != accounts_.end() && !it->second.evicted;
}

std::vector<std::string> Ledger::active_workers() const {
  std::vector<std::string> out;
  for (const auto& [name, acct] : accounts_) {
    if (!acct.evicted) out.push_back(name);
  }
  return out;
}

int64_t Ledger::balance(const std::string& worker) const {
  auto it = accounts_.find(worker);
  return it == accounts_.end() ? 0 : it->second.balance;
}

int64_t Ledger::total_balance() const {
  int64_t sum = coordinator_balance_;
  for (const auto& [_, acct] : accounts_) sum += acct.balance;
  return sum;
}

std::optional<EndorsementRecord> Ledger::endorsement(const std::string& worker,
                                                     uint64_t round) const {
  auto it = endorsements_.find({worker, round});
  if (it == endorsements_.end()) return std::nullopt;
  return it->second;
}

std::string Ledger::snapshot_json() const {
  json workers = json::object();
  for (const auto& [name, acct] : accounts_) {
    workers[name] = {{"balance", acct.balance},
                     {"status", acct.evicted ? "evicted" : "active"}};
  }
  return json{{"workers", workers},
              {"coordinator_balance", coordinator_balance_}}
      .dump();
}

Ledger Ledger::replay(const std::vector<LedgerEvent>& events) {
  Ledger out;
  for (const auto& ev : events) out.apply(ev);
  return out;
}

}  // namespace flaudit
