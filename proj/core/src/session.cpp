#include "flaudit/session.hpp"

namespace flaudit {

RoundResult run_round(Worker& worker, Monitor& monitor, uint64_t round,
                      const std::function<void(const std::string&)>* transcript) {
  RoundResult result;
  result.round = round;

  WorkerChannel channel = [&](const Challenge& challenge) {
    if (transcript) (*transcript)(to_json(challenge));
    Response resp = worker.answer(challenge);
    if (transcript) (*transcript)(to_json(resp));
    return resp;
  };

  result.record_id = monitor.begin_round(round);
  InitReply reply = worker.begin_round(round, result.record_id);
  bool ok = monitor.check_init(reply);
  result.verdicts.push_back(
      {"init", "init", ok, ok ? "" : monitor.reports().back().reason});
  if (!ok) {
    result.honest = false;
    result.first_failure = "init";
    result.reports = monitor.reports();
    return result;
  }

  for (const StageId& id : stage_program(worker.model())) {
    CommitMsg commit = worker.run_stage(id);
    if (transcript) (*transcript)(to_json(commit));
    if (!monitor.on_commit(commit)) {
      result.honest = false;
      result.first_failure = commit.stage + "/commit";
      break;
    }
    bool stage_ok = true;
    for (const TestReport& report : monitor.test_stage(id, channel)) {
      result.verdicts.push_back(
          {report.stage, report.battery, report.honest, report.reason});
      if (!report.honest && stage_ok) {
        stage_ok = false;
        result.first_failure = report.stage + "/" + report.battery;
      }
    }
    if (!stage_ok) {
      result.honest = false;
      break;
    }
  }

  result.reports = monitor.reports();
  for (const auto& r : result.reports) {
    result.monitor_reads_scalars += r.reads_scalars;
    result.monitor_reads_digests += r.reads_digests;
  }
  if (!result.honest) return result;

  result.update = worker.round_update();
  result.update_digest = result.update.digest();
  result.endorsement = monitor.endorse(result.update_digest);
  result.endorsed = true;
  return result;
}

namespace {

GlobalModel strip_version(GlobalModel m) {
  m.version = 0;
  return m;
}

}  // namespace

Federation::Federation(GlobalModel initial_model, RecordFile records,
                       FederationConfig config)
    : config_(std::move(config)),
      cs_key_(HmacSigner::from_seed(config_.seed, "coordinator")),
      authority_key_(HmacSigner::from_seed(config_.seed, "authority")),
      coordinator_(strip_version(std::move(initial_model)), cs_key_) {
  require(!config_.workers.empty(), ErrorCode::config_error, "no workers");

  int64_t deposit = config_.deposit > 0 ? config_.deposit
                                        : config_.required_deposit;
  ModelPackage pkg = coordinator_.publish();

  for (size_t w = 0; w < config_.workers.size(); w++) {
    const FederationWorker& fw = config_.workers[w];
    Slot slot;
    slot.name = fw.name;
    auto signed_records = sign_records(records.records, authority_key_);
    slot.store = std::make_unique<RecordStore>(
        RecordStore::build(std::move(signed_records), authority_key_));
    slot.worker =
        std::make_unique<Worker>(fw.name, slot.store.get(), pkg, fw.cheat);
    HmacSigner monitor_key =
        HmacSigner::from_seed(config_.seed, "monitor:" + fw.name);
    ledger_.register_monitor_key(fw.name, monitor_key);
    slot.monitor = std::make_unique<Monitor>(
        slot.store->digest_info(), pkg, cs_key_, authority_key_,
        std::move(monitor_key), config_.p, derive_seed(config_.seed, w));
    ledger_.join(fw.name, deposit, config_.required_deposit);
    slots_.push_back(std::move(slot));
  }
}

FederationRoundReport Federation::run_one_round() {
  uint64_t round = next_round_++;
  FederationRoundReport report;
  report.round = round;

  ModelPackage pkg = coordinator_.publish();
  std::vector<EndorsedUpdate> endorsed;
  for (auto& slot : slots_) {
    WorkerRoundOutcome outcome;
    outcome.worker = slot.name;
    if (!ledger_.is_active(slot.name)) {
      report.workers.push_back(outcome);
      continue;
    }
    outcome.participated = true;
    slot.worker->set_package(pkg);
    slot.monitor->set_package(pkg);
    RoundResult rr = run_round(*slot.worker, *slot.monitor, round);
    if (report_sink_) {
      for (const TestReport& r : rr.reports) report_sink_(round, slot.name, r);
    }
    outcome.honest = rr.honest;
    outcome.first_failure = rr.first_failure;
    outcome.record_id = rr.record_id;
    if (rr.endorsed) {
      ledger_.record_endorsement(slot.name, round,
                                 Bytes(rr.update_digest.bytes.begin(),
                                       rr.update_digest.bytes.end()),
                                 rr.endorsement);
      endorsed.push_back({slot.name, rr.update});
      outcome.endorsed = true;
    } else {
      ledger_.slash(slot.name, "dishonest: " + rr.first_failure);
      outcome.slashed_this_round = true;
    }
    report.workers.push_back(outcome);
  }

  if (!endorsed.empty()) {
    coordinator_.aggregate(round, endorsed, ledger_);
    report.aggregated = true;
  }
  report.model_version_after = coordinator_.version();
  return report;
}

std::vector<FederationRoundReport> Federation::run_all() {
  std::vector<FederationRoundReport> reports;
  for (uint64_t r = 0; r < config_.rounds; r++) {
    reports.push_back(run_one_round());
    bool any_active = false;
    for (const auto& slot : slots_) any_active |= ledger_.is_active(slot.name);
    if (!any_active) break;
  }
  return reports;
}

}  // namespace flaudit
