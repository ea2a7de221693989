/*
 * Copyright (c) 2026, the faultforge authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "faultforge/cli_commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "faultforge/crashgen.hpp"
#include "faultforge/digest.hpp"
#include "faultforge/fault_models.hpp"
#include "faultforge/repair_harness.hpp"
#include "faultforge/scenarios.hpp"
#include "faultforge/session.hpp"
#include "faultforge/workload.hpp"

namespace faultforge {

using nlohmann::ordered_json;

namespace {

struct Env {
  std::string state_path = "faultforge_state.json";
  std::string log_path = "faultforge_log.txt";
  std::uint64_t seed = 0;  // 0: keep the persisted seed
  bool json = false;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

std::unique_ptr<Session> make_session(const Env& env) {
  SessionOptions opts;
  auto session = std::make_unique<Session>(opts);
  if (std::filesystem::exists(env.state_path)) {
    (void)session->load_state(env.state_path);
  }
  if (env.seed != 0) session->reseed(env.seed);
  return session;
}

int finish(Session& session, const Env& env, int code) {
  (void)session.save_state(env.state_path);
  (void)session.flush_log(env.log_path);
  return code;
}

void emit(const Env& env, const ordered_json& rep, const std::string& human) {
  if (env.json) {
    *env.out << rep.dump(2) << "\n";
  } else {
    *env.out << human;
  }
}

std::string device_name_for(const std::string& image, const std::string& override_name) {
  if (!override_name.empty()) return override_name;
  return std::filesystem::path(image).stem().string();
}

Result<DeviceMode> parse_mode(const std::string& mode) {
  if (mode == "normal") return DeviceMode::normal;
  if (mode == "nvme") return DeviceMode::nvme;
  if (mode == "nullb") return DeviceMode::nullb;
  return Status::error(ErrorCode::kInvalidArgument, "unknown mode: " + mode);
}

int usage_error(const Env& env, const Status& s) {
  *env.err << "error: " << s.to_string() << "\n";
  return kExitUsage;
}

// ---- cfg ----------------------------------------------------------------

int cmd_cfg_set(const Env& env, const std::string& path, const std::string& value) {
  auto session = make_session(env);
  Status s = session->cfg().write(path, value);
  if (!s.is_ok()) return usage_error(env, s);
  ordered_json rep{{"command", "cfg set"}, {"path", path}, {"value", value}};
  emit(env, rep, path + " = " + session->cfg().read(path).value() + "\n");
  return finish(*session, env, kExitOk);
}

int cmd_cfg_get(const Env& env, const std::string& path) {
  auto session = make_session(env);
  auto v = session->cfg().read(path);
  if (!v.is_ok()) return usage_error(env, v.status());
  ordered_json rep{{"command", "cfg get"}, {"path", path}, {"value", v.value()}};
  emit(env, rep, v.value() + "\n");
  return finish(*session, env, kExitOk);
}

// ---- failcmd ------------------------------------------------------------

struct FailcmdArgs {
  std::string capability;
  std::vector<std::string> options;  // name=value pairs
  std::vector<std::string> mark_caches;
  std::string image;
  std::string workload = "alloc-workload";
};

int cmd_failcmd(const Env& env, const FailcmdArgs& args) {
  if (args.capability != "failslab" && args.capability != "fail_page_alloc") {
    return usage_error(env, Status::error(ErrorCode::kInvalidArgument,
                                          "failcmd supports failslab and "
                                          "fail_page_alloc"));
  }
  auto workload = Workload::parse(args.workload);
  if (!workload.is_ok()) return usage_error(env, workload.status());

  auto session = make_session(env);

  // The workload device (if any) mounts its nodes before the snapshot, so
  // the post-run tree can be compared for byte-identical restoration.
  const Workload& w = workload.value();
  BlockDevice* workload_dev = nullptr;
  std::string image;
  if (w.alloc_count == 0) {
    image = args.image.empty() ? "faultforge_failcmd.img" : args.image;
    auto dev = session->open_device(device_name_for(image, ""), image,
                                    DeviceMode::normal, 256);
    if (!dev.is_ok()) return usage_error(env, dev.status());
    workload_dev = dev.value();
  }
  for (const std::string& cache : args.mark_caches) {
    session->caps().declare_slab_cache(cache);
  }
  auto snapshot = session->cfg().snapshot();

  // Option names are Table-1 entries or capability extensions; they land on
  // <capability>/<name>.
  for (const std::string& opt : args.options) {
    std::size_t eq = opt.find('=');
    if (eq == std::string::npos) {
      return usage_error(env, Status::error(ErrorCode::kInvalidArgument,
                                            "option must be name=value: " + opt));
    }
    std::string name = opt.substr(0, eq), value = opt.substr(eq + 1);
    Status s = session->cfg().write(args.capability + "/" + name, value);
    if (!s.is_ok()) return usage_error(env, s);
  }
  for (const std::string& cache : args.mark_caches) {
    Status s = session->cfg().write("slab/" + cache + "/make-it-fail", "Y");
    if (!s.is_ok()) return usage_error(env, s);
  }
  Status s = session->cfg().write(args.capability + "/task-filter", "Y");
  if (!s.is_ok()) return usage_error(env, s);

  std::uint64_t task_id = session->next_task_id();
  TaskState& task = session->create_task(task_id);
  task.set_make_it_fail(true);

  std::uint64_t t0 = session->log().now();
  WorkloadRunReport run;
  {
    TaskScope scope(&task);
    if (w.alloc_count > 0) {
      std::vector<std::string> caches = args.mark_caches;
      run = run_alloc_workload(session->allocator(), w, caches);
    } else {
      BlockIo io(workload_dev, &session->caps());
      if (!decode_superblock(workload_dev->disk().block(0),
                             workload_dev->disk().block_count())
               .is_ok()) {
        Status fs = Store::format(io);
        if (!fs.is_ok()) return usage_error(env, fs);
      }
      auto mounted =
          Store::mount(io, &session->caps(), &session->allocator(),
                       session->store_sites());
      if (!mounted.is_ok()) {
        run.failed_ops++;
        run.op_status.push_back(mounted.status());
      } else {
        Store store = mounted.take();
        run = run_store_workload(store, w, session->seed());
      }
      (void)session->sync_device(workload_dev->name());
    }
  }

  std::string slice = session->log().render_since(t0);
  std::size_t fail_events = session->log().since(t0).size();

  // The workload task is ephemeral: its proc nodes vanish with it, and the
  // tree must come back byte-identical to the pre-run snapshot.
  session->destroy_task(task_id);
  Status restored = session->cfg().restore(snapshot);
  bool restore_clean = restored.is_ok() && session->cfg().snapshot() == snapshot;

  ordered_json rep{{"command", "failcmd"},
                   {"capability", args.capability},
                   {"workload", args.workload},
                   {"fail_events", fail_events},
                   {"workload_failures", run.failed_ops},
                   {"restored", restore_clean},
                   {"event_log", slice}};
  std::string human = "failcmd " + args.capability + ": " +
                      std::to_string(fail_events) + " fail events, " +
                      std::to_string(run.failed_ops) +
                      " workload op failures, config " +
                      (restore_clean ? "restored" : "RESTORE FAILED") + "\n" +
                      slice;
  emit(env, rep, human);
  return finish(*session, env, restore_clean ? kExitOk : kExitExpectation);
}

// ---- store ---------------------------------------------------------------

struct StoreArgs {
  std::string image;
  std::string device;
  std::string mode = "normal";
  std::uint64_t blocks = 256;
  bool unsafe = false;
  std::string name;
  std::uint64_t size = 4096;
  std::string data_file;
  std::string out_file;
  std::string checker = "shipped";
};

int cmd_store(const Env& env, const std::string& sub, const StoreArgs& args) {
  auto session = make_session(env);
  auto mode = parse_mode(args.mode);
  if (!mode.is_ok()) return usage_error(env, mode.status());
  std::string dev_name = device_name_for(args.image, args.device);
  auto dev = session->open_device(dev_name, args.image, mode.value(),
                                  sub == "format" ? args.blocks : 0);
  if (!dev.is_ok()) return usage_error(env, dev.status());
  BlockIo io(dev.value(), &session->caps());

  ordered_json rep{{"command", "store " + sub}, {"image", args.image}};
  std::string human;
  int code = kExitOk;

  if (sub == "format") {
    Status s = Store::format(io, args.unsafe);
    if (!s.is_ok()) return usage_error(env, s);
    human = "formatted " + args.image + " (" +
            std::to_string(dev.value()->disk().block_count()) + " blocks" +
            (args.unsafe ? ", unsafe mode" : "") + ")\n";
    rep["blocks"] = dev.value()->disk().block_count();
    rep["unsafe"] = args.unsafe;
  } else if (sub == "mount") {
    auto mounted = Store::mount(io, &session->caps(), &session->allocator(),
                                session->store_sites());
    rep["mounted"] = mounted.is_ok();
    rep["status"] = mounted.status().to_string();
    rep["errno"] = mounted.status().err_no();
    human = mounted.is_ok() ? "mounted: ok\n"
                            : "mount failed: " + mounted.status().to_string() + "\n";
    if (mounted.is_ok()) {
      ordered_json objs = ordered_json::array();
      for (const auto& o : mounted.value().list()) objs.push_back(o.name);
      rep["objects"] = objs;
    }
  } else if (sub == "put" || sub == "get" || sub == "del") {
    auto mounted = Store::mount(io, &session->caps(), &session->allocator(),
                                session->store_sites());
    if (!mounted.is_ok()) {
      rep["status"] = mounted.status().to_string();
      emit(env, rep, "mount failed: " + mounted.status().to_string() + "\n");
      return finish(*session, env, kExitOk);
    }
    Store store = mounted.take();
    TaskState& task = session->create_task(session->next_task_id());
    TaskScope scope(&task);
    if (sub == "put") {
      std::vector<std::uint8_t> payload;
      if (!args.data_file.empty()) {
        std::ifstream in(args.data_file, std::ios::binary);
        if (!in) {
          return usage_error(env, Status::error(ErrorCode::kNotFound,
                                                "cannot read " + args.data_file));
        }
        payload.assign(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
      } else {
        payload = workload_payload(session->seed(), args.name, 0, args.size);
      }
      Status s = store.put(args.name, payload);
      rep["status"] = s.to_string();
      human = "put " + args.name + ": " + s.to_string() + "\n";
    } else if (sub == "get") {
      auto got = store.get(args.name);
      rep["status"] = got.status().to_string();
      if (got.is_ok()) {
        rep["size"] = got.value().size();
        rep["digest"] = fnv1a64(got.value());
        if (!args.out_file.empty()) {
          std::ofstream out(args.out_file, std::ios::binary | std::ios::trunc);
          out.write(reinterpret_cast<const char*>(got.value().data()),
                    static_cast<std::streamsize>(got.value().size()));
        }
        human = "get " + args.name + ": " + std::to_string(got.value().size()) +
                " bytes, digest " + std::to_string(fnv1a64(got.value())) + "\n";
      } else {
        human = "get " + args.name + ": " + got.status().to_string() + "\n";
      }
    } else {
      Status s = store.remove(args.name);
      rep["status"] = s.to_string();
      human = "del " + args.name + ": " + s.to_string() + "\n";
    }
  } else if (sub == "check") {
    auto policy = parse_checker_policy(args.checker);
    if (!policy.is_ok()) return usage_error(env, policy.status());
    auto report = run_checker(io, policy.value());
    if (!report.is_ok()) {
      rep["status"] = report.status().to_string();
      human = "check failed: " + report.status().to_string() + "\n";
    } else {
      rep["clean"] = report.value().clean();
      ordered_json findings = ordered_json::array();
      for (const auto& f : report.value().findings) {
        findings.push_back({{"class", finding_class_name(f.cls)},
                            {"lba", f.lba},
                            {"action", repair_action_name(f.action)},
                            {"detail", f.detail}});
      }
      rep["findings"] = findings;
      human = report.value().render();
    }
  } else if (sub == "info") {
    auto parsed = parse_store(dev.value()->disk());
    if (!parsed.is_ok()) {
      rep["status"] = parsed.status().to_string();
      human = "unparseable: " + parsed.status().to_string() + "\n";
    } else {
      ordered_json objs = ordered_json::array();
      for (const auto& e : parsed.value().entries) {
        if (!e.live()) continue;
        objs.push_back({{"name", e.name},
                        {"size", e.size},
                        {"extent_start", e.extent_start},
                        {"extent_blocks", e.extent_blocks}});
        human += e.name + " size=" + std::to_string(e.size) + " extent=" +
                 std::to_string(e.extent_start) + "+" +
                 std::to_string(e.extent_blocks) + "\n";
      }
      rep["objects"] = objs;
      rep["digest"] = dev.value()->disk().digest();
      human += "image digest " + std::to_string(dev.value()->disk().digest()) + "\n";
    }
  } else {
    return usage_error(env, Status::error(ErrorCode::kInvalidArgument,
                                          "unknown store subcommand: " + sub));
  }

  Status sync = session->sync_device(dev_name);
  if (!sync.is_ok()) return usage_error(env, sync);
  emit(env, rep, human);
  return finish(*session, env, code);
}

// ---- rfsck ---------------------------------------------------------------

struct RfsckArgs {
  std::string image;
  std::string checker = "shipped";
  std::string prefixes = "all";
  bool byte_compare = false;
  std::string expect;  // "", "no-mismatch", "some-mismatch"
};

int cmd_rfsck(const Env& env, const RfsckArgs& args) {
  auto policy = parse_checker_policy(args.checker);
  if (!policy.is_ok()) return usage_error(env, policy.status());
  auto selection = PrefixSelection::parse(args.prefixes);
  if (!selection.is_ok()) return usage_error(env, selection.status());
  auto disk = SimDisk::load(args.image);
  if (!disk.is_ok()) return usage_error(env, disk.status());

  auto session = make_session(env);
  auto result = run_campaign(disk.value(), policy.value(), selection.value(),
                             args.byte_compare);
  if (!result.is_ok()) return usage_error(env, result.status());
  const RfsckResult& r = result.value();

  ordered_json verdicts = ordered_json::array();
  std::map<std::string, std::uint64_t> counts;
  for (const auto& v : r.verdicts) {
    counts[verdict_outcome_name(v.outcome)]++;
    verdicts.push_back({{"prefix", v.prefix_length},
                        {"outcome", verdict_outcome_name(v.outcome)},
                        {"diff", v.diff.summary()}});
  }
  ordered_json rep{{"command", "rfsck"},
                   {"image", args.image},
                   {"checker", args.checker},
                   {"history_records", r.history.records.size()},
                   {"reference_digest", r.reference_digest},
                   {"counts", counts},
                   {"mismatches", r.mismatches},
                   {"verdicts", verdicts}};
  std::string human = "rfsck: " + std::to_string(r.history.records.size()) +
                      " recorded commands, " +
                      std::to_string(r.verdicts.size()) + " prefixes";
  for (const auto& [k, v] : counts) human += ", " + k + "=" + std::to_string(v);
  human += "\n";
  for (const auto& v : r.verdicts) {
    if (v.outcome == VerdictOutcome::Mismatch) {
      human += "  prefix " + std::to_string(v.prefix_length) + ": Mismatch\n" +
               v.diff.summary();
    }
  }

  int code = kExitOk;
  if (args.expect == "no-mismatch" && r.mismatches > 0) code = kExitExpectation;
  if (args.expect == "some-mismatch" && r.mismatches == 0) code = kExitExpectation;
  emit(env, rep, human);
  return finish(*session, env, code);
}

// ---- crashgen --------------------------------------------------------------

struct CrashgenArgs {
  std::string image;
  std::string trace;
  std::string workload = "put-loop:3";
  std::optional<std::size_t> limit;
  std::uint64_t seed = 0;
  bool torn = false;
  bool unsafe = false;
  int jobs = 1;
  std::size_t show = 16;
  std::string expect;  // "", "all-consistent", "any-failure"
};

int cmd_crashgen_record(const Env& env, const CrashgenArgs& args) {
  auto session = make_session(env);
  auto disk = SimDisk::load(args.image);
  if (!disk.is_ok()) return usage_error(env, disk.status());

  SimDisk working = disk.take();
  auto workload = Workload::parse(args.workload);
  if (!workload.is_ok()) return usage_error(env, workload.status());

  auto recorded = record_workload(working, workload.value(), session->seed());
  if (!recorded.is_ok()) return usage_error(env, recorded.status());
  RecordResult& r = recorded.value();

  Status s = r.trace.history.save(args.trace);
  if (!s.is_ok()) return usage_error(env, s);

  ordered_json meta{{"workload", args.workload},
                    {"payload_seed", session->seed()},
                    {"base_digest", r.trace.history.base_digest},
                    {"aborted", r.workload_aborted}};
  ordered_json exps = ordered_json::array();
  for (const auto& e : r.expectations) {
    exps.push_back({{"kind", e.kind},
                    {"name", e.name},
                    {"size", e.size},
                    {"payload_digest", e.payload_digest},
                    {"boundary", e.boundary_records}});
  }
  meta["expectations"] = exps;
  std::ofstream metaout(args.trace + ".meta.json", std::ios::trunc);
  metaout << meta.dump(2) << "\n";

  WriteTrace view = args.torn ? r.trace.split_torn() : r.trace;
  ordered_json rep{{"command", "crashgen record"},
                   {"trace", args.trace},
                   {"records", r.trace.history.records.size()},
                   {"epochs", view.epochs().size()},
                   {"states", crash_state_count(view)},
                   {"aborted", r.workload_aborted}};
  emit(env, rep,
       "recorded " + std::to_string(r.trace.history.records.size()) +
           " commands, " + std::to_string(view.epochs().size()) + " epochs, " +
           std::to_string(crash_state_count(view)) + " crash states\n");
  return finish(*session, env, kExitOk);
}

Result<std::vector<OpExpectation>> load_expectations(const std::string& trace_path) {
  std::ifstream in(trace_path + ".meta.json");
  if (!in) {
    return Status::error(ErrorCode::kNotFound,
                         "missing trace metadata: " + trace_path + ".meta.json");
  }
  ordered_json meta;
  try {
    in >> meta;
  } catch (const std::exception& e) {
    return Status::error(ErrorCode::kCorruption, e.what());
  }
  std::vector<OpExpectation> out;
  for (const auto& e : meta.value("expectations", ordered_json::array())) {
    out.push_back({e.value("kind", ""), e.value("name", ""),
                   e.value("size", std::uint64_t{0}),
                   e.value("payload_digest", std::uint64_t{0}),
                   e.value("boundary", std::size_t{0})});
  }
  return out;
}

int cmd_crashgen_enumerate(const Env& env, const CrashgenArgs& args) {
  auto session = make_session(env);
  auto history = CommandHistory::load(args.trace);
  if (!history.is_ok()) return usage_error(env, history.status());
  WriteTrace trace{history.take()};
  if (args.torn) trace = trace.split_torn();

  auto states = enumerate_crash_states(
      trace, args.limit,
      args.seed != 0 ? std::optional<std::uint64_t>(args.seed) : std::nullopt);
  if (!states.is_ok()) return usage_error(env, states.status());

  ordered_json list = ordered_json::array();
  for (std::size_t i = 0; i < states.value().size() && i < args.show; ++i) {
    list.push_back(states.value()[i].label());
  }
  ordered_json rep{{"command", "crashgen enumerate"},
                   {"trace", args.trace},
                   {"epochs", trace.epochs().size()},
                   {"total_states", crash_state_count(trace)},
                   {"emitted", states.value().size()},
                   {"first_states", list}};
  std::string human = "epochs " + std::to_string(trace.epochs().size()) +
                      ", distinct states " +
                      std::to_string(crash_state_count(trace)) + ", emitted " +
                      std::to_string(states.value().size()) + "\n";
  emit(env, rep, human);
  return finish(*session, env, kExitOk);
}

int cmd_crashgen_test(const Env& env, const CrashgenArgs& args) {
  auto session = make_session(env);
  auto base = SimDisk::load(args.image);
  if (!base.is_ok()) return usage_error(env, base.status());
  auto history = CommandHistory::load(args.trace);
  if (!history.is_ok()) return usage_error(env, history.status());
  WriteTrace trace{history.take()};
  if (base.value().digest() != trace.history.base_digest) {
    return usage_error(env,
                       Status::error(ErrorCode::kInvalidArgument,
                                     "image is not the trace's base image"));
  }
  if (args.torn) trace = trace.split_torn();
  auto expectations = load_expectations(args.trace);
  if (!expectations.is_ok()) return usage_error(env, expectations.status());

  auto states = enumerate_crash_states(
      trace, args.limit,
      args.seed != 0 ? std::optional<std::uint64_t>(args.seed) : std::nullopt);
  if (!states.is_ok()) return usage_error(env, states.status());

  auto report = test_states(base.value(), trace, states.value(),
                            expectations.value(), session->seed(), args.jobs);
  if (!report.is_ok()) return usage_error(env, report.status());

  auto counts = report.value().counts();
  ordered_json failures = ordered_json::array();
  for (const auto& st : report.value().states) {
    if (st.symptom == Symptom::Consistent) continue;
    failures.push_back({{"state", st.state.label()},
                        {"symptom", symptom_name(st.symptom)},
                        {"detail", st.detail}});
  }
  ordered_json rep{{"command", "crashgen test"},
                   {"image", args.image},
                   {"trace", args.trace},
                   {"states_tested", report.value().states.size()},
                   {"counts", counts},
                   {"failures", failures}};
  std::string human = "tested " + std::to_string(report.value().states.size()) +
                      " crash states:";
  for (const auto& [k, v] : counts) human += " " + k + "=" + std::to_string(v);
  human += "\n";

  int code = kExitOk;
  std::uint64_t bad = report.value().non_consistent();
  if (args.expect == "all-consistent" && bad > 0) code = kExitExpectation;
  if (args.expect == "any-failure" && bad == 0) code = kExitExpectation;
  emit(env, rep, human);
  return finish(*session, env, code);
}

// ---- pfault ----------------------------------------------------------------

struct PfaultArgs {
  std::string model = "global-inconsistency";
  std::size_t blocks = 1;
  std::uint64_t seed = 0;
  std::uint64_t timeout_ms = 10000;
  std::vector<std::string> images;
};

int cmd_pfault(const Env& env, const PfaultArgs& args) {
  auto kind = parse_fault_model(args.model);
  if (!kind.is_ok()) return usage_error(env, kind.status());

  std::vector<SimDisk> originals;
  for (const std::string& path : args.images) {
    auto disk = SimDisk::load(path);
    if (!disk.is_ok()) return usage_error(env, disk.status());
    originals.push_back(disk.take());
  }
  auto session = make_session(env);

  FaultModelParams params{kind.value(), args.blocks, args.seed};
  auto faulted = apply_fault_model(params, originals);
  if (!faulted.is_ok()) return usage_error(env, faulted.status());

  for (std::size_t i = 0; i < faulted.value().size(); ++i) {
    const std::string base = args.images[i];
    (void)faulted.value()[i].disk.save(base + ".faulted");
    std::ofstream mf(base + ".manifest", std::ios::trunc);
    mf << faulted.value()[i].manifest.render();
  }

  auto report = post_fault_check(faulted.value(), originals,
                                 std::chrono::milliseconds(args.timeout_ms));

  ordered_json per = ordered_json::array();
  std::string human = "pfault " + args.model + ":\n";
  for (std::size_t i = 0; i < report.per_image.size(); ++i) {
    const auto& r = report.per_image[i];
    per.push_back({{"image", args.images[i]},
                   {"outcome", post_fault_outcome_name(r.outcome)},
                   {"detail", r.detail},
                   {"mutations", faulted.value()[i].manifest.mutations.size()}});
    human += "  " + args.images[i] + ": " +
             post_fault_outcome_name(r.outcome) +
             (r.detail.empty() ? "" : " (" + r.detail + ")") + "\n";
  }
  ordered_json rep{{"command", "pfault"},
                   {"model", args.model},
                   {"blocks", args.blocks},
                   {"seed", args.seed},
                   {"results", per}};
  emit(env, rep, human);
  return finish(*session, env, kExitOk);
}

// ---- log / scenario ---------------------------------------------------------

int cmd_log_show(const Env& env) {
  std::ifstream in(env.log_path);
  if (in) {
    *env.out << in.rdbuf();
  }
  return kExitOk;
}

int cmd_scenario(const Env& env, const std::string& name, bool interrupt) {
  auto session = make_session(env);
  ScenarioOptions opts;
  opts.seed = env.seed != 0 ? env.seed : 1;
  opts.simulate_interrupt = interrupt;
  auto pre = session->cfg().snapshot();
  auto report = run_scenario(*session, name, opts);
  if (!report.is_ok()) return usage_error(env, report.status());
  bool restored = session->cfg().snapshot() == pre;

  ordered_json checks = ordered_json::array();
  for (const auto& c : report.value().checks) {
    checks.push_back({{"what", c.what}, {"passed", c.passed}, {"detail", c.detail}});
  }
  ordered_json rep{{"command", "scenario"},
                   {"name", name},
                   {"passed", report.value().passed()},
                   {"interrupted", report.value().interrupted},
                   {"config_restored", restored},
                   {"checks", checks},
                   {"event_log", report.value().log_slice}};
  std::string human = report.value().render();
  human += std::string("  config tree restored: ") + (restored ? "yes" : "NO") + "\n";
  emit(env, rep, human);
  int code = (report.value().passed() && restored) ? kExitOk : kExitExpectation;
  return finish(*session, env, code);
}

}  // namespace

int run_cli(const std::vector<std::string>& argv, std::ostream& out,
            std::ostream& err) {
  Env env;
  env.out = &out;
  env.err = &err;
  if (const char* log_env = std::getenv("FAULTFORGE_LOG")) env.log_path = log_env;
  if (const char* state_env = std::getenv("FAULTFORGE_STATE")) {
    env.state_path = state_env;
  }

  CLI::App app{"deterministic fault injection against a simulated storage stack",
               "faultforge"};
  app.require_subcommand(1);
  app.add_option("--state", env.state_path, "session state file");
  app.add_option("--log", env.log_path, "event log file");
  app.add_option("--seed", env.seed, "deterministic seed (0 keeps state)");
  app.add_flag("--json", env.json, "machine-readable reports");

  std::string path, value;
  auto* cfg = app.add_subcommand("cfg", "read/write the config tree");
  auto* cfg_set = cfg->add_subcommand("set", "write a node");
  cfg_set->add_option("path", path)->required();
  cfg_set->add_option("value", value)->required();
  auto* cfg_get = cfg->add_subcommand("get", "read a node");
  cfg_get->add_option("path", path)->required();

  FailcmdArgs fc;
  auto* failcmd = app.add_subcommand("failcmd", "configure, run a workload, restore");
  failcmd->add_option("--capability", fc.capability)->required();
  failcmd->add_option("--option,-o", fc.options, "name=value (Table-1 or extension)");
  failcmd->add_option("--times", [&fc](const std::vector<std::string>& v) {
    fc.options.push_back("times=" + v[0]);
    return true;
  }, "failure budget");
  failcmd->add_option("--probability", [&fc](const std::vector<std::string>& v) {
    fc.options.push_back("probability=" + v[0]);
    return true;
  }, "failure probability");
  failcmd->add_option("--interval", [&fc](const std::vector<std::string>& v) {
    fc.options.push_back("interval=" + v[0]);
    return true;
  }, "failure interval");
  failcmd->add_option("--space", [&fc](const std::vector<std::string>& v) {
    fc.options.push_back("space=" + v[0]);
    return true;
  }, "size budget");
  failcmd->add_option("--verbose-level", [&fc](const std::vector<std::string>& v) {
    fc.options.push_back("verbose=" + v[0]);
    return true;
  }, "verbosity 0..2");
  failcmd->add_option("--mark-cache", fc.mark_caches, "mark a slab cache");
  failcmd->add_option("--image", fc.image, "store image for store workloads");
  failcmd->add_option("workload", fc.workload, "workload spec");

  StoreArgs st;
  auto* store = app.add_subcommand("store", "simulated object store");
  std::string store_sub;
  for (const char* sub : {"format", "mount", "put", "get", "del", "check", "info"}) {
    auto* c = store->add_subcommand(sub);
    c->add_option("--image", st.image)->required();
    c->add_option("--device", st.device);
    c->add_option("--mode", st.mode);
    if (std::string(sub) == "format") {
      c->add_option("--blocks", st.blocks);
      c->add_flag("--unsafe", st.unsafe);
    }
    if (std::string(sub) == "put" || std::string(sub) == "get" ||
        std::string(sub) == "del") {
      c->add_option("--name", st.name)->required();
      c->add_option("--size", st.size);
      c->add_option("--data-file", st.data_file);
      c->add_option("--out", st.out_file);
    }
    if (std::string(sub) == "check") {
      c->add_option("--checker", st.checker);
    }
    c->callback([&store_sub, sub] { store_sub = sub; });
  }

  RfsckArgs rf;
  auto* rfsck = app.add_subcommand("rfsck", "interrupted-repair campaign");
  rfsck->add_option("--image", rf.image)->required();
  rfsck->add_option("--checker", rf.checker);
  rfsck->add_option("--prefixes", rf.prefixes);
  rfsck->add_flag("--byte-compare", rf.byte_compare);
  rfsck->add_option("--expect", rf.expect)
      ->check(CLI::IsMember({"no-mismatch", "some-mismatch"}));

  CrashgenArgs cg;
  std::size_t cg_limit = 0;
  auto* crashgen = app.add_subcommand("crashgen", "crash-state record/replay/test");
  auto* cg_record = crashgen->add_subcommand("record");
  cg_record->add_option("--image", cg.image)->required();
  cg_record->add_option("--trace", cg.trace)->required();
  cg_record->add_option("--workload", cg.workload);
  cg_record->add_flag("--torn", cg.torn);
  auto* cg_enum = crashgen->add_subcommand("enumerate");
  cg_enum->add_option("--trace", cg.trace)->required();
  cg_enum->add_option("--limit", cg_limit);
  cg_enum->add_option("--sample-seed", cg.seed);
  cg_enum->add_flag("--torn", cg.torn);
  cg_enum->add_option("--show", cg.show);
  auto* cg_test = crashgen->add_subcommand("test");
  cg_test->add_option("--image", cg.image)->required();
  cg_test->add_option("--trace", cg.trace)->required();
  cg_test->add_option("--limit", cg_limit);
  cg_test->add_option("--sample-seed", cg.seed);
  cg_test->add_flag("--torn", cg.torn);
  cg_test->add_option("--jobs", cg.jobs);
  cg_test->add_option("--expect", cg.expect)
      ->check(CLI::IsMember({"all-consistent", "any-failure"}));

  PfaultArgs pf;
  auto* pfault = app.add_subcommand("pfault", "coarse fault-state emulation");
  pfault->add_option("--model", pf.model);
  pfault->add_option("--blocks", pf.blocks);
  pfault->add_option("--fault-seed", pf.seed);
  pfault->add_option("--timeout", pf.timeout_ms, "checker watchdog (ms)");
  pfault->add_option("images", pf.images)->required();

  auto* log = app.add_subcommand("log", "event log");
  log->add_subcommand("show");

  std::string scenario_name;
  bool scenario_interrupt = false;
  auto* scenario = app.add_subcommand("scenario", "packaged reproductions");
  scenario->add_option("name", scenario_name)
      ->required()
      ->check(CLI::IsMember(scenario_names()));
  scenario->add_flag("--interrupt", scenario_interrupt,
                     "abort after configuration; cleanup must restore");

  std::vector<const char*> cargv;
  cargv.push_back("faultforge");
  for (const auto& a : argv) cargv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  if (cfg_set->parsed()) return cmd_cfg_set(env, path, value);
  if (cfg_get->parsed()) return cmd_cfg_get(env, path);
  if (failcmd->parsed()) return cmd_failcmd(env, fc);
  if (store->parsed()) return cmd_store(env, store_sub, st);
  if (rfsck->parsed()) return cmd_rfsck(env, rf);
  if (crashgen->parsed()) {
    if (cg_limit > 0) cg.limit = cg_limit;
    if (cg_record->parsed()) return cmd_crashgen_record(env, cg);
    if (cg_enum->parsed()) return cmd_crashgen_enumerate(env, cg);
    if (cg_test->parsed()) return cmd_crashgen_test(env, cg);
    err << "usage error: crashgen needs record|enumerate|test\n";
    return kExitUsage;
  }
  if (pfault->parsed()) return cmd_pfault(env, pf);
  if (log->parsed()) return cmd_log_show(env);
  if (scenario->parsed()) return cmd_scenario(env, scenario_name, scenario_interrupt);

  err << "usage error: no subcommand\n";
  return kExitUsage;
}

}  // namespace faultforge
