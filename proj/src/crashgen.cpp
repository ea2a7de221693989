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
#include "faultforge/crashgen.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>
#include <set>
#include <thread>

#include "faultforge/digest.hpp"
#include "faultforge/image_compare.hpp"
#include "faultforge/rng.hpp"

namespace faultforge {

const char* symptom_name(Symptom s) {
  switch (s) {
    case Symptom::Consistent: return "Consistent";
    case Symptom::ChecksumErr: return "ChecksumErr";
    case Symptom::JournalTxnErr: return "JournalTxnErr";
    case Symptom::MetadataErr: return "MetadataErr";
    case Symptom::MountErr: return "MountErr";
  }
  return "?";
}

std::vector<std::pair<std::size_t, std::size_t>> WriteTrace::epochs() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < history.records.size(); ++i) {
    if (history.records[i].op == IoRecord::Op::flush) {
      out.emplace_back(begin, i);
      begin = i + 1;
    }
  }
  out.emplace_back(begin, history.records.size());
  return out;
}

std::vector<std::size_t> WriteTrace::epoch_write_indices(std::size_t epoch) const {
  auto eps = epochs();
  std::vector<std::size_t> out;
  for (std::size_t i = eps[epoch].first; i < eps[epoch].second; ++i) {
    if (history.records[i].op == IoRecord::Op::write) out.push_back(i);
  }
  return out;
}

WriteTrace WriteTrace::split_torn() const {
  WriteTrace out;
  out.history.block_size = history.block_size;
  out.history.base_digest = history.base_digest;
  out.history.final_digest = history.final_digest;
  std::uint64_t seq = 0;
  for (const auto& r : history.records) {
    if (r.op == IoRecord::Op::flush || r.len <= history.block_size) {
      IoRecord copy = r;
      copy.seq = seq++;
      out.history.records.push_back(std::move(copy));
      continue;
    }
    for (std::uint32_t b = 0; b < r.len / history.block_size; ++b) {
      IoRecord sub;
      sub.seq = seq++;
      sub.op = IoRecord::Op::write;
      sub.lba = r.lba + b;
      sub.len = history.block_size;
      sub.payload.assign(r.payload.begin() + b * history.block_size,
                         r.payload.begin() + (b + 1) * history.block_size);
      out.history.records.push_back(std::move(sub));
    }
  }
  return out;
}

std::string CrashStateDesc::label() const {
  return "e" + std::to_string(epoch) + ":m" + std::to_string(subset_mask);
}

std::uint64_t crash_state_count(const WriteTrace& trace) {
  auto eps = trace.epochs();
  std::uint64_t total = 0;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    total += std::uint64_t{1} << trace.epoch_write_indices(e).size();
  }
  return total - (eps.size() - 1);
}

namespace {

// Canonical enumeration: every epoch contributes its proper subsets; the
// final epoch also contributes the full subset. The dropped full subsets
// are each identical to the next epoch's empty subset.
std::vector<std::uint64_t> canonical_counts(const WriteTrace& trace) {
  auto eps = trace.epochs();
  std::vector<std::uint64_t> counts;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    std::uint64_t full = std::uint64_t{1} << trace.epoch_write_indices(e).size();
    counts.push_back(e + 1 == eps.size() ? full : full - 1);
  }
  return counts;
}

CrashStateDesc desc_for_index(const std::vector<std::uint64_t>& counts,
                              std::uint64_t index) {
  for (std::size_t e = 0; e < counts.size(); ++e) {
    if (index < counts[e]) return {e, index};
    index -= counts[e];
  }
  return {counts.size() - 1, 0};
}

}  // namespace

Result<std::vector<CrashStateDesc>> enumerate_crash_states(
    const WriteTrace& trace, std::optional<std::size_t> limit,
    std::optional<std::uint64_t> seed) {
  auto eps = trace.epochs();
  for (std::size_t e = 0; e < eps.size(); ++e) {
    std::size_t n = trace.epoch_write_indices(e).size();
    if (n > 63) {
      return Status::error(ErrorCode::kInvalidArgument,
                           "epoch too large to enumerate");
    }
    if (!limit.has_value() && n > kMaxEpochWrites) {
      return Status::error(
          ErrorCode::kInvalidArgument,
          "epoch with " + std::to_string(n) + " writes needs --limit (cap " +
              std::to_string(kMaxEpochWrites) + ")");
    }
  }

  std::vector<std::uint64_t> counts = canonical_counts(trace);
  std::uint64_t total = 0;
  for (std::uint64_t c : counts) total += c;

  std::vector<CrashStateDesc> out;
  if (!limit.has_value() || *limit >= total) {
    out.reserve(total);
    for (std::size_t e = 0; e < counts.size(); ++e) {
      for (std::uint64_t m = 0; m < counts[e]; ++m) out.push_back({e, m});
    }
    return out;
  }

  // Seeded sample without replacement; the empty and final states always
  // participate.
  std::set<std::uint64_t> chosen;
  chosen.insert(0);
  chosen.insert(total - 1);
  Pcg32 rng(seed.value_or(0));
  std::size_t want = std::max<std::size_t>(*limit, 2);
  while (chosen.size() < want) {
    chosen.insert(rng.next64() % total);
  }
  for (std::uint64_t idx : chosen) out.push_back(desc_for_index(counts, idx));
  return out;
}

Result<SimDisk> materialize_crash_state(const SimDisk& base,
                                        const WriteTrace& trace,
                                        const CrashStateDesc& state) {
  auto eps = trace.epochs();
  if (state.epoch >= eps.size()) {
    return Status::error(ErrorCode::kOutOfRange, "epoch out of range");
  }
  SimDisk disk = base;
  auto apply = [&](const IoRecord& r) -> Status {
    if (r.len % trace.history.block_size != 0 ||
        r.lba + r.len / trace.history.block_size > disk.block_count()) {
      return Status::error(ErrorCode::kOutOfRange,
                           "trace does not fit the image geometry");
    }
    std::memcpy(disk.bytes_mut().data() + r.lba * trace.history.block_size,
                r.payload.data(), r.len);
    return Status::ok();
  };
  for (std::size_t i = 0; i < eps[state.epoch].first; ++i) {
    const IoRecord& r = trace.history.records[i];
    if (r.op != IoRecord::Op::write) continue;
    Status s = apply(r);
    if (!s.is_ok()) return s;
  }
  auto writes = trace.epoch_write_indices(state.epoch);
  for (std::size_t bit = 0; bit < writes.size(); ++bit) {
    if ((state.subset_mask >> bit) & 1) {
      Status s = apply(trace.history.records[writes[bit]]);
      if (!s.is_ok()) return s;
    }
  }
  return disk;
}

std::map<std::string, std::uint64_t> SymptomReport::counts() const {
  std::map<std::string, std::uint64_t> out;
  for (const auto& s : states) out[symptom_name(s.symptom)]++;
  return out;
}

std::uint64_t SymptomReport::non_consistent() const {
  std::uint64_t n = 0;
  for (const auto& s : states) {
    if (s.symptom != Symptom::Consistent) n++;
  }
  return n;
}

Result<RecordResult> record_workload(SimDisk& image, const Workload& workload,
                                     std::uint64_t payload_seed) {
  if (workload.alloc_count != 0) {
    return Status::error(ErrorCode::kInvalidArgument,
                         "crash recording needs a store workload");
  }
  RecordResult result;
  std::uint64_t base_digest = image.digest();

  BlockDevice dev("crashgen", DeviceMode::normal, std::move(image));
  BlockIo io(&dev, nullptr);
  HistoryRecorder recorder;
  io.attach_sink(&recorder);

  auto mounted = Store::mount(io);
  if (!mounted.is_ok()) return mounted.status();
  Store store = mounted.take();

  std::map<std::string, std::size_t> occurrence;
  for (const auto& op : workload.ops) {
    Status s;
    switch (op.kind) {
      case WorkloadOp::Kind::put: {
        std::size_t occ = occurrence[op.name]++;
        auto payload = workload_payload(payload_seed, op.name, occ, op.size);
        s = store.put(op.name, payload);
        if (s.is_ok()) {
          result.expectations.push_back({"put", op.name, op.size,
                                         fnv1a64(payload),
                                         recorder.record_count()});
        }
        break;
      }
      case WorkloadOp::Kind::get:
        s = store.get(op.name).status();
        break;
      case WorkloadOp::Kind::remove:
        s = store.remove(op.name);
        if (s.is_ok()) {
          result.expectations.push_back(
              {"remove", op.name, 0, 0, recorder.record_count()});
        }
        break;
    }
    bool failed = !s.is_ok();
    result.op_status.push_back(std::move(s));
    if (failed) {
      result.workload_aborted = true;
      break;
    }
  }

  io.detach_sink();
  result.trace.history = recorder.take(base_digest, dev.disk().digest());
  image = std::move(dev.disk());
  return result;
}

namespace {

Symptom classify_findings(const CheckReport& report, std::string* detail) {
  bool journal = false, metadata = false, checksum = false;
  for (const auto& f : report.findings) {
    switch (f.cls) {
      case FindingClass::IncompleteJournalTxn: journal = true; break;
      case FindingClass::BadSuperblock:
      case FindingClass::BitmapMismatch:
      case FindingClass::DanglingObject: metadata = true; break;
      case FindingClass::BadObjectChecksum: checksum = true; break;
    }
  }
  if (journal) {
    *detail = "journal transaction damage";
    return Symptom::JournalTxnErr;
  }
  if (metadata) {
    *detail = "metadata findings";
    return Symptom::MetadataErr;
  }
  if (checksum) {
    *detail = "object checksum findings";
    return Symptom::ChecksumErr;
  }
  return Symptom::Consistent;
}

// Highest record index b such that every record before b is in the state.
std::size_t state_floor(const WriteTrace& trace, const CrashStateDesc& state) {
  auto eps = trace.epochs();
  std::size_t floor = eps[state.epoch].first;
  auto writes = trace.epoch_write_indices(state.epoch);
  std::size_t bit = 0;
  for (std::size_t i = eps[state.epoch].first; i < eps[state.epoch].second; ++i) {
    if (trace.history.records[i].op != IoRecord::Op::write) break;
    if (bit >= writes.size() || ((state.subset_mask >> bit) & 1) == 0) break;
    bit++;
    floor = i + 1;
  }
  return floor;
}

StateResult test_one_state(const SimDisk& base, const WriteTrace& trace,
                           const CrashStateDesc& desc,
                           const std::vector<OpExpectation>& expectations) {
  StateResult result;
  result.state = desc;

  auto materialized = materialize_crash_state(base, trace, desc);
  if (!materialized.is_ok()) {
    result.symptom = Symptom::MountErr;
    result.detail = materialized.status().to_string();
    return result;
  }
  result.image_digest = materialized.value().digest();

  BlockDevice dev("crashtest", DeviceMode::normal, materialized.take());
  BlockIo io(&dev, nullptr);

  auto mounted = Store::mount(io);
  if (!mounted.is_ok()) {
    result.symptom = Symptom::MountErr;
    result.detail = mounted.status().to_string();
    return result;
  }

  auto report = run_checker(io, CheckerPolicy::shipped());
  if (!report.is_ok()) {
    result.symptom = Symptom::MountErr;
    result.detail = report.status().to_string();
    return result;
  }
  Symptom from_findings = classify_findings(report.value(), &result.detail);
  if (from_findings != Symptom::Consistent) {
    result.symptom = from_findings;
    return result;
  }

  // Committed-data verification. Ops acknowledged by the state's floor are
  // binding; later ops may be durable in any all-or-nothing stage, so any of
  // their outcomes is also legal — what is never legal is garbage.
  std::size_t floor = state_floor(trace, desc);
  std::map<std::string, const OpExpectation*> effective;  // committed by floor
  std::map<std::string, std::vector<const OpExpectation*>> pending;
  for (const auto& e : expectations) {
    if (e.boundary_records <= floor) {
      effective[e.name] = &e;
    } else {
      pending[e.name].push_back(&e);
    }
  }
  auto pending_put_matches = [&](const std::string& name, std::uint64_t digest) {
    auto it = pending.find(name);
    if (it == pending.end()) return false;
    for (const OpExpectation* e : it->second) {
      if (e->kind == "put" && e->payload_digest == digest) return true;
    }
    return false;
  };
  auto pending_remove_exists = [&](const std::string& name) {
    auto it = pending.find(name);
    if (it == pending.end()) return false;
    for (const OpExpectation* e : it->second) {
      if (e->kind == "remove") return true;
    }
    return false;
  };

  auto parsed = parse_store(dev.disk());
  if (!parsed.is_ok()) {
    result.symptom = Symptom::MetadataErr;
    result.detail = "unparseable after repair";
    return result;
  }
  const auto& objects = parsed.value().objects;

  for (const auto& [name, exp] : effective) {
    auto it = objects.find(name);
    if (exp->kind == "put") {
      if (it == objects.end()) {
        if (!pending_remove_exists(name)) {
          result.symptom = Symptom::MetadataErr;
          result.detail = "committed object lost: " + name;
          return result;
        }
      } else if (fnv1a64(it->second) != exp->payload_digest &&
                 !pending_put_matches(name, fnv1a64(it->second))) {
        result.symptom = Symptom::ChecksumErr;
        result.detail = "committed bytes differ: " + name;
        return result;
      }
    } else {  // remove
      if (it != objects.end() &&
          !pending_put_matches(name, fnv1a64(it->second))) {
        result.symptom = Symptom::MetadataErr;
        result.detail = "removed object persisted: " + name;
        return result;
      }
    }
  }
  for (const auto& [name, bytes] : objects) {
    if (effective.count(name) != 0) continue;
    if (pending.count(name) == 0) {
      result.symptom = Symptom::MetadataErr;
      result.detail = "phantom object: " + name;
      return result;
    }
    if (!pending_put_matches(name, fnv1a64(bytes))) {
      result.symptom = Symptom::ChecksumErr;
      result.detail = "partial object visible: " + name;
      return result;
    }
  }

  result.symptom = Symptom::Consistent;
  result.detail.clear();
  return result;
}

}  // namespace

Result<SymptomReport> test_states(const SimDisk& base, const WriteTrace& trace,
                                  const std::vector<CrashStateDesc>& states,
                                  const std::vector<OpExpectation>& expectations,
                                  std::uint64_t /*payload_seed*/, int jobs) {
  SymptomReport report;
  report.states.resize(states.size());

  if (jobs <= 1) {
    for (std::size_t i = 0; i < states.size(); ++i) {
      report.states[i] = test_one_state(base, trace, states[i], expectations);
    }
    return report;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= states.size()) break;
      report.states[i] = test_one_state(base, trace, states[i], expectations);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return report;
}

}  // namespace faultforge
