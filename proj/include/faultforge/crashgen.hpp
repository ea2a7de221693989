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
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "faultforge/checker.hpp"
#include "faultforge/history.hpp"
#include "faultforge/workload.hpp"

namespace faultforge {

// Crash model: writes between flush barriers (an epoch) may persist in any
// subset; everything before the last completed barrier is durable. A crash
// state is (epoch e, subset S of epoch e's writes): all earlier epochs
// fully applied, S applied, nothing later. Block-size commands are atomic;
// the torn mode splits multi-block writes into per-block sub-writes first.

struct WriteTrace {
  CommandHistory history;

  // [begin,end) record index ranges of the write runs between flushes;
  // always at least one epoch (possibly empty).
  std::vector<std::pair<std::size_t, std::size_t>> epochs() const;
  std::vector<std::size_t> epoch_write_indices(std::size_t epoch) const;

  WriteTrace split_torn() const;
};

struct CrashStateDesc {
  std::size_t epoch = 0;
  std::uint64_t subset_mask = 0;  // bit i: include the epoch's i-th write
  std::string label() const;
};

// Closed form for the distinct-state count: sum over epochs of 2^n_e,
// minus (E-1) boundary duplicates.
std::uint64_t crash_state_count(const WriteTrace& trace);

// Deduplicated enumeration in canonical order. With a limit, a seeded
// uniform sample that always includes the empty and final states. Refuses
// unbounded enumeration when an epoch has more than kMaxEpochWrites writes.
Result<std::vector<CrashStateDesc>> enumerate_crash_states(
    const WriteTrace& trace, std::optional<std::size_t> limit = std::nullopt,
    std::optional<std::uint64_t> seed = std::nullopt);

constexpr std::size_t kMaxEpochWrites = 20;

Result<SimDisk> materialize_crash_state(const SimDisk& base,
                                        const WriteTrace& trace,
                                        const CrashStateDesc& state);

enum class Symptom { Consistent, ChecksumErr, JournalTxnErr, MetadataErr, MountErr };

const char* symptom_name(Symptom s);

// What a crash state must still contain: one entry per workload op whose
// effect was acknowledged-and-flushed by the boundary record index.
struct OpExpectation {
  std::string kind;  // "put" | "remove"
  std::string name;
  std::uint64_t size = 0;
  std::uint64_t payload_digest = 0;
  std::size_t boundary_records = 0;  // history length when the op returned
};

struct StateResult {
  CrashStateDesc state;
  Symptom symptom = Symptom::Consistent;
  std::string detail;
  std::uint64_t image_digest = 0;
};

struct SymptomReport {
  std::vector<StateResult> states;
  std::map<std::string, std::uint64_t> counts() const;
  std::uint64_t non_consistent() const;
};

struct RecordResult {
  WriteTrace trace;
  std::vector<OpExpectation> expectations;
  std::vector<Status> op_status;
  bool workload_aborted = false;
};

// Runs the workload against a freshly mounted store on the image, recording
// every device write and barrier.
Result<RecordResult> record_workload(SimDisk& image, const Workload& workload,
                                     std::uint64_t payload_seed);

// Mounts, checks and verifies expectations on every state, each on an
// isolated copy; `jobs` > 1 tests states concurrently (the report is
// order-independent either way).
Result<SymptomReport> test_states(const SimDisk& base, const WriteTrace& trace,
                                  const std::vector<CrashStateDesc>& states,
                                  const std::vector<OpExpectation>& expectations,
                                  std::uint64_t payload_seed, int jobs = 1);

}  // namespace faultforge
