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

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "faultforge/event_log.hpp"
#include "faultforge/rng.hpp"
#include "faultforge/status.hpp"

namespace faultforge {

// The tunable gate state of one fault capability. Field semantics follow
// the debugfs entries: probability is a percentage, interval a periodicity
// on the call counter, times the remaining failure budget (-1 unlimited),
// space a size budget that blocks injection until consumed. The require /
// reject pairs are half-open [start,end) ranges over abstract caller
// addresses; a zero-width range means "not set".
struct FaultAttr {
  int probability = 0;                 // [0,100]
  std::int64_t interval = 1;           // >= 0
  std::int64_t times = -1;             // -1 = unlimited
  std::int64_t space = 0;              // >= 0
  int verbose = 2;                     // {0,1,2}
  bool task_filter = false;
  std::uint64_t require_start = 0;
  std::uint64_t require_end = 0;
  std::uint64_t reject_start = 0;
  std::uint64_t reject_end = 0;
  std::int64_t stacktrace_depth = 32;  // >= 0
  std::uint64_t count = 0;             // monotone call counter
  Pcg32 rng{0};
};

// Per-task state, the /proc/<pid> analog. fail_nth is the armed countdown:
// 0 means disarmed or already fired, positive means not yet injected.
class TaskState {
 public:
  explicit TaskState(std::uint64_t id) : id_(id) {}

  std::uint64_t id() const { return id_; }

  bool make_it_fail() const { return make_it_fail_.load(); }
  void set_make_it_fail(bool v) { make_it_fail_.store(v); }

  std::int64_t fail_nth() const { return fail_nth_.load(); }
  void arm_fail_nth(std::int64_t n) { fail_nth_.store(n); }

  // Consumes one step of an armed counter. Returns true when this call is
  // governed by fail-nth (armed), with *fire set iff the counter hit zero.
  bool consume_fail_nth(bool* fire);

 private:
  std::uint64_t id_;
  std::atomic<bool> make_it_fail_{false};
  std::atomic<std::int64_t> fail_nth_{0};
};

class TaskRegistry {
 public:
  TaskState& create(std::uint64_t id);
  TaskState* find(std::uint64_t id);
  void remove(std::uint64_t id);

  Status arm_fail_nth(std::uint64_t id, std::int64_t n);
  Result<std::int64_t> read_fail_nth(std::uint64_t id);

  std::vector<std::uint64_t> ids() const;

 private:
  mutable std::mutex mu_;
  std::map<std::uint64_t, std::unique_ptr<TaskState>> tasks_;
};

// Per-call information fed to the decision engine.
struct FaultContext {
  std::uint64_t task_id = 0;
  bool make_it_fail = false;
  std::vector<std::uint64_t> caller_trace;  // innermost first
  std::int64_t size = 0;
  TaskState* task = nullptr;  // owner of the fail-nth counter, may be null
  std::string extras;         // copied into the logged event, if any
};

// should_fail with the pinned gate order:
//   1. fail-nth override (armed tasks are governed entirely by the counter)
//   2. task filter
//   3. stack filter (require/reject ranges over the first stacktrace_depth
//      callers)
//   4. space (consumed-and-blocked while space > size)
//   5. times
//   6. interval (the call counter increments on every call, armed calls
//      excepted)
//   7. probability (one uniform draw in [0,100) per call reaching here)
// A firing decision decrements times (unless -1, never below 0) and emits
// an event per the verbose level.
class FaultGate {
 public:
  FaultGate(std::string name, FaultAttr attr, EventLog* log = nullptr);

  bool should_fail(FaultContext& ctx);

  const std::string& name() const { return name_; }

  // Runs f under the gate lock with mutable access to the attr. Config
  // bindings and tests use this; a concurrent should_fail sees either the
  // pre- or post-state, never a torn one.
  template <typename F>
  auto with_attr(F&& f) {
    std::lock_guard<std::mutex> lock(mu_);
    return f(attr_);
  }
  template <typename F>
  auto with_attr(F&& f) const {
    std::lock_guard<std::mutex> lock(mu_);
    return f(attr_);
  }

  FaultAttr snapshot() const;

 private:
  bool stack_filter_passes(const FaultContext& ctx) const;  // caller holds mu_
  void on_fire(const FaultContext& ctx);                    // caller holds mu_

  mutable std::mutex mu_;
  std::string name_;
  FaultAttr attr_;
  EventLog* log_;
};

// Parses the boot-time spec "<interval>,<probability>,<space>,<times>" and
// returns a copy of attr with those four fields replaced. Errors name the
// offending field.
Result<FaultAttr> setup_fault_attr(const FaultAttr& attr, const std::string& spec);

}  // namespace faultforge
