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
#include "faultforge/fault_core.hpp"

#include <algorithm>
#include <charconv>

namespace faultforge {

bool TaskState::consume_fail_nth(bool* fire) {
  *fire = false;
  std::int64_t cur = fail_nth_.load();
  while (cur > 0) {
    if (fail_nth_.compare_exchange_weak(cur, cur - 1)) {
      *fire = (cur - 1 == 0);
      return true;
    }
  }
  return false;
}

TaskState& TaskRegistry::create(std::uint64_t id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = tasks_.find(id);
  if (it == tasks_.end()) {
    it = tasks_.emplace(id, std::make_unique<TaskState>(id)).first;
  }
  return *it->second;
}

TaskState* TaskRegistry::find(std::uint64_t id) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = tasks_.find(id);
  return it == tasks_.end() ? nullptr : it->second.get();
}

void TaskRegistry::remove(std::uint64_t id) {
  std::lock_guard<std::mutex> lock(mu_);
  tasks_.erase(id);
}

Status TaskRegistry::arm_fail_nth(std::uint64_t id, std::int64_t n) {
  if (n < 0) {
    return Status::error(ErrorCode::kOutOfRange, "fail-nth must be >= 0");
  }
  TaskState* t = find(id);
  if (t == nullptr) {
    return Status::error(ErrorCode::kNotFound,
                         "no such task registered: " + std::to_string(id));
  }
  t->arm_fail_nth(n);
  return Status::ok();
}

Result<std::int64_t> TaskRegistry::read_fail_nth(std::uint64_t id) {
  TaskState* t = find(id);
  if (t == nullptr) {
    return Status::error(ErrorCode::kNotFound,
                         "no such task registered: " + std::to_string(id));
  }
  return t->fail_nth();
}

std::vector<std::uint64_t> TaskRegistry::ids() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::uint64_t> out;
  out.reserve(tasks_.size());
  for (const auto& [id, _] : tasks_) out.push_back(id);
  return out;
}

FaultGate::FaultGate(std::string name, FaultAttr attr, EventLog* log)
    : name_(std::move(name)), attr_(std::move(attr)), log_(log) {}

FaultAttr FaultGate::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return attr_;
}

bool FaultGate::stack_filter_passes(const FaultContext& ctx) const {
  bool have_require = attr_.require_end > attr_.require_start;
  bool have_reject = attr_.reject_end > attr_.reject_start;
  if (!have_require && !have_reject) return true;

  bool found = !have_require;
  std::size_t depth = std::min<std::size_t>(
      ctx.caller_trace.size(),
      attr_.stacktrace_depth < 0 ? 0 : static_cast<std::size_t>(attr_.stacktrace_depth));
  for (std::size_t i = 0; i < depth; ++i) {
    std::uint64_t addr = ctx.caller_trace[i];
    if (have_reject && addr >= attr_.reject_start && addr < attr_.reject_end) {
      return false;
    }
    if (have_require && addr >= attr_.require_start && addr < attr_.require_end) {
      found = true;
    }
  }
  return found;
}

void FaultGate::on_fire(const FaultContext& ctx) {
  if (attr_.times > 0) attr_.times--;
  if (log_ == nullptr || attr_.verbose == 0) return;
  FaultEvent ev;
  ev.capability = name_;
  ev.decision = true;
  ev.task_id = ctx.task_id;
  ev.size = ctx.size;
  ev.extras = ctx.extras;
  if (attr_.verbose == 2) ev.trace = ctx.caller_trace;
  log_->append(std::move(ev));
}

bool FaultGate::should_fail(FaultContext& ctx) {
  std::lock_guard<std::mutex> lock(mu_);

  // An armed fail-nth counter governs the call outright: every generic gate
  // is skipped, only times accounting still applies on the forced failure.
  if (ctx.task != nullptr) {
    bool fire = false;
    if (ctx.task->consume_fail_nth(&fire)) {
      if (!fire) return false;
      on_fire(ctx);
      return true;
    }
  }

  attr_.count++;

  if (attr_.task_filter && !ctx.make_it_fail) return false;

  if (!stack_filter_passes(ctx)) return false;

  if (attr_.space > ctx.size) {
    attr_.space -= ctx.size;
    return false;
  }

  if (attr_.times == 0) return false;

  if (attr_.interval > 1 &&
      attr_.count % static_cast<std::uint64_t>(attr_.interval) != 0) {
    return false;
  }

  if (static_cast<int>(attr_.rng.below(100)) >= attr_.probability) return false;

  on_fire(ctx);
  return true;
}

namespace {

bool parse_i64(std::string_view s, std::int64_t* out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Result<FaultAttr> setup_fault_attr(const FaultAttr& attr, const std::string& spec) {
  static constexpr const char* kFields[4] = {"interval", "probability", "space",
                                             "times"};
  std::string_view rest = spec;
  std::int64_t vals[4];
  for (int i = 0; i < 4; ++i) {
    std::size_t comma = rest.find(',');
    std::string_view tok = (comma == std::string_view::npos) ? rest : rest.substr(0, comma);
    if (i < 3 && comma == std::string_view::npos) {
      return Status::error(ErrorCode::kInvalidArgument,
                           std::string("boot spec needs 4 fields, missing ") +
                               kFields[i + 1]);
    }
    if (i == 3 && comma != std::string_view::npos) {
      return Status::error(ErrorCode::kInvalidArgument,
                           "boot spec has trailing fields after times");
    }
    if (!parse_i64(tok, &vals[i])) {
      return Status::error(ErrorCode::kInvalidArgument,
                           std::string("not an integer for field ") + kFields[i]);
    }
    rest = (comma == std::string_view::npos) ? std::string_view{} : rest.substr(comma + 1);
  }
  if (vals[0] < 0) {
    return Status::error(ErrorCode::kOutOfRange, "interval must be >= 0");
  }
  if (vals[1] < 0 || vals[1] > 100) {
    return Status::error(ErrorCode::kOutOfRange, "probability must be in [0,100]");
  }
  if (vals[2] < 0) {
    return Status::error(ErrorCode::kOutOfRange, "space must be >= 0");
  }
  if (vals[3] < -1) {
    return Status::error(ErrorCode::kOutOfRange, "times must be >= -1");
  }
  FaultAttr out = attr;
  out.interval = vals[0];
  out.probability = static_cast<int>(vals[1]);
  out.space = vals[2];
  out.times = vals[3];
  return out;
}

}  // namespace faultforge
