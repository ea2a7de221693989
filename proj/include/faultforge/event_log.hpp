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
#include <mutex>
#include <string>
#include <vector>

namespace faultforge {

// One injection decision, the dmesg analog. Events are only recorded for
// firing decisions, gated by the capability's verbose level (0 none,
// 1 a line, 2 a line plus the caller trace).
struct FaultEvent {
  std::uint64_t logical_time = 0;
  std::string capability;
  bool decision = true;
  std::uint64_t task_id = 0;
  std::int64_t size = 0;
  std::string extras;  // capability-specific tail, e.g. "status=... dnr=1"
  std::vector<std::uint64_t> trace;  // nonempty iff verbose was 2
};

std::string render_event(const FaultEvent& ev);

class EventLog {
 public:
  // Assigns the logical time; events are totally ordered by it.
  std::uint64_t append(FaultEvent ev);

  std::vector<FaultEvent> events() const;
  std::vector<FaultEvent> since(std::uint64_t logical_time) const;
  std::uint64_t now() const { return next_time_.load(); }
  void set_next_time(std::uint64_t t) { next_time_.store(t); }

  std::string render() const;
  std::string render_since(std::uint64_t logical_time) const;

 private:
  mutable std::mutex mu_;
  std::vector<FaultEvent> events_;
  std::atomic<std::uint64_t> next_time_{1};
};

}  // namespace faultforge
