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
#include "faultforge/event_log.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

namespace faultforge {

std::string render_event(const FaultEvent& ev) {
  std::ostringstream os;
  os << ev.logical_time << ' ' << ev.capability << ' '
     << (ev.decision ? "FAIL" : "PASS") << " task=" << ev.task_id
     << " size=" << ev.size;
  if (!ev.extras.empty()) os << ' ' << ev.extras;
  for (std::size_t i = 0; i < ev.trace.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "\n    #%zu 0x%" PRIx64, i, ev.trace[i]);
    os << buf;
  }
  return os.str();
}

std::uint64_t EventLog::append(FaultEvent ev) {
  std::uint64_t t = next_time_.fetch_add(1);
  ev.logical_time = t;
  std::lock_guard<std::mutex> lock(mu_);
  events_.push_back(std::move(ev));
  return t;
}

std::vector<FaultEvent> EventLog::events() const {
  std::lock_guard<std::mutex> lock(mu_);
  return events_;
}

std::vector<FaultEvent> EventLog::since(std::uint64_t logical_time) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<FaultEvent> out;
  for (const auto& ev : events_) {
    if (ev.logical_time >= logical_time) out.push_back(ev);
  }
  return out;
}

std::string EventLog::render() const { return render_since(0); }

std::string EventLog::render_since(std::uint64_t logical_time) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::string out;
  for (const auto& ev : events_) {
    if (ev.logical_time < logical_time) continue;
    out += render_event(ev);
    out += '\n';
  }
  return out;
}

}  // namespace faultforge
