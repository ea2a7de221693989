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

#include <string>
#include <vector>

#include "faultforge/session.hpp"

namespace faultforge {

// Packaged end-to-end reproductions against the simulated stack:
//   slab-module-init    task-filtered slab failures break a module's init
//   page-alloc-range    failures confined to a module's address range,
//                       stack depth 10
//   open-ctree          errno -12 injected into mount, then clean disable
//   slab-cache-filter   at most one failure, only on the marked cache, 1%
//   nvme-default        invalid-opcode + DNR completion surfaces an I/O error
//
// Scenarios snapshot the config tree up front and restore it on every exit
// path; the cleanup guard first writes probability 0 to the scenario's
// capability (the SIGINT trap behavior) and then restores the snapshot.

struct ScenarioOptions {
  std::uint64_t seed = 1;
  bool simulate_interrupt = false;  // abort after configuration; cleanup must
                                    // still restore the tree
};

struct ScenarioCheck {
  std::string what;
  bool passed = true;
  std::string detail;
};

struct ScenarioReport {
  std::string name;
  bool interrupted = false;
  std::vector<ScenarioCheck> checks;
  std::string log_slice;
  bool passed() const {
    for (const auto& c : checks) {
      if (!c.passed) return false;
    }
    return true;
  }
  std::string render() const;
};

std::vector<std::string> scenario_names();

Result<ScenarioReport> run_scenario(Session& session, const std::string& name,
                                    const ScenarioOptions& opts = {});

}  // namespace faultforge
