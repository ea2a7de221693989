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

#include "faultforge/callsite.hpp"
#include "faultforge/fault_core.hpp"

namespace faultforge {

// The `current` analog: which simulated task this thread is running as.
class TaskScope {
 public:
  explicit TaskScope(TaskState* task);
  ~TaskScope();
  TaskScope(const TaskScope&) = delete;
  TaskScope& operator=(const TaskScope&) = delete;

  static TaskState* current();

 private:
  TaskState* prev_;
  static thread_local TaskState* current_;
};

// Snapshot of the calling environment: current task (id, make-it-fail,
// fail-nth owner) plus the simulated caller stack.
FaultContext current_fault_context(std::int64_t size = 0);

}  // namespace faultforge
