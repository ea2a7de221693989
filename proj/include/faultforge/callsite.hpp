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

#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "faultforge/status.hpp"

namespace faultforge {

// Abstract address space for the stack-trace filters. Each simulated module
// owns a fixed range; call sites get stable addresses inside their module's
// text section, assigned in registration order. The .data section start
// doubles as the text end, mirroring how the page-alloc example derives a
// module's injectable range.
class CallSiteRegistry {
 public:
  struct Module {
    std::string name;
    std::uint64_t text_start = 0;
    std::uint64_t data_start = 0;  // == text end
  };

  Module& register_module(const std::string& name);
  const Module* find_module(const std::string& name) const;

  // Registers (or looks up) a named call site inside the module.
  std::uint64_t register_site(const std::string& module,
                              const std::string& site);
  Result<std::uint64_t> site_address(const std::string& module,
                                     const std::string& site) const;

  static constexpr std::uint64_t kModuleSpan = 0x10000;
  static constexpr std::uint64_t kSiteStride = 0x10;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Module> modules_;
  std::map<std::string, std::uint64_t> sites_;  // "module:site" -> address
  std::map<std::string, std::uint64_t> next_site_;
  std::uint64_t next_module_base_ = 0x100000;
};

// RAII frame on the simulated call stack, one per thread. The engines read
// the current stack innermost-first as the caller trace.
class ScopedCaller {
 public:
  explicit ScopedCaller(std::uint64_t address);
  ~ScopedCaller();
  ScopedCaller(const ScopedCaller&) = delete;
  ScopedCaller& operator=(const ScopedCaller&) = delete;

  static std::vector<std::uint64_t> current_trace();

 private:
  static thread_local std::vector<std::uint64_t> stack_;
};

}  // namespace faultforge
