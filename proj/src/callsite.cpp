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
#include "faultforge/callsite.hpp"

#include <algorithm>

namespace faultforge {

CallSiteRegistry::Module& CallSiteRegistry::register_module(
    const std::string& name) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = modules_.find(name);
  if (it == modules_.end()) {
    Module m;
    m.name = name;
    m.text_start = next_module_base_;
    m.data_start = next_module_base_ + kModuleSpan / 2;
    next_module_base_ += kModuleSpan;
    it = modules_.emplace(name, m).first;
    next_site_[name] = it->second.text_start;
  }
  return it->second;
}

const CallSiteRegistry::Module* CallSiteRegistry::find_module(
    const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = modules_.find(name);
  return it == modules_.end() ? nullptr : &it->second;
}

std::uint64_t CallSiteRegistry::register_site(const std::string& module,
                                              const std::string& site) {
  register_module(module);
  std::lock_guard<std::mutex> lock(mu_);
  std::string key = module + ":" + site;
  auto it = sites_.find(key);
  if (it != sites_.end()) return it->second;
  std::uint64_t addr = next_site_[module];
  next_site_[module] += kSiteStride;
  sites_[key] = addr;
  return addr;
}

Result<std::uint64_t> CallSiteRegistry::site_address(
    const std::string& module, const std::string& site) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = sites_.find(module + ":" + site);
  if (it == sites_.end()) {
    return Status::error(ErrorCode::kNotFound,
                         "unknown call site " + module + ":" + site);
  }
  return it->second;
}

thread_local std::vector<std::uint64_t> ScopedCaller::stack_;

ScopedCaller::ScopedCaller(std::uint64_t address) { stack_.push_back(address); }

ScopedCaller::~ScopedCaller() { stack_.pop_back(); }

std::vector<std::uint64_t> ScopedCaller::current_trace() {
  std::vector<std::uint64_t> out(stack_.rbegin(), stack_.rend());
  return out;
}

}  // namespace faultforge
