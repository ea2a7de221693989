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
#include <vector>

#include "faultforge/capabilities.hpp"
#include "faultforge/fault_core.hpp"

namespace faultforge {

// The simulated kernel allocator. Real storage is plain heap memory; the
// point is the hook: every kmalloc consults failslab and every alloc_pages
// consults fail_page_alloc before "allocating". Contexts come from the
// calling task and the simulated call stack.
class SimAllocator {
 public:
  explicit SimAllocator(CapabilityRegistry* caps) : caps_(caps) {}

  Result<std::vector<std::uint8_t>> kmalloc(const std::string& cache,
                                            std::size_t size,
                                            bool can_sleep, FaultContext ctx);
  Result<std::vector<std::uint8_t>> alloc_pages(int order, bool can_sleep,
                                                bool highmem, FaultContext ctx);

  static constexpr std::size_t kPageSize = 4096;

 private:
  CapabilityRegistry* caps_;
};

}  // namespace faultforge
