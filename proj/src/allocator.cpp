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
#include "faultforge/allocator.hpp"

namespace faultforge {

Result<std::vector<std::uint8_t>> SimAllocator::kmalloc(const std::string& cache,
                                                        std::size_t size,
                                                        bool can_sleep,
                                                        FaultContext ctx) {
  if (caps_ != nullptr) {
    SlabAllocInfo info{cache, can_sleep, static_cast<std::int64_t>(size)};
    if (caps_->slab_should_fail(ctx, info)) {
      return Status::with_errno(ErrorCode::kNoMemory,
                                "slab allocation failed (" + cache + ")", -12);
    }
  }
  return std::vector<std::uint8_t>(size, 0);
}

Result<std::vector<std::uint8_t>> SimAllocator::alloc_pages(int order,
                                                            bool can_sleep,
                                                            bool highmem,
                                                            FaultContext ctx) {
  if (caps_ != nullptr) {
    PageAllocInfo info{order, can_sleep, highmem};
    if (caps_->page_alloc_should_fail(ctx, info)) {
      return Status::with_errno(ErrorCode::kNoMemory,
                                "page allocation failed (order " +
                                    std::to_string(order) + ")",
                                -12);
    }
  }
  return std::vector<std::uint8_t>(kPageSize << order, 0);
}

}  // namespace faultforge
