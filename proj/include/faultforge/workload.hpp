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

#include "faultforge/allocator.hpp"
#include "faultforge/store.hpp"

namespace faultforge {

struct WorkloadOp {
  enum class Kind { put, get, remove };
  Kind kind = Kind::put;
  std::string name;
  std::uint64_t size = 0;
};

// Workload specs: either an explicit comma-separated op list
// ("put:a:5120,get:a,del:a") or a canned name:
//   put-loop[:count[:size]]    repeated puts
//   mixed                      puts, an overwrite, a delete
//   readback                   puts followed by gets
//   alloc-workload[:count]     raw slab + page allocations, no store
struct Workload {
  std::vector<WorkloadOp> ops;
  std::size_t alloc_count = 0;  // nonzero: allocation workload
  static Result<Workload> parse(const std::string& spec);
};

// Deterministic object payload for (seed, name, occurrence).
std::vector<std::uint8_t> workload_payload(std::uint64_t seed,
                                           const std::string& name,
                                           std::size_t occurrence,
                                           std::uint64_t size);

struct WorkloadRunReport {
  std::vector<Status> op_status;
  std::size_t failed_ops = 0;
  std::size_t verify_mismatches = 0;  // gets whose bytes were wrong
  bool ok() const { return failed_ops == 0 && verify_mismatches == 0; }
};

WorkloadRunReport run_store_workload(Store& store, const Workload& workload,
                                     std::uint64_t payload_seed);

// Alternates slab allocations (both sleeping and atomic contexts, cycling
// over the declared caches) with page allocations.
WorkloadRunReport run_alloc_workload(SimAllocator& alloc, const Workload& workload,
                                     const std::vector<std::string>& caches);

}  // namespace faultforge
