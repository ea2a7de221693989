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

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "faultforge/checker.hpp"
#include "faultforge/image_compare.hpp"

namespace faultforge {

enum class FaultModelKind { WholeDeviceFailure, GlobalInconsistency };

Result<FaultModelKind> parse_fault_model(const std::string& name);

struct FaultModelParams {
  FaultModelKind kind = FaultModelKind::GlobalInconsistency;
  std::size_t blocks = 1;     // corruption block count
  std::uint64_t seed = 0;
};

struct Mutation {
  std::uint64_t lba = 0;
  std::string kind;  // "flip:bit=<n>" or "zero"
};

struct FaultManifest {
  bool device_failed = false;
  std::vector<Mutation> mutations;
  std::vector<std::string> warnings;

  std::string render() const;  // line-oriented: "block <lba> <mutation>"
};

struct FaultedImage {
  SimDisk disk;
  bool device_failed = false;
  FaultManifest manifest;
};

// Applies one fault model to each image. WholeDeviceFailure keeps bytes
// intact and flags the device; GlobalInconsistency mutates `blocks`
// distinct metadata blocks, weighted toward the bitmap and table regions,
// identically for every image under the shared seed. Every mutated block
// lands in the manifest.
Result<std::vector<FaultedImage>> apply_fault_model(
    const FaultModelParams& params, const std::vector<SimDisk>& images);

enum class PostFaultOutcome { Recovered, DataLoss, CheckerFailed };

const char* post_fault_outcome_name(PostFaultOutcome o);

struct PostFaultResult {
  PostFaultOutcome outcome = PostFaultOutcome::Recovered;
  std::string detail;
  CheckReport report;
};

struct PfaultReport {
  std::vector<PostFaultResult> per_image;
};

// Runs check-and-repair plus a verifiable read/write workload on each
// faulted image, classifying the outcome per image. The checker runs under
// a watchdog so a hang has a testable meaning; `checker_override` exists
// for exercising the watchdog with a deliberately stuck checker.
using CheckerFn = std::function<Result<CheckReport>(BlockIo&)>;

PfaultReport post_fault_check(
    std::vector<FaultedImage>& faulted, const std::vector<SimDisk>& originals,
    std::chrono::milliseconds watchdog = std::chrono::milliseconds(10000),
    CheckerFn checker_override = nullptr);

}  // namespace faultforge
