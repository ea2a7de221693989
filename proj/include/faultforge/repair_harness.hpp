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

#include <optional>
#include <string>
#include <vector>

#include "faultforge/checker.hpp"
#include "faultforge/history.hpp"
#include "faultforge/image_compare.hpp"

namespace faultforge {

// Interrupted-repair testing. One campaign on a (corrupted) test image:
//   - full checker run on a copy, I/O recorded -> reference image + history
//   - per selected prefix p: replay the first p commands onto a fresh copy
//     (the interrupted image), run the checker to completion on it (the
//     repaired image), compare repaired vs reference
// A Mismatch after an uninterrupted re-check means the interruption left
// corruption the checker cannot recover.

enum class VerdictOutcome { Match, RepairedToMatch, Mismatch };

const char* verdict_outcome_name(VerdictOutcome v);

struct InterruptionVerdict {
  std::size_t prefix_length = 0;
  VerdictOutcome outcome = VerdictOutcome::Match;
  ImageDiff diff;  // repaired vs reference, empty unless Mismatch
};

struct PrefixSelection {
  enum class Kind { all, list, sample };
  Kind kind = Kind::all;
  std::vector<std::size_t> list;
  std::size_t sample_k = 0;
  std::uint64_t seed = 0;

  // "all" | "list:1,2,7" | "sample:k:seed"
  static Result<PrefixSelection> parse(const std::string& spec);
};

struct RfsckResult {
  CommandHistory history;
  CheckReport reference_report;
  std::uint64_t reference_digest = 0;
  std::vector<InterruptionVerdict> verdicts;
  std::size_t mismatches = 0;
};

Result<RfsckResult> run_campaign(const SimDisk& test_image,
                                 const CheckerPolicy& policy,
                                 const PrefixSelection& prefixes,
                                 bool byte_compare = false);

// The prefixes a selection expands to for a given history; sampled
// selections always include 0, |history| and the flush-adjacent indices.
std::vector<std::size_t> expand_prefixes(const PrefixSelection& sel,
                                         const CommandHistory& history);

}  // namespace faultforge
