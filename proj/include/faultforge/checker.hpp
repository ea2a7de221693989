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
#include <string>
#include <vector>

#include "faultforge/block_device.hpp"
#include "faultforge/layout.hpp"

namespace faultforge {

enum class FindingClass {
  BitmapMismatch,
  DanglingObject,
  BadObjectChecksum,
  IncompleteJournalTxn,
  BadSuperblock,
};

enum class RepairAction { repaired, dropped, unrepairable };

const char* finding_class_name(FindingClass c);
const char* repair_action_name(RepairAction a);

struct Finding {
  FindingClass cls;
  std::uint64_t lba = 0;
  std::string detail;
  RepairAction action = RepairAction::repaired;
};

struct CheckReport {
  std::vector<Finding> findings;
  bool clean() const { return findings.empty(); }
  std::string render() const;
};

// The shipped checker journals its repairs and drops crosslinked objects.
// The buggy fixture variant repairs crosslinks by relocating the second
// object and writes repairs directly, object table first, then the data
// copy, then the bitmap — the unjournaled ordering whose interruption the
// repair harness is built to expose.
struct CheckerPolicy {
  bool journal_repairs = true;
  bool relocate_crosslinked = false;

  static CheckerPolicy shipped() { return {true, false}; }
  static CheckerPolicy buggy_fixture() { return {false, true}; }
};

Result<CheckerPolicy> parse_checker_policy(const std::string& name);

// Deterministic repairing check: restore the superblock from its backup,
// replay a committed journal transaction, discard an incomplete one, drop
// objects with dangling extents or bad checksums, rebuild the bitmap from
// the surviving table. Repairs are written as ordinary device I/O so a
// recorder can capture and interrupt them.
Result<CheckReport> run_checker(BlockIo& io,
                                const CheckerPolicy& policy = CheckerPolicy::shipped());

}  // namespace faultforge
