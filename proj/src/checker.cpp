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
#include "faultforge/checker.hpp"

#include <algorithm>
#include <cstring>
#include <map>
#include <set>

#include "faultforge/digest.hpp"
#include "faultforge/journal.hpp"

namespace faultforge {

const char* finding_class_name(FindingClass c) {
  switch (c) {
    case FindingClass::BitmapMismatch: return "BitmapMismatch";
    case FindingClass::DanglingObject: return "DanglingObject";
    case FindingClass::BadObjectChecksum: return "BadObjectChecksum";
    case FindingClass::IncompleteJournalTxn: return "IncompleteJournalTxn";
    case FindingClass::BadSuperblock: return "BadSuperblock";
  }
  return "?";
}

const char* repair_action_name(RepairAction a) {
  switch (a) {
    case RepairAction::repaired: return "repaired";
    case RepairAction::dropped: return "dropped";
    case RepairAction::unrepairable: return "unrepairable";
  }
  return "?";
}

std::string CheckReport::render() const {
  if (findings.empty()) return "clean\n";
  std::string out;
  for (const auto& f : findings) {
    out += std::string(finding_class_name(f.cls)) + " lba=" +
           std::to_string(f.lba) + " " + repair_action_name(f.action);
    if (!f.detail.empty()) out += " (" + f.detail + ")";
    out += '\n';
  }
  return out;
}

Result<CheckerPolicy> parse_checker_policy(const std::string& name) {
  if (name == "shipped") return CheckerPolicy::shipped();
  if (name == "buggy-fixture") return CheckerPolicy::buggy_fixture();
  return Status::error(ErrorCode::kInvalidArgument,
                       "unknown checker policy: " + name);
}

namespace {

struct Extent {
  std::uint64_t start = 0;
  std::uint64_t blocks = 0;
  bool overlaps(const Extent& o) const {
    return blocks > 0 && o.blocks > 0 && start < o.start + o.blocks &&
           o.start < start + o.blocks;
  }
};

struct Relocation {
  std::size_t slot;
  std::uint64_t new_start;
  std::vector<std::uint8_t> data;  // padded to blocks
};

bool extent_sane(const Superblock& sb, const TableEntry& e) {
  if (e.extent_blocks == 0) return e.size == 0;
  if (e.extent_start < sb.data_start) return false;
  if (e.extent_start + e.extent_blocks > sb.backup_lba) return false;
  return blocks_for(e.size, sb.block_size) == e.extent_blocks;
}

}  // namespace

Result<CheckReport> run_checker(BlockIo& io, const CheckerPolicy& policy) {
  CheckReport report;
  const std::uint64_t device_blocks = io.device().disk().block_count();
  if (device_blocks < kMinDeviceBlocks) {
    return Status::error(ErrorCode::kInvalidArgument, "device too small");
  }

  // Superblock, with the backup in the last block as fallback.
  std::vector<std::uint8_t> primary(kBlockSize), backup(kBlockSize);
  Status s = io.read(0, primary);
  if (!s.is_ok()) return s;
  s = io.read(device_blocks - 1, backup);
  if (!s.is_ok()) return s;

  auto primary_sb = decode_superblock(primary, device_blocks);
  auto backup_sb = decode_superblock(backup, device_blocks);

  Superblock sb;
  bool restore_primary = false, restore_backup = false;
  if (primary_sb.is_ok()) {
    sb = primary_sb.take();
    if (!backup_sb.is_ok() ||
        std::memcmp(primary.data(), backup.data(), kBlockSize) != 0) {
      report.findings.push_back({FindingClass::BadSuperblock, device_blocks - 1,
                                 "backup superblock restored from primary",
                                 RepairAction::repaired});
      restore_backup = true;
    }
  } else if (backup_sb.is_ok()) {
    sb = backup_sb.take();
    report.findings.push_back({FindingClass::BadSuperblock, 0,
                               "primary superblock restored from backup",
                               RepairAction::repaired});
    restore_primary = true;
  } else {
    report.findings.push_back({FindingClass::BadSuperblock, 0,
                               primary_sb.status().message(),
                               RepairAction::unrepairable});
    return report;  // image returned unchanged
  }

  // Journal recovery precedes the structural passes so they see the
  // checkpointed state.
  std::uint64_t next_seq = 1;
  if (!sb.unsafe()) {
    auto scan = scan_journal(io, sb);
    if (!scan.is_ok()) return scan.status();
    switch (scan.value().state) {
      case JournalState::valid:
        s = journal_checkpoint(io, scan.value().txn);
        if (!s.is_ok()) return s;
        next_seq = scan.value().next_seq;
        break;
      case JournalState::invalid:
        report.findings.push_back({FindingClass::IncompleteJournalTxn,
                                   sb.journal_start, "uncommitted transaction",
                                   RepairAction::dropped});
        s = journal_sanitize(io, sb);
        if (!s.is_ok()) return s;
        break;
      case JournalState::empty:
        break;
    }
  }

  std::vector<std::uint8_t> bitmap(sb.bitmap_blocks * sb.block_size);
  s = io.read(sb.bitmap_start, bitmap);
  if (!s.is_ok()) return s;
  std::vector<std::uint8_t> table(sb.table_blocks * sb.block_size);
  s = io.read(sb.table_start, table);
  if (!s.is_ok()) return s;

  const std::uint64_t capacity = sb.table_capacity();
  std::vector<TableEntry> entries(capacity);
  for (std::uint64_t i = 0; i < capacity; ++i) {
    entries[i] = decode_table_entry(std::span<const std::uint8_t>(table).subspan(
        i * kTableEntrySize, kTableEntrySize));
  }

  std::set<std::size_t> dropped;
  std::vector<Relocation> relocations;

  // Structural + checksum pass.
  for (std::size_t i = 0; i < capacity; ++i) {
    TableEntry& e = entries[i];
    if (!e.live()) continue;
    if (!extent_sane(sb, e)) {
      report.findings.push_back({FindingClass::DanglingObject, e.extent_start,
                                 e.name + ": extent out of range",
                                 RepairAction::dropped});
      dropped.insert(i);
      continue;
    }
    if (e.extent_blocks > 0) {
      std::vector<std::uint8_t> data(e.extent_blocks * sb.block_size);
      s = io.read(e.extent_start, data);
      if (!s.is_ok()) return s;
      data.resize(e.size);
      if (fnv1a64(data) != e.checksum) {
        report.findings.push_back({FindingClass::BadObjectChecksum,
                                   e.extent_start, e.name, RepairAction::dropped});
        dropped.insert(i);
      }
    } else if (e.checksum != fnv1a64(std::span<const std::uint8_t>{})) {
      report.findings.push_back({FindingClass::BadObjectChecksum, 0, e.name,
                                 RepairAction::dropped});
      dropped.insert(i);
    }
  }

  // Crosslink pass over the checksum-valid survivors. Conservative reserve:
  // every live extent plus chosen relocation targets, so a relocation never
  // lands on blocks another survivor still needs.
  auto reserved_bitmap = [&]() {
    std::vector<std::uint8_t> r(sb.bitmap_blocks * sb.block_size, 0);
    for (std::uint64_t b = 0; b < sb.data_start; ++b) bitmap_set(r, b, true);
    bitmap_set(r, sb.backup_lba, true);
    for (std::size_t i = 0; i < capacity; ++i) {
      if (!entries[i].live() || dropped.count(i) != 0) continue;
      for (std::uint64_t b = 0; b < entries[i].extent_blocks; ++b) {
        bitmap_set(r, entries[i].extent_start + b, true);
      }
    }
    return r;
  };

  std::vector<std::size_t> accepted;
  for (std::size_t i = 0; i < capacity; ++i) {
    if (!entries[i].live() || dropped.count(i) != 0) continue;
    Extent mine{entries[i].extent_start, entries[i].extent_blocks};
    bool clash = false;
    for (std::size_t j : accepted) {
      Extent other{entries[j].extent_start, entries[j].extent_blocks};
      if (mine.overlaps(other)) {
        clash = true;
        break;
      }
    }
    if (!clash) {
      accepted.push_back(i);
      continue;
    }
    if (!policy.relocate_crosslinked) {
      report.findings.push_back({FindingClass::DanglingObject,
                                 entries[i].extent_start,
                                 entries[i].name + ": crosslinked extent",
                                 RepairAction::dropped});
      dropped.insert(i);
      continue;
    }
    // Relocate: copy the bytes out of the shared extent to fresh blocks.
    std::vector<std::uint8_t> data(entries[i].extent_blocks * sb.block_size);
    s = io.read(entries[i].extent_start, data);
    if (!s.is_ok()) return s;
    std::vector<std::uint8_t> occupied = reserved_bitmap();
    for (const auto& r : relocations) {
      for (std::uint64_t b = 0; b < blocks_for(r.data.size(), sb.block_size); ++b) {
        bitmap_set(occupied, r.new_start + b, true);
      }
    }
    std::uint64_t run = 0, target = 0;
    bool found = false;
    for (std::uint64_t b = sb.data_start; b < sb.backup_lba && !found; ++b) {
      run = bitmap_get(occupied, b) ? 0 : run + 1;
      if (run == entries[i].extent_blocks) {
        target = b - run + 1;
        found = true;
      }
    }
    if (!found) {
      report.findings.push_back({FindingClass::DanglingObject,
                                 entries[i].extent_start,
                                 entries[i].name + ": crosslinked, no space to relocate",
                                 RepairAction::dropped});
      dropped.insert(i);
      continue;
    }
    report.findings.push_back({FindingClass::DanglingObject,
                               entries[i].extent_start,
                               entries[i].name + ": crosslinked extent relocated",
                               RepairAction::repaired});
    relocations.push_back({i, target, std::move(data)});
    entries[i].extent_start = target;
    accepted.push_back(i);
  }

  for (std::size_t i : dropped) entries[i] = TableEntry{};

  // Bitmap rebuild from the surviving table.
  std::vector<std::uint8_t> expected(sb.bitmap_blocks * sb.block_size, 0);
  for (std::uint64_t b = 0; b < sb.data_start; ++b) bitmap_set(expected, b, true);
  bitmap_set(expected, sb.backup_lba, true);
  for (std::uint64_t i = 0; i < capacity; ++i) {
    for (std::uint64_t b = 0; b < entries[i].extent_blocks; ++b) {
      bitmap_set(expected, entries[i].extent_start + b, true);
    }
  }
  std::vector<std::uint64_t> changed_bitmap_blocks;
  for (std::uint64_t b = 0; b < sb.bitmap_blocks; ++b) {
    if (std::memcmp(expected.data() + b * sb.block_size,
                    bitmap.data() + b * sb.block_size, sb.block_size) != 0) {
      changed_bitmap_blocks.push_back(b);
      report.findings.push_back({FindingClass::BitmapMismatch,
                                 sb.bitmap_start + b, "rebuilt from object table",
                                 RepairAction::repaired});
    }
  }

  // Assemble the repair write set.
  std::vector<std::uint8_t> new_table(sb.table_blocks * sb.block_size, 0);
  for (std::uint64_t i = 0; i < capacity; ++i) {
    if (entries[i].live()) {
      encode_table_entry(entries[i],
                         std::span<std::uint8_t>(new_table).subspan(
                             i * kTableEntrySize, kTableEntrySize));
    }
  }
  std::vector<std::uint64_t> changed_table_blocks;
  for (std::uint64_t b = 0; b < sb.table_blocks; ++b) {
    if (std::memcmp(new_table.data() + b * sb.block_size,
                    table.data() + b * sb.block_size, sb.block_size) != 0) {
      changed_table_blocks.push_back(b);
    }
  }

  std::map<std::uint64_t, std::vector<std::uint8_t>> table_writes, bitmap_writes,
      data_writes, sb_writes;
  for (std::uint64_t b : changed_table_blocks) {
    table_writes[sb.table_start + b] = {new_table.begin() + b * sb.block_size,
                                        new_table.begin() + (b + 1) * sb.block_size};
  }
  for (std::uint64_t b : changed_bitmap_blocks) {
    bitmap_writes[sb.bitmap_start + b] = {expected.begin() + b * sb.block_size,
                                          expected.begin() + (b + 1) * sb.block_size};
  }
  for (const auto& r : relocations) {
    std::vector<std::uint8_t> padded = r.data;
    padded.resize(blocks_for(padded.size(), sb.block_size) * sb.block_size, 0);
    for (std::uint64_t b = 0; b < padded.size() / sb.block_size; ++b) {
      data_writes[r.new_start + b] = {padded.begin() + b * sb.block_size,
                                      padded.begin() + (b + 1) * sb.block_size};
    }
  }
  if (restore_primary) sb_writes[0] = backup;
  if (restore_backup) sb_writes[device_blocks - 1] = primary;

  bool any_repair = !table_writes.empty() || !bitmap_writes.empty() ||
                    !data_writes.empty() || !sb_writes.empty();
  if (!any_repair) return report;

  if (policy.journal_repairs) {
    JournalTxn txn;
    txn.seq = next_seq;
    auto add = [&](const std::map<std::uint64_t, std::vector<std::uint8_t>>& m) {
      for (const auto& [lba, img] : m) {
        txn.targets.push_back(lba);
        txn.payloads.push_back(img);
      }
    };
    add(sb_writes);
    add(bitmap_writes);
    add(table_writes);
    add(data_writes);
    s = journal_append(io, sb, txn);
    if (!s.is_ok()) return s;
    s = journal_checkpoint(io, txn);
    if (!s.is_ok()) return s;
  } else {
    // Fixture ordering: table first, then data copies, then bitmap, then
    // superblocks, one flush at the end.
    for (const auto& [lba, img] : table_writes) {
      s = io.write(lba, img);
      if (!s.is_ok()) return s;
    }
    for (const auto& [lba, img] : data_writes) {
      s = io.write(lba, img);
      if (!s.is_ok()) return s;
    }
    for (const auto& [lba, img] : bitmap_writes) {
      s = io.write(lba, img);
      if (!s.is_ok()) return s;
    }
    for (const auto& [lba, img] : sb_writes) {
      s = io.write(lba, img);
      if (!s.is_ok()) return s;
    }
    s = io.flush();
    if (!s.is_ok()) return s;
  }
  return report;
}

}  // namespace faultforge
