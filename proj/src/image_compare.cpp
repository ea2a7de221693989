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
#include "faultforge/image_compare.hpp"

#include <algorithm>
#include <cstring>

#include "faultforge/digest.hpp"
#include "faultforge/journal.hpp"

namespace faultforge {

Result<ParsedStore> parse_store(const SimDisk& disk) {
  const std::uint64_t blocks = disk.block_count();
  if (blocks < kMinDeviceBlocks) {
    return Status::error(ErrorCode::kCorruption, "image too small");
  }
  auto primary = decode_superblock(disk.block(0), blocks);
  auto backup = decode_superblock(disk.block(blocks - 1), blocks);
  ParsedStore out;
  if (primary.is_ok()) {
    out.sb = primary.take();
  } else if (backup.is_ok()) {
    out.sb = backup.take();
  } else {
    return Status::error(ErrorCode::kCorruption,
                         "no valid superblock: " + primary.status().message());
  }

  const Superblock& sb = out.sb;
  out.bitmap.assign(disk.bytes().begin() + sb.bitmap_start * sb.block_size,
                    disk.bytes().begin() +
                        (sb.bitmap_start + sb.bitmap_blocks) * sb.block_size);
  for (std::uint64_t i = 0; i < sb.table_capacity(); ++i) {
    std::uint64_t off = sb.table_start * sb.block_size + i * kTableEntrySize;
    TableEntry e = decode_table_entry(disk.bytes().subspan(off, kTableEntrySize));
    out.entries.push_back(e);
    if (!e.live()) continue;
    if (e.extent_blocks > 0 &&
        (e.extent_start < sb.data_start ||
         e.extent_start + e.extent_blocks > sb.backup_lba)) {
      continue;  // dangling; surfaces through the bitmap/entry views
    }
    std::vector<std::uint8_t> bytes(
        disk.bytes().begin() + e.extent_start * sb.block_size,
        disk.bytes().begin() +
            (e.extent_start + e.extent_blocks) * sb.block_size);
    bytes.resize(e.size);
    out.objects[e.name] = std::move(bytes);
  }
  return out;
}

std::string ImageDiff::summary() const {
  if (empty()) return "images match\n";
  std::string out;
  if (total_loss_a) out += "TotalLoss: left image unparseable\n";
  if (total_loss_b) out += "TotalLoss: right image unparseable\n";
  if (geometry_differ) out += "geometry differs\n";
  for (const auto& n : missing_in_b) out += "object only in left: " + n + "\n";
  for (const auto& n : missing_in_a) out += "object only in right: " + n + "\n";
  for (const auto& n : bytes_differ) out += "object bytes differ: " + n + "\n";
  return out;
}

ImageDiff compare_images(const SimDisk& a, const SimDisk& b) {
  ImageDiff diff;
  auto pa = parse_store(a);
  auto pb = parse_store(b);
  if (!pa.is_ok()) diff.total_loss_a = true;
  if (!pb.is_ok()) diff.total_loss_b = true;
  if (!pa.is_ok() || !pb.is_ok()) return diff;

  const ParsedStore& sa = pa.value();
  const ParsedStore& sb = pb.value();
  if (sa.sb.block_count != sb.sb.block_count ||
      sa.sb.data_start != sb.sb.data_start) {
    diff.geometry_differ = true;
  }
  for (const auto& [name, bytes] : sa.objects) {
    auto it = sb.objects.find(name);
    if (it == sb.objects.end()) {
      diff.missing_in_b.push_back(name);
    } else if (it->second != bytes) {
      diff.bytes_differ.push_back(name);
    }
  }
  for (const auto& [name, _] : sb.objects) {
    if (sa.objects.count(name) == 0) diff.missing_in_a.push_back(name);
  }
  return diff;
}

std::vector<std::string> audit_image_invariants(const SimDisk& disk) {
  std::vector<std::string> violations;
  auto parsed = parse_store(disk);
  if (!parsed.is_ok()) {
    violations.push_back(parsed.status().message());
    return violations;
  }
  const ParsedStore& ps = parsed.value();
  const Superblock& sb = ps.sb;

  if (!decode_superblock(disk.block(0), disk.block_count()).is_ok()) {
    violations.push_back("primary superblock invalid");
  }
  if (std::memcmp(disk.block(0).data(), disk.block(sb.backup_lba).data(),
                  sb.block_size) != 0) {
    violations.push_back("backup superblock differs from primary");
  }

  // Extents in range and non-overlapping.
  std::vector<std::uint8_t> expected(sb.bitmap_blocks * sb.block_size, 0);
  for (std::uint64_t b = 0; b < sb.data_start; ++b) bitmap_set(expected, b, true);
  bitmap_set(expected, sb.backup_lba, true);
  for (const auto& e : ps.entries) {
    if (!e.live()) continue;
    if (e.extent_blocks == 0) {
      if (e.size != 0) violations.push_back(e.name + ": zero extent, nonzero size");
      continue;
    }
    if (e.extent_start < sb.data_start ||
        e.extent_start + e.extent_blocks > sb.backup_lba) {
      violations.push_back(e.name + ": extent out of data region");
      continue;
    }
    if (blocks_for(e.size, sb.block_size) != e.extent_blocks) {
      violations.push_back(e.name + ": size/extent mismatch");
    }
    for (std::uint64_t b = 0; b < e.extent_blocks; ++b) {
      if (bitmap_get(expected, e.extent_start + b)) {
        violations.push_back(e.name + ": extent overlaps another allocation");
        break;
      }
      bitmap_set(expected, e.extent_start + b, true);
    }
  }

  // Bitmap bit set iff referenced.
  if (expected != ps.bitmap) {
    violations.push_back("bitmap does not match the referenced block set");
  }

  // Object checksums.
  for (const auto& e : ps.entries) {
    if (!e.live()) continue;
    auto it = ps.objects.find(e.name);
    if (it == ps.objects.end()) continue;
    if (fnv1a64(it->second) != e.checksum) {
      violations.push_back(e.name + ": checksum mismatch");
    }
  }

  // Journal region: empty or one valid committed transaction.
  if (!sb.unsafe()) {
    BlockDevice dev("audit", DeviceMode::normal, SimDisk(disk));
    BlockIo io(&dev, nullptr);
    auto scan = scan_journal(io, sb);
    if (scan.is_ok() && scan.value().state == JournalState::invalid) {
      violations.push_back("journal holds an uncommitted transaction");
    }
  }
  return violations;
}

}  // namespace faultforge
