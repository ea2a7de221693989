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
#include "faultforge/layout.hpp"

#include <cstring>

#include "faultforge/digest.hpp"

namespace faultforge {

const char kSuperMagic[8] = {'F', 'F', 'S', 'T', 'O', 'R', 'E', '1'};
const char kJournalHdrMagic[8] = {'F', 'F', 'J', 'T', 'X', 'N', 'H', '1'};
const char kJournalCommitMagic[8] = {'F', 'F', 'J', 'T', 'X', 'N', 'C', '1'};

void put_u32(std::span<std::uint8_t> buf, std::size_t off, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

void put_u64(std::span<std::uint8_t> buf, std::size_t off, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf[off + i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint32_t get_u32(std::span<const std::uint8_t> buf, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[off + i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::span<const std::uint8_t> buf, std::size_t off) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[off + i]) << (8 * i);
  return v;
}

Result<Superblock> make_superblock(std::uint64_t block_count, bool unsafe) {
  if (block_count < kMinDeviceBlocks) {
    return Status::error(ErrorCode::kInvalidArgument,
                         "device too small: need at least " +
                             std::to_string(kMinDeviceBlocks) + " blocks, got " +
                             std::to_string(block_count));
  }
  Superblock sb;
  sb.block_count = block_count;
  sb.bitmap_start = 1;
  sb.bitmap_blocks = (block_count + sb.block_size * 8 - 1) / (sb.block_size * 8);
  sb.table_start = sb.bitmap_start + sb.bitmap_blocks;
  sb.table_blocks = kTableBlocks;
  sb.journal_start = sb.table_start + sb.table_blocks;
  sb.journal_blocks = kJournalBlocks;
  sb.data_start = sb.journal_start + sb.journal_blocks;
  sb.backup_lba = block_count - 1;
  if (sb.data_start >= sb.backup_lba) {
    return Status::error(ErrorCode::kInvalidArgument,
                         "device too small for the metadata layout");
  }
  sb.data_blocks = sb.backup_lba - sb.data_start;
  if (unsafe) sb.flags |= kStoreFlagUnsafe;
  return sb;
}

// Superblock block byte offsets:
//   0 magic[8]   8 version   12 block_size   16 block_count
//   24 bitmap_start  32 bitmap_blocks  40 table_start  48 table_blocks
//   56 journal_start 64 journal_blocks 72 data_start   80 data_blocks
//   88 backup_lba    96 flags          104 checksum (fnv1a64 over the block
//                                          with this field zeroed)
void encode_superblock(const Superblock& sb, std::span<std::uint8_t> block) {
  std::memset(block.data(), 0, block.size());
  std::memcpy(block.data(), kSuperMagic, 8);
  put_u32(block, 8, sb.version);
  put_u32(block, 12, sb.block_size);
  put_u64(block, 16, sb.block_count);
  put_u64(block, 24, sb.bitmap_start);
  put_u64(block, 32, sb.bitmap_blocks);
  put_u64(block, 40, sb.table_start);
  put_u64(block, 48, sb.table_blocks);
  put_u64(block, 56, sb.journal_start);
  put_u64(block, 64, sb.journal_blocks);
  put_u64(block, 72, sb.data_start);
  put_u64(block, 80, sb.data_blocks);
  put_u64(block, 88, sb.backup_lba);
  put_u64(block, 96, sb.flags);
  put_u64(block, 104, fnv1a64(block));
}

Result<Superblock> decode_superblock(std::span<const std::uint8_t> block,
                                     std::uint64_t device_blocks) {
  auto bad = [](const std::string& why) {
    return Status::error(ErrorCode::kCorruption, "bad superblock: " + why);
  };
  if (std::memcmp(block.data(), kSuperMagic, 8) != 0) return bad("magic");

  std::vector<std::uint8_t> scratch(block.begin(), block.end());
  std::uint64_t stored = get_u64(scratch, 104);
  put_u64(scratch, 104, 0);
  if (fnv1a64(scratch) != stored) return bad("checksum");

  Superblock sb;
  sb.version = get_u32(block, 8);
  sb.block_size = get_u32(block, 12);
  sb.block_count = get_u64(block, 16);
  sb.bitmap_start = get_u64(block, 24);
  sb.bitmap_blocks = get_u64(block, 32);
  sb.table_start = get_u64(block, 40);
  sb.table_blocks = get_u64(block, 48);
  sb.journal_start = get_u64(block, 56);
  sb.journal_blocks = get_u64(block, 64);
  sb.data_start = get_u64(block, 72);
  sb.data_blocks = get_u64(block, 80);
  sb.backup_lba = get_u64(block, 88);
  sb.flags = get_u64(block, 96);

  if (sb.version != kLayoutVersion) return bad("version");
  if (sb.block_size != 4096) return bad("block size");
  if (sb.block_count != device_blocks) return bad("block count mismatch");
  if (sb.bitmap_start != 1 ||
      sb.table_start != sb.bitmap_start + sb.bitmap_blocks ||
      sb.journal_start != sb.table_start + sb.table_blocks ||
      sb.data_start != sb.journal_start + sb.journal_blocks ||
      sb.backup_lba != sb.block_count - 1 ||
      sb.data_start + sb.data_blocks != sb.backup_lba) {
    return bad("geometry");
  }
  return sb;
}

// Table entry: 0 name[64] NUL-padded, 64 size, 72 checksum, 80 extent_start,
// 88 extent_blocks, 96..128 reserved zeros.
void encode_table_entry(const TableEntry& e, std::span<std::uint8_t> out) {
  std::memset(out.data(), 0, kTableEntrySize);
  std::memcpy(out.data(), e.name.data(), std::min(e.name.size(), kObjectNameMax));
  put_u64(out, 64, e.size);
  put_u64(out, 72, e.checksum);
  put_u64(out, 80, e.extent_start);
  put_u64(out, 88, e.extent_blocks);
}

TableEntry decode_table_entry(std::span<const std::uint8_t> in) {
  TableEntry e;
  std::size_t len = 0;
  while (len < 64 && in[len] != 0) len++;
  e.name.assign(reinterpret_cast<const char*>(in.data()), len);
  e.size = get_u64(in, 64);
  e.checksum = get_u64(in, 72);
  e.extent_start = get_u64(in, 80);
  e.extent_blocks = get_u64(in, 88);
  return e;
}

}  // namespace faultforge
