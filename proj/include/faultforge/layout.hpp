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
#include <span>
#include <string>
#include <vector>

#include "faultforge/status.hpp"

namespace faultforge {

// On-image layout, little-endian, 4096-byte blocks:
//   block 0                    superblock
//   bitmap_start..             allocation bitmap, 1 bit per block
//   table_start..+4            object table, 128-byte entries
//   journal_start..+16         journal (single-transaction staging area)
//   data_start..               data extents
//   last block                 backup superblock
// The exact byte offsets are documented in docs/image_format.md and pinned
// by tests; do not reorder fields.

constexpr std::uint64_t kMinDeviceBlocks = 64;
constexpr std::uint64_t kTableBlocks = 4;
constexpr std::uint64_t kJournalBlocks = 16;
constexpr std::uint32_t kLayoutVersion = 1;
constexpr std::uint32_t kTableEntrySize = 128;
constexpr std::size_t kObjectNameMax = 63;
constexpr std::uint64_t kStoreFlagUnsafe = 1;  // journaling disabled

extern const char kSuperMagic[8];   // "FFSTORE1"
extern const char kJournalHdrMagic[8];   // "FFJTXNH1"
extern const char kJournalCommitMagic[8];  // "FFJTXNC1"

struct Superblock {
  std::uint32_t version = kLayoutVersion;
  std::uint32_t block_size = 4096;
  std::uint64_t block_count = 0;
  std::uint64_t bitmap_start = 0, bitmap_blocks = 0;
  std::uint64_t table_start = 0, table_blocks = 0;
  std::uint64_t journal_start = 0, journal_blocks = 0;
  std::uint64_t data_start = 0, data_blocks = 0;
  std::uint64_t backup_lba = 0;
  std::uint64_t flags = 0;

  bool unsafe() const { return (flags & kStoreFlagUnsafe) != 0; }
  std::uint64_t table_capacity() const {
    return table_blocks * (block_size / kTableEntrySize);
  }
};

Result<Superblock> make_superblock(std::uint64_t block_count, bool unsafe);
void encode_superblock(const Superblock& sb, std::span<std::uint8_t> block);
Result<Superblock> decode_superblock(std::span<const std::uint8_t> block,
                                     std::uint64_t device_blocks);

struct TableEntry {
  std::string name;
  std::uint64_t size = 0;
  std::uint64_t checksum = 0;
  std::uint64_t extent_start = 0;
  std::uint64_t extent_blocks = 0;

  bool live() const { return !name.empty(); }
};

void encode_table_entry(const TableEntry& e, std::span<std::uint8_t> out);
TableEntry decode_table_entry(std::span<const std::uint8_t> in);

inline bool bitmap_get(std::span<const std::uint8_t> bitmap, std::uint64_t block) {
  return (bitmap[block / 8] >> (block % 8)) & 1;
}
inline void bitmap_set(std::span<std::uint8_t> bitmap, std::uint64_t block,
                       bool v) {
  if (v) {
    bitmap[block / 8] |= static_cast<std::uint8_t>(1u << (block % 8));
  } else {
    bitmap[block / 8] &= static_cast<std::uint8_t>(~(1u << (block % 8)));
  }
}

// LE scalar packing shared by all on-image encoders.
void put_u32(std::span<std::uint8_t> buf, std::size_t off, std::uint32_t v);
void put_u64(std::span<std::uint8_t> buf, std::size_t off, std::uint64_t v);
std::uint32_t get_u32(std::span<const std::uint8_t> buf, std::size_t off);
std::uint64_t get_u64(std::span<const std::uint8_t> buf, std::size_t off);

inline std::uint64_t blocks_for(std::uint64_t bytes, std::uint32_t block_size) {
  return (bytes + block_size - 1) / block_size;
}

}  // namespace faultforge
