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

namespace faultforge {

// One recorded device command. Flushes carry no payload and double as the
// epoch markers for crash-state enumeration.
struct IoRecord {
  enum class Op : std::uint8_t { write = 0, flush = 1 };
  std::uint64_t seq = 0;
  Op op = Op::write;
  std::uint64_t lba = 0;
  std::uint32_t len = 0;  // bytes; multiple of the block size
  std::vector<std::uint8_t> payload;
};

// Binary file, little-endian:
//   magic "FFIOLOG1", version u32, block_size u32,
//   base_digest u64, final_digest u64, record_count u64,
//   then per record: seq u64, op u8, lba u64, len u32, payload[len].
struct CommandHistory {
  std::uint32_t block_size = kBlockSize;
  std::uint64_t base_digest = 0;
  std::uint64_t final_digest = 0;
  std::vector<IoRecord> records;

  std::size_t write_count() const;

  Status save(const std::string& path) const;
  static Result<CommandHistory> load(const std::string& path);

  // Applies the writes among the first `prefix` records.
  Status apply_prefix(SimDisk& disk, std::size_t prefix) const;
};

// Attach to a BlockIo to capture its write/flush stream.
class HistoryRecorder : public IoSink {
 public:
  void on_write(std::uint64_t lba, std::span<const std::uint8_t> data) override;
  void on_flush() override;

  CommandHistory take(std::uint64_t base_digest, std::uint64_t final_digest);
  std::size_t record_count() const { return records_.size(); }

 private:
  std::vector<IoRecord> records_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace faultforge
