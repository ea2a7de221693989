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
#include <vector>

#include "faultforge/block_device.hpp"
#include "faultforge/layout.hpp"

namespace faultforge {

// Single-transaction journal. Every metadata update stages full post-images
// of its target blocks here before the in-place checkpoint:
//
//   journal_start:      header {magic, seq, nblocks, target lbas}
//   +1 .. +nblocks:     payload block images
//   +1+nblocks:         commit {magic, seq, nblocks, checksum over header
//                       block + payload bytes}
//
// A transaction is durable iff its commit record validates. Each new
// transaction overwrites the slot; the previous one was checkpointed and
// flushed before the caller acknowledged it, so losing it is harmless.
struct JournalTxn {
  std::uint64_t seq = 0;
  std::vector<std::uint64_t> targets;
  std::vector<std::vector<std::uint8_t>> payloads;
};

enum class JournalState { empty, valid, invalid };

struct JournalScan {
  JournalState state = JournalState::empty;
  JournalTxn txn;
  std::uint64_t next_seq = 1;
};

std::uint64_t journal_txn_capacity(const Superblock& sb);

Result<JournalScan> scan_journal(BlockIo& io, const Superblock& sb);

// Phase 1+2 of the commit protocol: header and payload writes, flush,
// commit record, flush.
Status journal_append(BlockIo& io, const Superblock& sb, const JournalTxn& txn);

// Phase 3: in-place target writes followed by a flush. Also used verbatim
// for replay during recovery.
Status journal_checkpoint(BlockIo& io, const JournalTxn& txn);

// Discards whatever occupies the journal area by zeroing it.
Status journal_sanitize(BlockIo& io, const Superblock& sb);

}  // namespace faultforge
