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
#include "faultforge/journal.hpp"

#include <algorithm>
#include <cstring>

#include "faultforge/digest.hpp"

namespace faultforge {

namespace {

constexpr std::size_t kHdrSeqOff = 8;
constexpr std::size_t kHdrCountOff = 16;
constexpr std::size_t kHdrTargetsOff = 24;

bool target_ok(const Superblock& sb, std::uint64_t lba) {
  if (lba >= sb.block_count) return false;
  // Targets may be any block outside the journal itself (table, bitmap,
  // data, even the superblock for repairs).
  if (lba >= sb.journal_start && lba < sb.journal_start + sb.journal_blocks) {
    return false;
  }
  return true;
}

std::uint64_t txn_checksum(std::span<const std::uint8_t> header_block,
                           const std::vector<std::vector<std::uint8_t>>& payloads) {
  std::uint64_t h = fnv1a64(header_block);
  for (const auto& p : payloads) h = fnv1a64(p, h);
  return h;
}

}  // namespace

std::uint64_t journal_txn_capacity(const Superblock& sb) {
  std::uint64_t by_region = sb.journal_blocks - 2;
  std::uint64_t by_header = (sb.block_size - kHdrTargetsOff) / 8;
  return std::min(by_region, by_header);
}

Result<JournalScan> scan_journal(BlockIo& io, const Superblock& sb) {
  std::vector<std::uint8_t> region(sb.journal_blocks * sb.block_size);
  Status s = io.read(sb.journal_start, region);
  if (!s.is_ok()) return s;

  JournalScan scan;
  bool all_zero = std::all_of(region.begin(), region.end(),
                              [](std::uint8_t b) { return b == 0; });
  if (all_zero) {
    scan.state = JournalState::empty;
    return scan;
  }

  scan.state = JournalState::invalid;
  std::span<const std::uint8_t> hdr(region.data(), sb.block_size);
  if (std::memcmp(hdr.data(), kJournalHdrMagic, 8) != 0) return scan;
  std::uint64_t seq = get_u64(hdr, kHdrSeqOff);
  std::uint64_t nblocks = get_u64(hdr, kHdrCountOff);
  if (nblocks == 0 || nblocks > journal_txn_capacity(sb)) return scan;

  JournalTxn txn;
  txn.seq = seq;
  for (std::uint64_t i = 0; i < nblocks; ++i) {
    std::uint64_t lba = get_u64(hdr, kHdrTargetsOff + i * 8);
    if (!target_ok(sb, lba)) return scan;
    txn.targets.push_back(lba);
    const std::uint8_t* p = region.data() + (1 + i) * sb.block_size;
    txn.payloads.emplace_back(p, p + sb.block_size);
  }

  std::span<const std::uint8_t> commit(
      region.data() + (1 + nblocks) * sb.block_size, sb.block_size);
  if (std::memcmp(commit.data(), kJournalCommitMagic, 8) != 0) return scan;
  if (get_u64(commit, kHdrSeqOff) != seq) return scan;
  if (get_u64(commit, kHdrCountOff) != nblocks) return scan;
  if (get_u64(commit, 24) != txn_checksum(hdr, txn.payloads)) return scan;

  scan.state = JournalState::valid;
  scan.txn = std::move(txn);
  scan.next_seq = seq + 1;
  return scan;
}

Status journal_append(BlockIo& io, const Superblock& sb, const JournalTxn& txn) {
  if (txn.targets.size() != txn.payloads.size() || txn.targets.empty()) {
    return Status::error(ErrorCode::kInvalidArgument, "malformed journal txn");
  }
  if (txn.targets.size() > journal_txn_capacity(sb)) {
    return Status::error(ErrorCode::kNoSpace,
                         "transaction exceeds the journal capacity");
  }
  for (std::uint64_t lba : txn.targets) {
    if (!target_ok(sb, lba)) {
      return Status::error(ErrorCode::kInvalidArgument,
                           "journal target out of range");
    }
  }

  std::vector<std::uint8_t> hdr(sb.block_size, 0);
  std::memcpy(hdr.data(), kJournalHdrMagic, 8);
  put_u64(hdr, kHdrSeqOff, txn.seq);
  put_u64(hdr, kHdrCountOff, txn.targets.size());
  for (std::size_t i = 0; i < txn.targets.size(); ++i) {
    put_u64(hdr, kHdrTargetsOff + i * 8, txn.targets[i]);
  }

  Status s = io.write(sb.journal_start, hdr);
  if (!s.is_ok()) return s;
  for (std::size_t i = 0; i < txn.payloads.size(); ++i) {
    if (txn.payloads[i].size() != sb.block_size) {
      return Status::error(ErrorCode::kInvalidArgument,
                           "journal payload is not a full block");
    }
    s = io.write(sb.journal_start + 1 + i, txn.payloads[i]);
    if (!s.is_ok()) return s;
  }
  s = io.flush();
  if (!s.is_ok()) return s;

  std::vector<std::uint8_t> commit(sb.block_size, 0);
  std::memcpy(commit.data(), kJournalCommitMagic, 8);
  put_u64(commit, kHdrSeqOff, txn.seq);
  put_u64(commit, kHdrCountOff, txn.targets.size());
  put_u64(commit, 24, txn_checksum(hdr, txn.payloads));
  s = io.write(sb.journal_start + 1 + txn.targets.size(), commit);
  if (!s.is_ok()) return s;
  return io.flush();
}

Status journal_checkpoint(BlockIo& io, const JournalTxn& txn) {
  for (std::size_t i = 0; i < txn.targets.size(); ++i) {
    Status s = io.write(txn.targets[i], txn.payloads[i]);
    if (!s.is_ok()) return s;
  }
  return io.flush();
}

Status journal_sanitize(BlockIo& io, const Superblock& sb) {
  std::vector<std::uint8_t> zeros(sb.journal_blocks * sb.block_size, 0);
  Status s = io.write(sb.journal_start, zeros);
  if (!s.is_ok()) return s;
  return io.flush();
}

}  // namespace faultforge
