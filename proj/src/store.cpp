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
#include "faultforge/store.hpp"

#include <algorithm>
#include <cstring>
#include <set>

#include "faultforge/current.hpp"
#include "faultforge/digest.hpp"

namespace faultforge {

namespace {

Status status_from_neg_errno(int err_no, const std::string& what) {
  ErrorCode code = ErrorCode::kIoError;
  if (err_no == -12) code = ErrorCode::kNoMemory;
  if (err_no == -28) code = ErrorCode::kNoSpace;
  return Status::with_errno(code, what, err_no);
}

}  // namespace

StoreSites register_store_sites(CallSiteRegistry& sites) {
  StoreSites s;
  s.mount = sites.register_site("simstore", "mount");
  s.put = sites.register_site("simstore", "put");
  s.get = sites.register_site("simstore", "get");
  s.remove = sites.register_site("simstore", "remove");
  return s;
}

Status Store::format(BlockIo& io, bool unsafe) {
  auto sbr = make_superblock(io.device().disk().block_count(), unsafe);
  if (!sbr.is_ok()) return sbr.status();
  Superblock sb = sbr.take();

  std::vector<std::uint8_t> sb_block(sb.block_size);
  encode_superblock(sb, sb_block);

  std::vector<std::uint8_t> bitmap(sb.bitmap_blocks * sb.block_size, 0);
  for (std::uint64_t b = 0; b < sb.data_start; ++b) bitmap_set(bitmap, b, true);
  bitmap_set(bitmap, sb.backup_lba, true);

  Status s = io.write(0, sb_block);
  if (!s.is_ok()) return s;
  s = io.write(sb.bitmap_start, bitmap);
  if (!s.is_ok()) return s;
  std::vector<std::uint8_t> zeros(sb.table_blocks * sb.block_size, 0);
  s = io.write(sb.table_start, zeros);
  if (!s.is_ok()) return s;
  zeros.assign(sb.journal_blocks * sb.block_size, 0);
  s = io.write(sb.journal_start, zeros);
  if (!s.is_ok()) return s;
  s = io.write(sb.backup_lba, sb_block);
  if (!s.is_ok()) return s;
  return io.flush();
}

Result<Store> Store::mount(BlockIo& io, CapabilityRegistry* caps,
                           SimAllocator* alloc, StoreSites sites) {
  ScopedCaller frame(sites.mount);

  if (caps != nullptr) {
    FaultContext ctx = current_fault_context(1);
    if (auto rv = caps->function_inject(kMountInjectable, ctx)) {
      return status_from_neg_errno(static_cast<int>(*rv), "mount: injected error");
    }
  }

  std::vector<std::uint8_t> sb_block(kBlockSize);
  Status s = io.read(0, sb_block);
  if (!s.is_ok()) return s;
  auto sbr = decode_superblock(sb_block, io.device().disk().block_count());
  if (!sbr.is_ok()) return sbr.status();
  Superblock sb = sbr.take();

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
  std::vector<TableEntry> entries;
  entries.reserve(sb.table_capacity());
  for (std::uint64_t i = 0; i < sb.table_capacity(); ++i) {
    entries.push_back(decode_table_entry(
        std::span<const std::uint8_t>(table).subspan(i * kTableEntrySize,
                                                     kTableEntrySize)));
  }

  return Store(&io, alloc, sites, sb, std::move(bitmap), std::move(entries),
               next_seq);
}

Store::Store(BlockIo* io, SimAllocator* alloc, StoreSites sites, Superblock sb,
             std::vector<std::uint8_t> bitmap, std::vector<TableEntry> entries,
             std::uint64_t next_seq)
    : io_(io),
      alloc_(alloc),
      sites_(sites),
      sb_(sb),
      bitmap_(std::move(bitmap)),
      entries_(std::move(entries)),
      next_seq_(next_seq),
      mu_(std::make_unique<std::mutex>()) {}

int Store::find_slot(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].live() && entries_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

Result<std::uint64_t> Store::find_free_extent(
    const std::vector<std::uint8_t>& bitmap, std::uint64_t nblocks) const {
  std::uint64_t run = 0;
  for (std::uint64_t b = sb_.data_start; b < sb_.backup_lba; ++b) {
    run = bitmap_get(bitmap, b) ? 0 : run + 1;
    if (run == nblocks) return b - nblocks + 1;
  }
  return Status::error(ErrorCode::kNoSpace, "no free extent of " +
                                                std::to_string(nblocks) +
                                                " blocks");
}

std::vector<std::uint8_t> Store::encode_table_block(
    std::uint64_t table_block_index, std::size_t staged_slot,
    const TableEntry& staged) const {
  std::vector<std::uint8_t> block(sb_.block_size, 0);
  std::uint64_t per_block = sb_.block_size / kTableEntrySize;
  for (std::uint64_t j = 0; j < per_block; ++j) {
    std::uint64_t slot = table_block_index * per_block + j;
    const TableEntry& e = (slot == staged_slot) ? staged : entries_[slot];
    if (e.live() || slot == staged_slot) {
      encode_table_entry(e, std::span<std::uint8_t>(block).subspan(
                                j * kTableEntrySize, kTableEntrySize));
    }
  }
  return block;
}

// Writes the staged bitmap + table entry, journaled or in place per the
// store mode. The unsafe order is pinned: table before bitmap.
Status Store::commit_metadata(const std::vector<std::uint8_t>& staged_bitmap,
                              std::size_t slot, const TableEntry& staged,
                              std::span<std::uint8_t> table_block_buf) {
  std::uint64_t per_block = sb_.block_size / kTableEntrySize;
  std::uint64_t table_block_index = slot / per_block;
  std::uint64_t table_lba = sb_.table_start + table_block_index;

  std::vector<std::uint8_t> table_img =
      encode_table_block(table_block_index, slot, staged);
  std::copy(table_img.begin(), table_img.end(), table_block_buf.begin());

  std::vector<std::uint64_t> changed_bitmap;
  for (std::uint64_t b = 0; b < sb_.bitmap_blocks; ++b) {
    if (std::memcmp(staged_bitmap.data() + b * sb_.block_size,
                    bitmap_.data() + b * sb_.block_size, sb_.block_size) != 0) {
      changed_bitmap.push_back(b);
    }
  }

  if (sb_.unsafe()) {
    Status s = io_->write(table_lba, table_block_buf);
    if (!s.is_ok()) return s;
    for (std::uint64_t b : changed_bitmap) {
      s = io_->write(sb_.bitmap_start + b,
                     std::span<const std::uint8_t>(staged_bitmap)
                         .subspan(b * sb_.block_size, sb_.block_size));
      if (!s.is_ok()) return s;
    }
    return io_->flush();
  }

  JournalTxn txn;
  txn.seq = next_seq_;
  for (std::uint64_t b : changed_bitmap) {
    txn.targets.push_back(sb_.bitmap_start + b);
    txn.payloads.emplace_back(
        staged_bitmap.begin() + b * sb_.block_size,
        staged_bitmap.begin() + (b + 1) * sb_.block_size);
  }
  txn.targets.push_back(table_lba);
  txn.payloads.emplace_back(table_block_buf.begin(), table_block_buf.end());

  Status s = journal_append(*io_, sb_, txn);
  if (!s.is_ok()) return s;
  return journal_checkpoint(*io_, txn);
}

Status Store::put(const std::string& name, std::span<const std::uint8_t> bytes) {
  std::lock_guard<std::mutex> lock(*mu_);
  ScopedCaller frame(sites_.put);

  if (name.empty() || name.size() > kObjectNameMax) {
    return Status::error(ErrorCode::kInvalidArgument,
                         "object name must be 1.." +
                             std::to_string(kObjectNameMax) + " bytes");
  }

  std::uint64_t nblocks = blocks_for(bytes.size(), sb_.block_size);

  // Staging buffers come from the hooked allocator; an injected allocation
  // failure aborts here, before any device write.
  std::vector<std::uint8_t> payload;
  if (alloc_ != nullptr) {
    auto buf = alloc_->kmalloc("io_buf", nblocks * sb_.block_size, true,
                               current_fault_context(
                                   static_cast<std::int64_t>(bytes.size())));
    if (!buf.is_ok()) return buf.status();
    payload = buf.take();
  } else {
    payload.assign(nblocks * sb_.block_size, 0);
  }
  std::copy(bytes.begin(), bytes.end(), payload.begin());

  std::vector<std::uint8_t> table_page;
  if (alloc_ != nullptr) {
    auto page = alloc_->alloc_pages(0, true, false, current_fault_context(1));
    if (!page.is_ok()) return page.status();
    table_page = page.take();
  } else {
    table_page.assign(SimAllocator::kPageSize, 0);
  }

  int existing = find_slot(name);
  std::size_t slot;
  if (existing >= 0) {
    slot = static_cast<std::size_t>(existing);
  } else {
    int free_slot = -1;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (!entries_[i].live()) {
        free_slot = static_cast<int>(i);
        break;
      }
    }
    if (free_slot < 0) {
      return Status::error(ErrorCode::kNoSpace, "object table full");
    }
    slot = static_cast<std::size_t>(free_slot);
  }

  // The new extent is chosen while the old one still looks allocated, so an
  // overwrite never lands on the blocks it must preserve until commit.
  std::uint64_t extent_start = 0;
  if (nblocks > 0) {
    auto ext = find_free_extent(bitmap_, nblocks);
    if (!ext.is_ok()) return ext.status();
    extent_start = ext.take();
  }

  std::vector<std::uint8_t> staged_bitmap = bitmap_;
  if (existing >= 0) {
    const TableEntry& old = entries_[slot];
    for (std::uint64_t b = 0; b < old.extent_blocks; ++b) {
      bitmap_set(staged_bitmap, old.extent_start + b, false);
    }
  }
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    bitmap_set(staged_bitmap, extent_start + b, true);
  }

  TableEntry staged;
  staged.name = name;
  staged.size = bytes.size();
  staged.checksum = fnv1a64(bytes);
  staged.extent_start = nblocks > 0 ? extent_start : 0;
  staged.extent_blocks = nblocks;

  if (nblocks > 0) {
    Status s = io_->write(extent_start, payload);
    if (!s.is_ok()) return s;
  }

  Status s = commit_metadata(staged_bitmap, slot, staged,
                             std::span<std::uint8_t>(table_page).first(sb_.block_size));
  if (!s.is_ok()) return s;

  bitmap_ = std::move(staged_bitmap);
  entries_[slot] = staged;
  next_seq_++;
  return Status::ok();
}

Result<std::vector<std::uint8_t>> Store::get(const std::string& name) {
  std::lock_guard<std::mutex> lock(*mu_);
  ScopedCaller frame(sites_.get);

  int slot = find_slot(name);
  if (slot < 0) {
    return Status::error(ErrorCode::kNotFound, "no such object: " + name);
  }
  const TableEntry& e = entries_[static_cast<std::size_t>(slot)];

  std::vector<std::uint8_t> staging;
  if (alloc_ != nullptr) {
    auto buf = alloc_->kmalloc("io_buf", e.extent_blocks * sb_.block_size, true,
                               current_fault_context(
                                   static_cast<std::int64_t>(e.size)));
    if (!buf.is_ok()) return buf.status();
    staging = buf.take();
  } else {
    staging.assign(e.extent_blocks * sb_.block_size, 0);
  }

  if (e.extent_blocks > 0) {
    Status s = io_->read(e.extent_start, staging);
    if (!s.is_ok()) return s;
  }
  staging.resize(e.size);
  return staging;
}

Status Store::remove(const std::string& name) {
  std::lock_guard<std::mutex> lock(*mu_);
  ScopedCaller frame(sites_.remove);

  int slot = find_slot(name);
  if (slot < 0) {
    return Status::error(ErrorCode::kNotFound, "no such object: " + name);
  }

  if (alloc_ != nullptr) {
    auto rec = alloc_->kmalloc("txn_record", 128, true, current_fault_context(128));
    if (!rec.is_ok()) return rec.status();
  }
  std::vector<std::uint8_t> table_page;
  if (alloc_ != nullptr) {
    auto page = alloc_->alloc_pages(0, true, false, current_fault_context(1));
    if (!page.is_ok()) return page.status();
    table_page = page.take();
  } else {
    table_page.assign(SimAllocator::kPageSize, 0);
  }

  const TableEntry& old = entries_[static_cast<std::size_t>(slot)];
  std::vector<std::uint8_t> staged_bitmap = bitmap_;
  for (std::uint64_t b = 0; b < old.extent_blocks; ++b) {
    bitmap_set(staged_bitmap, old.extent_start + b, false);
  }
  TableEntry staged;  // dead entry, all zeros

  Status s = commit_metadata(staged_bitmap, static_cast<std::size_t>(slot),
                             staged,
                             std::span<std::uint8_t>(table_page).first(sb_.block_size));
  if (!s.is_ok()) return s;

  bitmap_ = std::move(staged_bitmap);
  entries_[static_cast<std::size_t>(slot)] = staged;
  next_seq_++;
  return Status::ok();
}

std::vector<ObjectInfo> Store::list() const {
  std::lock_guard<std::mutex> lock(*mu_);
  std::vector<ObjectInfo> out;
  for (const auto& e : entries_) {
    if (!e.live()) continue;
    out.push_back({e.name, e.size, e.checksum, e.extent_start, e.extent_blocks});
  }
  std::sort(out.begin(), out.end(),
            [](const ObjectInfo& a, const ObjectInfo& b) { return a.name < b.name; });
  return out;
}

Status Store::unmount() {
  std::lock_guard<std::mutex> lock(*mu_);
  return io_->flush();
}

}  // namespace faultforge
