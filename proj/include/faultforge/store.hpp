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

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "faultforge/allocator.hpp"
#include "faultforge/block_device.hpp"
#include "faultforge/callsite.hpp"
#include "faultforge/journal.hpp"
#include "faultforge/layout.hpp"

namespace faultforge {

// Abstract addresses for the store's functions inside the "simstore"
// module; zero means no frame is pushed.
struct StoreSites {
  std::uint64_t mount = 0;
  std::uint64_t put = 0;
  std::uint64_t get = 0;
  std::uint64_t remove = 0;
};

StoreSites register_store_sites(CallSiteRegistry& sites);

struct ObjectInfo {
  std::string name;
  std::uint64_t size = 0;
  std::uint64_t checksum = 0;
  std::uint64_t extent_start = 0;
  std::uint64_t extent_blocks = 0;
};

// Minimal journaling object store. Every metadata update is wrapped in a
// journal transaction: journal writes, flush, commit record, flush,
// in-place checkpoint, flush. Object data goes to free blocks before the
// commit record, so an interrupted operation never damages committed state.
// With the unsafe flag the journal is bypassed entirely (data, table,
// bitmap written in place, one flush per operation).
class Store {
 public:
  static constexpr const char* kMountInjectable = "simstore.mount";

  static Status format(BlockIo& io, bool unsafe = false);

  // Registered as the error-injectable function "simstore.mount"
  // (ETYPE_ERRNO): when the injection engages, the real mount is bypassed
  // entirely and the configured -errno comes back.
  static Result<Store> mount(BlockIo& io, CapabilityRegistry* caps = nullptr,
                             SimAllocator* alloc = nullptr, StoreSites sites = {});

  Status put(const std::string& name, std::span<const std::uint8_t> bytes);
  Result<std::vector<std::uint8_t>> get(const std::string& name);
  Status remove(const std::string& name);
  std::vector<ObjectInfo> list() const;
  Status unmount();

  const Superblock& superblock() const { return sb_; }

 private:
  Store(BlockIo* io, SimAllocator* alloc, StoreSites sites, Superblock sb,
        std::vector<std::uint8_t> bitmap, std::vector<TableEntry> entries,
        std::uint64_t next_seq);

  Result<std::uint64_t> find_free_extent(const std::vector<std::uint8_t>& bitmap,
                                         std::uint64_t nblocks) const;
  std::vector<std::uint8_t> encode_table_block(
      std::uint64_t table_block_index, std::size_t staged_slot,
      const TableEntry& staged) const;
  Status commit_metadata(const std::vector<std::uint8_t>& staged_bitmap,
                         std::size_t slot, const TableEntry& staged,
                         std::span<std::uint8_t> table_block_buf);
  int find_slot(const std::string& name) const;

  BlockIo* io_;
  SimAllocator* alloc_;
  StoreSites sites_;
  Superblock sb_;
  std::vector<std::uint8_t> bitmap_;
  std::vector<TableEntry> entries_;
  std::uint64_t next_seq_ = 1;
  std::unique_ptr<std::mutex> mu_;
};

}  // namespace faultforge
