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
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "faultforge/capabilities.hpp"
#include "faultforge/status.hpp"

namespace faultforge {

constexpr std::uint32_t kBlockSize = 4096;

// Raw image bytes. Reads of never-written blocks return zeros; durability
// semantics (what survives a crash) live in the recorders above, not here.
class SimDisk {
 public:
  SimDisk() = default;
  explicit SimDisk(std::uint64_t block_count)
      : bytes_(block_count * kBlockSize, 0) {}

  static Result<SimDisk> load(const std::string& path);
  Status save(const std::string& path) const;

  std::uint64_t block_count() const { return bytes_.size() / kBlockSize; }

  std::span<const std::uint8_t> block(std::uint64_t lba) const {
    return {bytes_.data() + lba * kBlockSize, kBlockSize};
  }
  std::span<std::uint8_t> block_mut(std::uint64_t lba) {
    return {bytes_.data() + lba * kBlockSize, kBlockSize};
  }
  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::span<std::uint8_t> bytes_mut() { return bytes_; }

  std::uint64_t digest() const;

 private:
  std::vector<std::uint8_t> bytes_;
};

enum class DeviceMode { normal, nvme, nullb };

struct Partition {
  std::string name;
  std::uint64_t start = 0;
  std::uint64_t blocks = 0;
  bool make_it_fail = false;
};

// Device identity: mode, fail marks, the WholeDeviceFailure flag, and the
// backing image for modes that have one (nullb does not).
class BlockDevice {
 public:
  BlockDevice(std::string name, DeviceMode mode, SimDisk disk)
      : name_(std::move(name)), mode_(mode), disk_(std::move(disk)) {}
  BlockDevice(std::string name, DeviceMode mode, std::uint64_t block_count)
      : BlockDevice(std::move(name), mode, SimDisk(block_count)) {}

  const std::string& name() const { return name_; }
  DeviceMode mode() const { return mode_; }
  SimDisk& disk() { return disk_; }
  const SimDisk& disk() const { return disk_; }

  bool make_it_fail() const { return make_it_fail_; }
  void set_make_it_fail(bool v) { make_it_fail_ = v; }

  bool failed() const { return failed_; }
  void set_failed(bool v) { failed_ = v; }

  void add_partition(const std::string& name, std::uint64_t start,
                     std::uint64_t blocks);
  Partition* find_partition(const std::string& name);
  const Partition* partition_of(std::uint64_t lba) const;
  const std::vector<Partition>& partitions() const { return partitions_; }
  std::vector<Partition>& partitions() { return partitions_; }

 private:
  std::string name_;
  DeviceMode mode_;
  SimDisk disk_;
  bool make_it_fail_ = false;
  bool failed_ = false;
  std::vector<Partition> partitions_;
};

// Observer for the recorded command stream (repair harness, crash tracer).
class IoSink {
 public:
  virtual ~IoSink() = default;
  virtual void on_write(std::uint64_t lba, std::span<const std::uint8_t> data) = 0;
  virtual void on_flush() = 0;
};

struct IoStats {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t flushes = 0;
  std::uint64_t errors = 0;
  std::uint64_t requeues = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t last_dispatch_count = 0;
  std::vector<NvmeCompletion> last_completions;
};

// The request path: every read/write runs the capability hooks appropriate
// for the device mode before touching the image. Lengths are multiples of
// the block size. NVMe-mode completions get a small driver retry loop;
// nullb requests never touch data and honor timeout/requeue injection.
class BlockIo {
 public:
  BlockIo(BlockDevice* dev, CapabilityRegistry* caps,
          TaskRegistry* tasks = nullptr);

  Status read(std::uint64_t lba, std::span<std::uint8_t> out);
  Status write(std::uint64_t lba, std::span<const std::uint8_t> in);
  Status flush();

  BlockDevice& device() { return *dev_; }
  const IoStats& stats() const { return stats_; }

  void attach_sink(IoSink* sink) { sink_ = sink; }
  void detach_sink() { sink_ = nullptr; }

  static constexpr int kNvmeMaxAttempts = 3;
  static constexpr int kRequeueCap = 8;

 private:
  Status submit(std::uint64_t lba, std::span<std::uint8_t> out,
                std::span<const std::uint8_t> in, bool is_write);
  FaultContext make_ctx(std::int64_t size) const;

  BlockDevice* dev_;
  CapabilityRegistry* caps_;
  TaskRegistry* tasks_;
  IoSink* sink_ = nullptr;
  IoStats stats_;
};

class DeviceRegistry {
 public:
  DeviceRegistry(ConfigTree* tree, CapabilityRegistry* caps)
      : tree_(tree), caps_(caps) {}

  // Registers the device, mounts its make-it-fail nodes and, per mode, its
  // nvme/nullb fault-injection capabilities.
  Result<BlockDevice*> add(std::unique_ptr<BlockDevice> dev);
  BlockDevice* find(const std::string& name);
  Result<BlockDevice*> get(const std::string& name);
  std::vector<std::string> names() const;
  void remove(const std::string& name);

  // Re-initializes a nullb device's hardware contexts; the configured
  // init_hctx fault fires here and leaves the device failed.
  Status restart(const std::string& name);

 private:
  ConfigTree* tree_;
  CapabilityRegistry* caps_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<BlockDevice>> devices_;
};

}  // namespace faultforge
