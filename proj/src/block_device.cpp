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
#include "faultforge/block_device.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "faultforge/current.hpp"
#include "faultforge/digest.hpp"

namespace faultforge {

thread_local TaskState* TaskScope::current_ = nullptr;

TaskScope::TaskScope(TaskState* task) : prev_(current_) { current_ = task; }

TaskScope::~TaskScope() { current_ = prev_; }

TaskState* TaskScope::current() { return current_; }

FaultContext current_fault_context(std::int64_t size) {
  FaultContext ctx;
  ctx.size = size;
  ctx.caller_trace = ScopedCaller::current_trace();
  TaskState* task = TaskScope::current();
  if (task != nullptr) {
    ctx.task = task;
    ctx.task_id = task->id();
    ctx.make_it_fail = task->make_it_fail();
  }
  return ctx;
}

Result<SimDisk> SimDisk::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return Status::error(ErrorCode::kIoError, "cannot open image: " + path);
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() % kBlockSize != 0) {
    return Status::error(ErrorCode::kCorruption,
                         "image size is not a multiple of the block size: " +
                             path);
  }
  SimDisk disk;
  disk.bytes_ = std::move(bytes);
  return disk;
}

Status SimDisk::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return Status::error(ErrorCode::kIoError, "cannot write image: " + path);
  }
  out.write(reinterpret_cast<const char*>(bytes_.data()),
            static_cast<std::streamsize>(bytes_.size()));
  if (!out) {
    return Status::error(ErrorCode::kIoError, "short write: " + path);
  }
  return Status::ok();
}

std::uint64_t SimDisk::digest() const { return fnv1a64(bytes()); }

void BlockDevice::add_partition(const std::string& name, std::uint64_t start,
                                std::uint64_t blocks) {
  partitions_.push_back(Partition{name, start, blocks, false});
}

Partition* BlockDevice::find_partition(const std::string& name) {
  for (auto& p : partitions_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Partition* BlockDevice::partition_of(std::uint64_t lba) const {
  for (const auto& p : partitions_) {
    if (lba >= p.start && lba < p.start + p.blocks) return &p;
  }
  return nullptr;
}

BlockIo::BlockIo(BlockDevice* dev, CapabilityRegistry* caps,
                 TaskRegistry* tasks)
    : dev_(dev), caps_(caps), tasks_(tasks) {
  (void)tasks_;
}

FaultContext BlockIo::make_ctx(std::int64_t size) const {
  return current_fault_context(size);
}

Status BlockIo::read(std::uint64_t lba, std::span<std::uint8_t> out) {
  return submit(lba, out, {}, false);
}

Status BlockIo::write(std::uint64_t lba, std::span<const std::uint8_t> in) {
  return submit(lba, {}, in, true);
}

Status BlockIo::submit(std::uint64_t lba, std::span<std::uint8_t> out,
                       std::span<const std::uint8_t> in, bool is_write) {
  const std::size_t len = is_write ? in.size() : out.size();
  if (len == 0 || len % kBlockSize != 0) {
    return Status::error(ErrorCode::kInvalidArgument,
                         "I/O length must be a nonzero block multiple");
  }
  const std::uint64_t nblocks = len / kBlockSize;
  if (dev_->failed()) {
    stats_.errors++;
    return Status::error(ErrorCode::kDeviceError,
                         dev_->name() + ": device failed");
  }
  if (lba + nblocks > dev_->disk().block_count()) {
    return Status::error(ErrorCode::kOutOfRange, "I/O beyond device end");
  }

  if (is_write) {
    stats_.writes++;
  } else {
    stats_.reads++;
  }

  if (dev_->mode() == DeviceMode::nullb) {
    // The null device completes requests without any data transfer.
    stats_.last_dispatch_count = 0;
    for (int requeues = 0;; requeues++) {
      stats_.last_dispatch_count++;
      if (caps_ != nullptr) {
        FaultContext tctx = make_ctx(static_cast<std::int64_t>(len));
        if (caps_->nullb_inject(dev_->name(), "timeout_inject", tctx)) {
          stats_.timeouts++;
          stats_.errors++;
          return Status::error(ErrorCode::kTimedOut,
                               dev_->name() + ": I/O timed out");
        }
        FaultContext rctx = make_ctx(static_cast<std::int64_t>(len));
        if (caps_->nullb_inject(dev_->name(), "requeue_inject", rctx)) {
          stats_.requeues++;
          if (requeues + 1 >= kRequeueCap) {
            stats_.errors++;
            return Status::error(ErrorCode::kIoError,
                                 dev_->name() + ": requeue limit exceeded");
          }
          continue;
        }
      }
      break;
    }
    if (!is_write) std::fill(out.begin(), out.end(), 0);
    return Status::ok();
  }

  if (caps_ != nullptr) {
    const Partition* part = dev_->partition_of(lba);
    MakeRequestInfo info;
    info.target_marked =
        dev_->make_it_fail() || (part != nullptr && part->make_it_fail);
    info.is_write = is_write;
    info.size = static_cast<std::int64_t>(len);
    FaultContext ctx = make_ctx(info.size);
    if (caps_->make_request_should_fail(ctx, info)) {
      stats_.errors++;
      return Status::error(ErrorCode::kIoError,
                           dev_->name() + ": injected bio error");
    }
  }

  auto do_transfer = [&] {
    if (is_write) {
      std::memcpy(dev_->disk().bytes_mut().data() + lba * kBlockSize, in.data(),
                  len);
      if (sink_ != nullptr) sink_->on_write(lba, in);
    } else {
      std::memcpy(out.data(), dev_->disk().bytes().data() + lba * kBlockSize,
                  len);
    }
  };

  if (dev_->mode() == DeviceMode::normal || caps_ == nullptr) {
    do_transfer();
    return Status::ok();
  }

  // NVMe: the command executes, then the completion may be overwritten by
  // the injection at nvme_try_complete_req time. DNR suppresses the driver
  // retry loop.
  stats_.last_completions.clear();
  for (int attempt = 1; attempt <= kNvmeMaxAttempts; attempt++) {
    do_transfer();
    NvmeCompletion completion;
    FaultContext ctx = make_ctx(static_cast<std::int64_t>(len));
    if (auto injected = caps_->nvme_inject(dev_->name(), ctx)) {
      completion = *injected;
    }
    stats_.last_completions.push_back(completion);
    if (completion.status == NvmeStatus::success) return Status::ok();
    if (completion.dnr || attempt == kNvmeMaxAttempts) {
      stats_.errors++;
      return Status::error(ErrorCode::kIoError,
                           dev_->name() + ": nvme status " +
                               nvme_status_log_name(completion.status) +
                               (completion.dnr ? " (DNR)" : ""));
    }
  }
  return Status::error(ErrorCode::kIoError, "unreachable");
}

Status BlockIo::flush() {
  if (dev_->failed()) {
    stats_.errors++;
    return Status::error(ErrorCode::kDeviceError,
                         dev_->name() + ": device failed");
  }
  stats_.flushes++;
  if (dev_->mode() != DeviceMode::nullb && sink_ != nullptr) sink_->on_flush();
  return Status::ok();
}

Result<BlockDevice*> DeviceRegistry::add(std::unique_ptr<BlockDevice> dev) {
  const std::string name = dev->name();
  BlockDevice* raw = nullptr;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (devices_.count(name) != 0) {
      return Status::error(ErrorCode::kAlreadyExists,
                           "device already registered: " + name);
    }
    raw = dev.get();
    devices_.emplace(name, std::move(dev));
  }

  if (tree_ != nullptr) {
    tree_->mount_bool("block/" + name + "/make-it-fail",
                      [raw] { return raw->make_it_fail(); },
                      [raw](bool v) { raw->set_make_it_fail(v); });
    for (auto& part : raw->partitions()) {
      Partition* p = &part;
      tree_->mount_bool("block/" + name + "/" + p->name + "/make-it-fail",
                        [p] { return p->make_it_fail; },
                        [p](bool v) { p->make_it_fail = v; });
    }
  }
  if (caps_ != nullptr) {
    if (raw->mode() == DeviceMode::nvme) {
      auto r = caps_->register_nvme_device(name);
      if (!r.is_ok()) return r.status();
    } else if (raw->mode() == DeviceMode::nullb) {
      for (const char* kind :
           {"timeout_inject", "requeue_inject", "init_hctx_fault_inject"}) {
        auto r = caps_->register_nullb_fault(name, kind);
        if (!r.is_ok()) return r.status();
      }
    }
  }
  return raw;
}

Status DeviceRegistry::restart(const std::string& name) {
  BlockDevice* dev = find(name);
  if (dev == nullptr) {
    return Status::error(ErrorCode::kNotFound, "unknown device: " + name);
  }
  if (dev->mode() == DeviceMode::nullb && caps_ != nullptr) {
    FaultContext ctx = current_fault_context(1);
    if (caps_->nullb_inject(name, "init_hctx_fault_inject", ctx)) {
      dev->set_failed(true);
      return Status::error(ErrorCode::kDeviceError,
                           name + ": init_hctx fault injected");
    }
  }
  dev->set_failed(false);
  return Status::ok();
}

BlockDevice* DeviceRegistry::find(const std::string& name) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = devices_.find(name);
  return it == devices_.end() ? nullptr : it->second.get();
}

Result<BlockDevice*> DeviceRegistry::get(const std::string& name) {
  BlockDevice* dev = find(name);
  if (dev == nullptr) {
    return Status::error(ErrorCode::kNotFound, "unknown device: " + name);
  }
  return dev;
}

std::vector<std::string> DeviceRegistry::names() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& [n, _] : devices_) out.push_back(n);
  return out;
}

void DeviceRegistry::remove(const std::string& name) {
  std::lock_guard<std::mutex> lock(mu_);
  devices_.erase(name);
}

}  // namespace faultforge
