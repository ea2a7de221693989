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
#include "faultforge/fault_models.hpp"

#include <algorithm>
#include <condition_variable>
#include <mutex>
#include <set>
#include <thread>

#include "faultforge/digest.hpp"
#include "faultforge/rng.hpp"
#include "faultforge/store.hpp"

namespace faultforge {

Result<FaultModelKind> parse_fault_model(const std::string& name) {
  if (name == "whole-device") return FaultModelKind::WholeDeviceFailure;
  if (name == "global-inconsistency") return FaultModelKind::GlobalInconsistency;
  return Status::error(ErrorCode::kInvalidArgument,
                       "unknown fault model: " + name);
}

const char* post_fault_outcome_name(PostFaultOutcome o) {
  switch (o) {
    case PostFaultOutcome::Recovered: return "Recovered";
    case PostFaultOutcome::DataLoss: return "DataLoss";
    case PostFaultOutcome::CheckerFailed: return "CheckerFailed";
  }
  return "?";
}

std::string FaultManifest::render() const {
  std::string out;
  if (device_failed) out += "device failed\n";
  for (const auto& m : mutations) {
    out += "block " + std::to_string(m.lba) + " " + m.kind + "\n";
  }
  for (const auto& w : warnings) out += "# warning: " + w + "\n";
  return out;
}

namespace {

// Weighted victim pool over the metadata regions. Bitmap and table blocks
// carry most of the weight; journal, superblock and backup are rarer picks.
std::vector<std::uint64_t> victim_pool(const Superblock& sb) {
  std::vector<std::uint64_t> pool;
  auto push_n = [&](std::uint64_t lba, int weight) {
    for (int i = 0; i < weight; ++i) pool.push_back(lba);
  };
  for (std::uint64_t b = 0; b < sb.bitmap_blocks; ++b) {
    push_n(sb.bitmap_start + b, 4);
  }
  for (std::uint64_t b = 0; b < sb.table_blocks; ++b) {
    push_n(sb.table_start + b, 4);
  }
  for (std::uint64_t b = 0; b < sb.journal_blocks; ++b) {
    push_n(sb.journal_start + b, 1);
  }
  push_n(0, 1);
  push_n(sb.backup_lba, 1);
  return pool;
}

void mutate_block(SimDisk& disk, std::uint64_t lba, Pcg32& rng,
                  FaultManifest& manifest) {
  auto block = disk.block_mut(lba);
  bool all_zero = std::all_of(block.begin(), block.end(),
                              [](std::uint8_t b) { return b == 0; });
  bool zero_it = !all_zero && rng.below(100) < 30;
  if (zero_it) {
    std::fill(block.begin(), block.end(), 0);
    manifest.mutations.push_back({lba, "zero"});
  } else {
    std::uint32_t bit = rng.below(static_cast<std::uint32_t>(block.size() * 8));
    block[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    manifest.mutations.push_back({lba, "flip:bit=" + std::to_string(bit)});
  }
}

}  // namespace

Result<std::vector<FaultedImage>> apply_fault_model(
    const FaultModelParams& params, const std::vector<SimDisk>& images) {
  std::vector<FaultedImage> out;
  for (const SimDisk& original : images) {
    FaultedImage faulted;
    faulted.disk = original;

    if (params.kind == FaultModelKind::WholeDeviceFailure) {
      faulted.device_failed = true;
      faulted.manifest.device_failed = true;
      out.push_back(std::move(faulted));
      continue;
    }

    auto parsed = parse_store(original);
    if (!parsed.is_ok()) return parsed.status();
    const Superblock& sb = parsed.value().sb;

    std::vector<std::uint64_t> pool = victim_pool(sb);
    std::set<std::uint64_t> distinct(pool.begin(), pool.end());
    std::size_t want = params.blocks;
    if (want > distinct.size()) {
      faulted.manifest.warnings.push_back(
          "corruption count clipped to the metadata region (" +
          std::to_string(distinct.size()) + " blocks)");
      want = distinct.size();
    }

    // Same seed -> same victims and mutations on every image.
    Pcg32 rng(params.seed);
    std::set<std::uint64_t> chosen;
    while (chosen.size() < want) {
      chosen.insert(pool[rng.below(static_cast<std::uint32_t>(pool.size()))]);
    }
    for (std::uint64_t lba : chosen) {
      mutate_block(faulted.disk, lba, rng, faulted.manifest);
    }
    out.push_back(std::move(faulted));
  }
  return out;
}

namespace {

// Runs the checker in a worker thread bounded by the watchdog. On timeout
// the worker is abandoned (detached); the framework's own checkers always
// terminate, the knob exists so "hang" is an observable outcome.
struct WatchdogResult {
  bool timed_out = false;
  Status status;
  CheckReport report;
};

// The device and io live on the heap, shared with the worker, so an
// abandoned worker can finish (or sleep forever) against live objects.
WatchdogResult run_with_watchdog(std::shared_ptr<BlockDevice> dev,
                                 std::chrono::milliseconds budget,
                                 const CheckerFn& checker, SimDisk* disk_out) {
  struct Shared {
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    Status status;
    CheckReport report;
  };
  auto shared = std::make_shared<Shared>();
  auto io = std::make_shared<BlockIo>(dev.get(), nullptr);
  std::thread worker([shared, dev, io, checker] {
    auto r = checker ? checker(*io) : run_checker(*io, CheckerPolicy::shipped());
    std::lock_guard<std::mutex> lock(shared->mu);
    if (r.is_ok()) {
      shared->report = r.take();
    } else {
      shared->status = r.status();
    }
    shared->done = true;
    shared->cv.notify_all();
  });

  WatchdogResult result;
  std::unique_lock<std::mutex> lock(shared->mu);
  if (!shared->cv.wait_for(lock, budget, [&] { return shared->done; })) {
    result.timed_out = true;
    worker.detach();
    return result;
  }
  lock.unlock();
  worker.join();
  result.status = shared->status;
  result.report = shared->report;
  if (disk_out != nullptr) *disk_out = std::move(dev->disk());
  return result;
}

}  // namespace

PfaultReport post_fault_check(std::vector<FaultedImage>& faulted,
                              const std::vector<SimDisk>& originals,
                              std::chrono::milliseconds watchdog,
                              CheckerFn checker_override) {
  PfaultReport report;
  for (std::size_t i = 0; i < faulted.size(); ++i) {
    PostFaultResult r;
    auto dev = std::make_shared<BlockDevice>("pfault" + std::to_string(i),
                                             DeviceMode::normal,
                                             faulted[i].disk);
    dev->set_failed(faulted[i].device_failed);

    SimDisk repaired;
    WatchdogResult wd =
        run_with_watchdog(dev, watchdog, checker_override, &repaired);
    if (wd.timed_out) {
      r.outcome = PostFaultOutcome::CheckerFailed;
      r.detail = "checker hang (watchdog)";
      report.per_image.push_back(std::move(r));
      continue;  // image copy abandoned with the stuck worker
    }
    faulted[i].disk = std::move(repaired);
    if (!wd.status.is_ok()) {
      r.outcome = PostFaultOutcome::CheckerFailed;
      r.detail = wd.status.to_string();
      report.per_image.push_back(std::move(r));
      continue;
    }
    r.report = wd.report;

    bool unrepairable = false;
    for (const auto& f : r.report.findings) {
      if (f.action == RepairAction::unrepairable) unrepairable = true;
    }
    if (unrepairable) {
      r.outcome = PostFaultOutcome::DataLoss;
      r.detail = "unrepairable findings";
      report.per_image.push_back(std::move(r));
      continue;
    }

    // Original catalog must survive the repair.
    bool data_loss = false;
    std::string loss_detail;
    if (i < originals.size()) {
      auto orig = parse_store(originals[i]);
      auto now = parse_store(faulted[i].disk);
      if (orig.is_ok() && now.is_ok()) {
        for (const auto& [name, bytes] : orig.value().objects) {
          auto it = now.value().objects.find(name);
          if (it == now.value().objects.end()) {
            data_loss = true;
            loss_detail = "object lost: " + name;
            break;
          }
          if (it->second != bytes) {
            data_loss = true;
            loss_detail = "object corrupted: " + name;
            break;
          }
        }
      } else if (orig.is_ok() && !now.is_ok()) {
        data_loss = true;
        loss_detail = "image unparseable after repair";
      }
    }
    if (data_loss) {
      r.outcome = PostFaultOutcome::DataLoss;
      r.detail = loss_detail;
      report.per_image.push_back(std::move(r));
      continue;
    }

    // Verifiable read/write probe.
    BlockDevice probe_dev("pfault-probe" + std::to_string(i),
                          DeviceMode::normal, std::move(faulted[i].disk));
    BlockIo probe_io(&probe_dev, nullptr);
    bool probe_ok = false;
    auto mounted = Store::mount(probe_io);
    if (mounted.is_ok()) {
      Store store = mounted.take();
      std::vector<std::uint8_t> probe(2048);
      for (std::size_t b = 0; b < probe.size(); ++b) {
        probe[b] = static_cast<std::uint8_t>(b * 31 + i);
      }
      if (store.put("pfault.probe", probe).is_ok()) {
        auto back = store.get("pfault.probe");
        probe_ok = back.is_ok() && back.value() == probe &&
                   store.remove("pfault.probe").is_ok();
      }
    }
    faulted[i].disk = std::move(probe_dev.disk());
    if (!probe_ok) {
      r.outcome = PostFaultOutcome::CheckerFailed;
      r.detail = "verifiable workload probe failed";
    } else {
      r.outcome = PostFaultOutcome::Recovered;
    }
    report.per_image.push_back(std::move(r));
  }
  return report;
}

}  // namespace faultforge
