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
#include "faultforge/workload.hpp"

#include <charconv>
#include <map>

#include "faultforge/current.hpp"
#include "faultforge/digest.hpp"
#include "faultforge/rng.hpp"

namespace faultforge {

namespace {

bool parse_u64_tok(std::string_view s, std::uint64_t* out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && p == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  while (true) {
    std::size_t pos = s.find(sep);
    out.push_back(s.substr(0, pos));
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  return out;
}

}  // namespace

Result<Workload> Workload::parse(const std::string& spec) {
  Workload w;
  auto parts = split(spec, ':');
  const std::string_view head = parts[0];

  if (head == "put-loop") {
    std::uint64_t count = 5, size = 3000;
    if (parts.size() > 1 && !parse_u64_tok(parts[1], &count)) {
      return Status::error(ErrorCode::kInvalidArgument, "bad put-loop count");
    }
    if (parts.size() > 2 && !parse_u64_tok(parts[2], &size)) {
      return Status::error(ErrorCode::kInvalidArgument, "bad put-loop size");
    }
    for (std::uint64_t i = 0; i < count; ++i) {
      w.ops.push_back({WorkloadOp::Kind::put, "obj" + std::to_string(i), size});
    }
    return w;
  }
  if (head == "mixed") {
    w.ops = {{WorkloadOp::Kind::put, "a", 3000},
             {WorkloadOp::Kind::put, "b", 5000},
             {WorkloadOp::Kind::put, "a", 4200},
             {WorkloadOp::Kind::remove, "b", 0},
             {WorkloadOp::Kind::put, "c", 1000}};
    return w;
  }
  if (head == "readback") {
    w.ops = {{WorkloadOp::Kind::put, "a", 2048},
             {WorkloadOp::Kind::put, "b", 9000},
             {WorkloadOp::Kind::get, "a", 0},
             {WorkloadOp::Kind::get, "b", 0}};
    return w;
  }
  if (head == "alloc-workload") {
    w.alloc_count = 64;
    std::uint64_t n = 0;
    if (parts.size() > 1) {
      if (!parse_u64_tok(parts[1], &n)) {
        return Status::error(ErrorCode::kInvalidArgument, "bad alloc count");
      }
      w.alloc_count = n;
    }
    return w;
  }

  // Explicit op list.
  for (std::string_view tok : split(spec, ',')) {
    auto f = split(tok, ':');
    WorkloadOp op;
    if (f[0] == "put" && f.size() == 3) {
      op.kind = WorkloadOp::Kind::put;
      op.name = std::string(f[1]);
      if (!parse_u64_tok(f[2], &op.size)) {
        return Status::error(ErrorCode::kInvalidArgument,
                             "bad put size in: " + std::string(tok));
      }
    } else if (f[0] == "get" && f.size() == 2) {
      op.kind = WorkloadOp::Kind::get;
      op.name = std::string(f[1]);
    } else if ((f[0] == "del" || f[0] == "remove") && f.size() == 2) {
      op.kind = WorkloadOp::Kind::remove;
      op.name = std::string(f[1]);
    } else {
      return Status::error(ErrorCode::kInvalidArgument,
                           "bad workload op: " + std::string(tok));
    }
    w.ops.push_back(std::move(op));
  }
  if (w.ops.empty()) {
    return Status::error(ErrorCode::kInvalidArgument, "empty workload spec");
  }
  return w;
}

std::vector<std::uint8_t> workload_payload(std::uint64_t seed,
                                           const std::string& name,
                                           std::size_t occurrence,
                                           std::uint64_t size) {
  Pcg32 rng(fnv1a64_mix(fnv1a64(name, seed), occurrence));
  std::vector<std::uint8_t> out(size);
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.below(256));
  return out;
}

WorkloadRunReport run_store_workload(Store& store, const Workload& workload,
                                     std::uint64_t payload_seed) {
  WorkloadRunReport report;
  std::map<std::string, std::size_t> occurrence;
  std::map<std::string, std::vector<std::uint8_t>> last_payload;
  for (const auto& op : workload.ops) {
    Status s;
    switch (op.kind) {
      case WorkloadOp::Kind::put: {
        std::size_t occ = occurrence[op.name]++;
        auto payload = workload_payload(payload_seed, op.name, occ, op.size);
        s = store.put(op.name, payload);
        if (s.is_ok()) last_payload[op.name] = std::move(payload);
        break;
      }
      case WorkloadOp::Kind::get: {
        auto got = store.get(op.name);
        s = got.status();
        if (got.is_ok()) {
          auto it = last_payload.find(op.name);
          if (it != last_payload.end() && it->second != got.value()) {
            report.verify_mismatches++;
          }
        }
        break;
      }
      case WorkloadOp::Kind::remove:
        s = store.remove(op.name);
        if (s.is_ok()) last_payload.erase(op.name);
        break;
    }
    if (!s.is_ok()) report.failed_ops++;
    report.op_status.push_back(std::move(s));
  }
  return report;
}

WorkloadRunReport run_alloc_workload(SimAllocator& alloc, const Workload& workload,
                                     const std::vector<std::string>& caches) {
  WorkloadRunReport report;
  std::vector<std::string> cache_list = caches;
  if (cache_list.empty()) cache_list = {"io_buf", "kmalloc-256"};
  for (std::size_t i = 0; i < workload.alloc_count; ++i) {
    const std::string& cache = cache_list[i % cache_list.size()];
    bool can_sleep = (i % 2) == 0;
    auto r = alloc.kmalloc(cache, 256 + (i % 7) * 64, can_sleep,
                           current_fault_context(256));
    if (!r.is_ok()) report.failed_ops++;
    report.op_status.push_back(r.status());

    auto p = alloc.alloc_pages(static_cast<int>(i % 2), can_sleep, (i % 3) == 0,
                               current_fault_context(1));
    if (!p.is_ok()) report.failed_ops++;
    report.op_status.push_back(p.status());
  }
  return report;
}

}  // namespace faultforge
