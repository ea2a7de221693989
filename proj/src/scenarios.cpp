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
#include "faultforge/scenarios.hpp"

#include <functional>

#include "faultforge/digest.hpp"
#include "faultforge/workload.hpp"

namespace faultforge {

std::string ScenarioReport::render() const {
  std::string out = "scenario " + name + (passed() ? ": PASS\n" : ": FAIL\n");
  if (interrupted) out += "  (interrupted after configuration; cleanup ran)\n";
  for (const auto& c : checks) {
    out += std::string("  [") + (c.passed ? "ok" : "FAIL") + "] " + c.what;
    if (!c.detail.empty()) out += " -- " + c.detail;
    out += '\n';
  }
  return out;
}

namespace {

void check(ScenarioReport& report, const std::string& what, bool ok,
           std::string detail = "") {
  report.checks.push_back({what, ok, std::move(detail)});
}

// Restores the tree on every exit path. The trap behavior runs first:
// probability 0 on the scenario's capability, like the SIGINT handler in
// the original scripts, then the full snapshot comes back.
class CleanupGuard {
 public:
  CleanupGuard(Session& s, std::string trap_capability)
      : session_(s),
        trap_capability_(std::move(trap_capability)),
        snapshot_(s.cfg().snapshot()) {}

  ~CleanupGuard() {
    if (!trap_capability_.empty()) {
      (void)session_.cfg().write(trap_capability_ + "/probability", "0");
    }
    (void)session_.cfg().restore(snapshot_);
  }

  const std::map<std::string, std::string>& snapshot() const { return snapshot_; }

 private:
  Session& session_;
  std::string trap_capability_;
  std::map<std::string, std::string> snapshot_;
};

Status cfg_all(Session& s, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [path, value] : kv) {
    Status st = s.cfg().write(path, value);
    if (!st.is_ok()) return st;
  }
  return Status::ok();
}

// A loadable-module stand-in: a registered address range plus an init/exit
// pair whose allocations run through the hooked allocator.
struct SimModule {
  std::string name;
  CallSiteRegistry::Module range;
  std::uint64_t init_site = 0;
  std::uint64_t exit_site = 0;

  SimModule(Session& s, const std::string& module_name) : name(module_name) {
    range = s.sites().register_module(module_name);
    init_site = s.sites().register_site(module_name, "init");
    exit_site = s.sites().register_site(module_name, "exit");
  }

  // Mixed allocation pattern; the atomic (non-sleeping) allocations stay
  // injectable when ignore-gfp-wait is set.
  Status init(Session& s) {
    ScopedCaller frame(init_site);
    for (int i = 0; i < 4; ++i) {
      bool can_sleep = (i % 2) == 0;
      auto r = s.allocator().kmalloc(name + "_state", 192 + i * 64, can_sleep,
                                     current_fault_context(192 + i * 64));
      if (!r.is_ok()) return r.status();
    }
    auto p = s.allocator().alloc_pages(0, false, false, current_fault_context(1));
    if (!p.is_ok()) return p.status();
    return Status::ok();
  }

  Status exit(Session& s) {
    ScopedCaller frame(exit_site);
    auto r = s.allocator().kmalloc(name + "_state", 128, false,
                                   current_fault_context(128));
    return r.status();
  }
};

ScenarioReport scenario_slab_module_init(Session& s, const ScenarioOptions& opts) {
  ScenarioReport report;
  report.name = "slab-module-init";
  CleanupGuard guard(s, "failslab");

  SimModule mod(s, "mod_dummy");
  s.caps().declare_slab_cache("mod_dummy_state");
  TaskState& marked = s.create_task(s.next_task_id());
  TaskState& other = s.create_task(s.next_task_id());
  marked.set_make_it_fail(true);

  Status st = cfg_all(s, {{"failslab/task-filter", "Y"},
                          {"failslab/probability", "10"},
                          {"failslab/interval", "100"},
                          {"failslab/times", "-1"},
                          {"failslab/space", "0"},
                          {"failslab/verbose", "2"},
                          {"failslab/ignore-gfp-wait", "Y"}});
  check(report, "configure failslab", st.is_ok(), st.to_string());
  if (opts.simulate_interrupt) {
    report.interrupted = true;
    return report;
  }

  std::uint64_t t0 = s.log().now();
  bool init_failed = false;
  int failed_cycle = -1;
  constexpr int kMaxCycles = 4000;
  for (int cycle = 0; cycle < kMaxCycles && !init_failed; ++cycle) {
    {
      TaskScope scope(&marked);
      Status is = mod.init(s);
      if (!is.is_ok()) {
        init_failed = true;
        failed_cycle = cycle;
        break;
      }
      (void)mod.exit(s);
    }
    TaskScope scope(&other);
    (void)s.allocator().kmalloc("mod_dummy_state", 128, false,
                                current_fault_context(128));
  }

  check(report, "module init failed under failslab", init_failed,
        init_failed ? "cycle " + std::to_string(failed_cycle) : "no failure");

  auto events = s.log().since(t0);
  bool confined = true;
  bool any_trace = false;
  for (const auto& ev : events) {
    if (ev.capability != "failslab") continue;
    if (ev.task_id != marked.id()) confined = false;
    if (!ev.trace.empty()) any_trace = true;
  }
  check(report, "failures confined to the make-it-fail task", confined);
  check(report, "verbose 2 recorded a call trace", !events.empty() && any_trace);
  report.log_slice = s.log().render_since(t0);
  return report;
}

ScenarioReport scenario_page_alloc_range(Session& s, const ScenarioOptions& opts) {
  ScenarioReport report;
  report.name = "page-alloc-range";
  CleanupGuard guard(s, "fail_page_alloc");

  SimModule target(s, "mod_target");
  SimModule other(s, "mod_other");

  // The module's injectable range is [.text start, .data start); the data
  // section address stands in for the end of the code section.
  Status st = cfg_all(
      s, {{"fail_page_alloc/probability", "100"},
          {"fail_page_alloc/interval", "1"},
          {"fail_page_alloc/times", "-1"},
          {"fail_page_alloc/ignore-gfp-wait", "Y"},
          {"fail_page_alloc/ignore-gfp-highmem", "Y"},
          {"fail_page_alloc/require-start", std::to_string(target.range.text_start)},
          {"fail_page_alloc/require-end", std::to_string(target.range.data_start)},
          {"fail_page_alloc/stacktrace-depth", "10"}});
  check(report, "configure fail_page_alloc", st.is_ok(), st.to_string());
  if (opts.simulate_interrupt) {
    report.interrupted = true;
    return report;
  }

  std::uint64_t t0 = s.log().now();
  TaskState& task = s.create_task(s.next_task_id());
  TaskScope scope(&task);

  bool target_failed, other_ok, deep_ok, sleeping_ok;
  {
    ScopedCaller frame(target.init_site);
    target_failed =
        !s.allocator().alloc_pages(0, false, false, current_fault_context(1)).is_ok();
    // Sleeping allocations are exempt via ignore-gfp-wait.
    sleeping_ok =
        s.allocator().alloc_pages(0, true, false, current_fault_context(1)).is_ok();
  }
  {
    ScopedCaller frame(other.init_site);
    other_ok =
        s.allocator().alloc_pages(0, false, false, current_fault_context(1)).is_ok();
  }
  {
    // The in-range caller sits at depth 11, one past the traversal bound.
    FaultContext ctx = current_fault_context(1);
    ctx.caller_trace.assign(10, other.range.text_start);
    ctx.caller_trace.push_back(target.init_site);
    ctx.task = &task;
    ctx.task_id = task.id();
    PageAllocInfo info{0, false, false};
    deep_ok = !s.caps().page_alloc_should_fail(ctx, info);
  }

  check(report, "allocation inside the required range fails", target_failed);
  check(report, "allocation from another module passes", other_ok);
  check(report, "match beyond stacktrace-depth 10 passes", deep_ok);
  check(report, "sleeping allocation exempt via ignore-gfp-wait", sleeping_ok);

  bool confined = true;
  for (const auto& ev : s.log().since(t0)) {
    if (ev.capability != "fail_page_alloc") continue;
    bool in_range = false;
    for (std::uint64_t a : ev.trace) {
      if (a >= target.range.text_start && a < target.range.data_start) in_range = true;
    }
    if (!in_range && !ev.trace.empty()) confined = false;
  }
  check(report, "logged failures confined to the registered range", confined);
  report.log_slice = s.log().render_since(t0);
  return report;
}

ScenarioReport scenario_open_ctree(Session& s, const ScenarioOptions& opts) {
  ScenarioReport report;
  report.name = "open-ctree";
  CleanupGuard guard(s, "fail_function");

  auto dev = s.open_device("loop0", "faultforge_openctree.img",
                           DeviceMode::normal, 256);
  if (!dev.is_ok()) {
    check(report, "create image", false, dev.status().to_string());
    return report;
  }
  BlockIo io(dev.value(), &s.caps());
  Status st = Store::format(io);
  check(report, "format image", st.is_ok(), st.to_string());

  st = cfg_all(s, {{"fail_function/inject", Store::kMountInjectable},
                   {"fail_function/" + std::string(Store::kMountInjectable) +
                        "/retval", "-12"},
                   {"fail_function/task-filter", "N"},
                   {"fail_function/probability", "100"},
                   {"fail_function/interval", "0"},
                   {"fail_function/times", "-1"},
                   {"fail_function/space", "0"},
                   {"fail_function/verbose", "1"}});
  check(report, "configure fail_function", st.is_ok(), st.to_string());
  if (opts.simulate_interrupt) {
    report.interrupted = true;
    return report;
  }

  std::uint64_t t0 = s.log().now();
  std::uint64_t digest_before = dev.value()->disk().digest();
  auto mounted = Store::mount(io, &s.caps(), &s.allocator(), s.store_sites());
  check(report, "mount fails with errno -12",
        !mounted.is_ok() && mounted.status().err_no() == -12,
        mounted.status().to_string());
  check(report, "no state change from the bypassed mount",
        dev.value()->disk().digest() == digest_before);

  // Cleanup phase: empty string disables the injection.
  st = s.cfg().write("fail_function/inject", "");
  check(report, "disable injection with an empty string", st.is_ok());
  auto remounted = Store::mount(io, &s.caps(), &s.allocator(), s.store_sites());
  check(report, "mount succeeds after disable", remounted.is_ok(),
        remounted.status().to_string());
  report.log_slice = s.log().render_since(t0);
  return report;
}

ScenarioReport scenario_slab_cache_filter(Session& s, const ScenarioOptions& opts) {
  ScenarioReport report;
  report.name = "slab-cache-filter";
  CleanupGuard guard(s, "failslab");

  s.caps().declare_slab_cache("skbuff_head_cache");
  s.caps().declare_slab_cache("kmalloc-256");

  Status st = cfg_all(s, {{"slab/skbuff_head_cache/make-it-fail", "Y"},
                          {"failslab/cache-filter", "Y"},
                          {"failslab/times", "1"},
                          {"failslab/probability", "1"},
                          {"failslab/interval", "1"},
                          {"failslab/verbose", "1"}});
  check(report, "configure failslab cache filter", st.is_ok(), st.to_string());
  if (opts.simulate_interrupt) {
    report.interrupted = true;
    return report;
  }

  std::uint64_t t0 = s.log().now();
  TaskState& task = s.create_task(s.next_task_id());
  TaskScope scope(&task);

  std::size_t skb_failures = 0, other_failures = 0;
  constexpr int kAllocs = 40000;
  for (int i = 0; i < kAllocs; ++i) {
    const bool skb = (i % 2) == 0;
    auto r = s.allocator().kmalloc(skb ? "skbuff_head_cache" : "kmalloc-256",
                                   256, false, current_fault_context(256));
    if (!r.is_ok()) {
      (skb ? skb_failures : other_failures)++;
    }
  }

  check(report, "at most one failure (times=1, 1% probability)",
        skb_failures + other_failures <= 1,
        std::to_string(skb_failures + other_failures) + " failures");
  check(report, "failure happened (seeded run reaches the 1% draw)",
        skb_failures == 1, std::to_string(skb_failures));
  check(report, "failures confined to the marked cache", other_failures == 0);
  report.log_slice = s.log().render_since(t0);
  return report;
}

ScenarioReport scenario_nvme_default(Session& s, const ScenarioOptions& opts) {
  ScenarioReport report;
  report.name = "nvme-default";

  auto dev = s.open_device("nvme0n1", "faultforge_nvme0n1.img",
                           DeviceMode::nvme, 256);
  if (!dev.is_ok()) {
    check(report, "create nvme device", false, dev.status().to_string());
    return report;
  }
  CleanupGuard guard(s, "nvme/nvme0n1/fault_inject");

  BlockIo io(dev.value(), &s.caps());
  Status st = Store::format(io);
  auto mounted = Store::mount(io, &s.caps(), &s.allocator(), s.store_sites());
  if (!st.is_ok() || !mounted.is_ok()) {
    check(report, "prepare store", false, st.to_string());
    return report;
  }
  Store store = mounted.take();
  std::vector<std::uint8_t> blob(8192);
  for (std::size_t i = 0; i < blob.size(); ++i) blob[i] = static_cast<std::uint8_t>(i);
  st = store.put("blob", blob);
  check(report, "seed object written", st.is_ok(), st.to_string());

  // Only probability/times are armed; status and DNR stay at their
  // defaults: invalid-opcode, no retry.
  st = cfg_all(s, {{"nvme/nvme0n1/fault_inject/probability", "100"},
                   {"nvme/nvme0n1/fault_inject/times", "1"},
                   {"nvme/nvme0n1/fault_inject/verbose", "1"}});
  check(report, "arm nvme fault injection", st.is_ok(), st.to_string());
  if (opts.simulate_interrupt) {
    report.interrupted = true;
    return report;
  }

  std::uint64_t t0 = s.log().now();
  TaskState& task = s.create_task(s.next_task_id());
  TaskScope scope(&task);

  auto read_back = store.get("blob");
  check(report, "read fails with an I/O error", !read_back.is_ok(),
        read_back.status().to_string());
  check(report, "no retry attempted (DNR)",
        io.stats().last_completions.size() == 1,
        std::to_string(io.stats().last_completions.size()) + " attempts");

  std::string slice = s.log().render_since(t0);
  check(report, "log records status=INVALID_OPCODE dnr=1",
        slice.find("status=INVALID_OPCODE dnr=1") != std::string::npos, slice);

  auto second = store.get("blob");
  check(report, "retry after times exhausted succeeds",
        second.is_ok() && second.value() == blob, second.status().to_string());
  report.log_slice = slice;
  return report;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"slab-module-init", "page-alloc-range", "open-ctree",
          "slab-cache-filter", "nvme-default"};
}

Result<ScenarioReport> run_scenario(Session& session, const std::string& name,
                                    const ScenarioOptions& opts) {
  session.reseed(opts.seed);
  if (name == "slab-module-init") return scenario_slab_module_init(session, opts);
  if (name == "page-alloc-range") return scenario_page_alloc_range(session, opts);
  if (name == "open-ctree") return scenario_open_ctree(session, opts);
  if (name == "slab-cache-filter") return scenario_slab_cache_filter(session, opts);
  if (name == "nvme-default") return scenario_nvme_default(session, opts);
  return Status::error(ErrorCode::kNotFound, "unknown scenario: " + name);
}

}  // namespace faultforge
