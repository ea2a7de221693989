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
#include "faultforge/capabilities.hpp"

#include "faultforge/digest.hpp"

namespace faultforge {

namespace {

struct NvmeStatusRow {
  NvmeStatus code;
  const char* config_name;
  const char* log_name;
};

constexpr NvmeStatusRow kNvmeStatusTable[] = {
    {NvmeStatus::success, "success", "SUCCESS"},
    {NvmeStatus::invalid_opcode, "invalid-opcode", "INVALID_OPCODE"},
    {NvmeStatus::invalid_field, "invalid-field", "INVALID_FIELD"},
    {NvmeStatus::data_transfer_error, "data-transfer-error",
     "DATA_TRANSFER_ERROR"},
    {NvmeStatus::internal, "internal", "INTERNAL"},
    {NvmeStatus::abort_requested, "abort-requested", "ABORT_REQUESTED"},
    {NvmeStatus::write_fault, "write-fault", "WRITE_FAULT"},
    {NvmeStatus::unrecovered_read_error, "unrecovered-read-error",
     "UNRECOVERED_READ_ERROR"},
};

constexpr std::int64_t kMaxErrno = 4095;

}  // namespace

const char* nvme_status_name(NvmeStatus s) {
  for (const auto& row : kNvmeStatusTable) {
    if (row.code == s) return row.config_name;
  }
  return "?";
}

const char* nvme_status_log_name(NvmeStatus s) {
  for (const auto& row : kNvmeStatusTable) {
    if (row.code == s) return row.log_name;
  }
  return "?";
}

Result<NvmeStatus> parse_nvme_status(const std::string& name) {
  for (const auto& row : kNvmeStatusTable) {
    if (name == row.config_name) return row.code;
  }
  return Status::error(ErrorCode::kInvalidArgument,
                       "status code not in the registered status table: '" +
                           name + "'");
}

Status validate_retval(FunctionErrorType type, std::int64_t retval) {
  switch (type) {
    case FunctionErrorType::etype_null:
      if (retval != 0) {
        return Status::error(ErrorCode::kInvalidArgument,
                             "NULL-typed function retval must be 0");
      }
      return Status::ok();
    case FunctionErrorType::etype_errno:
      if (retval >= 0 || retval < -kMaxErrno) {
        return Status::error(ErrorCode::kInvalidArgument,
                             "errno-typed function retval must be a negative "
                             "errno, not a null marker");
      }
      return Status::ok();
    case FunctionErrorType::etype_errno_null:
      if (retval > 0 || retval < -kMaxErrno) {
        return Status::error(ErrorCode::kInvalidArgument,
                             "errno-or-NULL retval must be 0 or a negative errno");
      }
      return Status::ok();
    case FunctionErrorType::etype_true:
      if (retval < 1) {
        return Status::error(ErrorCode::kInvalidArgument,
                             "true-typed function retval must be > 0");
      }
      return Status::ok();
  }
  return Status::error(ErrorCode::kInvalidArgument, "bad error type");
}

Capability::Capability(std::string name, FaultAttr attr, EventLog* log)
    : name_(std::move(name)), gate_(name_, std::move(attr), log) {}

void Capability::define_bool_ext(const std::string& key, bool dflt) {
  std::lock_guard<std::mutex> lock(ext_mu_);
  bool_ext_.emplace(key, dflt);
}

bool Capability::ext_bool(const std::string& key) const {
  std::lock_guard<std::mutex> lock(ext_mu_);
  auto it = bool_ext_.find(key);
  return it != bool_ext_.end() && it->second;
}

void Capability::set_ext_bool(const std::string& key, bool v) {
  std::lock_guard<std::mutex> lock(ext_mu_);
  bool_ext_[key] = v;
}

void Capability::define_text_ext(const std::string& key, std::string dflt) {
  std::lock_guard<std::mutex> lock(ext_mu_);
  text_ext_.emplace(key, std::move(dflt));
}

std::string Capability::ext_text(const std::string& key) const {
  std::lock_guard<std::mutex> lock(ext_mu_);
  auto it = text_ext_.find(key);
  return it == text_ext_.end() ? "" : it->second;
}

void Capability::set_ext_text(const std::string& key, std::string v) {
  std::lock_guard<std::mutex> lock(ext_mu_);
  text_ext_[key] = std::move(v);
}

CapabilityRegistry::CapabilityRegistry(ConfigTree* tree, EventLog* log,
                                       std::uint64_t seed)
    : tree_(tree), log_(log), seed_(seed) {}

void CapabilityRegistry::mount_attr_nodes(Capability* cap) {
  if (tree_ == nullptr) return;
  const std::string base = cap->name() + "/";
  FaultGate* g = &cap->gate();

  auto geti = [g](auto field) {
    return [g, field] { return g->with_attr([&](FaultAttr& a) { return static_cast<std::int64_t>(a.*field); }); };
  };

  tree_->mount_int(base + "probability", NodeKind::integer, 0, 100,
                   geti(&FaultAttr::probability),
                   [g](std::int64_t v) {
                     g->with_attr([&](FaultAttr& a) { a.probability = static_cast<int>(v); });
                   });
  tree_->mount_int(base + "interval", NodeKind::long_int, 0, INT64_MAX,
                   geti(&FaultAttr::interval),
                   [g](std::int64_t v) { g->with_attr([&](FaultAttr& a) { a.interval = v; }); });
  tree_->mount_int(base + "times", NodeKind::integer, -1, INT64_MAX,
                   geti(&FaultAttr::times),
                   [g](std::int64_t v) { g->with_attr([&](FaultAttr& a) { a.times = v; }); });
  tree_->mount_int(base + "space", NodeKind::integer, 0, INT64_MAX,
                   geti(&FaultAttr::space),
                   [g](std::int64_t v) { g->with_attr([&](FaultAttr& a) { a.space = v; }); });
  tree_->mount_int(base + "verbose", NodeKind::integer, 0, 2,
                   geti(&FaultAttr::verbose),
                   [g](std::int64_t v) { g->with_attr([&](FaultAttr& a) { a.verbose = static_cast<int>(v); }); });
  tree_->mount_bool(base + "task-filter",
                    [g] { return g->with_attr([](FaultAttr& a) { return a.task_filter; }); },
                    [g](bool v) { g->with_attr([&](FaultAttr& a) { a.task_filter = v; }); });
  tree_->mount_u64(base + "require-start",
                   [g] { return g->with_attr([](FaultAttr& a) { return a.require_start; }); },
                   [g](std::uint64_t v) { g->with_attr([&](FaultAttr& a) { a.require_start = v; }); });
  tree_->mount_u64(base + "require-end",
                   [g] { return g->with_attr([](FaultAttr& a) { return a.require_end; }); },
                   [g](std::uint64_t v) { g->with_attr([&](FaultAttr& a) { a.require_end = v; }); });
  tree_->mount_u64(base + "reject-start",
                   [g] { return g->with_attr([](FaultAttr& a) { return a.reject_start; }); },
                   [g](std::uint64_t v) { g->with_attr([&](FaultAttr& a) { a.reject_start = v; }); });
  tree_->mount_u64(base + "reject-end",
                   [g] { return g->with_attr([](FaultAttr& a) { return a.reject_end; }); },
                   [g](std::uint64_t v) { g->with_attr([&](FaultAttr& a) { a.reject_end = v; }); });
  tree_->mount_int(base + "stacktrace-depth", NodeKind::long_int, 0, INT64_MAX,
                   geti(&FaultAttr::stacktrace_depth),
                   [g](std::int64_t v) { g->with_attr([&](FaultAttr& a) { a.stacktrace_depth = v; }); });
  tree_->mount_u64(base + "count",
                   [g] { return g->with_attr([](FaultAttr& a) { return a.count; }); },
                   [g](std::uint64_t v) { g->with_attr([&](FaultAttr& a) { a.count = v; }); });
  tree_->mount_u64(base + "rng_state",
                   [g] { return g->with_attr([](FaultAttr& a) { return a.rng.state(); }); },
                   [g](std::uint64_t v) { g->with_attr([&](FaultAttr& a) { a.rng.reseed(v); }); });
}

void CapabilityRegistry::mount_bool_ext(Capability* cap, const std::string& key,
                                        bool dflt) {
  cap->define_bool_ext(key, dflt);
  if (tree_ == nullptr) return;
  tree_->mount_bool(cap->name() + "/" + key,
                    [cap, key] { return cap->ext_bool(key); },
                    [cap, key](bool v) { cap->set_ext_bool(key, v); });
}

Result<Capability*> CapabilityRegistry::register_capability(
    const std::string& name, const FaultAttr& defaults,
    const std::optional<std::string>& boot_spec) {
  FaultAttr attr = defaults;
  if (boot_spec.has_value()) {
    auto parsed = setup_fault_attr(attr, *boot_spec);
    if (!parsed.is_ok()) return parsed.status();
    attr = parsed.take();
  }
  attr.rng.reseed(fnv1a64_mix(fnv1a64(name), seed_));

  std::lock_guard<std::mutex> lock(mu_);
  if (caps_.count(name) != 0) {
    return Status::error(ErrorCode::kAlreadyExists,
                         "capability already registered: " + name);
  }
  auto cap = std::make_unique<Capability>(name, attr, log_);
  Capability* raw = cap.get();
  caps_.emplace(name, std::move(cap));
  mount_attr_nodes(raw);
  return raw;
}

Capability* CapabilityRegistry::find(const std::string& name) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = caps_.find(name);
  return it == caps_.end() ? nullptr : it->second.get();
}

const Capability* CapabilityRegistry::find(const std::string& name) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = caps_.find(name);
  return it == caps_.end() ? nullptr : it->second.get();
}

std::vector<std::string> CapabilityRegistry::names() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& [n, _] : caps_) out.push_back(n);
  return out;
}

Status CapabilityRegistry::register_builtins(
    const std::map<std::string, std::string>& boot_specs) {
  auto spec_for = [&](const char* name) -> std::optional<std::string> {
    auto it = boot_specs.find(name);
    if (it == boot_specs.end()) return std::nullopt;
    return it->second;
  };
  if (boot_specs.count("fail_function") != 0) {
    // fail_function has no boot option.
    return Status::error(ErrorCode::kInvalidArgument,
                         "fail_function does not support a boot-time spec");
  }

  auto slab = register_capability("failslab", FaultAttr{}, spec_for("failslab"));
  if (!slab.is_ok()) return slab.status();
  mount_bool_ext(slab.value(), "ignore-gfp-wait", false);
  mount_bool_ext(slab.value(), "cache-filter", false);

  auto page = register_capability("fail_page_alloc", FaultAttr{},
                                  spec_for("fail_page_alloc"));
  if (!page.is_ok()) return page.status();
  mount_bool_ext(page.value(), "ignore-gfp-wait", false);
  mount_bool_ext(page.value(), "ignore-gfp-highmem", false);

  auto mreq = register_capability("fail_make_request", FaultAttr{},
                                  spec_for("fail_make_request"));
  if (!mreq.is_ok()) return mreq.status();

  auto ff = register_capability("fail_function", FaultAttr{});
  if (!ff.is_ok()) return ff.status();
  if (tree_ != nullptr) {
    tree_->mount_text(
        "fail_function/inject", [this] { return function_inject_target(); },
        [this](const std::string& v) { return set_function_inject_target(v); });
  }
  return Status::ok();
}

Result<Capability*> CapabilityRegistry::register_nvme_device(
    const std::string& dev) {
  FaultAttr defaults;
  auto cap = register_capability("nvme/" + dev + "/fault_inject", defaults);
  if (!cap.is_ok()) return cap.status();
  Capability* raw = cap.value();
  // Default injection: invalid-opcode without retry, absent any writes.
  raw->define_text_ext("status", nvme_status_name(NvmeStatus::invalid_opcode));
  raw->define_bool_ext("dont_retry", true);
  raw->set_ext_bool("dont_retry", true);
  if (tree_ != nullptr) {
    tree_->mount_text(
        raw->name() + "/status", [raw] { return raw->ext_text("status"); },
        [raw](const std::string& v) -> Status {
          auto parsed = parse_nvme_status(v);
          if (!parsed.is_ok()) return parsed.status();
          raw->set_ext_text("status", nvme_status_name(parsed.value()));
          return Status::ok();
        });
    tree_->mount_bool(raw->name() + "/dont_retry",
                      [raw] { return raw->ext_bool("dont_retry"); },
                      [raw](bool v) { raw->set_ext_bool("dont_retry", v); });
  }
  return raw;
}

Result<Capability*> CapabilityRegistry::register_nullb_fault(
    const std::string& disk, const std::string& kind) {
  if (kind != "timeout_inject" && kind != "requeue_inject" &&
      kind != "init_hctx_fault_inject") {
    return Status::error(ErrorCode::kInvalidArgument,
                         "unknown nullb fault kind: " + kind);
  }
  return register_capability("nullb/" + disk + "/" + kind, FaultAttr{});
}

void CapabilityRegistry::declare_slab_cache(const std::string& cache) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (slab_marks_.count(cache) != 0) return;
    slab_marks_[cache] = false;
  }
  if (tree_ != nullptr) {
    tree_->mount_bool("slab/" + cache + "/make-it-fail",
                      [this, cache] { return slab_cache_marked(cache); },
                      [this, cache](bool v) { set_slab_cache_marked(cache, v); });
  }
}

bool CapabilityRegistry::slab_cache_marked(const std::string& cache) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = slab_marks_.find(cache);
  return it != slab_marks_.end() && it->second;
}

void CapabilityRegistry::set_slab_cache_marked(const std::string& cache, bool v) {
  std::lock_guard<std::mutex> lock(mu_);
  slab_marks_[cache] = v;
}

std::vector<std::string> CapabilityRegistry::slab_caches() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::string> out;
  for (const auto& [c, _] : slab_marks_) out.push_back(c);
  return out;
}

Status CapabilityRegistry::register_injectable(const std::string& fn,
                                               FunctionErrorType type,
                                               std::int64_t default_retval,
                                               bool attested_no_side_effects) {
  Status v = validate_retval(type, default_retval);
  if (!v.is_ok()) return v;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (injectables_.count(fn) != 0) {
      return Status::error(ErrorCode::kAlreadyExists,
                           "injectable already registered: " + fn);
    }
    InjectableFunction rec{fn, type, default_retval, attested_no_side_effects};
    injectables_.emplace(fn, rec);
  }
  if (tree_ != nullptr) {
    tree_->mount_text(
        "fail_function/" + fn + "/retval",
        [this, fn] {
          std::lock_guard<std::mutex> lock(mu_);
          return std::to_string(injectables_.at(fn).retval);
        },
        [this, fn](const std::string& v) -> Status {
          std::int64_t x = 0;
          try {
            std::size_t pos = 0;
            x = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
          } catch (...) {
            return Status::error(ErrorCode::kInvalidArgument,
                                 "retval must be an integer: '" + v + "'");
          }
          std::lock_guard<std::mutex> lock(mu_);
          auto& rec = injectables_.at(fn);
          Status chk = validate_retval(rec.error_type, x);
          if (!chk.is_ok()) return chk;
          rec.retval = x;
          return Status::ok();
        });
  }
  return Status::ok();
}

const InjectableFunction* CapabilityRegistry::find_injectable(
    const std::string& fn) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = injectables_.find(fn);
  return it == injectables_.end() ? nullptr : &it->second;
}

std::string CapabilityRegistry::function_inject_target() const {
  std::lock_guard<std::mutex> lock(mu_);
  return function_target_;
}

Status CapabilityRegistry::set_function_inject_target(const std::string& fn) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!fn.empty() && injectables_.count(fn) == 0) {
    return Status::error(ErrorCode::kNotFound,
                         "not an error-injectable function: '" + fn + "'");
  }
  function_target_ = fn;
  return Status::ok();
}

bool CapabilityRegistry::slab_should_fail(FaultContext& ctx,
                                          const SlabAllocInfo& alloc) {
  Capability* cap = find("failslab");
  if (cap == nullptr) return false;
  if (cap->ext_bool("ignore-gfp-wait") && alloc.can_sleep) return false;
  if (cap->ext_bool("cache-filter") && !slab_cache_marked(alloc.cache_name)) {
    return false;
  }
  ctx.size = alloc.size;
  return cap->gate().should_fail(ctx);
}

bool CapabilityRegistry::page_alloc_should_fail(FaultContext& ctx,
                                                const PageAllocInfo& alloc) {
  Capability* cap = find("fail_page_alloc");
  if (cap == nullptr) return false;
  if (cap->ext_bool("ignore-gfp-wait") && alloc.can_sleep) return false;
  if (cap->ext_bool("ignore-gfp-highmem") && alloc.highmem) return false;
  ctx.size = std::int64_t{1} << alloc.order;
  return cap->gate().should_fail(ctx);
}

bool CapabilityRegistry::make_request_should_fail(FaultContext& ctx,
                                                  const MakeRequestInfo& io) {
  Capability* cap = find("fail_make_request");
  if (cap == nullptr) return false;
  if (!io.target_marked) return false;
  ctx.size = io.size;
  return cap->gate().should_fail(ctx);
}

std::optional<std::int64_t> CapabilityRegistry::function_inject(
    const std::string& fn, FaultContext& ctx) {
  if (function_inject_target() != fn) return std::nullopt;
  Capability* cap = find("fail_function");
  const InjectableFunction* rec = find_injectable(fn);
  if (cap == nullptr || rec == nullptr) return std::nullopt;
  ctx.extras = "fn=" + fn + " retval=" + std::to_string(rec->retval);
  if (!cap->gate().should_fail(ctx)) {
    ctx.extras.clear();
    return std::nullopt;
  }
  std::lock_guard<std::mutex> lock(mu_);
  return injectables_.at(fn).retval;
}

std::optional<NvmeCompletion> CapabilityRegistry::nvme_inject(
    const std::string& dev, FaultContext& ctx) {
  Capability* cap = find("nvme/" + dev + "/fault_inject");
  if (cap == nullptr) return std::nullopt;
  NvmeCompletion completion;
  auto status = parse_nvme_status(cap->ext_text("status"));
  completion.status =
      status.is_ok() ? status.value() : NvmeStatus::invalid_opcode;
  completion.dnr = cap->ext_bool("dont_retry");
  ctx.extras = std::string("status=") + nvme_status_log_name(completion.status) +
               " dnr=" + (completion.dnr ? "1" : "0");
  if (!cap->gate().should_fail(ctx)) {
    ctx.extras.clear();
    return std::nullopt;
  }
  return completion;
}

bool CapabilityRegistry::nullb_inject(const std::string& disk,
                                      const std::string& kind,
                                      FaultContext& ctx) {
  Capability* cap = find("nullb/" + disk + "/" + kind);
  if (cap == nullptr) return false;
  ctx.extras = "kind=" + kind;
  bool fired = cap->gate().should_fail(ctx);
  if (!fired) ctx.extras.clear();
  return fired;
}

void CapabilityRegistry::reseed(std::uint64_t seed) {
  seed_ = seed;
  std::lock_guard<std::mutex> lock(mu_);
  for (auto& [name, cap] : caps_) {
    std::uint64_t s = fnv1a64_mix(fnv1a64(name), seed);
    cap->gate().with_attr([&](FaultAttr& a) { a.rng.reseed(s); });
  }
}

}  // namespace faultforge
