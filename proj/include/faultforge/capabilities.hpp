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
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "faultforge/config_tree.hpp"
#include "faultforge/fault_core.hpp"

namespace faultforge {

// Symbolic NVMe generic command status codes. Numeric values are internal;
// only the names are part of the interface.
enum class NvmeStatus {
  success,
  invalid_opcode,
  invalid_field,
  data_transfer_error,
  internal,
  abort_requested,
  write_fault,
  unrecovered_read_error,
};

const char* nvme_status_name(NvmeStatus s);      // config spelling, "invalid-opcode"
const char* nvme_status_log_name(NvmeStatus s);  // log spelling, "INVALID_OPCODE"
Result<NvmeStatus> parse_nvme_status(const std::string& name);

struct NvmeCompletion {
  NvmeStatus status = NvmeStatus::success;
  bool dnr = false;  // don't-retry bit
};

enum class FunctionErrorType {
  etype_null,        // returns NULL on failure
  etype_errno,       // returns -errno on failure
  etype_errno_null,  // returns -errno or NULL on failure
  etype_true,        // returns true (>0) on failure
};

struct InjectableFunction {
  std::string name;
  FunctionErrorType error_type = FunctionErrorType::etype_errno;
  std::int64_t retval = 0;
  // Requirement 2 (no state change before the first error return) cannot be
  // machine-checked; registration records the author's attestation.
  bool attested_no_side_effects = false;
};

Status validate_retval(FunctionErrorType type, std::int64_t retval);

struct SlabAllocInfo {
  std::string cache_name;
  bool can_sleep = true;
  std::int64_t size = 0;
};

struct PageAllocInfo {
  int order = 0;
  bool can_sleep = true;
  bool highmem = false;
};

struct MakeRequestInfo {
  bool target_marked = false;  // device or containing partition make-it-fail
  bool is_write = false;
  std::int64_t size = 0;
};

// A registered injection point: one fault gate plus per-capability
// extension options, all exposed through the config tree.
class Capability {
 public:
  Capability(std::string name, FaultAttr attr, EventLog* log);

  const std::string& name() const { return name_; }
  FaultGate& gate() { return gate_; }
  const FaultGate& gate() const { return gate_; }

  void define_bool_ext(const std::string& key, bool dflt);
  bool ext_bool(const std::string& key) const;
  void set_ext_bool(const std::string& key, bool v);

  void define_text_ext(const std::string& key, std::string dflt);
  std::string ext_text(const std::string& key) const;
  void set_ext_text(const std::string& key, std::string v);

 private:
  std::string name_;
  FaultGate gate_;
  mutable std::mutex ext_mu_;
  std::map<std::string, bool> bool_ext_;
  std::map<std::string, std::string> text_ext_;
};

// Registry of injection points. Registration mounts the full set of generic
// attr nodes under <name>/ in the config tree and applies an optional
// boot-time spec through setup_fault_attr.
class CapabilityRegistry {
 public:
  CapabilityRegistry(ConfigTree* tree, EventLog* log, std::uint64_t seed);

  Result<Capability*> register_capability(
      const std::string& name, const FaultAttr& defaults,
      const std::optional<std::string>& boot_spec = std::nullopt);
  Capability* find(const std::string& name);
  const Capability* find(const std::string& name) const;
  std::vector<std::string> names() const;

  // Standard set: failslab, fail_page_alloc, fail_make_request,
  // fail_function. fail_function rejects a boot spec (no boot option).
  Status register_builtins(
      const std::map<std::string, std::string>& boot_specs = {});

  // Per-device capabilities.
  Result<Capability*> register_nvme_device(const std::string& dev);
  Result<Capability*> register_nullb_fault(const std::string& disk,
                                           const std::string& kind);

  // Slab cache marks (the /sys/kernel/slab/<cache>/failslab analog).
  void declare_slab_cache(const std::string& cache);
  bool slab_cache_marked(const std::string& cache) const;
  void set_slab_cache_marked(const std::string& cache, bool v);
  std::vector<std::string> slab_caches() const;

  // Error-injectable functions under fail_function.
  Status register_injectable(const std::string& fn, FunctionErrorType type,
                             std::int64_t default_retval,
                             bool attested_no_side_effects);
  const InjectableFunction* find_injectable(const std::string& fn) const;
  std::string function_inject_target() const;
  Status set_function_inject_target(const std::string& fn);

  // Hooks. Extension filters reject before the generic gate runs, so a
  // rejected call does not consume an armed fail-nth counter.
  bool slab_should_fail(FaultContext& ctx, const SlabAllocInfo& alloc);
  bool page_alloc_should_fail(FaultContext& ctx, const PageAllocInfo& alloc);
  bool make_request_should_fail(FaultContext& ctx, const MakeRequestInfo& io);
  // Engaged iff the named function is the configured target and the gate
  // fires; the caller bypasses the real operation and returns the value.
  std::optional<std::int64_t> function_inject(const std::string& fn,
                                              FaultContext& ctx);
  // Returns the injected completion when the gate fires.
  std::optional<NvmeCompletion> nvme_inject(const std::string& dev,
                                            FaultContext& ctx);
  bool nullb_inject(const std::string& disk, const std::string& kind,
                    FaultContext& ctx);

  void reseed(std::uint64_t seed);
  std::uint64_t seed() const { return seed_; }

 private:
  void mount_attr_nodes(Capability* cap);
  void mount_bool_ext(Capability* cap, const std::string& key, bool dflt);

  ConfigTree* tree_;
  EventLog* log_;
  std::uint64_t seed_;

  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<Capability>> caps_;
  std::map<std::string, bool> slab_marks_;
  std::map<std::string, InjectableFunction> injectables_;
  std::string function_target_;
};

}  // namespace faultforge
