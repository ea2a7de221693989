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

#include <map>
#include <memory>
#include <string>

#include "faultforge/allocator.hpp"
#include "faultforge/block_device.hpp"
#include "faultforge/callsite.hpp"
#include "faultforge/capabilities.hpp"
#include "faultforge/config_tree.hpp"
#include "faultforge/current.hpp"
#include "faultforge/store.hpp"

namespace faultforge {

struct SessionOptions {
  std::uint64_t seed = 1;
  // Boot-time specs, "<interval>,<probability>,<space>,<times>" per
  // capability, applied through setup_fault_attr at registration.
  std::map<std::string, std::string> boot_specs;
};

// One framework instance: the config tree, task and capability registries,
// devices, event log and the simulated allocator, wired together. The CLI
// persists the session state between invocations so configuration writes
// compose across commands the way debugfs writes do.
class Session {
 public:
  explicit Session(SessionOptions opts = {});

  Status init_status() const { return init_status_; }

  ConfigTree& cfg() { return tree_; }
  EventLog& log() { return log_; }
  TaskRegistry& tasks() { return tasks_; }
  CapabilityRegistry& caps() { return *caps_; }
  DeviceRegistry& devices() { return *devices_; }
  CallSiteRegistry& sites() { return sites_; }
  SimAllocator& allocator() { return *alloc_; }
  const StoreSites& store_sites() const { return store_sites_; }

  std::uint64_t seed() const { return seed_; }
  void reseed(std::uint64_t seed);

  // Creates the task and mounts its proc-style nodes
  // (tasks/<id>/make-it-fail, tasks/<id>/fail-nth). destroy_task drops the
  // nodes again, the way a /proc entry vanishes with its process.
  TaskState& create_task(std::uint64_t id);
  void destroy_task(std::uint64_t id);
  std::uint64_t next_task_id();

  // Binds a named device to a backing image file. An existing file is
  // loaded; otherwise a zeroed image of create_blocks is made. Re-opening a
  // registered name rebinds its bytes from the file.
  Result<BlockDevice*> open_device(const std::string& name,
                                   const std::string& path, DeviceMode mode,
                                   std::uint64_t create_blocks = 0);
  Status sync_device(const std::string& name);
  std::string device_path(const std::string& name) const;

  Status save_state(const std::string& path) const;
  Status load_state(const std::string& path);

  // Appends this session's events to the log file.
  Status flush_log(const std::string& path) const;

 private:
  Status init_status_;
  std::uint64_t seed_;
  ConfigTree tree_;
  EventLog log_;
  TaskRegistry tasks_;
  CallSiteRegistry sites_;
  std::unique_ptr<CapabilityRegistry> caps_;
  std::unique_ptr<DeviceRegistry> devices_;
  std::unique_ptr<SimAllocator> alloc_;
  StoreSites store_sites_;
  std::map<std::uint64_t, bool> known_tasks_;
  std::map<std::string, std::string> device_paths_;
  std::map<std::string, DeviceMode> device_modes_;
  std::uint64_t next_task_id_ = 100;
};

}  // namespace faultforge
