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
#include "faultforge/session.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace faultforge {

using nlohmann::ordered_json;

Session::Session(SessionOptions opts) : seed_(opts.seed) {
  caps_ = std::make_unique<CapabilityRegistry>(&tree_, &log_, seed_);
  devices_ = std::make_unique<DeviceRegistry>(&tree_, caps_.get());
  alloc_ = std::make_unique<SimAllocator>(caps_.get());

  init_status_ = caps_->register_builtins(opts.boot_specs);
  if (!init_status_.is_ok()) return;

  sites_.register_module("blockio");
  store_sites_ = register_store_sites(sites_);

  // The store's mount is the one built-in error-injectable function.
  init_status_ = caps_->register_injectable(
      Store::kMountInjectable, FunctionErrorType::etype_errno, -12,
      /*attested_no_side_effects=*/true);
  if (!init_status_.is_ok()) return;

  for (const char* cache : {"io_buf", "txn_record", "kmalloc-256"}) {
    caps_->declare_slab_cache(cache);
  }
}

void Session::reseed(std::uint64_t seed) {
  seed_ = seed;
  caps_->reseed(seed);
}

TaskState& Session::create_task(std::uint64_t id) {
  TaskState& t = tasks_.create(id);
  if (known_tasks_.count(id) == 0) {
    known_tasks_[id] = true;
    const std::string base = "tasks/" + std::to_string(id) + "/";
    TaskState* tp = &t;
    tree_.mount_bool(base + "make-it-fail",
                     [tp] { return tp->make_it_fail(); },
                     [tp](bool v) { tp->set_make_it_fail(v); });
    tree_.mount_int(base + "fail-nth", NodeKind::integer, 0, INT64_MAX,
                    [tp] { return tp->fail_nth(); },
                    [tp](std::int64_t v) { tp->arm_fail_nth(v); });
  }
  return t;
}

void Session::destroy_task(std::uint64_t id) {
  tree_.unmount_prefix("tasks/" + std::to_string(id) + "/");
  known_tasks_.erase(id);
  tasks_.remove(id);
}

std::uint64_t Session::next_task_id() { return next_task_id_++; }

Result<BlockDevice*> Session::open_device(const std::string& name,
                                          const std::string& path,
                                          DeviceMode mode,
                                          std::uint64_t create_blocks) {
  SimDisk disk;
  if (std::filesystem::exists(path)) {
    auto loaded = SimDisk::load(path);
    if (!loaded.is_ok()) return loaded.status();
    disk = loaded.take();
  } else if (create_blocks > 0) {
    disk = SimDisk(create_blocks);
  } else {
    return Status::error(ErrorCode::kNotFound, "no such image: " + path);
  }

  if (BlockDevice* existing = devices_->find(name)) {
    if (existing->mode() != mode) {
      return Status::error(ErrorCode::kInvalidArgument,
                           name + " already registered with another mode");
    }
    existing->disk() = std::move(disk);
    device_paths_[name] = path;
    return existing;
  }

  auto added = devices_->add(std::make_unique<BlockDevice>(name, mode, std::move(disk)));
  if (added.is_ok()) {
    device_paths_[name] = path;
    device_modes_[name] = mode;
  }
  return added;
}

Status Session::sync_device(const std::string& name) {
  BlockDevice* dev = devices_->find(name);
  if (dev == nullptr) {
    return Status::error(ErrorCode::kNotFound, "unknown device: " + name);
  }
  auto it = device_paths_.find(name);
  if (it == device_paths_.end()) return Status::ok();  // memory-only device
  return dev->disk().save(it->second);
}

std::string Session::device_path(const std::string& name) const {
  auto it = device_paths_.find(name);
  return it == device_paths_.end() ? "" : it->second;
}

Status Session::save_state(const std::string& path) const {
  ordered_json j;
  j["version"] = 1;
  j["seed"] = seed_;
  j["next_logical_time"] = log_.now();
  j["next_task_id"] = next_task_id_;

  ordered_json caps = ordered_json::object();
  for (const std::string& name : caps_->names()) {
    const Capability* cap = caps_->find(name);
    FaultAttr a = cap->gate().snapshot();
    ordered_json c;
    c["probability"] = a.probability;
    c["interval"] = a.interval;
    c["times"] = a.times;
    c["space"] = a.space;
    c["verbose"] = a.verbose;
    c["task_filter"] = a.task_filter;
    c["require_start"] = a.require_start;
    c["require_end"] = a.require_end;
    c["reject_start"] = a.reject_start;
    c["reject_end"] = a.reject_end;
    c["stacktrace_depth"] = a.stacktrace_depth;
    c["count"] = a.count;
    c["rng_state"] = a.rng.state();
    for (const char* key :
         {"ignore-gfp-wait", "cache-filter", "ignore-gfp-highmem", "dont_retry"}) {
      if (tree_.exists(name + "/" + key)) c["ext"][key] = cap->ext_bool(key);
    }
    if (tree_.exists(name + "/status")) c["status"] = cap->ext_text("status");
    caps[name] = std::move(c);
  }
  j["capabilities"] = std::move(caps);

  ordered_json tasks = ordered_json::object();
  for (std::uint64_t id : tasks_.ids()) {
    TaskState* t = const_cast<TaskRegistry&>(tasks_).find(id);
    tasks[std::to_string(id)] = {{"make_it_fail", t->make_it_fail()},
                                 {"fail_nth", t->fail_nth()}};
  }
  j["tasks"] = std::move(tasks);

  ordered_json caches = ordered_json::object();
  for (const std::string& c : caps_->slab_caches()) {
    caches[c] = caps_->slab_cache_marked(c);
  }
  j["slab_caches"] = std::move(caches);
  j["fail_function_target"] = caps_->function_inject_target();
  if (const InjectableFunction* fn = caps_->find_injectable(Store::kMountInjectable)) {
    j["mount_retval"] = fn->retval;
  }

  ordered_json devs = ordered_json::object();
  for (const std::string& name : devices_->names()) {
    BlockDevice* dev = const_cast<DeviceRegistry&>(*devices_).find(name);
    ordered_json d;
    d["mode"] = static_cast<int>(dev->mode());
    d["path"] = device_path(name);
    d["make_it_fail"] = dev->make_it_fail();
    d["failed"] = dev->failed();
    ordered_json parts = ordered_json::array();
    for (const auto& p : dev->partitions()) {
      parts.push_back({{"name", p.name},
                       {"start", p.start},
                       {"blocks", p.blocks},
                       {"make_it_fail", p.make_it_fail}});
    }
    d["partitions"] = std::move(parts);
    devs[name] = std::move(d);
  }
  j["devices"] = std::move(devs);

  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    return Status::error(ErrorCode::kIoError, "cannot write state: " + path);
  }
  out << j.dump(2) << "\n";
  return Status::ok();
}

Status Session::load_state(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    return Status::error(ErrorCode::kNotFound, "no state file: " + path);
  }
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    return Status::error(ErrorCode::kCorruption,
                         std::string("bad state file: ") + e.what());
  }

  seed_ = j.value("seed", seed_);
  log_.set_next_time(j.value("next_logical_time", std::uint64_t{1}));
  next_task_id_ = j.value("next_task_id", std::uint64_t{100});

  if (j.contains("devices")) {
    for (auto& [name, d] : j["devices"].items()) {
      auto mode = static_cast<DeviceMode>(d.value("mode", 0));
      std::string img = d.value("path", "");
      if (!img.empty() && std::filesystem::exists(img) &&
          devices_->find(name) == nullptr) {
        auto loaded = SimDisk::load(img);
        if (!loaded.is_ok()) continue;
        auto dev = std::make_unique<BlockDevice>(name, mode, loaded.take());
        for (const auto& p : d.value("partitions", ordered_json::array())) {
          dev->add_partition(p.value("name", ""), p.value("start", std::uint64_t{0}),
                             p.value("blocks", std::uint64_t{0}));
        }
        auto added = devices_->add(std::move(dev));
        if (added.is_ok()) {
          device_paths_[name] = img;
          device_modes_[name] = mode;
          added.value()->set_make_it_fail(d.value("make_it_fail", false));
          added.value()->set_failed(d.value("failed", false));
          auto parts = d.value("partitions", ordered_json::array());
          for (std::size_t i = 0; i < parts.size() &&
                                  i < added.value()->partitions().size();
               ++i) {
            added.value()->partitions()[i].make_it_fail =
                parts[i].value("make_it_fail", false);
          }
        }
      }
    }
  }

  if (j.contains("capabilities")) {
    for (auto& [name, c] : j["capabilities"].items()) {
      Capability* cap = caps_->find(name);
      if (cap == nullptr) continue;  // device-bound caps come from devices above
      cap->gate().with_attr([&](FaultAttr& a) {
        a.probability = c.value("probability", 0);
        a.interval = c.value("interval", std::int64_t{1});
        a.times = c.value("times", std::int64_t{-1});
        a.space = c.value("space", std::int64_t{0});
        a.verbose = c.value("verbose", 2);
        a.task_filter = c.value("task_filter", false);
        a.require_start = c.value("require_start", std::uint64_t{0});
        a.require_end = c.value("require_end", std::uint64_t{0});
        a.reject_start = c.value("reject_start", std::uint64_t{0});
        a.reject_end = c.value("reject_end", std::uint64_t{0});
        a.stacktrace_depth = c.value("stacktrace_depth", std::int64_t{32});
        a.count = c.value("count", std::uint64_t{0});
        a.rng.set_state(c.value("rng_state", std::uint64_t{0}));
      });
      if (c.contains("ext")) {
        for (auto& [key, v] : c["ext"].items()) {
          cap->set_ext_bool(key, v.get<bool>());
        }
      }
      if (c.contains("status")) cap->set_ext_text("status", c["status"]);
    }
  }

  if (j.contains("tasks")) {
    for (auto& [id_str, t] : j["tasks"].items()) {
      TaskState& task = create_task(std::stoull(id_str));
      task.set_make_it_fail(t.value("make_it_fail", false));
      task.arm_fail_nth(t.value("fail_nth", std::int64_t{0}));
    }
  }

  if (j.contains("slab_caches")) {
    for (auto& [cache, marked] : j["slab_caches"].items()) {
      caps_->declare_slab_cache(cache);
      caps_->set_slab_cache_marked(cache, marked.get<bool>());
    }
  }
  if (j.contains("fail_function_target")) {
    (void)caps_->set_function_inject_target(j["fail_function_target"]);
  }
  if (j.contains("mount_retval")) {
    (void)tree_.write("fail_function/" + std::string(Store::kMountInjectable) +
                          "/retval",
                      std::to_string(j["mount_retval"].get<std::int64_t>()));
  }
  return Status::ok();
}

Status Session::flush_log(const std::string& path) const {
  std::string rendered = log_.render();
  if (rendered.empty()) return Status::ok();
  std::ofstream out(path, std::ios::app);
  if (!out) {
    return Status::error(ErrorCode::kIoError, "cannot append log: " + path);
  }
  out << rendered;
  return Status::ok();
}

}  // namespace faultforge
