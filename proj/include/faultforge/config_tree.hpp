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
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "faultforge/status.hpp"

namespace faultforge {

// The debugfs/procfs analog: a flat virtual tree of slash-separated paths
// holding text-rendered values. Paths drop the /sys/kernel/debug prefix;
// capabilities mount at their plain names (failslab/probability, ...).
// Writes need the admin privilege, standing in for root.

enum class Privilege { user, admin };

enum class NodeKind { integer, long_int, boolean, text, action };

struct ConfigNode {
  NodeKind kind = NodeKind::text;
  std::optional<std::pair<std::int64_t, std::int64_t>> bounds;
  std::function<std::string()> read;
  // For numeric/bool kinds the tree validates and canonicalizes before
  // calling; text/action nodes get the raw value and do their own checks.
  std::function<Status(const std::string&)> write;
};

class ConfigTree {
 public:
  Status write(const std::string& path, const std::string& value,
               Privilege priv = Privilege::admin);
  Result<std::string> read(const std::string& path) const;
  bool exists(const std::string& path) const;

  // Mount helpers. Integer nodes validate bounds atomically: a rejected
  // write leaves the previous value observable.
  void mount_int(const std::string& path, NodeKind kind, std::int64_t min,
                 std::int64_t max, std::function<std::int64_t()> get,
                 std::function<void(std::int64_t)> set);
  void mount_u64(const std::string& path, std::function<std::uint64_t()> get,
                 std::function<void(std::uint64_t)> set);
  void mount_bool(const std::string& path, std::function<bool()> get,
                  std::function<void(bool)> set);
  void mount_text(const std::string& path, std::function<std::string()> get,
                  std::function<Status(const std::string&)> set);
  void mount_node(const std::string& path, ConfigNode node);
  void unmount_prefix(const std::string& prefix);

  std::vector<std::string> list(const std::string& prefix = "") const;

  // Full tree render, used by failcmd's restore guarantee and scenario
  // cleanup. Restore writes every snapshotted value back.
  std::map<std::string, std::string> snapshot(const std::string& prefix = "") const;
  Status restore(const std::map<std::string, std::string>& snap);

  static bool parse_bool(const std::string& value, bool* out);
  static std::string render_bool(bool v) { return v ? "Y" : "N"; }

 private:
  const ConfigNode* find(const std::string& path) const;

  mutable std::shared_mutex mu_;
  std::map<std::string, ConfigNode> nodes_;
};

}  // namespace faultforge
