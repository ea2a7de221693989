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
#include "faultforge/config_tree.hpp"

#include <charconv>
#include <mutex>

namespace faultforge {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_i64_strict(const std::string& s, std::int64_t* out) {
  std::string t = trim(s);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), *out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

bool parse_u64_strict(const std::string& s, std::uint64_t* out) {
  std::string t = trim(s);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), *out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

}  // namespace

bool ConfigTree::parse_bool(const std::string& value, bool* out) {
  std::string t = trim(value);
  if (t == "Y" || t == "y" || t == "1") {
    *out = true;
    return true;
  }
  if (t == "N" || t == "n" || t == "0") {
    *out = false;
    return true;
  }
  return false;
}

const ConfigNode* ConfigTree::find(const std::string& path) const {
  auto it = nodes_.find(path);
  return it == nodes_.end() ? nullptr : &it->second;
}

Status ConfigTree::write(const std::string& path, const std::string& value,
                         Privilege priv) {
  if (priv != Privilege::admin) {
    return Status::error(ErrorCode::kPermissionDenied,
                         "writing " + path + " requires admin privilege");
  }
  std::shared_lock lock(mu_);
  const ConfigNode* node = find(path);
  if (node == nullptr) {
    return Status::error(ErrorCode::kNotFound, "no such config path: " + path);
  }
  switch (node->kind) {
    case NodeKind::integer:
    case NodeKind::long_int: {
      std::int64_t v;
      if (!parse_i64_strict(value, &v)) {
        return Status::error(ErrorCode::kInvalidArgument,
                             path + ": not an integer: '" + value + "'");
      }
      if (node->bounds &&
          (v < node->bounds->first || v > node->bounds->second)) {
        return Status::error(
            ErrorCode::kOutOfRange,
            path + ": value " + std::to_string(v) + " outside [" +
                std::to_string(node->bounds->first) + "," +
                std::to_string(node->bounds->second) + "]");
      }
      return node->write(std::to_string(v));
    }
    case NodeKind::boolean: {
      bool b;
      if (!parse_bool(value, &b)) {
        return Status::error(ErrorCode::kInvalidArgument,
                             path + ": expected Y/N/0/1, got '" + value + "'");
      }
      return node->write(render_bool(b));
    }
    case NodeKind::text:
    case NodeKind::action:
      return node->write(value);
  }
  return Status::error(ErrorCode::kInvalidArgument, "unreachable");
}

Result<std::string> ConfigTree::read(const std::string& path) const {
  std::shared_lock lock(mu_);
  const ConfigNode* node = find(path);
  if (node == nullptr) {
    return Status::error(ErrorCode::kNotFound, "no such config path: " + path);
  }
  if (!node->read) {
    return Status::error(ErrorCode::kInvalidArgument, path + " is write-only");
  }
  return node->read();
}

bool ConfigTree::exists(const std::string& path) const {
  std::shared_lock lock(mu_);
  return find(path) != nullptr;
}

void ConfigTree::mount_int(const std::string& path, NodeKind kind,
                           std::int64_t min, std::int64_t max,
                           std::function<std::int64_t()> get,
                           std::function<void(std::int64_t)> set) {
  ConfigNode node;
  node.kind = kind;
  node.bounds = {{min, max}};
  node.read = [get = std::move(get)] { return std::to_string(get()); };
  node.write = [set = std::move(set)](const std::string& v) {
    std::int64_t x = 0;
    parse_i64_strict(v, &x);
    set(x);
    return Status::ok();
  };
  mount_node(path, std::move(node));
}

void ConfigTree::mount_u64(const std::string& path,
                           std::function<std::uint64_t()> get,
                           std::function<void(std::uint64_t)> set) {
  ConfigNode node;
  node.kind = NodeKind::text;  // rendered as decimal, parsed strictly
  node.read = [get = std::move(get)] { return std::to_string(get()); };
  node.write = [set = std::move(set), path](const std::string& v) {
    std::uint64_t x = 0;
    if (!parse_u64_strict(v, &x)) {
      return Status::error(ErrorCode::kInvalidArgument,
                           path + ": not an unsigned integer: '" + v + "'");
    }
    set(x);
    return Status::ok();
  };
  mount_node(path, std::move(node));
}

void ConfigTree::mount_bool(const std::string& path, std::function<bool()> get,
                            std::function<void(bool)> set) {
  ConfigNode node;
  node.kind = NodeKind::boolean;
  node.read = [get = std::move(get)] { return render_bool(get()); };
  node.write = [set = std::move(set)](const std::string& v) {
    set(v == "Y");
    return Status::ok();
  };
  mount_node(path, std::move(node));
}

void ConfigTree::mount_text(const std::string& path,
                            std::function<std::string()> get,
                            std::function<Status(const std::string&)> set) {
  ConfigNode node;
  node.kind = NodeKind::text;
  node.read = std::move(get);
  node.write = std::move(set);
  mount_node(path, std::move(node));
}

void ConfigTree::mount_node(const std::string& path, ConfigNode node) {
  std::unique_lock lock(mu_);
  nodes_[path] = std::move(node);
}

void ConfigTree::unmount_prefix(const std::string& prefix) {
  std::unique_lock lock(mu_);
  auto it = nodes_.lower_bound(prefix);
  while (it != nodes_.end() && it->first.rfind(prefix, 0) == 0) {
    it = nodes_.erase(it);
  }
}

std::vector<std::string> ConfigTree::list(const std::string& prefix) const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [path, _] : nodes_) {
    if (path.rfind(prefix, 0) == 0) out.push_back(path);
  }
  return out;
}

std::map<std::string, std::string> ConfigTree::snapshot(
    const std::string& prefix) const {
  std::shared_lock lock(mu_);
  std::map<std::string, std::string> out;
  for (const auto& [path, node] : nodes_) {
    if (path.rfind(prefix, 0) != 0) continue;
    if (node.kind == NodeKind::action || !node.read) continue;
    out[path] = node.read();
  }
  return out;
}

Status ConfigTree::restore(const std::map<std::string, std::string>& snap) {
  for (const auto& [path, value] : snap) {
    Status s = write(path, value, Privilege::admin);
    if (!s.is_ok()) return s;
  }
  return Status::ok();
}

}  // namespace faultforge
