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
#include <string>
#include <vector>

#include "faultforge/block_device.hpp"
#include "faultforge/layout.hpp"

namespace faultforge {

// Read-only parse of an image, no journal replay, no repairs. Falls back to
// the backup superblock for geometry so a damaged-primary image is still
// comparable.
struct ParsedStore {
  Superblock sb;
  std::vector<std::uint8_t> bitmap;
  std::vector<TableEntry> entries;
  std::map<std::string, std::vector<std::uint8_t>> objects;
};

Result<ParsedStore> parse_store(const SimDisk& disk);

// Logical image diff: object name sets, object bytes, geometry. Journal
// bytes, sequence numbers and free-block residue are deliberately outside
// the comparison; a byte-level compare is a separate mode.
struct ImageDiff {
  bool total_loss_a = false;
  bool total_loss_b = false;
  bool geometry_differ = false;
  std::vector<std::string> missing_in_a;  // in b, not in a
  std::vector<std::string> missing_in_b;  // in a, not in b
  std::vector<std::string> bytes_differ;

  bool empty() const {
    return !total_loss_a && !total_loss_b && !geometry_differ &&
           missing_in_a.empty() && missing_in_b.empty() && bytes_differ.empty();
  }
  std::string summary() const;
};

ImageDiff compare_images(const SimDisk& a, const SimDisk& b);

// Full invariant audit; returns human-readable violations, empty when the
// image satisfies every store-image invariant (superblock integrity, bitmap
// exactly covering metadata plus live extents, per-object checksums,
// non-overlapping in-range extents, journal empty or holding one valid
// committed transaction).
std::vector<std::string> audit_image_invariants(const SimDisk& disk);

}  // namespace faultforge
