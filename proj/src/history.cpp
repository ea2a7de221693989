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
#include "faultforge/history.hpp"

#include <cstring>
#include <fstream>

#include "faultforge/layout.hpp"

namespace faultforge {

namespace {
const char kHistoryMagic[8] = {'F', 'F', 'I', 'O', 'L', 'O', 'G', '1'};
constexpr std::uint32_t kHistoryVersion = 1;
}  // namespace

std::size_t CommandHistory::write_count() const {
  std::size_t n = 0;
  for (const auto& r : records) {
    if (r.op == IoRecord::Op::write) n++;
  }
  return n;
}

Status CommandHistory::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return Status::error(ErrorCode::kIoError, "cannot write history: " + path);
  }
  std::vector<std::uint8_t> hdr(40, 0);
  std::memcpy(hdr.data(), kHistoryMagic, 8);
  put_u32(hdr, 8, kHistoryVersion);
  put_u32(hdr, 12, block_size);
  put_u64(hdr, 16, base_digest);
  put_u64(hdr, 24, final_digest);
  put_u64(hdr, 32, records.size());
  out.write(reinterpret_cast<const char*>(hdr.data()),
            static_cast<std::streamsize>(hdr.size()));
  for (const auto& r : records) {
    std::vector<std::uint8_t> rec(21, 0);
    put_u64(rec, 0, r.seq);
    rec[8] = static_cast<std::uint8_t>(r.op);
    put_u64(rec, 9, r.lba);
    put_u32(rec, 17, r.len);
    out.write(reinterpret_cast<const char*>(rec.data()),
              static_cast<std::streamsize>(rec.size()));
    out.write(reinterpret_cast<const char*>(r.payload.data()),
              static_cast<std::streamsize>(r.payload.size()));
  }
  if (!out) {
    return Status::error(ErrorCode::kIoError, "short write: " + path);
  }
  return Status::ok();
}

Result<CommandHistory> CommandHistory::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    return Status::error(ErrorCode::kIoError, "cannot open history: " + path);
  }
  auto read_exact = [&](std::uint8_t* buf, std::size_t n) {
    in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in.gcount()) == n;
  };
  std::vector<std::uint8_t> hdr(40);
  if (!read_exact(hdr.data(), hdr.size())) {
    return Status::error(ErrorCode::kCorruption, "truncated history header");
  }
  if (std::memcmp(hdr.data(), kHistoryMagic, 8) != 0) {
    return Status::error(ErrorCode::kCorruption, "bad history magic");
  }
  if (get_u32(hdr, 8) != kHistoryVersion) {
    return Status::error(ErrorCode::kCorruption, "unsupported history version");
  }
  CommandHistory h;
  h.block_size = get_u32(hdr, 12);
  h.base_digest = get_u64(hdr, 16);
  h.final_digest = get_u64(hdr, 24);
  std::uint64_t count = get_u64(hdr, 32);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::vector<std::uint8_t> rec(21);
    if (!read_exact(rec.data(), rec.size())) {
      return Status::error(ErrorCode::kCorruption, "truncated history record");
    }
    IoRecord r;
    r.seq = get_u64(rec, 0);
    if (rec[8] > 1) {
      return Status::error(ErrorCode::kCorruption, "bad history op");
    }
    r.op = static_cast<IoRecord::Op>(rec[8]);
    r.lba = get_u64(rec, 9);
    r.len = get_u32(rec, 17);
    r.payload.resize(r.len);
    if (r.len > 0 && !read_exact(r.payload.data(), r.len)) {
      return Status::error(ErrorCode::kCorruption, "truncated history payload");
    }
    h.records.push_back(std::move(r));
  }
  return h;
}

Status CommandHistory::apply_prefix(SimDisk& disk, std::size_t prefix) const {
  if (prefix > records.size()) {
    return Status::error(ErrorCode::kOutOfRange, "prefix beyond history end");
  }
  for (std::size_t i = 0; i < prefix; ++i) {
    const IoRecord& r = records[i];
    if (r.op != IoRecord::Op::write) continue;
    if (r.len % block_size != 0 ||
        r.lba + r.len / block_size > disk.block_count()) {
      return Status::error(ErrorCode::kOutOfRange,
                           "replay does not fit the image geometry");
    }
    std::memcpy(disk.bytes_mut().data() + r.lba * block_size, r.payload.data(),
                r.len);
  }
  return Status::ok();
}

void HistoryRecorder::on_write(std::uint64_t lba,
                               std::span<const std::uint8_t> data) {
  IoRecord r;
  r.seq = next_seq_++;
  r.op = IoRecord::Op::write;
  r.lba = lba;
  r.len = static_cast<std::uint32_t>(data.size());
  r.payload.assign(data.begin(), data.end());
  records_.push_back(std::move(r));
}

void HistoryRecorder::on_flush() {
  IoRecord r;
  r.seq = next_seq_++;
  r.op = IoRecord::Op::flush;
  records_.push_back(std::move(r));
}

CommandHistory HistoryRecorder::take(std::uint64_t base_digest,
                                     std::uint64_t final_digest) {
  CommandHistory h;
  h.base_digest = base_digest;
  h.final_digest = final_digest;
  h.records = std::move(records_);
  records_.clear();
  next_seq_ = 0;
  return h;
}

}  // namespace faultforge
