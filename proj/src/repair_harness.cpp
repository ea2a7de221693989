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
#include "faultforge/repair_harness.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "faultforge/rng.hpp"

namespace faultforge {

const char* verdict_outcome_name(VerdictOutcome v) {
  switch (v) {
    case VerdictOutcome::Match: return "Match";
    case VerdictOutcome::RepairedToMatch: return "RepairedToMatch";
    case VerdictOutcome::Mismatch: return "Mismatch";
  }
  return "?";
}

Result<PrefixSelection> PrefixSelection::parse(const std::string& spec) {
  PrefixSelection sel;
  if (spec == "all") {
    sel.kind = Kind::all;
    return sel;
  }
  auto parse_u = [](std::string_view s, std::uint64_t* out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
    return ec == std::errc() && p == s.data() + s.size();
  };
  if (spec.rfind("list:", 0) == 0) {
    sel.kind = Kind::list;
    std::string_view rest{spec};
    rest.remove_prefix(5);
    while (!rest.empty()) {
      std::size_t comma = rest.find(',');
      std::string_view tok = comma == std::string_view::npos ? rest : rest.substr(0, comma);
      std::uint64_t v = 0;
      if (!parse_u(tok, &v)) {
        return Status::error(ErrorCode::kInvalidArgument,
                             "bad prefix list element: " + std::string(tok));
      }
      sel.list.push_back(v);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    return sel;
  }
  if (spec.rfind("sample:", 0) == 0) {
    sel.kind = Kind::sample;
    std::string_view rest{spec};
    rest.remove_prefix(7);
    std::size_t colon = rest.find(':');
    if (colon == std::string_view::npos) {
      return Status::error(ErrorCode::kInvalidArgument,
                           "sample selection needs sample:<k>:<seed>");
    }
    std::uint64_t k = 0, seed = 0;
    if (!parse_u(rest.substr(0, colon), &k) ||
        !parse_u(rest.substr(colon + 1), &seed)) {
      return Status::error(ErrorCode::kInvalidArgument,
                           "bad sample parameters: " + spec);
    }
    sel.sample_k = k;
    sel.seed = seed;
    return sel;
  }
  return Status::error(ErrorCode::kInvalidArgument,
                       "prefix selection must be all, list:..., or sample:k:seed");
}

std::vector<std::size_t> expand_prefixes(const PrefixSelection& sel,
                                         const CommandHistory& history) {
  const std::size_t n = history.records.size();
  std::set<std::size_t> out;
  switch (sel.kind) {
    case PrefixSelection::Kind::all:
      for (std::size_t p = 0; p <= n; ++p) out.insert(p);
      break;
    case PrefixSelection::Kind::list:
      for (std::size_t p : sel.list) out.insert(std::min(p, n));
      break;
    case PrefixSelection::Kind::sample: {
      // Boundary prefixes always run; commit-adjacent cuts (around each
      // flush) are where interrupted repairs get interesting.
      out.insert(0);
      out.insert(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (history.records[i].op == IoRecord::Op::flush) {
          out.insert(i);
          out.insert(i + 1);
        }
      }
      Pcg32 rng(sel.seed);
      std::size_t guard = 0;
      while (out.size() < std::min(sel.sample_k + 2, n + 1) && guard++ < 10000) {
        out.insert(rng.below(static_cast<std::uint32_t>(n + 1)));
      }
      break;
    }
  }
  return {out.begin(), out.end()};
}

Result<RfsckResult> run_campaign(const SimDisk& test_image,
                                 const CheckerPolicy& policy,
                                 const PrefixSelection& prefixes,
                                 bool byte_compare) {
  RfsckResult result;

  // Steps 1-4: reference run with command recording.
  SimDisk reference = test_image;
  {
    BlockDevice dev("rfsck-ref", DeviceMode::normal, std::move(reference));
    BlockIo io(&dev, nullptr);
    HistoryRecorder recorder;
    io.attach_sink(&recorder);
    auto report = run_checker(io, policy);
    if (!report.is_ok()) return report.status();
    io.detach_sink();
    result.reference_report = report.take();
    result.history =
        recorder.take(test_image.digest(), dev.disk().digest());
    reference = std::move(dev.disk());
  }
  result.reference_digest = reference.digest();

  std::vector<std::size_t> plist = expand_prefixes(prefixes, result.history);

  for (std::size_t p : plist) {
    // Steps 5-7: fresh copy, replay the first p commands.
    SimDisk interrupted = test_image;
    Status s = result.history.apply_prefix(interrupted, p);
    if (!s.is_ok()) return s;

    InterruptionVerdict verdict;
    verdict.prefix_length = p;

    bool interrupted_matches =
        byte_compare ? interrupted.digest() == result.reference_digest
                     : compare_images(interrupted, reference).empty();
    if (interrupted_matches) {
      verdict.outcome = VerdictOutcome::Match;
      result.verdicts.push_back(std::move(verdict));
      continue;
    }

    // Steps 8-9: uninterrupted re-check on the interrupted image.
    BlockDevice dev("rfsck-int", DeviceMode::normal, std::move(interrupted));
    BlockIo io(&dev, nullptr);
    auto report = run_checker(io, policy);
    if (!report.is_ok()) return report.status();
    const SimDisk& repaired = dev.disk();

    // Step 10.
    bool repaired_matches =
        byte_compare ? repaired.digest() == result.reference_digest
                     : compare_images(repaired, reference).empty();
    if (repaired_matches) {
      verdict.outcome = VerdictOutcome::RepairedToMatch;
    } else {
      verdict.outcome = VerdictOutcome::Mismatch;
      verdict.diff = compare_images(repaired, reference);
      result.mismatches++;
    }
    result.verdicts.push_back(std::move(verdict));
  }
  return result;
}

}  // namespace faultforge
