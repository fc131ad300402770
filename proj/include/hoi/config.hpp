// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>

#include "hoi/attention.hpp"
#include "hoi/json_io.hpp"
#include "hoi/pairs.hpp"

namespace hoi {

/// Every tunable of a run. Defaults: tau 0.1, J 8, M 50, detection
/// threshold 0.2 with 3..15 instances per subset, pseudolabel threshold 0.9.
struct RunConfig {
  ScoringConfig scoring;
  FilterParams detection;
  std::size_t registry_size = 8;   // J
  std::size_t signature_rows = 50; // M
  double pseudo_threshold = 0.9;
  double match_iou = 0.5;
  std::set<int> held_out;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// Throws Usage on out-of-range values.
void validate(const RunConfig& config);

// File layout, every key optional:
//   { "tau": 0.1, "gamma": 1.0, "lambda_neg": 1.0, "J": 8, "M": 50,
//     "detection": {"threshold": 0.2, "min_keep": 3, "max_keep": 15},
//     "heads": {"enable": {"tf": true, "tc": true, "vi": true, "vc": true}},
//     "bias": {"enable": true}, "mhom": {"enable": true},
//     "pseudo": {"threshold": 0.9}, "match_iou": 0.5,
//     "held_out": [3, 7], "seed": 0, "jobs": 1 }
Json config_to_json(const RunConfig& config);
/// Overlays the keys present in `j` onto `base`.
RunConfig merge_config(RunConfig base, const Json& j);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace hoi
