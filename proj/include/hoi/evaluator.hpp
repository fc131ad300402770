// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hoi/core.hpp"
#include "hoi/json_io.hpp"

namespace hoi {

struct PredictionTriplet {
  std::string image_id;
  Box human;
  Box object;
  int category = 0;
  double score = 0.0;

  friend bool operator==(const PredictionTriplet&, const PredictionTriplet&) = default;
};

/// Stable sort by score descending, then image id; equal keys keep their
/// insertion order.
void rank_predictions(std::vector<PredictionTriplet>& predictions);

/// Greedy matching for one category. `predictions` must already be ranked.
/// A prediction is a true positive when an unclaimed ground truth in the
/// same image overlaps it with IoU >= iou_threshold on both the human and
/// the object box; among several candidates the one with the largest
/// min(human IoU, object IoU) is claimed.
std::vector<bool> match_category(const std::vector<PredictionTriplet>& predictions,
                                 const std::vector<GroundTruthTriplet>& ground_truth,
                                 double iou_threshold = 0.5);

/// All-point interpolated average precision over ranked TP/FP flags.
/// std::nullopt when n_gt == 0 (the category is not evaluable).
std::optional<double> average_precision(const std::vector<bool>& flags, std::size_t n_gt);

/// AP for every vocabulary category; nullopt for categories without ground
/// truth.
std::vector<std::optional<double>> evaluate_categories(std::vector<PredictionTriplet> predictions,
                                                       const std::vector<GroundTruthTriplet>& ground_truth,
                                                       std::size_t num_categories,
                                                       double iou_threshold = 0.5);

struct Metrics {
  double rare = 0.0;
  double nonrare = 0.0;
  double full = 0.0;
  double afull = 0.0;
  std::size_t rare_count = 0;
  std::size_t nonrare_count = 0;
};

/// Means over the evaluable rare and non-rare categories, the mean over all
/// of them (full) and the mean of the two split means (afull). Throws
/// EmptySplit when either split has no evaluable category.
Metrics aggregate(const std::vector<std::optional<double>>& ap, const std::vector<bool>& rare);

struct ZeroShotMetrics {
  double seen = 0.0;
  double unseen = 0.0;
  double afull = 0.0;
  double full = 0.0;
  std::size_t seen_count = 0;
  std::size_t unseen_count = 0;
};

/// Same split logic with held-out (unseen) categories against the rest.
/// Throws UnknownCategory for ids outside the vocabulary, EmptySplit when a
/// side has no evaluable category.
ZeroShotMetrics split_seen_unseen(const std::vector<std::optional<double>>& ap,
                                  const std::set<int>& held_out);

// predictions.jsonl, one record per line:
//   {"image_id": "...", "human_box": [..], "object_box": [..], "category": 3, "score": 0.41}
// ground truth (JSON):
//   {"annotations": [ {"image_id": "...", "human_box": [..], "object_box": [..], "category": 3}, ... ]}

Json prediction_to_json(const PredictionTriplet& p);
PredictionTriplet prediction_from_json(const Json& j);
std::vector<PredictionTriplet> load_predictions(const std::filesystem::path& jsonl);
std::string predictions_to_jsonl(const std::vector<PredictionTriplet>& predictions);

Json ground_truth_to_json(const std::vector<GroundTruthTriplet>& gt);
std::vector<GroundTruthTriplet> ground_truth_from_json(const Json& j);
std::vector<GroundTruthTriplet> load_ground_truth(const std::filesystem::path& path);

}  // namespace hoi
