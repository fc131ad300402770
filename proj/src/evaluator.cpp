// SPDX-License-Identifier: Apache-2.0
#include "hoi/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "hoi/tensor_io.hpp"

namespace hoi {

void rank_predictions(std::vector<PredictionTriplet>& predictions) {
  std::stable_sort(predictions.begin(), predictions.end(),
                   [](const PredictionTriplet& a, const PredictionTriplet& b) {
                     if (a.score != b.score) return a.score > b.score;
                     return a.image_id < b.image_id;
                   });
}

std::vector<bool> match_category(const std::vector<PredictionTriplet>& predictions,
                                 const std::vector<GroundTruthTriplet>& ground_truth,
                                 double iou_threshold) {
  std::map<std::string, std::vector<std::size_t>> gt_by_image;
  for (std::size_t g = 0; g < ground_truth.size(); ++g) {
    gt_by_image[ground_truth[g].image_id].push_back(g);
  }
  std::vector<bool> claimed(ground_truth.size(), false);
  std::vector<bool> flags(predictions.size(), false);

  for (std::size_t p = 0; p < predictions.size(); ++p) {
    const auto& pred = predictions[p];
    auto it = gt_by_image.find(pred.image_id);
    if (it == gt_by_image.end()) continue;
    std::size_t best = ground_truth.size();
    double best_overlap = -1.0;
    for (auto g : it->second) {
      if (claimed[g]) continue;
      const double overlap =
          std::min(iou(pred.human, ground_truth[g].human), iou(pred.object, ground_truth[g].object));
      if (overlap >= iou_threshold && overlap > best_overlap) {
        best_overlap = overlap;
        best = g;
      }
    }
    if (best < ground_truth.size()) {
      claimed[best] = true;
      flags[p] = true;
    }
  }
  return flags;
}

std::optional<double> average_precision(const std::vector<bool>& flags, std::size_t n_gt) {
  if (n_gt == 0) return std::nullopt;
  // Precision/recall at every rank, bracketed by the (0, 0) and (1, 0)
  // sentinels, then the precision envelope integrated over recall steps.
  const std::size_t n = flags.size();
  std::vector<double> recall(n + 2, 0.0);
  std::vector<double> precision(n + 2, 0.0);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (flags[k]) ++tp;
    recall[k + 1] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[k + 1] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  recall[n + 1] = 1.0;
  for (std::size_t k = n + 1; k-- > 0;) precision[k] = std::max(precision[k], precision[k + 1]);
  double ap = 0.0;
  for (std::size_t k = 1; k < n + 2; ++k) {
    if (recall[k] != recall[k - 1]) ap += (recall[k] - recall[k - 1]) * precision[k];
  }
  return ap;
}

std::vector<std::optional<double>> evaluate_categories(std::vector<PredictionTriplet> predictions,
                                                       const std::vector<GroundTruthTriplet>& ground_truth,
                                                       std::size_t num_categories,
                                                       double iou_threshold) {
  std::vector<std::vector<PredictionTriplet>> preds(num_categories);
  std::vector<std::vector<GroundTruthTriplet>> gts(num_categories);
  for (auto& p : predictions) {
    if (p.category < 0 || static_cast<std::size_t>(p.category) >= num_categories) {
      throw Error(ErrorCode::UnknownCategory, "prediction category " + std::to_string(p.category));
    }
    preds[static_cast<std::size_t>(p.category)].push_back(std::move(p));
  }
  for (const auto& g : ground_truth) {
    if (g.category < 0 || static_cast<std::size_t>(g.category) >= num_categories) {
      throw Error(ErrorCode::UnknownCategory, "ground-truth category " + std::to_string(g.category));
    }
    gts[static_cast<std::size_t>(g.category)].push_back(g);
  }
  std::vector<std::optional<double>> ap(num_categories);
  for (std::size_t c = 0; c < num_categories; ++c) {
    if (gts[c].empty()) continue;
    rank_predictions(preds[c]);
    ap[c] = average_precision(match_category(preds[c], gts[c], iou_threshold), gts[c].size());
  }
  return ap;
}

namespace {

struct SplitMean {
  double mean = 0.0;
  std::size_t count = 0;
};

SplitMean mean_of(const std::vector<std::optional<double>>& ap, auto&& in_split) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t c = 0; c < ap.size(); ++c) {
    if (ap[c] && in_split(c)) {
      sum += *ap[c];
      ++n;
    }
  }
  return {n ? sum / static_cast<double>(n) : 0.0, n};
}

}  // namespace

Metrics aggregate(const std::vector<std::optional<double>>& ap, const std::vector<bool>& rare) {
  if (rare.size() != ap.size()) {
    throw Error(ErrorCode::DimensionMismatch, "rare flags and AP list differ in length");
  }
  const auto r = mean_of(ap, [&](std::size_t c) { return rare[c]; });
  const auto nr = mean_of(ap, [&](std::size_t c) { return !rare[c]; });
  const auto all = mean_of(ap, [](std::size_t) { return true; });
  if (r.count == 0) throw Error(ErrorCode::EmptySplit, "no evaluable rare category");
  if (nr.count == 0) throw Error(ErrorCode::EmptySplit, "no evaluable non-rare category");
  return Metrics{r.mean, nr.mean, all.mean, (r.mean + nr.mean) / 2.0, r.count, nr.count};
}

ZeroShotMetrics split_seen_unseen(const std::vector<std::optional<double>>& ap,
                                  const std::set<int>& held_out) {
  for (int c : held_out) {
    if (c < 0 || static_cast<std::size_t>(c) >= ap.size()) {
      throw Error(ErrorCode::UnknownCategory, "held-out category " + std::to_string(c));
    }
  }
  auto unseen_pred = [&](std::size_t c) { return held_out.count(static_cast<int>(c)) > 0; };
  const auto unseen = mean_of(ap, unseen_pred);
  const auto seen = mean_of(ap, [&](std::size_t c) { return !unseen_pred(c); });
  const auto all = mean_of(ap, [](std::size_t) { return true; });
  if (unseen.count == 0) throw Error(ErrorCode::EmptySplit, "no evaluable unseen category");
  if (seen.count == 0) throw Error(ErrorCode::EmptySplit, "no evaluable seen category");
  return ZeroShotMetrics{seen.mean,  unseen.mean, (seen.mean + unseen.mean) / 2.0,
                         all.mean,   seen.count,  unseen.count};
}

Json prediction_to_json(const PredictionTriplet& p) {
  return Json{{"image_id", p.image_id},
              {"human_box", box_to_json(p.human)},
              {"object_box", box_to_json(p.object)},
              {"category", p.category},
              {"score", p.score}};
}

PredictionTriplet prediction_from_json(const Json& j) {
  PredictionTriplet p{require<std::string>(j, "image_id"), box_from_json(require<Json>(j, "human_box")),
                      box_from_json(require<Json>(j, "object_box")), require<int>(j, "category"),
                      require<double>(j, "score")};
  if (!std::isfinite(p.score)) throw Error(ErrorCode::ParseError, "non-finite prediction score");
  return p;
}

std::vector<PredictionTriplet> load_predictions(const std::filesystem::path& jsonl) {
  std::istringstream lines(read_text_file(jsonl));
  std::vector<PredictionTriplet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(prediction_from_json(Json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, jsonl.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string predictions_to_jsonl(const std::vector<PredictionTriplet>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    out += prediction_to_json(p).dump();
    out += '\n';
  }
  return out;
}

Json ground_truth_to_json(const std::vector<GroundTruthTriplet>& gt) {
  Json list = Json::array();
  for (const auto& g : gt) {
    list.push_back(Json{{"image_id", g.image_id},
                        {"human_box", box_to_json(g.human)},
                        {"object_box", box_to_json(g.object)},
                        {"category", g.category}});
  }
  return Json{{"annotations", std::move(list)}};
}

std::vector<GroundTruthTriplet> ground_truth_from_json(const Json& j) {
  std::vector<GroundTruthTriplet> out;
  for (const auto& a : require<Json>(j, "annotations")) {
    out.push_back({require<std::string>(a, "image_id"), box_from_json(require<Json>(a, "human_box")),
                   box_from_json(require<Json>(a, "object_box")), require<int>(a, "category")});
  }
  return out;
}

std::vector<GroundTruthTriplet> load_ground_truth(const std::filesystem::path& path) {
  return ground_truth_from_json(read_json(path));
}

}  // namespace hoi
