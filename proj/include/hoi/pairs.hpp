// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hoi/core.hpp"

namespace hoi {

struct FilterParams {
  double threshold = 0.2;
  std::size_t min_keep = 3;
  std::size_t max_keep = 15;
};

/// Indices (into the input detection list) that survive filtering, each
/// subset ordered by confidence descending.
struct FilteredDetections {
  std::vector<std::size_t> humans;
  std::vector<std::size_t> objects;

  /// humans and objects merged, ascending by detection index.
  std::vector<std::size_t> kept() const;
};

/// Confidence filtering with min/max sampling, applied separately to the
/// people and to everything else:
///   - keep entries with confidence >= threshold;
///   - if fewer than min_keep survive, backfill from the rest in
///     confidence order;
///   - truncate to max_keep.
/// Ties are broken by original index.
FilteredDetections filter_detections(const std::vector<Detection>& detections,
                                     const std::string& person_label,
                                     const FilterParams& params = {});

/// Ordered (human, object) detection-index pair.
struct PairKey {
  std::size_t human = 0;
  std::size_t object = 0;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

/// Every (h, o) with h in `humans`, o in `kept`, h != o. Order is human
/// index major, object index minor, so the result has
/// |humans| * (|kept| - 1) entries.
std::vector<PairKey> enumerate_pairs(std::vector<std::size_t> humans, std::vector<std::size_t> kept);

/// Offline-extracted features of one image.
struct FeatureBundle {
  std::string image_id;
  std::vector<Detection> detections;
  std::map<std::size_t, Embedding> crops;
  std::map<PairKey, Embedding> unions;

  std::size_t dim() const;
};

struct PairProposal {
  std::string image_id;
  PairKey key;
  Detection human;
  Detection object;
  Embedding z_h;
  Embedding z_o;
  Embedding z_u;
};

/// Throws MissingEmbedding naming the image and the missing crop or union.
std::vector<PairProposal> attach_features(const std::vector<PairKey>& pairs,
                                          const FeatureBundle& bundle);

/// filter -> enumerate -> attach for one bundle.
std::vector<PairProposal> propose_pairs(const FeatureBundle& bundle, const std::string& person_label,
                                        const FilterParams& params = {});

// Bundle files come in pairs, <image>.json and <image>.dytf:
//
//   { "image_id": "img_0001", "tensor": "img_0001.dytf",
//     "detections": [ { "box": [x1, y1, x2, y2], "label": "person",
//                       "confidence": 0.93, "row": 0 }, ... ],
//     "unions": [ { "human": 0, "object": 2, "row": 5 }, ... ] }
//
// The tensor is rank-2 (rows x d). Rows are normalized on load. A
// detection without a "row" has no crop embedding.

FeatureBundle load_bundle(const std::filesystem::path& json_path);
void save_bundle(const FeatureBundle& bundle, const std::filesystem::path& dir);
/// Loads every *.json bundle in `dir`, ordered by image id.
std::vector<FeatureBundle> load_bundles(const std::filesystem::path& dir);

}  // namespace hoi
