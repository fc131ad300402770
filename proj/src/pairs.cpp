// SPDX-License-Identifier: Apache-2.0
#include "hoi/pairs.hpp"

#include <algorithm>
#include <numeric>

#include "hoi/json_io.hpp"
#include "hoi/tensor_io.hpp"

namespace hoi {

namespace {

std::vector<std::size_t> sample_subset(const std::vector<Detection>& detections,
                                       std::vector<std::size_t> indices,
                                       const FilterParams& p) {
  std::stable_sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].confidence > detections[b].confidence;
  });
  // Sorted descending, so the above-threshold entries form a prefix.
  std::size_t passing = 0;
  while (passing < indices.size() && detections[indices[passing]].confidence >= p.threshold) {
    ++passing;
  }
  const std::size_t keep = std::min(std::max(passing, std::min(p.min_keep, indices.size())), p.max_keep);
  indices.resize(keep);
  return indices;
}

}  // namespace

std::vector<std::size_t> FilteredDetections::kept() const {
  std::vector<std::size_t> out = humans;
  out.insert(out.end(), objects.begin(), objects.end());
  std::sort(out.begin(), out.end());
  return out;
}

FilteredDetections filter_detections(const std::vector<Detection>& detections,
                                     const std::string& person_label, const FilterParams& params) {
  if (!(params.threshold >= 0.0 && params.threshold <= 1.0)) {
    throw Error(ErrorCode::Usage, "detection threshold must lie in [0, 1]");
  }
  if (params.min_keep < 1 || params.min_keep > params.max_keep) {
    throw Error(ErrorCode::Usage, "need 1 <= min_keep <= max_keep");
  }
  std::vector<std::size_t> humans;
  std::vector<std::size_t> others;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    (detections[i].label == person_label ? humans : others).push_back(i);
  }
  return FilteredDetections{sample_subset(detections, std::move(humans), params),
                            sample_subset(detections, std::move(others), params)};
}

std::vector<PairKey> enumerate_pairs(std::vector<std::size_t> humans, std::vector<std::size_t> kept) {
  std::sort(humans.begin(), humans.end());
  std::sort(kept.begin(), kept.end());
  std::vector<PairKey> out;
  out.reserve(humans.size() * (kept.empty() ? 0 : kept.size() - 1));
  for (auto h : humans) {
    for (auto o : kept) {
      if (h != o) out.push_back({h, o});
    }
  }
  return out;
}

std::size_t FeatureBundle::dim() const {
  if (!crops.empty()) return crops.begin()->second.dim();
  if (!unions.empty()) return unions.begin()->second.dim();
  return 0;
}

std::vector<PairProposal> attach_features(const std::vector<PairKey>& pairs,
                                          const FeatureBundle& bundle) {
  auto crop = [&](std::size_t idx) -> const Embedding& {
    auto it = bundle.crops.find(idx);
    if (it == bundle.crops.end()) {
      throw Error(ErrorCode::MissingEmbedding,
                  "image " + bundle.image_id + ": no crop for detection " + std::to_string(idx));
    }
    return it->second;
  };
  std::vector<PairProposal> out;
  out.reserve(pairs.size());
  for (const auto& key : pairs) {
    if (key.human >= bundle.detections.size() || key.object >= bundle.detections.size()) {
      throw Error(ErrorCode::MissingEmbedding,
                  "image " + bundle.image_id + ": pair (" + std::to_string(key.human) + ", " +
                      std::to_string(key.object) + ") references an unknown detection");
    }
    auto u = bundle.unions.find(key);
    if (u == bundle.unions.end()) {
      throw Error(ErrorCode::MissingEmbedding,
                  "image " + bundle.image_id + ": no union for pair (" + std::to_string(key.human) +
                      ", " + std::to_string(key.object) + ")");
    }
    out.push_back(PairProposal{bundle.image_id, key, bundle.detections[key.human],
                               bundle.detections[key.object], crop(key.human), crop(key.object),
                               u->second});
  }
  return out;
}

std::vector<PairProposal> propose_pairs(const FeatureBundle& bundle, const std::string& person_label,
                                        const FilterParams& params) {
  const auto filtered = filter_detections(bundle.detections, person_label, params);
  return attach_features(enumerate_pairs(filtered.humans, filtered.kept()), bundle);
}

FeatureBundle load_bundle(const std::filesystem::path& json_path) {
  const Json doc = read_json(json_path);
  FeatureBundle b;
  b.image_id = require<std::string>(doc, "image_id");
  const Tensor t = read_tensor(json_path.parent_path() / require<std::string>(doc, "tensor"));
  if (t.rank() != 2) throw Error(ErrorCode::DimensionMismatch, b.image_id + ": tensor must be rank 2");

  auto row = [&](std::size_t r) {
    if (r >= t.rows()) {
      throw Error(ErrorCode::MissingEmbedding,
                  "image " + b.image_id + ": row " + std::to_string(r) + " out of range");
    }
    return normalize(t.row(r));
  };

  for (const auto& dj : require<Json>(doc, "detections")) {
    b.detections.push_back(detection_from_json(dj));
    if (dj.contains("row") && !dj.at("row").is_null()) {
      b.crops.emplace(b.detections.size() - 1, row(dj.at("row").get<std::size_t>()));
    }
  }
  for (const auto& uj : require<Json>(doc, "unions")) {
    PairKey key{require<std::size_t>(uj, "human"), require<std::size_t>(uj, "object")};
    if (key.human >= b.detections.size() || key.object >= b.detections.size()) {
      throw Error(ErrorCode::ParseError, b.image_id + ": union references an unknown detection");
    }
    b.unions.emplace(key, row(require<std::size_t>(uj, "row")));
  }
  return b;
}

void save_bundle(const FeatureBundle& bundle, const std::filesystem::path& dir) {
  const std::size_t d = bundle.dim();
  Tensor t = Tensor::matrix(bundle.crops.size() + bundle.unions.size(), d);
  std::size_t row = 0;
  auto put = [&](const Embedding& e) {
    if (e.dim() != d) throw Error(ErrorCode::DimensionMismatch, bundle.image_id + ": mixed widths");
    std::copy(e.values().begin(), e.values().end(), t.row(row).begin());
    return row++;
  };

  Json dets = Json::array();
  for (std::size_t i = 0; i < bundle.detections.size(); ++i) {
    Json dj = detection_to_json(bundle.detections[i]);
    if (auto it = bundle.crops.find(i); it != bundle.crops.end()) dj["row"] = put(it->second);
    dets.push_back(std::move(dj));
  }
  Json unions = Json::array();
  for (const auto& [key, e] : bundle.unions) {
    unions.push_back(Json{{"human", key.human}, {"object", key.object}, {"row", put(e)}});
  }
  const std::string tensor_name = bundle.image_id + ".dytf";
  write_tensor(t, dir / tensor_name);
  write_json(dir / (bundle.image_id + ".json"), Json{{"image_id", bundle.image_id},
                                                     {"tensor", tensor_name},
                                                     {"detections", std::move(dets)},
                                                     {"unions", std::move(unions)}});
}

std::vector<FeatureBundle> load_bundles(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::IoError, "not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::vector<FeatureBundle> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_bundle(f));
  std::sort(out.begin(), out.end(),
            [](const FeatureBundle& a, const FeatureBundle& b) { return a.image_id < b.image_id; });
  return out;
}

}  // namespace hoi
