// SPDX-License-Identifier: Apache-2.0
#include "hoi/registry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "hoi/tensor_io.hpp"

namespace hoi {

Registry::Registry(std::size_t num_categories, std::size_t capacity)
    : lists_(num_categories), capacity_(capacity) {
  if (capacity == 0) throw Error(ErrorCode::Usage, "registry capacity must be positive");
}

std::size_t Registry::dim() const noexcept {
  for (const auto& l : lists_) {
    if (!l.empty()) return l.front().human.dim();
  }
  return 0;
}

std::size_t Registry::total_entries() const noexcept {
  std::size_t n = 0;
  for (const auto& l : lists_) n += l.size();
  return n;
}

const std::vector<RegistryEntry>& Registry::entries(int category) const {
  if (category < 0 || static_cast<std::size_t>(category) >= lists_.size()) {
    throw Error(ErrorCode::UnknownCategory, "category " + std::to_string(category));
  }
  return lists_[static_cast<std::size_t>(category)];
}

bool Registry::try_add(RegistryEntry entry) {
  if (entry.category < 0 || static_cast<std::size_t>(entry.category) >= lists_.size()) {
    throw Error(ErrorCode::UnknownCategory, "category " + std::to_string(entry.category));
  }
  const std::size_t d = dim();
  const std::size_t ed = entry.human.dim();
  if ((d != 0 && ed != d) || entry.object.dim() != ed || entry.union_.dim() != ed) {
    throw Error(ErrorCode::DimensionMismatch, "registry entry width disagrees");
  }
  auto& list = lists_[static_cast<std::size_t>(entry.category)];
  if (list.size() >= capacity_) return false;
  list.push_back(std::move(entry));
  return true;
}

void Registry::clear(int category) {
  entries(category);
  lists_[static_cast<std::size_t>(category)].clear();
}

namespace {

std::size_t best_match(const FeatureBundle& bundle, const Box& box, double min_iou) {
  std::size_t best = bundle.detections.size();
  double best_iou = -1.0;
  for (std::size_t i = 0; i < bundle.detections.size(); ++i) {
    const double v = iou(bundle.detections[i].box, box);
    if (v > best_iou) {
      best_iou = v;
      best = i;
    }
  }
  if (best_iou < min_iou) return bundle.detections.size();
  return best;
}

}  // namespace

Registry build_labeled(const std::vector<GroundTruthTriplet>& annotations,
                       const std::vector<FeatureBundle>& bundles, std::size_t num_categories,
                       std::size_t capacity, double match_iou) {
  std::unordered_map<std::string, const FeatureBundle*> by_image;
  for (const auto& b : bundles) by_image.emplace(b.image_id, &b);

  Registry reg(num_categories, capacity);
  for (const auto& ann : annotations) {
    if (ann.category < 0 || static_cast<std::size_t>(ann.category) >= num_categories) {
      throw Error(ErrorCode::UnknownCategory, "annotation category " + std::to_string(ann.category));
    }
    if (reg.entries(ann.category).size() >= capacity) continue;

    auto it = by_image.find(ann.image_id);
    if (it == by_image.end()) {
      throw Error(ErrorCode::MissingEmbedding, "image " + ann.image_id + ": no feature bundle");
    }
    const FeatureBundle& b = *it->second;
    const std::size_t h = best_match(b, ann.human, match_iou);
    const std::size_t o = best_match(b, ann.object, match_iou);
    if (h == b.detections.size() || o == b.detections.size() || h == o) {
      throw Error(ErrorCode::MissingEmbedding,
                  "image " + ann.image_id + ": annotation boxes have no matching detections");
    }
    auto proposals = attach_features({PairKey{h, o}}, b);
    auto& p = proposals.front();
    reg.try_add(RegistryEntry{ann.category, std::move(p.z_h), std::move(p.z_o), std::move(p.z_u),
                              EntrySource::Labeled, 1.0, EntryOrigin{ann.image_id, h, o}});
  }
  return reg;
}

ExternalScoreSource::ExternalScoreSource(std::size_t num_categories,
                                         const std::filesystem::path& jsonl)
    : num_categories_(num_categories) {
  std::istringstream lines(read_text_file(jsonl));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ParseError, jsonl.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const int cat = require<int>(j, "category");
    if (cat < 0 || static_cast<std::size_t>(cat) >= num_categories) {
      throw Error(ErrorCode::UnknownCategory, "score file category " + std::to_string(cat));
    }
    const double score = require<double>(j, "score");
    if (!std::isfinite(score)) throw Error(ErrorCode::ParseError, "non-finite score");
    EntryOrigin key{require<std::string>(j, "image_id"), require<std::size_t>(j, "human"),
                    require<std::size_t>(j, "object")};
    scores_[key][cat] = score;
  }
}

std::vector<double> ExternalScoreSource::category_scores(const PairProposal& pair) const {
  std::vector<double> out(num_categories_, -std::numeric_limits<double>::infinity());
  auto it = scores_.find(EntryOrigin{pair.image_id, pair.key.human, pair.key.object});
  if (it != scores_.end()) {
    for (const auto& [cat, s] : it->second) out[static_cast<std::size_t>(cat)] = s;
  }
  return out;
}

Registry build_pseudo(const std::vector<FeatureBundle>& bundles, const PairScoreSource& scores,
                      const PseudoParams& params) {
  if (!(params.threshold >= 0.0 && params.threshold <= 1.0)) {
    throw Error(ErrorCode::Usage, "pseudolabel threshold must lie in [0, 1]");
  }
  const std::size_t num_categories = scores.num_categories();
  std::vector<std::vector<RegistryEntry>> pools(num_categories);

  for (const auto& bundle : bundles) {
    for (auto& pair : propose_pairs(bundle, params.person_label, params.filter)) {
      const auto s = scores.category_scores(pair);
      const auto best = std::max_element(s.begin(), s.end());  // first maximum = lowest id
      if (best == s.end() || !std::isfinite(*best) || *best < params.threshold) continue;
      const int cat = static_cast<int>(best - s.begin());
      pools[static_cast<std::size_t>(cat)].push_back(
          RegistryEntry{cat, std::move(pair.z_h), std::move(pair.z_o), std::move(pair.z_u),
                        EntrySource::Pseudo, *best,
                        EntryOrigin{pair.image_id, pair.key.human, pair.key.object}});
    }
  }

  Registry reg(num_categories, params.capacity);
  for (auto& pool : pools) {
    std::sort(pool.begin(), pool.end(), [](const RegistryEntry& a, const RegistryEntry& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.origin < b.origin;
    });
    for (auto& e : pool) {
      if (!reg.try_add(std::move(e))) break;
    }
  }
  return reg;
}

Registry filter_zero_shot(const Registry& registry, const std::set<int>& held_out) {
  Registry out = registry;
  for (int c : held_out) out.clear(c);
  return out;
}

void save_registry(const Registry& registry, const std::filesystem::path& dir,
                   const Json& run_config, const std::string& stem) {
  const std::size_t d = registry.dim();
  Tensor t = Tensor::matrix(3 * registry.total_entries(), d);
  Json entries = Json::array();
  std::size_t row = 0;
  for (std::size_t c = 0; c < registry.num_categories(); ++c) {
    for (const auto& e : registry.entries(static_cast<int>(c))) {
      entries.push_back(Json{{"category", e.category},
                             {"source", e.source == EntrySource::Labeled ? "labeled" : "pseudo"},
                             {"score", e.score},
                             {"image_id", e.origin.image_id},
                             {"human", e.origin.human},
                             {"object", e.origin.object},
                             {"row", row}});
      for (const Embedding* emb : {&e.human, &e.object, &e.union_}) {
        std::copy(emb->values().begin(), emb->values().end(), t.row(row).begin());
        ++row;
      }
    }
  }
  const std::string tensor_name = stem + ".dytf";
  write_tensor(t, dir / tensor_name);
  write_json(dir / (stem + ".json"), Json{{"format", "hoi-registry"},
                                          {"version", 1},
                                          {"capacity", registry.capacity()},
                                          {"num_categories", registry.num_categories()},
                                          {"d", d},
                                          {"tensor", tensor_name},
                                          {"config", run_config},
                                          {"entries", std::move(entries)}});
}

Registry load_registry(const std::filesystem::path& manifest) {
  const Json doc = read_json(manifest);
  Registry reg(require<std::size_t>(doc, "num_categories"), require<std::size_t>(doc, "capacity"));
  const auto d = require<std::size_t>(doc, "d");
  const Tensor t = read_tensor(manifest.parent_path() / require<std::string>(doc, "tensor"));
  if (t.rank() != 2 || (t.rows() > 0 && t.cols() != d)) {
    throw Error(ErrorCode::DimensionMismatch, "registry tensor width disagrees with manifest");
  }
  auto emb = [&](std::size_t r) {
    if (r >= t.rows()) throw Error(ErrorCode::TruncatedPayload, "registry row out of range");
    auto row = t.row(r);
    return Embedding::from_unit(std::vector<float>(row.begin(), row.end()));
  };
  for (const auto& j : require<Json>(doc, "entries")) {
    const auto source = require<std::string>(j, "source");
    if (source != "labeled" && source != "pseudo") {
      throw Error(ErrorCode::ParseError, "unknown entry source '" + source + "'");
    }
    const auto row = require<std::size_t>(j, "row");
    RegistryEntry e{require<int>(j, "category"),
                    emb(row),
                    emb(row + 1),
                    emb(row + 2),
                    source == "labeled" ? EntrySource::Labeled : EntrySource::Pseudo,
                    require<double>(j, "score"),
                    EntryOrigin{require<std::string>(j, "image_id"), require<std::size_t>(j, "human"),
                                require<std::size_t>(j, "object")}};
    if (!reg.try_add(std::move(e))) {
      throw Error(ErrorCode::BadCount, "registry file exceeds its capacity");
    }
  }
  return reg;
}

}  // namespace hoi
