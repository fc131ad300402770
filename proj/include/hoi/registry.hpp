// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "hoi/core.hpp"
#include "hoi/json_io.hpp"
#include "hoi/pairs.hpp"

namespace hoi {

enum class EntrySource { Labeled, Pseudo };

struct EntryOrigin {
  std::string image_id;
  std::size_t human = 0;
  std::size_t object = 0;

  friend auto operator<=>(const EntryOrigin&, const EntryOrigin&) = default;
};

/// One visual exemplar of an interaction.
struct RegistryEntry {
  int category = 0;
  Embedding human;
  Embedding object;
  Embedding union_;
  EntrySource source = EntrySource::Labeled;
  double score = 1.0;  // admission score; 1.0 for labeled entries
  EntryOrigin origin;

  friend bool operator==(const RegistryEntry&, const RegistryEntry&) = default;
};

/// Per-category exemplar lists, each holding at most `capacity` entries.
class Registry {
 public:
  Registry() = default;
  Registry(std::size_t num_categories, std::size_t capacity);

  std::size_t num_categories() const noexcept { return lists_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t dim() const noexcept;
  std::size_t total_entries() const noexcept;

  const std::vector<RegistryEntry>& entries(int category) const;

  /// Appends unless the category is already full; returns whether the
  /// entry was stored. Throws UnknownCategory and DimensionMismatch.
  bool try_add(RegistryEntry entry);
  void clear(int category);

  friend bool operator==(const Registry&, const Registry&) = default;

 private:
  std::vector<std::vector<RegistryEntry>> lists_;
  std::size_t capacity_ = 0;
};

/// Registry from annotated images: annotations are taken in the given order
/// and each category keeps its first `capacity` entries. Annotation boxes
/// are matched to the bundle detection with the highest IoU (at least
/// `match_iou`); throws MissingEmbedding when a box has no match or the
/// matched crops/union are absent.
Registry build_labeled(const std::vector<GroundTruthTriplet>& annotations,
                       const std::vector<FeatureBundle>& bundles, std::size_t num_categories,
                       std::size_t capacity, double match_iou = 0.5);

/// Supplies per-category candidate scores for a pair. Categories that are
/// not candidates carry -infinity.
class PairScoreSource {
 public:
  virtual ~PairScoreSource() = default;
  virtual std::size_t num_categories() const = 0;
  virtual std::vector<double> category_scores(const PairProposal& pair) const = 0;
};

/// Scores from an external file, one JSON object per line:
///   {"image_id": "...", "human": 0, "object": 2, "category": 5, "score": 0.97}
/// Pairs or categories absent from the file are not candidates.
class ExternalScoreSource : public PairScoreSource {
 public:
  ExternalScoreSource(std::size_t num_categories, const std::filesystem::path& jsonl);

  std::size_t num_categories() const override { return num_categories_; }
  std::vector<double> category_scores(const PairProposal& pair) const override;

 private:
  std::size_t num_categories_;
  std::map<EntryOrigin, std::map<int, double>> scores_;
};

struct PseudoParams {
  double threshold = 0.9;
  std::size_t capacity = 8;
  FilterParams filter;
  std::string person_label = "person";
};

/// Label-free registry: every proposed pair is scored, its argmax category
/// (lowest id on ties) is admitted when the score reaches the threshold,
/// and each category keeps its `capacity` highest-scoring admissions
/// (ties by image id, then pair key).
Registry build_pseudo(const std::vector<FeatureBundle>& bundles, const PairScoreSource& scores,
                      const PseudoParams& params);

/// Empties the lists of held-out categories. Throws UnknownCategory.
Registry filter_zero_shot(const Registry& registry, const std::set<int>& held_out);

// Registry files: <stem>.json holds capacity, category count, width and one
// record per entry ({category, source, score, image_id, human, object,
// row}); <stem>.dytf holds three rows per entry (human, object, union).
// Embeddings are stored as-is, so a save/load cycle is bit-exact.
void save_registry(const Registry& registry, const std::filesystem::path& dir,
                   const Json& run_config = Json::object(), const std::string& stem = "registry");
Registry load_registry(const std::filesystem::path& manifest);

}  // namespace hoi
