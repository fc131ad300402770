// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hoi/core.hpp"
#include "hoi/pairs.hpp"
#include "hoi/registry.hpp"
#include "hoi/signature.hpp"

namespace hoi {

/// The four scoring heads:
///   TextFine        every signature row is a key, query z_u
///   TextCoarse      the signature mean is the key, query z_u
///   VisualInstance  registry human||object exemplars, query z_h||z_o
///   VisualContext   per-category mean of registry unions, query z_u
enum class Head { TextFine = 0, TextCoarse = 1, VisualInstance = 2, VisualContext = 3 };

inline constexpr std::array<Head, 4> kAllHeads = {Head::TextFine, Head::TextCoarse,
                                                  Head::VisualInstance, Head::VisualContext};

std::string_view head_name(Head h) noexcept;  // "tf", "tc", "vi", "vc"
std::optional<Head> head_from_name(std::string_view name) noexcept;
inline bool is_visual(Head h) noexcept {
  return h == Head::VisualInstance || h == Head::VisualContext;
}

/// Score of a class a head cannot see (no key rows).
inline constexpr double kMasked = -std::numeric_limits<double>::infinity();
inline bool is_masked(double v) noexcept { return v == kMasked; }

/// Key rows of one head with the class of each row. `class_count[c]` is the
/// number of rows for class c; zero means the class is masked for the head.
struct HeadKeys {
  Head head = Head::TextFine;
  std::size_t dim = 0;
  std::vector<float> rows;  // row-major, row_class.size() x dim
  std::vector<int> row_class;
  std::vector<std::size_t> class_count;

  std::size_t row_count() const noexcept { return row_class.size(); }
  std::size_t num_classes() const noexcept { return class_count.size(); }
  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(rows).subspan(r * dim, dim);
  }
};

struct HeadInputs {
  Head head = Head::TextFine;
  std::vector<float> query;
  std::shared_ptr<const HeadKeys> keys;
};

/// Keys that do not depend on the query. Throws MissingSignature for a
/// visual head or an empty set.
HeadKeys make_textual_keys(Head head, const SignatureSet& signatures);
/// Categories without exemplars get no rows and are masked.
HeadKeys make_visual_keys(Head head, const Registry& registry);
/// z_u for TF/TC/VC, normalize(z_h || z_o) for VI.
std::vector<float> head_query(Head head, const PairProposal& proposal);

HeadInputs build_textual_inputs(Head head, const PairProposal& proposal,
                                const SignatureSet& signatures);
HeadInputs build_visual_inputs(Head head, const PairProposal& proposal, const Registry& registry);

/// Per-class mean similarity of the query to that class's key rows;
/// kMasked for classes without rows. Throws DimensionMismatch.
std::vector<double> head_attention(const HeadInputs& inputs);

/// Negative mean similarity of the query to the rows of all *other*
/// classes; 0 when no other rows exist.
std::vector<double> negative_bias(const HeadInputs& inputs);

/// Dense N x I matrix of doubles (heads x classes).
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return v_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> v_;
};

/// Orchestrator weights: for each column i and unmasked head h,
///   C[h,i] = exp(a[h,i]/tau) / (1 + sum_k exp(a[k,i]/tau)),
/// summing over unmasked heads only. Evaluated in log space around the
/// column maximum. Masked entries get 0.
ScoreMatrix mhom_contributions(const ScoreMatrix& scores, double tau);

/// p[i] = mean over unmasked heads h of A[h,i] * (1 + C[h,i]); kMasked when
/// every head is masked for class i.
std::vector<double> fuse(const ScoreMatrix& scores, const ScoreMatrix& contributions);

struct ScoringConfig {
  double tau = 0.1;
  double gamma = 1.0;
  double lambda_neg = 1.0;
  std::array<bool, 4> heads = {true, true, true, true};  // indexed by Head
  bool bias = true;
  bool mhom = true;

  bool enabled(Head h) const noexcept { return heads[static_cast<std::size_t>(h)]; }
};

struct ScorePanel {
  std::vector<Head> heads;     // enabled heads, in kAllHeads order
  ScoreMatrix attention;       // head outputs, bias already added
  ScoreMatrix contributions;   // zeros when the orchestrator is disabled
  std::vector<double> fused;
};

struct RankedScore {
  int category = 0;
  double score = 0.0;

  friend bool operator==(const RankedScore&, const RankedScore&) = default;
};

/// Holds the query-independent keys of every enabled head so a stream of
/// proposals can be scored without rebuilding them. Immutable once built.
class Scorer {
 public:
  /// `registry` may be null: visual heads then mask every class.
  Scorer(const SignatureSet& signatures, const Registry* registry, ScoringConfig config);

  const ScoringConfig& config() const noexcept { return config_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  ScorePanel panel(const PairProposal& proposal) const;
  /// Fused scores times (conf_h * conf_o)^gamma, sorted descending with ties
  /// by category id. Classes every head masks are left out.
  std::vector<RankedScore> rank(const PairProposal& proposal) const;

 private:
  ScoringConfig config_;
  std::size_t num_classes_ = 0;
  std::vector<std::shared_ptr<const HeadKeys>> keys_;  // one per enabled head
};

std::vector<RankedScore> score_pair(const PairProposal& proposal, const SignatureSet& signatures,
                                    const Registry* registry, const ScoringConfig& config);

/// Textual-head (TF + TC) fused scores, used to pseudolabel unlabeled pairs.
class TextualScoreSource : public PairScoreSource {
 public:
  TextualScoreSource(const SignatureSet& signatures, double tau = 0.1);

  std::size_t num_categories() const override { return scorer_.num_classes(); }
  std::vector<double> category_scores(const PairProposal& pair) const override;

 private:
  Scorer scorer_;
};

}  // namespace hoi
