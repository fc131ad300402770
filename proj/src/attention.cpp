// SPDX-License-Identifier: Apache-2.0
#include "hoi/attention.hpp"

#include <algorithm>
#include <cmath>

namespace hoi {

std::string_view head_name(Head h) noexcept {
  switch (h) {
    case Head::TextFine: return "tf";
    case Head::TextCoarse: return "tc";
    case Head::VisualInstance: return "vi";
    case Head::VisualContext: return "vc";
  }
  return "?";
}

std::optional<Head> head_from_name(std::string_view name) noexcept {
  for (Head h : kAllHeads) {
    if (head_name(h) == name) return h;
  }
  return std::nullopt;
}

namespace {

void append_row(HeadKeys& keys, std::span<const float> row, int cls) {
  keys.rows.insert(keys.rows.end(), row.begin(), row.end());
  keys.row_class.push_back(cls);
  ++keys.class_count[static_cast<std::size_t>(cls)];
}

std::vector<float> concat_normalized(const Embedding& a, const Embedding& b) {
  std::vector<float> cat(a.values().begin(), a.values().end());
  cat.insert(cat.end(), b.values().begin(), b.values().end());
  auto e = normalize(cat);
  return {e.values().begin(), e.values().end()};
}

// Per-class sums of query . key.
struct ClassSums {
  std::vector<double> sum;
  double total = 0.0;
};

ClassSums class_similarity_sums(const HeadInputs& in) {
  if (!in.keys) throw Error(ErrorCode::MissingSignature, "head has no keys");
  const HeadKeys& k = *in.keys;
  if (k.row_count() > 0 && in.query.size() != k.dim) {
    throw Error(ErrorCode::DimensionMismatch, std::string(head_name(in.head)) + ": query width " +
                                                  std::to_string(in.query.size()) + ", keys " +
                                                  std::to_string(k.dim));
  }
  ClassSums s{std::vector<double>(k.num_classes(), 0.0), 0.0};
  for (std::size_t r = 0; r < k.row_count(); ++r) {
    const double sim = dot(in.query, k.row(r));
    s.sum[static_cast<std::size_t>(k.row_class[r])] += sim;
    s.total += sim;
  }
  return s;
}

}  // namespace

HeadKeys make_textual_keys(Head head, const SignatureSet& signatures) {
  if (is_visual(head)) throw Error(ErrorCode::MissingSignature, "not a textual head");
  if (signatures.size() == 0) throw Error(ErrorCode::MissingSignature, "empty signature set");
  HeadKeys keys;
  keys.head = head;
  keys.dim = signatures.dim();
  keys.class_count.assign(signatures.size(), 0);
  const std::size_t per_class = head == Head::TextFine ? signatures.rows_per_category() : 1;
  keys.rows.reserve(signatures.size() * per_class * keys.dim);
  for (const auto& sig : signatures.all()) {
    if (head == Head::TextFine) {
      for (const auto& r : sig.rows) append_row(keys, r.values(), sig.category.id);
    } else {
      append_row(keys, sig.coarse, sig.category.id);
    }
  }
  return keys;
}

HeadKeys make_visual_keys(Head head, const Registry& registry) {
  if (!is_visual(head)) throw Error(ErrorCode::Usage, "not a visual head");
  HeadKeys keys;
  keys.head = head;
  const std::size_t d = registry.dim();
  keys.dim = head == Head::VisualInstance ? 2 * d : d;
  keys.class_count.assign(registry.num_categories(), 0);
  for (std::size_t c = 0; c < registry.num_categories(); ++c) {
    const auto& list = registry.entries(static_cast<int>(c));
    if (list.empty()) continue;
    const int cls = static_cast<int>(c);
    if (head == Head::VisualInstance) {
      for (const auto& e : list) append_row(keys, concat_normalized(e.human, e.object), cls);
    } else {
      std::vector<double> sum(d, 0.0);
      for (const auto& e : list) {
        for (std::size_t k = 0; k < d; ++k) sum[k] += e.union_[k];
      }
      std::vector<float> mean(d);
      for (std::size_t k = 0; k < d; ++k) {
        mean[k] = static_cast<float>(sum[k] / static_cast<double>(list.size()));
      }
      append_row(keys, mean, cls);
    }
  }
  return keys;
}

std::vector<float> head_query(Head head, const PairProposal& proposal) {
  if (head == Head::VisualInstance) return concat_normalized(proposal.z_h, proposal.z_o);
  return {proposal.z_u.values().begin(), proposal.z_u.values().end()};
}

HeadInputs build_textual_inputs(Head head, const PairProposal& proposal,
                                const SignatureSet& signatures) {
  return HeadInputs{head, head_query(head, proposal),
                    std::make_shared<const HeadKeys>(make_textual_keys(head, signatures))};
}

HeadInputs build_visual_inputs(Head head, const PairProposal& proposal, const Registry& registry) {
  return HeadInputs{head, head_query(head, proposal),
                    std::make_shared<const HeadKeys>(make_visual_keys(head, registry))};
}

std::vector<double> head_attention(const HeadInputs& inputs) {
  const ClassSums s = class_similarity_sums(inputs);
  const auto& counts = inputs.keys->class_count;
  std::vector<double> out(counts.size(), kMasked);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] > 0) out[c] = s.sum[c] / static_cast<double>(counts[c]);
  }
  return out;
}

std::vector<double> negative_bias(const HeadInputs& inputs) {
  const ClassSums s = class_similarity_sums(inputs);
  const auto& counts = inputs.keys->class_count;
  const std::size_t total = inputs.keys->row_count();
  std::vector<double> out(counts.size(), 0.0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    const std::size_t others = total - counts[c];
    if (others > 0) out[c] = -(s.total - s.sum[c]) / static_cast<double>(others);
  }
  return out;
}

ScoreMatrix mhom_contributions(const ScoreMatrix& scores, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::Usage, "tau must be positive");
  ScoreMatrix c(scores.rows(), scores.cols(), 0.0);
  for (std::size_t i = 0; i < scores.cols(); ++i) {
    double max = kMasked;
    for (std::size_t h = 0; h < scores.rows(); ++h) {
      if (!is_masked(scores(h, i))) max = std::max(max, scores(h, i));
    }
    if (is_masked(max)) continue;
    // log(1 + sum_k e^{a_k/tau}) = max/tau + log(e^{-max/tau} + sum_k e^{(a_k-max)/tau})
    double shifted_sum = 0.0;
    for (std::size_t h = 0; h < scores.rows(); ++h) {
      if (!is_masked(scores(h, i))) shifted_sum += std::exp((scores(h, i) - max) / tau);
    }
    const double x = -max / tau;
    const double y = std::log(shifted_sum);
    const double log_rest = std::max(x, y) + std::log1p(std::exp(-std::abs(x - y)));
    for (std::size_t h = 0; h < scores.rows(); ++h) {
      if (!is_masked(scores(h, i))) c(h, i) = std::exp((scores(h, i) - max) / tau - log_rest);
    }
  }
  return c;
}

std::vector<double> fuse(const ScoreMatrix& scores, const ScoreMatrix& contributions) {
  if (scores.rows() != contributions.rows() || scores.cols() != contributions.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "score and contribution shapes differ");
  }
  std::vector<double> p(scores.cols(), kMasked);
  for (std::size_t i = 0; i < scores.cols(); ++i) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t h = 0; h < scores.rows(); ++h) {
      if (is_masked(scores(h, i))) continue;
      acc += scores(h, i) * (1.0 + contributions(h, i));
      ++n;
    }
    if (n > 0) p[i] = acc / static_cast<double>(n);
  }
  return p;
}

Scorer::Scorer(const SignatureSet& signatures, const Registry* registry, ScoringConfig config)
    : config_(config), num_classes_(signatures.size()) {
  if (!(config_.tau > 0.0)) throw Error(ErrorCode::Usage, "tau must be positive");
  if (registry && registry->num_categories() != num_classes_) {
    throw Error(ErrorCode::DimensionMismatch,
                "registry has " + std::to_string(registry->num_categories()) +
                    " categories, signatures " + std::to_string(num_classes_));
  }
  if (registry && registry->dim() != 0 && registry->dim() != signatures.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "registry and signature widths differ");
  }
  const Registry empty(num_classes_, 1);
  for (Head h : kAllHeads) {
    if (!config_.enabled(h)) continue;
    HeadKeys k = is_visual(h) ? make_visual_keys(h, registry ? *registry : empty)
                              : make_textual_keys(h, signatures);
    keys_.push_back(std::make_shared<const HeadKeys>(std::move(k)));
  }
  if (keys_.empty()) throw Error(ErrorCode::Usage, "no scoring head enabled");
}

ScorePanel Scorer::panel(const PairProposal& proposal) const {
  ScorePanel out;
  out.attention = ScoreMatrix(keys_.size(), num_classes_);
  for (std::size_t n = 0; n < keys_.size(); ++n) {
    const Head h = keys_[n]->head;
    out.heads.push_back(h);
    const HeadInputs in{h, head_query(h, proposal), keys_[n]};
    const auto a = head_attention(in);
    std::vector<double> bias;
    if (is_visual(h) && config_.bias) bias = negative_bias(in);
    for (std::size_t i = 0; i < num_classes_; ++i) {
      out.attention(n, i) = (bias.empty() || is_masked(a[i])) ? a[i] : a[i] + config_.lambda_neg * bias[i];
    }
  }
  out.contributions = config_.mhom ? mhom_contributions(out.attention, config_.tau)
                                   : ScoreMatrix(keys_.size(), num_classes_, 0.0);
  out.fused = fuse(out.attention, out.contributions);
  return out;
}

std::vector<RankedScore> Scorer::rank(const PairProposal& proposal) const {
  const auto p = panel(proposal).fused;
  const double conf = std::pow(proposal.human.confidence * proposal.object.confidence, config_.gamma);
  std::vector<RankedScore> out;
  out.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!is_masked(p[i])) out.push_back({static_cast<int>(i), p[i] * conf});
  }
  std::sort(out.begin(), out.end(), [](const RankedScore& a, const RankedScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.category < b.category;
  });
  return out;
}

std::vector<RankedScore> score_pair(const PairProposal& proposal, const SignatureSet& signatures,
                                    const Registry* registry, const ScoringConfig& config) {
  return Scorer(signatures, registry, config).rank(proposal);
}

namespace {

ScoringConfig textual_only(double tau) {
  ScoringConfig c;
  c.tau = tau;
  c.heads = {true, true, false, false};
  return c;
}

}  // namespace

TextualScoreSource::TextualScoreSource(const SignatureSet& signatures, double tau)
    : scorer_(signatures, nullptr, textual_only(tau)) {}

std::vector<double> TextualScoreSource::category_scores(const PairProposal& pair) const {
  return scorer_.panel(pair).fused;
}

}  // namespace hoi
