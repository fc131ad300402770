// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hoi/core.hpp"
#include "hoi/json_io.hpp"
#include "hoi/tensor_io.hpp"

namespace hoi {

/// Prompt text with exactly one `{verb}` and one `{object}` placeholder.
class PromptTemplate {
 public:
  /// Throws PlaceholderMissing unless each placeholder occurs exactly once.
  explicit PromptTemplate(std::string text);

  const std::string& text() const noexcept { return text_; }
  std::string fill(const std::string& verb, const std::string& object) const;

 private:
  std::string text_;
};

/// Substitutes the category's verb and object into every template, in
/// order. Throws BadCount when templates.size() != expected_count.
std::vector<std::string> fill_templates(const std::vector<PromptTemplate>& templates,
                                        const InteractionCategory& category,
                                        std::size_t expected_count);

/// The textual description of one interaction: M unit rows of embedded
/// descriptions and their plain (not renormalized) arithmetic mean.
struct InteractionSignature {
  InteractionCategory category;
  std::vector<Embedding> rows;
  std::vector<float> coarse;
  std::vector<std::string> descriptions;

  std::size_t dim() const noexcept { return rows.empty() ? 0 : rows.front().dim(); }
};

/// Normalizes each row of `embeddings` (M x d) and averages them.
/// Throws BadCount when the row count differs from `expected_m` or the
/// description count differs from the row count, ZeroNorm on a null row.
InteractionSignature assemble_signature(const InteractionCategory& category,
                                        const Tensor& embeddings,
                                        std::vector<std::string> descriptions,
                                        std::size_t expected_m);

/// Signatures for a whole vocabulary, indexed by category id.
class SignatureSet {
 public:
  SignatureSet() = default;
  /// Throws MissingCategory unless signatures[i].category.id == i for all i,
  /// DimensionMismatch on mixed widths.
  explicit SignatureSet(std::vector<InteractionSignature> signatures);

  std::size_t size() const noexcept { return signatures_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t rows_per_category() const noexcept { return m_; }
  const InteractionSignature& at(int id) const;
  const std::vector<InteractionSignature>& all() const noexcept { return signatures_; }

  Vocabulary vocabulary(const std::string& person_label = "person") const;

 private:
  std::vector<InteractionSignature> signatures_;
  std::size_t dim_ = 0;
  std::size_t m_ = 0;
};

// Signature manifest (JSON):
//
//   { "format": "hoi-signatures", "version": 1, "M": 50, "d": 512,
//     "tensor": "signatures.dytf",
//     "categories": [ { "id": 0, "verb": "ride", "object": "horse",
//                       "rare": false, "descriptions": [ ... ],
//                       "offset": 0, "length": 50 }, ... ] }
//
// `tensor` is resolved relative to the manifest and holds a rank-2
// (rows x d) DYTF tensor; `offset` and `length` count rows of it.

/// Throws MissingCategory when an id in 0..I-1 (or in `vocabulary`, when
/// given) has no block, DimensionMismatch when the tensor width is not the
/// manifest's d, BadCount when a block is not M rows.
SignatureSet load_signature_set(const std::filesystem::path& manifest,
                                const Vocabulary* vocabulary = nullptr);

/// Writes `<stem>.json` and `<stem>.dytf` into `dir`.
void save_signature_set(const SignatureSet& set, const std::filesystem::path& dir,
                        const Json& run_config = Json::object(),
                        const std::string& stem = "signatures");

}  // namespace hoi
