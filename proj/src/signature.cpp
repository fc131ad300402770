// SPDX-License-Identifier: Apache-2.0
#include "hoi/signature.hpp"

#include <map>

#include "hoi/json_io.hpp"

namespace hoi {

namespace {

constexpr std::string_view kVerb = "{verb}";
constexpr std::string_view kObject = "{object}";

std::size_t count_occurrences(const std::string& text, std::string_view token) {
  std::size_t n = 0;
  for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos + 1)) {
    ++n;
  }
  return n;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  for (auto token : {kVerb, kObject}) {
    const auto n = count_occurrences(text_, token);
    if (n != 1) {
      throw Error(ErrorCode::PlaceholderMissing,
                  "template \"" + text_ + "\" has " + std::to_string(n) + " " +
                      std::string(token) + " placeholders, expected 1");
    }
  }
}

std::string PromptTemplate::fill(const std::string& verb, const std::string& object) const {
  // Substitute at the original positions so a verb containing "{object}"
  // cannot be rewritten by the second replacement.
  const auto vpos = text_.find(kVerb);
  const auto opos = text_.find(kObject);
  std::string out = text_;
  if (vpos > opos) {
    out.replace(vpos, kVerb.size(), verb);
    out.replace(opos, kObject.size(), object);
  } else {
    out.replace(opos, kObject.size(), object);
    out.replace(vpos, kVerb.size(), verb);
  }
  return out;
}

std::vector<std::string> fill_templates(const std::vector<PromptTemplate>& templates,
                                        const InteractionCategory& category,
                                        std::size_t expected_count) {
  if (templates.size() != expected_count) {
    throw Error(ErrorCode::BadCount, "expected " + std::to_string(expected_count) +
                                         " templates, got " + std::to_string(templates.size()));
  }
  if (category.verb.empty() || category.object.empty()) {
    throw Error(ErrorCode::InvalidVocabulary, "category verb and object must be nonempty");
  }
  std::vector<std::string> out;
  out.reserve(templates.size());
  for (const auto& t : templates) out.push_back(t.fill(category.verb, category.object));
  return out;
}

InteractionSignature assemble_signature(const InteractionCategory& category,
                                        const Tensor& embeddings,
                                        std::vector<std::string> descriptions,
                                        std::size_t expected_m) {
  const std::size_t m = embeddings.rows();
  const std::size_t d = embeddings.cols();
  if (m != expected_m) {
    throw Error(ErrorCode::BadCount, "category " + std::to_string(category.id) + ": expected " +
                                         std::to_string(expected_m) + " rows, got " +
                                         std::to_string(m));
  }
  if (descriptions.size() != m) {
    throw Error(ErrorCode::BadCount, "category " + std::to_string(category.id) + ": " +
                                         std::to_string(descriptions.size()) +
                                         " descriptions for " + std::to_string(m) + " rows");
  }
  if (d == 0) throw Error(ErrorCode::DimensionMismatch, "zero-width signature rows");

  InteractionSignature sig;
  sig.category = category;
  sig.descriptions = std::move(descriptions);
  sig.rows.reserve(m);
  std::vector<double> sum(d, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    sig.rows.push_back(normalize(embeddings.row(r)));
    const auto v = sig.rows.back().values();
    for (std::size_t k = 0; k < d; ++k) sum[k] += v[k];
  }
  sig.coarse.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    sig.coarse[k] = static_cast<float>(sum[k] / static_cast<double>(m));
  }
  return sig;
}

SignatureSet::SignatureSet(std::vector<InteractionSignature> signatures)
    : signatures_(std::move(signatures)) {
  for (std::size_t i = 0; i < signatures_.size(); ++i) {
    const auto& s = signatures_[i];
    if (s.category.id != static_cast<int>(i)) {
      throw Error(ErrorCode::MissingCategory,
                  "no signature for category " + std::to_string(i));
    }
    if (s.rows.empty()) throw Error(ErrorCode::BadCount, "empty signature");
    if (i == 0) {
      dim_ = s.dim();
      m_ = s.rows.size();
    }
    if (s.rows.size() != m_) {
      throw Error(ErrorCode::BadCount, "category " + std::to_string(i) + " has " +
                                           std::to_string(s.rows.size()) + " rows, expected " +
                                           std::to_string(m_));
    }
    for (const auto& r : s.rows) {
      if (r.dim() != dim_) {
        throw Error(ErrorCode::DimensionMismatch,
                    "category " + std::to_string(i) + " has width " + std::to_string(r.dim()));
      }
    }
  }
}

const InteractionSignature& SignatureSet::at(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= signatures_.size()) {
    throw Error(ErrorCode::MissingSignature, "category " + std::to_string(id));
  }
  return signatures_[static_cast<std::size_t>(id)];
}

Vocabulary SignatureSet::vocabulary(const std::string& person_label) const {
  std::vector<InteractionCategory> cats;
  cats.reserve(signatures_.size());
  for (const auto& s : signatures_) cats.push_back(s.category);
  return Vocabulary(std::move(cats), person_label);
}

SignatureSet load_signature_set(const std::filesystem::path& manifest,
                                const Vocabulary* vocabulary) {
  const Json doc = read_json(manifest);
  const auto m = require<std::size_t>(doc, "M");
  const auto d = require<std::size_t>(doc, "d");
  const Tensor tensor = read_tensor(manifest.parent_path() / require<std::string>(doc, "tensor"));
  if (tensor.rank() != 2 || tensor.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch,
                "manifest declares d=" + std::to_string(d) + " but tensor rows are " +
                    (tensor.rank() == 2 ? std::to_string(tensor.cols()) : std::string("not rank-2")) +
                    " wide");
  }

  std::map<int, InteractionSignature> by_id;
  for (const auto& entry : require<Json>(doc, "categories")) {
    InteractionCategory cat{require<int>(entry, "id"), require<std::string>(entry, "verb"),
                            require<std::string>(entry, "object"), require<bool>(entry, "rare")};
    const auto offset = require<std::size_t>(entry, "offset");
    const auto length = require<std::size_t>(entry, "length");
    if (offset + length > tensor.rows()) {
      throw Error(ErrorCode::TruncatedPayload, "category " + std::to_string(cat.id) +
                                                   " block runs past the tensor end");
    }
    Tensor block({static_cast<std::uint32_t>(length), static_cast<std::uint32_t>(d)},
                 std::vector<float>(tensor.data.begin() + static_cast<std::ptrdiff_t>(offset * d),
                                    tensor.data.begin() +
                                        static_cast<std::ptrdiff_t>((offset + length) * d)));
    auto descriptions = require<std::vector<std::string>>(entry, "descriptions");
    const int id = cat.id;
    if (!by_id.emplace(id, assemble_signature(cat, block, std::move(descriptions), m)).second) {
      throw Error(ErrorCode::InvalidVocabulary, "category " + std::to_string(id) + " repeated");
    }
  }

  const std::size_t expected =
      vocabulary ? vocabulary->size()
                 : (by_id.empty() ? 0 : static_cast<std::size_t>(by_id.rbegin()->first) + 1);
  std::vector<InteractionSignature> ordered;
  ordered.reserve(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    auto it = by_id.find(static_cast<int>(i));
    if (it == by_id.end()) {
      throw Error(ErrorCode::MissingCategory, "no signature block for category " + std::to_string(i));
    }
    if (vocabulary) {
      const auto& want = vocabulary->at(static_cast<int>(i));
      if (want.verb != it->second.category.verb || want.object != it->second.category.object) {
        throw Error(ErrorCode::InvalidVocabulary,
                    "category " + std::to_string(i) + " disagrees with the vocabulary");
      }
    }
    ordered.push_back(std::move(it->second));
  }
  return SignatureSet(std::move(ordered));
}

void save_signature_set(const SignatureSet& set, const std::filesystem::path& dir,
                        const Json& run_config, const std::string& stem) {
  const std::size_t d = set.dim();
  const std::size_t m = set.rows_per_category();
  Tensor tensor = Tensor::matrix(set.size() * m, d);
  Json cats = Json::array();
  std::size_t row = 0;
  for (const auto& s : set.all()) {
    cats.push_back(Json{{"id", s.category.id},
                        {"verb", s.category.verb},
                        {"object", s.category.object},
                        {"rare", s.category.rare},
                        {"descriptions", s.descriptions},
                        {"offset", row},
                        {"length", m}});
    for (const auto& r : s.rows) {
      std::copy(r.values().begin(), r.values().end(), tensor.row(row).begin());
      ++row;
    }
  }
  const std::string tensor_name = stem + ".dytf";
  write_tensor(tensor, dir / tensor_name);
  write_json(dir / (stem + ".json"), Json{{"format", "hoi-signatures"},
                                          {"version", 1},
                                          {"M", m},
                                          {"d", d},
                                          {"tensor", tensor_name},
                                          {"config", run_config},
                                          {"categories", std::move(cats)}});
}

}  // namespace hoi
