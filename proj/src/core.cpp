// SPDX-License-Identifier: Apache-2.0
#include "hoi/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

namespace hoi {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::NotUnitNorm: return "NotUnitNorm";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::PlaceholderMissing: return "PlaceholderMissing";
    case ErrorCode::BadCount: return "BadCount";
    case ErrorCode::MissingCategory: return "MissingCategory";
    case ErrorCode::MissingSignature: return "MissingSignature";
    case ErrorCode::MissingEmbedding: return "MissingEmbedding";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadVersion: return "BadVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::InvalidVocabulary: return "InvalidVocabulary";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

namespace {

constexpr double kMinNorm = 1e-12;

template <typename T>
std::vector<float> normalized_values(std::span<const T> v) {
  if (v.empty()) {
    throw Error(ErrorCode::ZeroNorm, "empty vector");
  }
  double sq = 0.0;
  for (T x : v) {
    if (!std::isfinite(static_cast<double>(x))) {
      throw Error(ErrorCode::ZeroNorm, "non-finite coordinate");
    }
    sq += static_cast<double>(x) * static_cast<double>(x);
  }
  const double norm = std::sqrt(sq);
  if (norm < kMinNorm) {
    throw Error(ErrorCode::ZeroNorm, "vector norm below 1e-12");
  }
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = static_cast<float>(static_cast<double>(v[i]) / norm);
  }
  return out;
}

}  // namespace

Embedding Embedding::from_unit(std::vector<float> values, double tolerance) {
  if (values.empty()) {
    throw Error(ErrorCode::ZeroNorm, "empty embedding");
  }
  for (float x : values) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::NotUnitNorm, "non-finite coordinate");
    }
  }
  const double norm = l2_norm(values);
  if (std::abs(norm - 1.0) > tolerance) {
    throw Error(ErrorCode::NotUnitNorm,
                "expected unit norm, got " + std::to_string(norm));
  }
  return Embedding(std::move(values));
}

Embedding normalize(std::span<const float> v) {
  return Embedding(normalized_values(v));
}

Embedding normalize(std::span<const double> v) {
  return Embedding(normalized_values(v));
}

double dot(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

double l2_norm(std::span<const float> v) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sq);
}

double cosine(const Embedding& a, const Embedding& b) {
  return dot(a.values(), b.values());
}

bool is_valid(const Box& b) noexcept {
  return std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) &&
         std::isfinite(b.y2) && b.x1 >= 0.0 && b.y1 >= 0.0 && b.x1 < b.x2 &&
         b.y1 < b.y2;
}

void validate(const Box& b) {
  if (!is_valid(b)) {
    throw Error(ErrorCode::InvalidBox,
                "(" + std::to_string(b.x1) + ", " + std::to_string(b.y1) + ", " +
                    std::to_string(b.x2) + ", " + std::to_string(b.y2) + ")");
  }
}

Box box_from_center(double cx, double cy, double width, double height) {
  Box b{cx - width / 2.0, cy - height / 2.0, cx + width / 2.0, cy + height / 2.0};
  validate(b);
  return b;
}

Box union_box(const Box& a, const Box& b) {
  validate(a);
  validate(b);
  return Box{std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
             std::max(a.y2, b.y2)};
}

bool contains(const Box& outer, const Box& inner) noexcept {
  return outer.x1 <= inner.x1 && outer.y1 <= inner.y1 && outer.x2 >= inner.x2 &&
         outer.y2 >= inner.y2;
}

double iou(const Box& a, const Box& b) {
  validate(a);
  validate(b);
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

Vocabulary::Vocabulary(std::vector<InteractionCategory> categories, std::string person_label)
    : categories_(std::move(categories)), person_label_(std::move(person_label)) {
  std::set<std::pair<std::string, std::string>> seen;
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    const auto& c = categories_[i];
    if (c.id != static_cast<int>(i)) {
      throw Error(ErrorCode::InvalidVocabulary,
                  "category at position " + std::to_string(i) + " has id " +
                      std::to_string(c.id));
    }
    if (c.verb.empty() || c.object.empty()) {
      throw Error(ErrorCode::InvalidVocabulary,
                  "category " + std::to_string(c.id) + " has an empty verb or object");
    }
    if (!seen.emplace(c.verb, c.object).second) {
      throw Error(ErrorCode::InvalidVocabulary,
                  "duplicate interaction (" + c.verb + ", " + c.object + ")");
    }
  }
  if (person_label_.empty()) {
    throw Error(ErrorCode::InvalidVocabulary, "empty person label");
  }
}

const InteractionCategory& Vocabulary::at(int id) const {
  if (!contains(id)) {
    throw Error(ErrorCode::UnknownCategory, "category id " + std::to_string(id));
  }
  return categories_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::rare_ids() const {
  std::vector<int> out;
  for (const auto& c : categories_) {
    if (c.rare) out.push_back(c.id);
  }
  return out;
}

std::vector<int> Vocabulary::nonrare_ids() const {
  std::vector<int> out;
  for (const auto& c : categories_) {
    if (!c.rare) out.push_back(c.id);
  }
  return out;
}

}  // namespace hoi
