// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hoi/error.hpp"

namespace hoi {

/// Unit-norm feature vector shared by the text and image modalities.
///
/// Values are stored as 32-bit floats; all reductions over them accumulate
/// in double. The only ways to obtain one are `normalize`, which rescales,
/// and `Embedding::from_unit`, which accepts an already-normalized vector
/// (e.g. one read back from disk) after checking its norm.
class Embedding {
 public:
  Embedding() = default;

  static Embedding from_unit(std::vector<float> values, double tolerance = 1e-5);

  std::span<const float> values() const noexcept { return values_; }
  std::size_t dim() const noexcept { return values_.size(); }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  explicit Embedding(std::vector<float> values) : values_(std::move(values)) {}
  friend Embedding normalize(std::span<const float> v);
  friend Embedding normalize(std::span<const double> v);

  std::vector<float> values_;
};

/// Rescales `v` to unit L2 norm. Throws ZeroNorm when ||v|| < 1e-12.
Embedding normalize(std::span<const float> v);
Embedding normalize(std::span<const double> v);

double dot(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> v);

/// Dot product of two unit vectors. Throws DimensionMismatch.
double cosine(const Embedding& a, const Embedding& b);

/// Axis-aligned box in absolute pixel corner form.
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const noexcept { return x2 - x1; }
  double height() const noexcept { return y2 - y1; }
  double area() const noexcept { return width() * height(); }

  friend bool operator==(const Box&, const Box&) = default;
};

bool is_valid(const Box& b) noexcept;
/// Throws InvalidBox unless x1 < x2, y1 < y2 and every coordinate is >= 0.
void validate(const Box& b);

/// Converts the detector's (cx, cy, w, h) layout to corner form.
Box box_from_center(double cx, double cy, double width, double height);

Box union_box(const Box& a, const Box& b);
bool contains(const Box& outer, const Box& inner) noexcept;
double iou(const Box& a, const Box& b);

struct Detection {
  Box box;
  std::string label;
  double confidence = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct InteractionCategory {
  int id = 0;
  std::string verb;
  std::string object;
  bool rare = false;

  friend bool operator==(const InteractionCategory&, const InteractionCategory&) = default;
};

/// An annotated <human, verb, object> instance.
struct GroundTruthTriplet {
  std::string image_id;
  Box human;
  Box object;
  int category = 0;

  friend bool operator==(const GroundTruthTriplet&, const GroundTruthTriplet&) = default;
};

/// The interaction vocabulary: categories indexed 0..I-1 plus the object
/// label that identifies people.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Throws InvalidVocabulary if ids are not exactly 0..I-1 in order or a
  /// (verb, object) pair repeats.
  explicit Vocabulary(std::vector<InteractionCategory> categories,
                      std::string person_label = "person");

  std::size_t size() const noexcept { return categories_.size(); }
  const std::vector<InteractionCategory>& categories() const noexcept { return categories_; }
  const InteractionCategory& at(int id) const;
  bool contains(int id) const noexcept {
    return id >= 0 && static_cast<std::size_t>(id) < categories_.size();
  }
  const std::string& person_label() const noexcept { return person_label_; }

  std::vector<int> rare_ids() const;
  std::vector<int> nonrare_ids() const;

 private:
  std::vector<InteractionCategory> categories_;
  std::string person_label_ = "person";
};

}  // namespace hoi
