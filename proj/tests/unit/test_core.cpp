// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "hoi/core.hpp"
#include "test_support.hpp"

using namespace hoi;
using doctest::Approx;

namespace {

Box random_box(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 50.0), side(0.5, 30.0);
  const double x = pos(rng), y = pos(rng);
  return Box{x, y, x + side(rng), y + side(rng)};
}

}  // namespace

TEST_CASE("normalize examples") {
  auto a = normalize(std::vector<float>{1, 0, 0});
  CHECK(a[0] == 1.0f);
  CHECK(a[1] == 0.0f);
  auto b = normalize(std::vector<float>{3, 4});
  CHECK(b[0] == Approx(0.6));
  CHECK(b[1] == Approx(0.8));
  try {
    normalize(std::vector<float>{0, 0});
    FAIL("expected ZeroNorm");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroNorm);
  }
}

TEST_CASE("normalize is idempotent and self-cosine is 1") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    auto v = test::gaussian(rng, 1 + t % 40);
    for (auto& x : v) x *= static_cast<float>(1 + t);
    auto n1 = normalize(v);
    auto n2 = normalize(n1.values());
    for (std::size_t k = 0; k < n1.dim(); ++k) CHECK(n2[k] == Approx(n1[k]).epsilon(1e-6));
    CHECK(cosine(n1, n1) == Approx(1.0).epsilon(1e-6));
    CHECK(l2_norm(n1.values()) == Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("from_unit accepts unit vectors and rejects others") {
  auto e = Embedding::from_unit({0.6f, 0.8f});
  CHECK(e.dim() == 2);
  CHECK_THROWS_AS(Embedding::from_unit({1.0f, 1.0f}), Error);
  try {
    Embedding::from_unit({0.5f, 0.5f});
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::NotUnitNorm);
  }
}

TEST_CASE("cosine examples") {
  CHECK(cosine(test::e(3, 0), test::e(3, 0)) == Approx(1.0));
  CHECK(cosine(test::e(3, 0), test::e(3, 1)) == Approx(0.0));
  CHECK(cosine(normalize(std::vector<float>{0.6f, 0.8f}), test::e(2, 0)) == Approx(0.6));
  try {
    cosine(test::e(3, 0), test::e(2, 0));
    FAIL("expected DimensionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("cosine is bounded and symmetric") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 200; ++t) {
    auto a = test::random_unit(rng, 16), b = test::random_unit(rng, 16);
    const double c = cosine(a, b);
    CHECK(c <= 1.0 + 1e-6);
    CHECK(c >= -1.0 - 1e-6);
    CHECK(c == cosine(b, a));
  }
}

TEST_CASE("box validation and center conversion") {
  CHECK(is_valid(Box{0, 0, 1, 1}));
  CHECK_FALSE(is_valid(Box{1, 0, 1, 1}));
  CHECK_FALSE(is_valid(Box{-1, 0, 1, 1}));
  try {
    validate(Box{2, 2, 1, 3});
    FAIL("expected InvalidBox");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidBox);
  }
  CHECK(box_from_center(5, 5, 4, 2) == Box{3, 4, 7, 6});
}

TEST_CASE("union_box examples") {
  CHECK(union_box({0, 0, 2, 2}, {1, 1, 3, 3}) == Box{0, 0, 3, 3});
  const Box b{1, 2, 3, 4};
  CHECK(union_box(b, b) == b);
  CHECK(union_box({0, 0, 1, 1}, {5, 5, 6, 6}) == Box{0, 0, 6, 6});
}

TEST_CASE("union_box algebra") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 300; ++t) {
    const Box a = random_box(rng), b = random_box(rng), c = random_box(rng);
    const Box u = union_box(a, b);
    CHECK(u == union_box(b, a));
    CHECK(union_box(union_box(a, b), c) == union_box(a, union_box(b, c)));
    CHECK(contains(u, a));
    CHECK(contains(u, b));
    // Smallest: every edge touches one of the inputs.
    CHECK(u.x1 == std::min(a.x1, b.x1));
    CHECK(u.y2 == std::max(a.y2, b.y2));
  }
}

TEST_CASE("iou examples") {
  const Box b{0, 0, 2, 2};
  CHECK(iou(b, b) == Approx(1.0));
  CHECK(iou(b, {5, 5, 6, 6}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 0, 3, 2}) == Approx(1.0 / 3.0));
  // Touching edges share no area.
  CHECK(iou({0, 0, 1, 1}, {1, 0, 2, 1}) == 0.0);
}

TEST_CASE("iou is bounded and symmetric") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 500; ++t) {
    const Box a = random_box(rng), b = random_box(rng);
    const double v = iou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == iou(b, a));
  }
}

TEST_CASE("vocabulary validation and rare split") {
  Vocabulary v({test::category(0, true), test::category(1), test::category(2, true)});
  CHECK(v.size() == 3);
  CHECK(v.rare_ids() == std::vector<int>{0, 2});
  CHECK(v.nonrare_ids() == std::vector<int>{1});
  CHECK(v.at(1).verb == "verb1");
  try {
    v.at(3);
    FAIL("expected UnknownCategory");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownCategory);
  }
  auto dup = test::category(1);
  dup.verb = "verb0";
  dup.object = "obj0";
  CHECK_THROWS_AS(Vocabulary({test::category(0), dup}), Error);
  CHECK_THROWS_AS(Vocabulary({test::category(1)}), Error);
}
