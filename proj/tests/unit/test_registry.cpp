// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hoi/attention.hpp"
#include "hoi/fixtures.hpp"
#include "hoi/registry.hpp"
#include "hoi/tensor_io.hpp"
#include "test_support.hpp"

using namespace hoi;

namespace {

// One person and one object per image; image i is annotated with category cats[i].
struct LabeledWorld {
  std::vector<FeatureBundle> bundles;
  std::vector<GroundTruthTriplet> annotations;
};

LabeledWorld labeled_world(const std::vector<int>& cats, std::size_t d = 6) {
  std::mt19937_64 rng(99);
  LabeledWorld w;
  for (std::size_t i = 0; i < cats.size(); ++i) {
    FeatureBundle b;
    b.image_id = "im" + std::to_string(100 + i);
    b.detections = {Detection{{0, 0, 10, 10}, "person", 0.9}, Detection{{20, 0, 30, 10}, "cup", 0.8}};
    b.crops.emplace(0, test::random_unit(rng, d));
    b.crops.emplace(1, test::random_unit(rng, d));
    b.unions.emplace(PairKey{0, 1}, test::random_unit(rng, d));
    // Slightly shifted annotation boxes still match.
    w.annotations.push_back({b.image_id, Box{0.5, 0, 10, 10}, Box{20, 0.5, 30, 10}, cats[i]});
    w.bundles.push_back(std::move(b));
  }
  return w;
}

// Scores taken from a table keyed by image id.
class TableScores : public PairScoreSource {
 public:
  TableScores(std::size_t n, std::map<std::string, std::vector<double>> t) : n_(n), t_(std::move(t)) {}
  std::size_t num_categories() const override { return n_; }
  std::vector<double> category_scores(const PairProposal& p) const override {
    auto it = t_.find(p.image_id);
    if (it == t_.end()) return std::vector<double>(n_, -std::numeric_limits<double>::infinity());
    return it->second;
  }

 private:
  std::size_t n_;
  std::map<std::string, std::vector<double>> t_;
};

}  // namespace

TEST_CASE("labeled registry keeps the first J in dataset order") {
  const auto w = labeled_world(std::vector<int>(10, 0));
  const Registry r = build_labeled(w.annotations, w.bundles, 2, 8);
  REQUIRE(r.entries(0).size() == 8);
  CHECK(r.entries(1).empty());
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(r.entries(0)[i].origin.image_id == w.bundles[i].image_id);
    CHECK(r.entries(0)[i].human == w.bundles[i].crops.at(0));
    CHECK(r.entries(0)[i].union_ == w.bundles[i].unions.at(PairKey{0, 1}));
    CHECK(r.entries(0)[i].source == EntrySource::Labeled);
  }
}

TEST_CASE("labeled registry under capacity and with J = 1") {
  const auto w = labeled_world({0, 1, 1, 2});
  CHECK(build_labeled({w.annotations[0], w.annotations[1]}, w.bundles, 3, 8).total_entries() == 2);
  const Registry one = build_labeled(w.annotations, w.bundles, 3, 1);
  for (int c = 0; c < 3; ++c) CHECK(one.entries(c).size() == 1);
  CHECK(one.entries(1)[0].origin.image_id == "im101");
}

TEST_CASE("labeled registry reports missing features") {
  auto w = labeled_world({0});
  auto ann = w.annotations;
  ann[0].object = Box{200, 200, 210, 210};
  CHECK_THROWS_AS(build_labeled(ann, w.bundles, 1, 8), Error);
  w.bundles[0].unions.clear();
  try {
    build_labeled(w.annotations, w.bundles, 1, 8);
    FAIL("expected MissingEmbedding");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingEmbedding);
  }
}

TEST_CASE("try_add respects capacity and widths") {
  Registry r(2, 2);
  CHECK(r.try_add(test::entry(0, test::e(4, 0), test::e(4, 1), test::e(4, 2))));
  CHECK(r.try_add(test::entry(0, test::e(4, 0), test::e(4, 1), test::e(4, 2))));
  CHECK_FALSE(r.try_add(test::entry(0, test::e(4, 0), test::e(4, 1), test::e(4, 2))));
  CHECK_THROWS_AS(r.try_add(test::entry(1, test::e(3, 0), test::e(3, 1), test::e(3, 2))), Error);
  CHECK_THROWS_AS(r.try_add(test::entry(2, test::e(4, 0), test::e(4, 1), test::e(4, 2))), Error);
}

TEST_CASE("pseudo admission: threshold cut and argmax only") {
  std::mt19937_64 rng(1);
  auto w = labeled_world({0, 0, 0});
  const TableScores scores(2, {{"im100", {0.95, 0.2}}, {"im101", {0.85, 0.1}}, {"im102", {0.92, 0.97}}});
  PseudoParams p;
  const Registry r = build_pseudo(w.bundles, scores, p);
  REQUIRE(r.entries(0).size() == 1);
  CHECK(r.entries(0)[0].origin.image_id == "im100");
  CHECK(r.entries(0)[0].score == 0.95);
  CHECK(r.entries(0)[0].source == EntrySource::Pseudo);
  // im102's argmax is category 1; category 0 does not get it.
  REQUIRE(r.entries(1).size() == 1);
  CHECK(r.entries(1)[0].origin.image_id == "im102");
}

TEST_CASE("pseudo keeps the J highest scores, ties by origin") {
  auto w = labeled_world(std::vector<int>(12, 0));
  std::map<std::string, std::vector<double>> t;
  for (std::size_t i = 0; i < 12; ++i) t[w.bundles[i].image_id] = {0.90 + 0.005 * static_cast<double>(i % 6)};
  PseudoParams p;
  p.capacity = 8;
  const Registry r = build_pseudo(w.bundles, TableScores(1, t), p);
  REQUIRE(r.entries(0).size() == 8);
  for (std::size_t k = 1; k < 8; ++k) {
    const auto& a = r.entries(0)[k - 1];
    const auto& b = r.entries(0)[k];
    CHECK((a.score > b.score || (a.score == b.score && a.origin < b.origin)));
  }
  CHECK(r.entries(0)[0].score == doctest::Approx(0.925));
  CHECK(r.entries(0)[0].origin.image_id == "im105");
  CHECK(r.entries(0)[1].origin.image_id == "im111");
}

TEST_CASE("pseudo threshold superset and revalidation on fixtures") {
  FixtureSpec s;
  s.seed = 5;
  s.noise = 0.05;
  s.categories = 6;
  s.images = 12;
  s.train_per_category = 4;
  const auto world = synth_fixtures(s);
  const TextualScoreSource source(world.signatures);
  PseudoParams loose, strict;
  loose.threshold = 0.5;
  strict.threshold = 0.9;
  loose.capacity = strict.capacity = 1000;
  const Registry a = build_pseudo(world.train_bundles, source, loose);
  const Registry b = build_pseudo(world.train_bundles, source, strict);
  CHECK(b.total_entries() > 0);
  for (int c = 0; c < 6; ++c) {
    for (const auto& e : b.entries(c)) {
      const auto& pool = a.entries(c);
      CHECK(std::find_if(pool.begin(), pool.end(), [&](const RegistryEntry& x) { return x.origin == e.origin; }) !=
            pool.end());
    }
  }
}

TEST_CASE("pseudo rejects thresholds outside [0, 1]") {
  PseudoParams p;
  p.threshold = 1.1;
  try {
    build_pseudo({}, TableScores(1, {}), p);
    FAIL("expected Usage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Usage);
  }
}

TEST_CASE("external score file") {
  const auto dir = test::scratch_dir("ext_scores");
  write_text_file(dir / "s.jsonl",
                  "{\"image_id\": \"im100\", \"human\": 0, \"object\": 1, \"category\": 1, \"score\": 0.97}\n"
                  "\n"
                  "{\"image_id\": \"im100\", \"human\": 0, \"object\": 1, \"category\": 0, \"score\": 0.3}\n");
  const ExternalScoreSource src(2, dir / "s.jsonl");
  const auto w = labeled_world({0, 0});
  const Registry r = build_pseudo(w.bundles, src, PseudoParams{});
  CHECK(r.entries(0).empty());
  REQUIRE(r.entries(1).size() == 1);
  CHECK(r.entries(1)[0].score == 0.97);

  write_text_file(dir / "bad.jsonl", "{\"image_id\": \"x\", \"human\": 0, \"object\": 1, \"category\": 9, \"score\": 1}\n");
  CHECK_THROWS_AS(ExternalScoreSource(2, dir / "bad.jsonl"), Error);
}

TEST_CASE("zero-shot filtering") {
  const auto w = labeled_world({0, 1, 2, 3, 3});
  const Registry r = build_labeled(w.annotations, w.bundles, 4, 8);
  CHECK(filter_zero_shot(r, {}) == r);
  const Registry none = filter_zero_shot(r, {0, 1, 2, 3});
  CHECK(none.total_entries() == 0);
  const Registry no3 = filter_zero_shot(r, {3});
  CHECK(no3.entries(3).empty());
  for (int c = 0; c < 3; ++c) CHECK(no3.entries(c) == r.entries(c));
  CHECK_THROWS_AS(filter_zero_shot(r, {4}), Error);
}

TEST_CASE("registry files round trip bit-exactly and deterministically") {
  const auto dir = test::scratch_dir("registry_rt");
  const auto w = labeled_world({0, 1, 1, 0, 2});
  const Registry r = build_labeled(w.annotations, w.bundles, 3, 8);
  save_registry(r, dir / "a", Json{{"J", 8}});
  save_registry(build_labeled(w.annotations, w.bundles, 3, 8), dir / "b", Json{{"J", 8}});
  CHECK(load_registry(dir / "a" / "registry.json") == r);
  CHECK(read_file_bytes(dir / "a" / "registry.json") == read_file_bytes(dir / "b" / "registry.json"));
  CHECK(read_file_bytes(dir / "a" / "registry.dytf") == read_file_bytes(dir / "b" / "registry.dytf"));

  const Registry empty(3, 8);
  save_registry(empty, dir / "c");
  CHECK(load_registry(dir / "c" / "registry.json") == empty);
}
