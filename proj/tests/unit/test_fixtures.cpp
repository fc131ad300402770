// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "hoi/attention.hpp"
#include "hoi/fixtures.hpp"
#include "hoi/registry.hpp"
#include "hoi/tensor_io.hpp"
#include "test_support.hpp"

using namespace hoi;

namespace {

std::vector<std::filesystem::path> files_under(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.push_back(std::filesystem::relative(e.path(), dir));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("same seed gives byte-identical output") {
  const auto dir = test::scratch_dir("fixtures_det");
  FixtureSpec s;
  s.seed = 11;
  s.noise = 0.1;
  s.images = 15;
  write_fixtures(synth_fixtures(s), dir / "a");
  write_fixtures(synth_fixtures(s), dir / "b");
  const auto fa = files_under(dir / "a");
  REQUIRE(fa == files_under(dir / "b"));
  CHECK(fa.size() > 10);
  for (const auto& f : fa) CHECK(read_file_bytes(dir / "a" / f) == read_file_bytes(dir / "b" / f));

  s.seed = 12;
  write_fixtures(synth_fixtures(s), dir / "c");
  CHECK(read_file_bytes(dir / "a" / "signatures.dytf") != read_file_bytes(dir / "c" / "signatures.dytf"));
}

TEST_CASE("written fixtures load through the public readers") {
  const auto dir = test::scratch_dir("fixtures_load");
  FixtureSpec s;
  s.seed = 3;
  s.categories = 5;
  s.dim = 16;
  s.rows = 4;
  s.images = 6;
  s.train_per_category = 2;
  const auto w = synth_fixtures(s);
  write_fixtures(w, dir);
  const auto vocab = load_vocabulary(dir / "vocabulary.json");
  CHECK(vocab.size() == 5);
  const auto sigs = load_signature_set(dir / "signatures.json", &vocab);
  CHECK(sigs.rows_per_category() == 4);
  CHECK(load_bundles(dir / "test" / "bundles").size() == 6);
  CHECK(load_bundles(dir / "train" / "bundles").size() == 10);
  const auto reg = build_labeled(w.train_annotations, load_bundles(dir / "train" / "bundles"), 5, 8);
  CHECK(reg.total_entries() == 10);
}

TEST_CASE("every category has test ground truth and both rare splits exist") {
  FixtureSpec s;
  s.seed = 4;
  const auto w = synth_fixtures(s);
  std::vector<int> count(s.categories, 0);
  for (const auto& g : w.test_truth) ++count[static_cast<std::size_t>(g.category)];
  for (int c : count) CHECK(c > 0);
  CHECK(!w.vocabulary.rare_ids().empty());
  CHECK(!w.vocabulary.nonrare_ids().empty());
}

TEST_CASE("bundles cover every enumerable pair") {
  FixtureSpec s;
  s.seed = 6;
  s.images = 20;
  for (const auto& b : synth_fixtures(s).test_bundles) {
    FilterParams loose;
    loose.threshold = 0.0;
    loose.max_keep = 100;
    CHECK_NOTHROW(propose_pairs(b, "person", loose));
  }
}

TEST_CASE("noise-free planted pairs score their own category highest") {
  FixtureSpec s;
  s.seed = 9;
  const auto w = synth_fixtures(s);
  const auto reg = build_labeled(w.train_annotations, w.train_bundles, s.categories, 8);
  const Scorer scorer(w.signatures, &reg, ScoringConfig{});
  std::size_t checked = 0;
  for (const auto& g : w.test_truth) {
    const auto& b = *std::find_if(w.test_bundles.begin(), w.test_bundles.end(),
                                  [&](const FeatureBundle& x) { return x.image_id == g.image_id; });
    for (const auto& p : propose_pairs(b, "person")) {
      if (p.human.box == g.human && p.object.box == g.object) {
        CHECK(scorer.rank(p)[0].category == g.category);
        ++checked;
      }
    }
  }
  CHECK(checked == w.test_truth.size());
}

TEST_CASE("antipodal two-category world separates every pair") {
  FixtureSpec s;
  s.seed = 21;
  s.categories = 2;
  s.images = 10;
  s.antipodal = true;
  const auto w = synth_fixtures(s);
  const auto reg = build_labeled(w.train_annotations, w.train_bundles, 2, 8);
  for (const auto& sig_row : w.signatures.at(1).rows) {
    CHECK(cosine(sig_row, w.signatures.at(0).rows[0]) == doctest::Approx(-1.0));
  }
  const Scorer scorer(w.signatures, &reg, ScoringConfig{});
  for (const auto& g : w.test_truth) {
    const auto& b = *std::find_if(w.test_bundles.begin(), w.test_bundles.end(),
                                  [&](const FeatureBundle& x) { return x.image_id == g.image_id; });
    for (const auto& p : propose_pairs(b, "person")) {
      if (p.human.box != g.human || p.object.box != g.object) continue;
      const auto fused = scorer.panel(p).fused;
      CHECK(fused[static_cast<std::size_t>(g.category)] > fused[static_cast<std::size_t>(1 - g.category)]);
    }
  }
}

TEST_CASE("degenerate specs are usage errors") {
  FixtureSpec s;
  s.categories = 1;
  CHECK_THROWS_AS(synth_fixtures(s), Error);
  s = {};
  s.antipodal = true;
  CHECK_THROWS_AS(synth_fixtures(s), Error);
  s = {};
  s.images = 3;
  CHECK_THROWS_AS(synth_fixtures(s), Error);
}
