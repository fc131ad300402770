// SPDX-License-Identifier: Apache-2.0
#include "hoi/fixtures.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "hoi/evaluator.hpp"

namespace hoi {

namespace {

using Rng = std::mt19937_64;
using Direction = std::vector<double>;

Direction random_unit(Rng& rng, std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  Direction v(d);
  double n2 = 0.0;
  for (auto& x : v) {
    x = g(rng);
    n2 += x * x;
  }
  const double n = std::sqrt(n2);
  for (auto& x : v) x /= n;
  return v;
}

double cos_of(const Direction& a, const Direction& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Rejection sampling: a new direction may not point within 60 degrees of
// anything already planted.
Direction fresh_direction(Rng& rng, std::size_t d, const std::vector<Direction>& taken) {
  for (;;) {
    Direction v = random_unit(rng, d);
    bool ok = true;
    for (const auto& t : taken) {
      if (cos_of(v, t) > 0.5) {
        ok = false;
        break;
      }
    }
    if (ok) return v;
  }
}

std::vector<float> perturb(Rng& rng, const Direction& dir, double noise) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<float> out(dir.size());
  for (std::size_t k = 0; k < dir.size(); ++k) {
    const double e = noise > 0.0 ? noise * g(rng) : 0.0;
    out[k] = static_cast<float>(dir[k] + e);
  }
  return out;
}

struct Planted {
  std::vector<Direction> interaction, human, object;
  std::vector<Direction> all;  // every planted direction, for rejection
};

Planted plant(Rng& rng, const FixtureSpec& spec) {
  Planted p;
  auto family = [&](std::vector<Direction>& out) {
    for (std::size_t c = 0; c < spec.categories; ++c) {
      Direction v;
      if (spec.antipodal && c == 1) {
        v = out[0];
        for (auto& x : v) x = -x;
      } else {
        v = fresh_direction(rng, spec.dim, p.all);
      }
      p.all.push_back(v);
      out.push_back(std::move(v));
    }
  };
  family(p.interaction);
  family(p.human);
  family(p.object);
  return p;
}

std::string numbered(const char* prefix, std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%04zu", prefix, n);
  return buf;
}

Box grid_box(Rng& rng, std::size_t cell) {
  std::uniform_real_distribution<double> side(60.0, 100.0);
  const double x = 10.0 + 120.0 * static_cast<double>(cell % 4);
  const double y = 10.0 + 120.0 * static_cast<double>(cell / 4);
  return Box{x, y, x + side(rng), y + side(rng)};
}

// One image under construction. Directions are kept until every union is
// known, then everything is perturbed and normalized.
class ImageBuilder {
 public:
  ImageBuilder(Rng& rng, const FixtureSpec& spec, const Planted& planted, std::string id)
      : rng_(rng), spec_(spec), planted_(planted) {
    bundle_.image_id = std::move(id);
  }

  std::size_t add(const std::string& label, double confidence, Direction dir) {
    const std::size_t idx = bundle_.detections.size();
    bundle_.detections.push_back(Detection{grid_box(rng_, idx), label, confidence});
    dirs_.push_back(std::move(dir));
    return idx;
  }

  GroundTruthTriplet add_interaction(const InteractionCategory& cat) {
    std::uniform_real_distribution<double> conf(0.9, 1.0);
    const auto c = static_cast<std::size_t>(cat.id);
    const std::size_t h = add("person", conf(rng_), planted_.human[c]);
    const std::size_t o = add(cat.object, conf(rng_), planted_.object[c]);
    true_unions_[PairKey{h, o}] = c;
    return GroundTruthTriplet{bundle_.image_id, bundle_.detections[h].box,
                              bundle_.detections[o].box, cat.id};
  }

  Direction distractor() { return fresh_direction(rng_, spec_.dim, planted_.all); }

  FeatureBundle finish() {
    for (std::size_t i = 0; i < dirs_.size(); ++i) {
      bundle_.crops.emplace(i, normalize(perturb(rng_, dirs_[i], spec_.noise)));
    }
    // A union for every ordered (person, other) pair so that any filtering
    // outcome finds its features.
    for (std::size_t h = 0; h < dirs_.size(); ++h) {
      if (bundle_.detections[h].label != "person") continue;
      for (std::size_t o = 0; o < dirs_.size(); ++o) {
        if (o == h) continue;
        const PairKey key{h, o};
        auto it = true_unions_.find(key);
        const Direction dir = it != true_unions_.end() ? planted_.interaction[it->second] : distractor();
        bundle_.unions.emplace(key, normalize(perturb(rng_, dir, spec_.noise)));
      }
    }
    return std::move(bundle_);
  }

 private:
  Rng& rng_;
  const FixtureSpec& spec_;
  const Planted& planted_;
  FeatureBundle bundle_;
  std::vector<Direction> dirs_;
  std::map<PairKey, std::size_t> true_unions_;
};

void add_clutter(Rng& rng, ImageBuilder& img, const Vocabulary& vocab) {
  std::uniform_real_distribution<double> mid(0.3, 0.9);
  std::uniform_real_distribution<double> junk(0.01, 0.15);
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::bernoulli_distribution coin(0.5);
  if (coin(rng)) {
    img.add(vocab.categories()[pick(rng)].object, mid(rng), img.distractor());
  }
  img.add(vocab.categories()[pick(rng)].object, junk(rng), img.distractor());
  if (coin(rng)) img.add("person", junk(rng), img.distractor());
}

}  // namespace

FixtureWorld synth_fixtures(const FixtureSpec& spec) {
  if (spec.categories < 2) throw Error(ErrorCode::Usage, "fixtures need at least 2 categories");
  if (spec.dim < 8) throw Error(ErrorCode::Usage, "fixtures need d >= 8");
  if (spec.rows == 0) throw Error(ErrorCode::Usage, "fixtures need M >= 1");
  if (spec.images < spec.categories) {
    throw Error(ErrorCode::Usage, "need at least one test image per category");
  }
  if (spec.antipodal && spec.categories != 2) {
    throw Error(ErrorCode::Usage, "antipodal fixtures need exactly 2 categories");
  }
  if (!(spec.noise >= 0.0) || !std::isfinite(spec.noise)) {
    throw Error(ErrorCode::Usage, "noise must be a finite non-negative number");
  }

  Rng rng(spec.seed);
  FixtureWorld w;
  w.spec = spec;

  std::vector<InteractionCategory> cats;
  const std::size_t num_objects = (spec.categories + 1) / 2;
  for (std::size_t c = 0; c < spec.categories; ++c) {
    cats.push_back(InteractionCategory{static_cast<int>(c), numbered("act", c),
                                       numbered("thing", c % num_objects), c % 3 == 0});
  }
  w.vocabulary = Vocabulary(cats);

  const Planted planted = plant(rng, spec);

  std::vector<InteractionSignature> sigs;
  for (const auto& cat : cats) {
    Tensor t = Tensor::matrix(spec.rows, spec.dim);
    std::vector<std::string> desc;
    for (std::size_t m = 0; m < spec.rows; ++m) {
      const auto row = perturb(rng, planted.interaction[static_cast<std::size_t>(cat.id)], spec.noise);
      std::copy(row.begin(), row.end(), t.row(m).begin());
      desc.push_back("a person who does " + cat.verb + " with a " + cat.object + ", view " +
                     std::to_string(m));
    }
    sigs.push_back(assemble_signature(cat, t, std::move(desc), spec.rows));
  }
  w.signatures = SignatureSet(std::move(sigs));

  // Test split: one or two interactions per image, categories assigned
  // round-robin so every category has ground truth.
  std::bernoulli_distribution two(0.5);
  std::size_t next_cat = 0;
  for (std::size_t n = 0; n < spec.images; ++n) {
    ImageBuilder img(rng, spec, planted, numbered("test", n));
    const std::size_t k = two(rng) ? 2 : 1;
    for (std::size_t j = 0; j < k; ++j) {
      w.test_truth.push_back(img.add_interaction(cats[next_cat++ % cats.size()]));
    }
    add_clutter(rng, img, w.vocabulary);
    w.test_bundles.push_back(img.finish());
  }

  for (std::size_t n = 0; n < spec.categories * spec.train_per_category; ++n) {
    ImageBuilder img(rng, spec, planted, numbered("train", n));
    w.train_annotations.push_back(img.add_interaction(cats[n % cats.size()]));
    add_clutter(rng, img, w.vocabulary);
    w.train_bundles.push_back(img.finish());
  }
  return w;
}

Json fixture_spec_to_json(const FixtureSpec& s) {
  return Json{{"seed", s.seed},     {"categories", s.categories},
              {"dim", s.dim},       {"rows", s.rows},
              {"images", s.images}, {"train_per_category", s.train_per_category},
              {"noise", s.noise},   {"antipodal", s.antipodal}};
}

void write_fixtures(const FixtureWorld& w, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_vocabulary(w.vocabulary, dir / "vocabulary.json");
  save_signature_set(w.signatures, dir, Json{{"fixture", fixture_spec_to_json(w.spec)}});
  write_json(dir / "fixture.json", fixture_spec_to_json(w.spec));
  for (const auto& [split, bundles] :
       {std::pair{"test", &w.test_bundles}, std::pair{"train", &w.train_bundles}}) {
    const auto bdir = dir / split / "bundles";
    std::filesystem::create_directories(bdir);
    for (const auto& b : *bundles) save_bundle(b, bdir);
  }
  write_json(dir / "test" / "gt.json", ground_truth_to_json(w.test_truth));
  write_json(dir / "train" / "annotations.json", ground_truth_to_json(w.train_annotations));
}

}  // namespace hoi
