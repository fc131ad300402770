// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hoi/core.hpp"
#include "hoi/json_io.hpp"
#include "hoi/pairs.hpp"
#include "hoi/signature.hpp"

namespace hoi {

/// Synthetic world parameters. `noise` is the per-coordinate standard
/// deviation of the Gaussian perturbation added to every planted direction
/// before normalization (signature rows and all image embeddings alike).
struct FixtureSpec {
  std::uint64_t seed = 0;
  std::size_t categories = 12;
  std::size_t dim = 64;
  std::size_t rows = 8;  // M
  std::size_t images = 40;
  std::size_t train_per_category = 8;
  double noise = 0.0;
  /// Two categories whose planted directions are exact opposites.
  bool antipodal = false;
};

struct FixtureWorld {
  FixtureSpec spec;
  Vocabulary vocabulary;
  SignatureSet signatures;
  std::vector<FeatureBundle> test_bundles;
  std::vector<GroundTruthTriplet> test_truth;
  std::vector<FeatureBundle> train_bundles;
  std::vector<GroundTruthTriplet> train_annotations;
};

/// Deterministic in the spec. Throws Usage on degenerate specs (no
/// categories, d < 8, antipodal with I != 2, ...).
FixtureWorld synth_fixtures(const FixtureSpec& spec);

Json fixture_spec_to_json(const FixtureSpec& spec);

// Layout under `dir`:
//   vocabulary.json, signatures.json + .dytf, fixture.json (the spec),
//   test/bundles/, test/gt.json, train/bundles/, train/annotations.json
void write_fixtures(const FixtureWorld& world, const std::filesystem::path& dir);

}  // namespace hoi
