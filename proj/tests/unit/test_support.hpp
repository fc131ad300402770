// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hoi/core.hpp"
#include "hoi/pairs.hpp"
#include "hoi/registry.hpp"
#include "hoi/signature.hpp"

namespace hoi::test {

inline std::vector<float> basis(std::size_t d, std::size_t k) {
  std::vector<float> v(d, 0.0f);
  v[k] = 1.0f;
  return v;
}

inline Embedding unit(std::vector<float> v) { return normalize(v); }
inline Embedding e(std::size_t d, std::size_t k) { return normalize(basis(d, k)); }

inline std::vector<float> gaussian(std::mt19937_64& rng, std::size_t d) {
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<float> v(d);
  for (auto& x : v) x = g(rng);
  return v;
}

inline Embedding random_unit(std::mt19937_64& rng, std::size_t d) { return normalize(gaussian(rng, d)); }

inline InteractionCategory category(int id, bool rare = false) {
  return {id, "verb" + std::to_string(id), "obj" + std::to_string(id), rare};
}

/// One signature per category from explicit rows.
inline SignatureSet signature_set(const std::vector<std::vector<std::vector<float>>>& per_class_rows) {
  std::vector<InteractionSignature> sigs;
  for (std::size_t c = 0; c < per_class_rows.size(); ++c) {
    const auto& rows = per_class_rows[c];
    Tensor t = Tensor::matrix(rows.size(), rows.front().size());
    std::vector<std::string> desc;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      std::copy(rows[r].begin(), rows[r].end(), t.row(r).begin());
      desc.push_back("d" + std::to_string(r));
    }
    sigs.push_back(assemble_signature(category(static_cast<int>(c)), t, desc, rows.size()));
  }
  return SignatureSet(std::move(sigs));
}

inline PairProposal proposal(Embedding zh, Embedding zo, Embedding zu, double ch = 1.0, double co = 1.0) {
  PairProposal p;
  p.image_id = "img";
  p.key = {0, 1};
  p.human = Detection{{0, 0, 10, 10}, "person", ch};
  p.object = Detection{{20, 0, 30, 10}, "cup", co};
  p.z_h = std::move(zh);
  p.z_o = std::move(zo);
  p.z_u = std::move(zu);
  return p;
}

inline RegistryEntry entry(int cat, Embedding h, Embedding o, Embedding u, std::string image = "r",
                           std::size_t idx = 0) {
  return RegistryEntry{cat, std::move(h), std::move(o), std::move(u), EntrySource::Labeled, 1.0,
                       EntryOrigin{std::move(image), idx, idx + 1}};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hoi_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace hoi::test
