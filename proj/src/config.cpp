// SPDX-License-Identifier: Apache-2.0
#include "hoi/config.hpp"

#include <cmath>

namespace hoi {

void validate(const RunConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::Usage, what); };
  if (!(c.scoring.tau > 0.0) || !std::isfinite(c.scoring.tau)) fail("tau must be positive");
  if (!std::isfinite(c.scoring.gamma) || c.scoring.gamma < 0.0) fail("gamma must be >= 0");
  if (!std::isfinite(c.scoring.lambda_neg)) fail("lambda_neg must be finite");
  if (!(c.detection.threshold >= 0.0 && c.detection.threshold <= 1.0)) {
    fail("detection threshold must lie in [0, 1]");
  }
  if (c.detection.min_keep < 1 || c.detection.min_keep > c.detection.max_keep) {
    fail("need 1 <= min_keep <= max_keep");
  }
  if (c.registry_size == 0) fail("J must be positive");
  if (c.signature_rows == 0) fail("M must be positive");
  if (!(c.pseudo_threshold >= 0.0 && c.pseudo_threshold <= 1.0)) {
    fail("pseudolabel threshold must lie in [0, 1]");
  }
  if (!(c.match_iou > 0.0 && c.match_iou <= 1.0)) fail("match_iou must lie in (0, 1]");
  if (c.jobs == 0) fail("jobs must be positive");
  bool any = false;
  for (bool h : c.scoring.heads) any = any || h;
  if (!any) fail("at least one head must be enabled");
}

Json config_to_json(const RunConfig& c) {
  Json heads = Json::object();
  for (Head h : kAllHeads) heads[std::string(head_name(h))] = c.scoring.enabled(h);
  return Json{{"tau", c.scoring.tau},
              {"gamma", c.scoring.gamma},
              {"lambda_neg", c.scoring.lambda_neg},
              {"J", c.registry_size},
              {"M", c.signature_rows},
              {"detection",
               {{"threshold", c.detection.threshold},
                {"min_keep", c.detection.min_keep},
                {"max_keep", c.detection.max_keep}}},
              {"heads", {{"enable", heads}}},
              {"bias", {{"enable", c.scoring.bias}}},
              {"mhom", {{"enable", c.scoring.mhom}}},
              {"pseudo", {{"threshold", c.pseudo_threshold}}},
              {"match_iou", c.match_iou},
              {"held_out", c.held_out},
              {"seed", c.seed},
              {"jobs", c.jobs}};
}

RunConfig merge_config(RunConfig c, const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  auto take = [&](const Json& obj, const char* key, auto& dst) {
    if (obj.is_object() && obj.contains(key)) dst = require<std::decay_t<decltype(dst)>>(obj, key);
  };
  take(j, "tau", c.scoring.tau);
  take(j, "gamma", c.scoring.gamma);
  take(j, "lambda_neg", c.scoring.lambda_neg);
  take(j, "J", c.registry_size);
  take(j, "M", c.signature_rows);
  take(j, "match_iou", c.match_iou);
  take(j, "held_out", c.held_out);
  take(j, "seed", c.seed);
  take(j, "jobs", c.jobs);
  if (j.contains("detection")) {
    const auto& d = j.at("detection");
    take(d, "threshold", c.detection.threshold);
    take(d, "min_keep", c.detection.min_keep);
    take(d, "max_keep", c.detection.max_keep);
  }
  if (j.contains("heads") && j.at("heads").contains("enable")) {
    const auto& e = j.at("heads").at("enable");
    for (Head h : kAllHeads) {
      take(e, std::string(head_name(h)).c_str(), c.scoring.heads[static_cast<std::size_t>(h)]);
    }
  }
  if (j.contains("bias")) take(j.at("bias"), "enable", c.scoring.bias);
  if (j.contains("mhom")) take(j.at("mhom"), "enable", c.scoring.mhom);
  if (j.contains("pseudo")) take(j.at("pseudo"), "threshold", c.pseudo_threshold);
  return c;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  return merge_config(std::move(base), read_json(path));
}

}  // namespace hoi
