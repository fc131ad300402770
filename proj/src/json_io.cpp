// SPDX-License-Identifier: Apache-2.0
#include "hoi/json_io.hpp"

#include "hoi/tensor_io.hpp"

namespace hoi {

Json read_json(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

Json box_to_json(const Box& b) { return Json::array({b.x1, b.y1, b.x2, b.y2}); }

Box box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) {
    throw Error(ErrorCode::ParseError, "box must be [x1, y1, x2, y2]");
  }
  Box b{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
  validate(b);
  return b;
}

Json detection_to_json(const Detection& d) {
  return Json{{"box", box_to_json(d.box)}, {"label", d.label}, {"confidence", d.confidence}};
}

Detection detection_from_json(const Json& j) {
  if (!j.contains("box")) throw Error(ErrorCode::ParseError, "missing field 'box'");
  Detection d{box_from_json(j.at("box")), require<std::string>(j, "label"),
              require<double>(j, "confidence")};
  if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
    throw Error(ErrorCode::ParseError, "confidence outside [0, 1]");
  }
  return d;
}

Json vocabulary_to_json(const Vocabulary& v) {
  Json cats = Json::array();
  for (const auto& c : v.categories()) {
    cats.push_back(Json{{"id", c.id}, {"verb", c.verb}, {"object", c.object}, {"rare", c.rare}});
  }
  return Json{{"person_label", v.person_label()}, {"categories", std::move(cats)}};
}

Vocabulary vocabulary_from_json(const Json& j) {
  std::vector<InteractionCategory> cats;
  const auto list = require<Json>(j, "categories");
  for (const auto& c : list) {
    cats.push_back({require<int>(c, "id"), require<std::string>(c, "verb"),
                    require<std::string>(c, "object"), require<bool>(c, "rare")});
  }
  const std::string person = j.contains("person_label") ? j.at("person_label").get<std::string>()
                                                        : std::string("person");
  return Vocabulary(std::move(cats), person);
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  return vocabulary_from_json(read_json(path));
}

void save_vocabulary(const Vocabulary& v, const std::filesystem::path& path) {
  write_json(path, vocabulary_to_json(v));
}

}  // namespace hoi
