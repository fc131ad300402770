// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hoi/core.hpp"

namespace hoi {

using Json = nlohmann::ordered_json;

/// Parses a JSON file, mapping IO and syntax failures to IoError/ParseError.
Json read_json(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline so outputs diff cleanly.
void write_json(const std::filesystem::path& path, const Json& doc);

/// Looks up a required member, raising ParseError (with the member name)
/// when it is missing or has the wrong type.
template <typename T>
T require(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::ParseError, std::string("missing field '") + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "': " + e.what());
  }
}

Json box_to_json(const Box& b);
Box box_from_json(const Json& j);

Json detection_to_json(const Detection& d);
Detection detection_from_json(const Json& j);

Json vocabulary_to_json(const Vocabulary& v);
Vocabulary vocabulary_from_json(const Json& j);
Vocabulary load_vocabulary(const std::filesystem::path& path);
void save_vocabulary(const Vocabulary& v, const std::filesystem::path& path);

}  // namespace hoi
