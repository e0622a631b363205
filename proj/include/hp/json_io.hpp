#pragma once

// Small helpers shared by the JSON readers (robot, scene, model, problem files).

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "hp/types.hpp"

namespace hp {

using Json = nlohmann::json;

/// Malformed, unreadable or incompatible input file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace json_io {

inline Json read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return Json::parse(buffer.str());
  } catch (const Json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

inline void write_file(const std::filesystem::path& path, const Json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

/// Rejects keys outside `allowed` and missing keys from `required`.
inline void check_keys(const Json& obj, std::string_view context,
                       std::initializer_list<std::string_view> required,
                       std::initializer_list<std::string_view> optional = {}) {
  if (!obj.is_object()) throw IoError(std::string(context) + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    const auto known = [&](std::initializer_list<std::string_view> keys) {
      return std::find(keys.begin(), keys.end(), key) != keys.end();
    };
    if (!known(required) && !known(optional)) {
      throw IoError(std::string(context) + ": unknown field '" + key + "'");
    }
  }
  for (auto key : required) {
    if (!obj.contains(key)) {
      throw IoError(std::string(context) + ": missing field '" + std::string(key) + "'");
    }
  }
}

inline void check_version(const Json& obj, std::string_view context, int supported) {
  if (!obj.at("version").is_number_integer() || obj.at("version").get<int>() != supported) {
    throw IoError(std::string(context) + ": unsupported version (expected " +
                  std::to_string(supported) + ")");
  }
}

inline double number(const Json& value, std::string_view context) {
  if (!value.is_number()) throw IoError(std::string(context) + ": expected a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) throw IoError(std::string(context) + ": non-finite number");
  return x;
}

inline Vec vector(const Json& value, std::string_view context, Index expected_size = -1) {
  if (!value.is_array()) throw IoError(std::string(context) + ": expected an array");
  if (expected_size >= 0 && static_cast<Index>(value.size()) != expected_size) {
    throw IoError(std::string(context) + ": expected " + std::to_string(expected_size) +
                  " entries, got " + std::to_string(value.size()));
  }
  Vec out(static_cast<Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) out(static_cast<Index>(i)) = number(value[i], context);
  return out;
}

inline Vec3 vec3(const Json& value, std::string_view context) {
  return vector(value, context, 3);
}

inline Json to_json(const Vec& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

}  // namespace json_io
}  // namespace hp
