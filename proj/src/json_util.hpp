#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <string>

#include "pressmap/error.hpp"
#include "pressmap/projection.hpp"

namespace pressmap::detail {

using nlohmann::json;

inline json geometry_to_json(const ImageGeometry& g) {
  return {{"rows", g.rows}, {"cols", g.cols}, {"pitch_m", g.pitch}, {"origin_xy_m", {g.origin.x(), g.origin.y()}}};
}

inline ImageGeometry geometry_from_json(const json& j) {
  ImageGeometry g;
  g.rows = j.at("rows").get<int>();
  g.cols = j.at("cols").get<int>();
  g.pitch = j.at("pitch_m").get<double>();
  const auto o = j.at("origin_xy_m").get<std::vector<double>>();
  if (o.size() != 2) throw Error(ErrorCode::ConfigInvalid, "origin_xy_m needs two values");
  g.origin = {o[0], o[1]};
  validate(g);
  return g;
}

// Throws ConfigInvalid naming the first key outside `allowed`.
inline void require_known_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigInvalid, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::ConfigInvalid, "unknown key '" + key + "' in " + where);
  }
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace pressmap::detail
