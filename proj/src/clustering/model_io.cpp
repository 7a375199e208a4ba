#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evcharge/clustering.hpp"
#include "evcharge/errors.hpp"

namespace evcharge::clustering {

using nlohmann::json;

namespace {

json model_json(const ClusterModel& m) {
  json cents = json::array();
  for (const auto& c : m.centroids) cents.push_back(std::vector<double>(c.begin(), c.end()));
  return {{"day_type", std::string(to_string(m.day_type))}, {"k", m.k}, {"centroids", cents}};
}

ClusterModel model_from(const json& j) {
  ClusterModel m;
  m.day_type = day_type_from_string(j.at("day_type").get<std::string>());
  m.k = j.at("k").get<int>();
  for (const auto& c : j.at("centroids")) {
    const auto values = c.get<std::vector<double>>();
    if (values.size() != kFeatureDim) throw ConfigError("centroid must have 48 values");
    FeatureVector v;
    std::copy(values.begin(), values.end(), v.begin());
    m.centroids.push_back(v);
  }
  if (m.k < 1 || static_cast<int>(m.centroids.size()) != m.k)
    throw ConfigError("cluster model: k does not match the number of centroids");
  return m;
}

json parse(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cluster model: ") + e.what());
  }
}

}  // namespace

std::string to_json(const ClusterModel& model) { return model_json(model).dump(2); }

std::string to_json(const ClusterSet& set) {
  return json{{"models", {model_json(set.weekday), model_json(set.weekend)}}}.dump(2);
}

ClusterModel cluster_model_from_json(std::string_view text) {
  try {
    return model_from(parse(text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cluster model: ") + e.what());
  }
}

ClusterSet cluster_set_from_json(std::string_view text) {
  const json j = parse(text);
  try {
    ClusterSet set;
    bool have_weekday = false, have_weekend = false;
    for (const auto& mj : j.at("models")) {
      auto m = model_from(mj);
      if (m.day_type == DayType::Weekday) {
        set.weekday = std::move(m);
        have_weekday = true;
      } else {
        set.weekend = std::move(m);
        have_weekend = true;
      }
    }
    if (!have_weekday || !have_weekend)
      throw ConfigError("cluster set needs a weekday and a weekend model");
    return set;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("cluster set: ") + e.what());
  }
}

ClusterSet load_cluster_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read cluster model '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return cluster_set_from_json(ss.str());
}

}  // namespace evcharge::clustering
