#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "evcharge/charge_model.hpp"
#include "evcharge/csv.hpp"
#include "evcharge/errors.hpp"

namespace evcharge::charging {

using nlohmann::json;

std::string to_json(const PosteriorTables& t) {
  json j = {
      {"dimensions",
       {{"day_types", kDayTypes},
        {"slots", kSlotsPerDay},
        {"clusters", t.n_clusters()},
        {"soc_states", kSocStates}}},
      {"layout", {{"after_journey", "d,t,k,s"}, {"independent", "d,t,s"}}},
      {"sigma", t.sigma},
      {"window_minutes", t.window_minutes},
      {"after_journey",
       {{"probabilities", t.after_journey_values()},
        {"opportunities", t.after_journey_opportunities},
        {"charges", t.after_journey_charges}}},
      {"independent",
       {{"probabilities", t.independent_values()},
        {"opportunities", t.independent_opportunities},
        {"charges", t.independent_charges}}},
      {"warnings", t.warnings},
  };
  return j.dump(1);
}

PosteriorTables tables_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    const auto& dims = j.at("dimensions");
    if (dims.at("day_types").get<int>() != kDayTypes || dims.at("slots").get<int>() != kSlotsPerDay ||
        dims.at("soc_states").get<int>() != kSocStates)
      throw ConfigError("posterior tables: unsupported dimensions");
    PosteriorTables t(dims.at("clusters").get<int>());
    auto aj = j.at("after_journey").at("probabilities").get<std::vector<double>>();
    auto ind = j.at("independent").at("probabilities").get<std::vector<double>>();
    if (aj.size() != t.after_journey_cells() || ind.size() != t.independent_cells())
      throw ConfigError("posterior tables: probability arrays have the wrong size");
    for (double p : aj)
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("posterior tables: probability outside [0, 1]");
    for (double p : ind)
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("posterior tables: probability outside [0, 1]");
    t.after_journey_values() = std::move(aj);
    t.independent_values() = std::move(ind);
    t.sigma = j.at("sigma").get<double>();
    if (j.contains("window_minutes")) t.window_minutes = j["window_minutes"].get<double>();
    auto read_counts = [](const json& block, const char* key) {
      if (!block.contains(key)) return std::vector<std::uint64_t>{};
      return block[key].get<std::vector<std::uint64_t>>();
    };
    t.after_journey_opportunities = read_counts(j["after_journey"], "opportunities");
    t.after_journey_charges = read_counts(j["after_journey"], "charges");
    t.independent_opportunities = read_counts(j["independent"], "opportunities");
    t.independent_charges = read_counts(j["independent"], "charges");
    if (j.contains("warnings")) t.warnings = j["warnings"].get<std::vector<std::string>>();
    return t;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("posterior tables: ") + e.what());
  }
}

PosteriorTables load_tables(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read posterior tables '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return tables_from_json(ss.str());
}

void write_after_journey_heatmap(std::ostream& out, const PosteriorTables& t) {
  out << "d,t,k,s,probability\n";
  for (int d = 0; d < kDayTypes; ++d)
    for (int slot = 0; slot < kSlotsPerDay; ++slot)
      for (int k = 1; k <= t.n_clusters(); ++k)
        for (int s = 0; s < kSocStates; ++s)
          out << d << ',' << slot << ',' << k << ',' << s << ','
              << csv::format_double(t.after_journey(static_cast<DayType>(d), slot, k, s)) << '\n';
}

void write_independent_heatmap(std::ostream& out, const PosteriorTables& t) {
  out << "d,t,k,s,probability\n";
  for (int d = 0; d < kDayTypes; ++d)
    for (int slot = 0; slot < kSlotsPerDay; ++slot)
      for (int s = 0; s < kSocStates; ++s)
        out << d << ',' << slot << ",0," << s << ','
            << csv::format_double(t.independent(static_cast<DayType>(d), slot, s)) << '\n';
}

}  // namespace evcharge::charging
