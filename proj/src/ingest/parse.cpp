#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "evcharge/csv.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/ingest.hpp"

namespace evcharge::ingest {
namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw DataError("error while reading '" + path.string() + "'");
  return ss.str();
}

// Iterates over lines, yielding (1-based line number, content).
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    ++line_no;
    fn(line_no, line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
}

struct PendingJourney {
  Journey journey;
  std::size_t line = 0;
};

struct DayKey {
  std::size_t vehicle;
  int day;
  bool operator<(const DayKey& o) const {
    return vehicle != o.vehicle ? vehicle < o.vehicle : day < o.day;
  }
};

class JourneyCollector {
 public:
  explicit JourneyCollector(ParseReport& report) : report_(report) {}

  std::size_t vehicle_index(const std::string& id) {
    auto [it, inserted] = vehicles_.try_emplace(id, ids_.size());
    if (inserted) ids_.push_back(id);
    return it->second;
  }

  void mark_day(const std::string& id, int day) { days_[{vehicle_index(id), day}]; }

  void add(Journey j, std::size_t line) {
    const auto v = vehicle_index(j.vehicle_id);
    days_[{v, j.day_index}].push_back({std::move(j), line});
  }

  bool known(const std::string& id) const { return vehicles_.count(id) != 0; }
  const std::vector<std::string>& ids() const { return ids_; }

  std::vector<VehicleDay> finish(const ParseConfig& config) {
    if (config.fill_gaps) {
      std::map<std::size_t, std::pair<int, int>> range;
      for (const auto& [key, _] : days_) {
        auto [it, inserted] = range.try_emplace(key.vehicle, key.day, key.day);
        it->second.first = std::min(it->second.first, key.day);
        it->second.second = std::max(it->second.second, key.day);
      }
      for (const auto& [v, r] : range)
        for (int d = r.first; d <= r.second; ++d) days_[{v, d}];
    }
    std::vector<VehicleDay> out;
    out.reserve(days_.size());
    for (auto& [key, pending] : days_) {
      std::stable_sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) {
        return a.journey.start_minute < b.journey.start_minute;
      });
      VehicleDay day{ids_[key.vehicle], key.day, day_type_for(key.day), {}};
      for (auto& p : pending) {
        if (!day.journeys.empty() && p.journey.start_minute < day.journeys.back().end_minute) {
          report_.errors.push_back({p.line, "start_minute",
                                    "journey overlaps the previous journey of vehicle '" +
                                        day.vehicle_id + "' on day " +
                                        std::to_string(day.day_index)});
          continue;
        }
        day.journeys.push_back(std::move(p.journey));
      }
      out.push_back(std::move(day));
    }
    return out;
  }

 private:
  ParseReport& report_;
  std::unordered_map<std::string, std::size_t> vehicles_;
  std::vector<std::string> ids_;
  std::map<DayKey, std::vector<PendingJourney>> days_;
};

bool all_blank(const std::vector<std::string>& f, std::size_t from) {
  for (std::size_t i = from; i < f.size(); ++i)
    if (!csv::trim(f[i]).empty()) return false;
  return true;
}

void parse_journey_rows(std::string_view text, const ParseConfig& config, ParseReport& report,
                        JourneyCollector& collector) {
  bool header_seen = false;
  bool has_energy = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const auto line = csv::trim(raw);
    if (line.empty()) return;
    if (!header_seen) {
      if (line == kSurveyHeader) {
        has_energy = false;
      } else if (line == kTrialJourneyHeader) {
        has_energy = true;
      } else {
        throw DataError(report.source + ": unexpected header '" + std::string(line) + "'");
      }
      if (config.require_energy && !has_energy)
        throw DataError(report.source + ": trial journeys need an energy_kwh column");
      header_seen = true;
      return;
    }
    ++report.rows;
    const auto f = csv::split(line);
    const std::size_t expected = has_energy ? 6 : 5;
    auto fail = [&](std::string field, std::string message) {
      report.errors.push_back({line_no, std::move(field), std::move(message)});
    };
    if (f.size() != expected) {
      fail("", "expected " + std::to_string(expected) + " fields, found " +
                   std::to_string(f.size()));
      return;
    }
    const std::string id(csv::trim(f[0]));
    if (id.empty()) return fail("vehicle_id", "empty vehicle id");
    const auto day = csv::parse_int(f[1]);
    if (!day || *day < 0 || *day > 1'000'000) return fail("day_index", "invalid day index");
    if (all_blank(f, 2)) {
      collector.mark_day(id, static_cast<int>(*day));
      return;
    }
    const auto start = csv::parse_double(f[2]);
    if (!start || *start < 0.0 || *start >= kMinutesPerDay)
      return fail("start_minute", "start_minute must be in [0, 1440)");
    auto end = csv::parse_double(f[3]);
    if (!end || *end < 0.0) return fail("end_minute", "invalid end_minute");
    if (*end == *start) return fail("end_minute", "journey has zero duration");
    if (*end < *start) *end += kMinutesPerDay;  // wrapped past midnight
    if (*end > 2.0 * kMinutesPerDay) return fail("end_minute", "journey spans more than one midnight");
    const auto distance = csv::parse_double(f[4]);
    if (!distance || *distance <= 0.0) return fail("distance_miles", "distance must be > 0");
    std::optional<double> energy;
    if (has_energy && !csv::trim(f[5]).empty()) {
      energy = csv::parse_double(f[5]);
      if (!energy || *energy < 0.0) return fail("energy_kwh", "energy must be >= 0");
    }
    if (config.require_energy && !energy) return fail("energy_kwh", "missing energy_kwh");

    const int d = static_cast<int>(*day);
    if (*end <= kMinutesPerDay) {
      collector.add({id, d, *start, *end, *distance, energy}, line_no);
      return;
    }
    // Split at midnight in proportion to duration.
    const double total = *end - *start;
    const double first_share = (kMinutesPerDay - *start) / total;
    const double first_distance = *distance * first_share;
    std::optional<double> first_energy, second_energy;
    if (energy) {
      first_energy = *energy * first_share;
      second_energy = *energy - *first_energy;
    }
    collector.add({id, d, *start, double(kMinutesPerDay), first_distance, first_energy}, line_no);
    collector.add({id, d + 1, 0.0, *end - kMinutesPerDay, *distance - first_distance, second_energy},
                  line_no);
  });
}

std::vector<ChargeEvent> parse_charge_rows(std::string_view text, ParseReport& report,
                                           const JourneyCollector& journeys) {
  std::vector<ChargeEvent> out;
  bool header_seen = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const auto line = csv::trim(raw);
    if (line.empty()) return;
    if (!header_seen) {
      if (line != kChargeHeader)
        throw DataError(report.source + ": unexpected header '" + std::string(line) + "'");
      header_seen = true;
      return;
    }
    ++report.rows;
    const auto f = csv::split(line);
    auto fail = [&](std::string field, std::string message) {
      report.errors.push_back({line_no, std::move(field), std::move(message)});
    };
    if (f.size() != 6) return fail("", "expected 6 fields, found " + std::to_string(f.size()));
    ChargeEvent ev;
    ev.vehicle_id = std::string(csv::trim(f[0]));
    if (ev.vehicle_id.empty()) return fail("vehicle_id", "empty vehicle id");
    const auto day = csv::parse_int(f[1]);
    if (!day || *day < 0 || *day > 1'000'000) return fail("day_index", "invalid day index");
    ev.day_index = static_cast<int>(*day);
    const auto start = csv::parse_double(f[2]);
    if (!start || *start < 0.0 || *start >= kMinutesPerDay)
      return fail("start_minute", "start_minute must be in [0, 1440)");
    const auto end = csv::parse_double(f[3]);
    if (!end || *end < 0.0) return fail("end_minute", "invalid end_minute");
    if (*end == *start) return fail("end_minute", "charge has zero duration");
    ev.start_minute = *start;
    ev.end_minute = *end <= *start ? *end + kMinutesPerDay : *end;
    const auto s0 = csv::parse_double(f[4]);
    if (!s0 || *s0 < 0.0 || *s0 > 1.0) return fail("soc_start", "soc_start must be in [0, 1]");
    const auto s1 = csv::parse_double(f[5]);
    if (!s1 || *s1 < 0.0 || *s1 > 1.0) return fail("soc_end", "soc_end must be in [0, 1]");
    if (*s1 < *s0) return fail("soc_end", "soc_end is below soc_start");
    ev.soc_start = *s0;
    ev.soc_end = *s1;
    if (!journeys.known(ev.vehicle_id))
      report.warnings.push_back({line_no, "vehicle_id",
                                 "charge for vehicle '" + ev.vehicle_id + "' without journeys"});
    out.push_back(std::move(ev));
  });
  return out;
}

}  // namespace

std::string ParseReport::to_json() const {
  auto rows_json = [](const std::vector<RowError>& rows) {
    auto arr = nlohmann::json::array();
    for (const auto& e : rows)
      arr.push_back({{"line", e.line}, {"field", e.field}, {"message", e.message}});
    return arr;
  };
  nlohmann::json j = {{"source", source},
                      {"rows", rows},
                      {"errors", rows_json(errors)},
                      {"warnings", rows_json(warnings)}};
  return j.dump(2);
}

SurveyData parse_survey_text(std::string_view text, const ParseConfig& config, std::string source) {
  SurveyData data;
  data.report.source = std::move(source);
  JourneyCollector collector(data.report);
  parse_journey_rows(text, config, data.report, collector);
  data.days = collector.finish(config);
  std::stable_sort(data.report.errors.begin(), data.report.errors.end(),
                   [](const RowError& a, const RowError& b) { return a.line < b.line; });
  return data;
}

SurveyData parse_survey(const std::filesystem::path& path, const ParseConfig& config) {
  return parse_survey_text(read_file(path), config, path.string());
}

TrialData parse_trial_text(std::string_view journeys_text, std::string_view charges_text,
                           const ParseConfig& config) {
  ParseConfig trial_config = config;
  trial_config.require_energy = true;
  TrialData data;
  data.journey_report.source = "<journeys>";
  data.charge_report.source = "<charges>";
  JourneyCollector collector(data.journey_report);
  parse_journey_rows(journeys_text, trial_config, data.journey_report, collector);
  data.days = collector.finish(trial_config);
  data.charges = parse_charge_rows(charges_text, data.charge_report, collector);

  // Order charges by the journeys' vehicle order, orphans last.
  std::unordered_map<std::string, std::size_t> order;
  for (const auto& id : collector.ids()) order.emplace(id, order.size());
  for (const auto& c : data.charges) order.try_emplace(c.vehicle_id, order.size());
  std::stable_sort(data.charges.begin(), data.charges.end(),
                   [&](const ChargeEvent& a, const ChargeEvent& b) {
                     const auto va = order.at(a.vehicle_id), vb = order.at(b.vehicle_id);
                     if (va != vb) return va < vb;
                     if (a.day_index != b.day_index) return a.day_index < b.day_index;
                     return a.start_minute < b.start_minute;
                   });
  std::stable_sort(data.journey_report.errors.begin(), data.journey_report.errors.end(),
                   [](const RowError& a, const RowError& b) { return a.line < b.line; });
  return data;
}

TrialData parse_trial(const std::filesystem::path& journeys_path,
                      const std::filesystem::path& charges_path, const ParseConfig& config) {
  auto data = parse_trial_text(read_file(journeys_path), read_file(charges_path), config);
  data.journey_report.source = journeys_path.string();
  data.charge_report.source = charges_path.string();
  return data;
}

void write_journeys_csv(std::ostream& out, const std::vector<VehicleDay>& days, bool with_energy) {
  out << (with_energy ? kTrialJourneyHeader : kSurveyHeader) << '\n';
  for (const auto& day : days) {
    const auto id = csv::escape(day.vehicle_id);
    if (day.journeys.empty()) {
      out << id << ',' << day.day_index << ",,," << (with_energy ? ",\n" : "\n");
      continue;
    }
    for (const auto& j : day.journeys) {
      out << id << ',' << day.day_index << ',' << csv::format_double(j.start_minute) << ','
          << csv::format_double(j.end_minute) << ',' << csv::format_double(j.distance);
      if (with_energy) {
        out << ',';
        if (j.energy_kwh) out << csv::format_double(*j.energy_kwh);
      }
      out << '\n';
    }
  }
}

void write_charges_csv(std::ostream& out, const std::vector<ChargeEvent>& charges) {
  out << kChargeHeader << '\n';
  for (const auto& c : charges) {
    out << csv::escape(c.vehicle_id) << ',' << c.day_index << ','
        << csv::format_double(c.start_minute) << ',' << csv::format_double(c.end_minute) << ','
        << csv::format_double(c.soc_start) << ',' << csv::format_double(c.soc_end) << '\n';
  }
}

}  // namespace evcharge::ingest
