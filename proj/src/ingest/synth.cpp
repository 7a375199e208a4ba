#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "evcharge/csv.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/ingest.hpp"
#include "evcharge/rng.hpp"

namespace evcharge::ingest {

using nlohmann::json;

namespace {

int soc_bin(double soc) { return std::min(kSocStates - 1, static_cast<int>(std::floor(soc * kSocStates))); }

void check_probability(double p, const std::string& what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(what + " must be in [0, 1]");
}

void validate_mix(const DayTypeMix& mix, const std::string& name) {
  check_probability(mix.unused_probability, name + ".unused_probability");
  check_probability(mix.persistence, name + ".persistence");
  if (mix.archetypes.empty()) throw ConfigError(name + ": at least one archetype is required");
  double total = 0.0;
  for (const auto& a : mix.archetypes) {
    if (!(a.weight >= 0.0)) throw ConfigError(name + "." + a.name + ": weight must be >= 0");
    if (a.journeys.empty()) throw ConfigError(name + "." + a.name + ": archetype has no journeys");
    for (const auto& t : a.journeys) {
      if (t.start_mean < 0.0 || t.start_mean >= kMinutesPerDay || t.start_sd < 0.0 ||
          !(t.duration_mean > 0.0) || t.duration_sd < 0.0 || !(t.distance_mean > 0.0) ||
          t.distance_sd < 0.0)
        throw ConfigError(name + "." + a.name + ": invalid journey template");
    }
    total += a.weight;
  }
  if (std::fabs(total - 1.0) > 1e-9)
    throw ConfigError(name + ": archetype weights sum to " + csv::format_double(total) +
                      ", expected 1");
}

// ------------------------------------------------------------ JSON mapping

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->template get<T>();
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

JourneyTemplate template_from_json(const json& j) {
  reject_unknown(j, {"start_mean", "start_sd", "duration_mean", "duration_sd", "distance_mean",
                     "distance_sd"},
                 "journey template");
  JourneyTemplate t;
  read_opt(j, "start_mean", t.start_mean);
  read_opt(j, "start_sd", t.start_sd);
  read_opt(j, "duration_mean", t.duration_mean);
  read_opt(j, "duration_sd", t.duration_sd);
  read_opt(j, "distance_mean", t.distance_mean);
  read_opt(j, "distance_sd", t.distance_sd);
  return t;
}

DayTypeMix mix_from_json(const json& j, const std::string& where) {
  reject_unknown(j, {"unused_probability", "persistence", "archetypes"}, where);
  DayTypeMix mix;
  read_opt(j, "unused_probability", mix.unused_probability);
  read_opt(j, "persistence", mix.persistence);
  for (const auto& a : j.at("archetypes")) {
    reject_unknown(a, {"name", "weight", "journeys"}, where + " archetype");
    Archetype arch;
    arch.name = a.at("name").get<std::string>();
    arch.weight = a.at("weight").get<double>();
    for (const auto& t : a.at("journeys")) arch.journeys.push_back(template_from_json(t));
    mix.archetypes.push_back(std::move(arch));
  }
  return mix;
}

json mix_to_json(const DayTypeMix& mix) {
  json archs = json::array();
  for (const auto& a : mix.archetypes) {
    json js = json::array();
    for (const auto& t : a.journeys)
      js.push_back({{"start_mean", t.start_mean},
                    {"start_sd", t.start_sd},
                    {"duration_mean", t.duration_mean},
                    {"duration_sd", t.duration_sd},
                    {"distance_mean", t.distance_mean},
                    {"distance_sd", t.distance_sd}});
    archs.push_back({{"name", a.name}, {"weight", a.weight}, {"journeys", js}});
  }
  return {{"unused_probability", mix.unused_probability},
          {"persistence", mix.persistence},
          {"archetypes", archs}};
}

// ------------------------------------------------------------- generation

struct OpenCharge {
  double start = 0.0;  // absolute minutes
  double soc_start = 0.0;
  double full_at = 0.0;
};

class VehicleGenerator {
 public:
  VehicleGenerator(const SynthesisSpec& spec, std::string id, Rng rng)
      : spec_(spec), id_(std::move(id)), rng_(std::move(rng)), soc_(spec.initial_soc) {
    rate_per_minute_ = spec.charger_kw * spec.efficiency / 60.0 / spec.battery_kwh;
  }

  void run(SyntheticFleet& fleet) {
    int prev_archetype = -1;
    DayType prev_type = DayType::Weekday;
    for (int n = 0; n < spec_.n_days; ++n) {
      const int day_index = spec_.first_day_index + n;
      const DayType type = day_type_for(day_index);
      const DayTypeMix& mix = type == DayType::Weekday ? spec_.weekday : spec_.weekend;

      int archetype = -1;
      if (rng_.uniform() >= mix.unused_probability) {
        const double keep = rng_.uniform();
        if (prev_archetype >= 0 && prev_type == type && keep < mix.persistence) {
          archetype = prev_archetype;
        } else {
          archetype = pick_archetype(mix);
        }
      }
      VehicleDay day{id_, day_index, type, {}};
      if (archetype >= 0) day.journeys = make_journeys(mix.archetypes[archetype], day_index);
      simulate_day(day, fleet.charges);

      fleet.labels.push_back(
          {id_, day_index, archetype, archetype >= 0 ? mix.archetypes[archetype].name : "U"});
      fleet.days.push_back(std::move(day));
      prev_archetype = archetype;
      prev_type = type;
    }
    if (open_) close_charge(open_->full_at, fleet.charges);
  }

 private:
  int pick_archetype(const DayTypeMix& mix) {
    const double u = rng_.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < mix.archetypes.size(); ++i) {
      acc += mix.archetypes[i].weight;
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(mix.archetypes.size()) - 1;
  }

  std::vector<Journey> make_journeys(const Archetype& arch, int day_index) {
    std::vector<Journey> out;
    for (const auto& t : arch.journeys) {
      const double start = std::round(rng_.normal(t.start_mean, t.start_sd));
      const double duration = std::max(5.0, std::round(rng_.normal(t.duration_mean, t.duration_sd)));
      const double distance = std::max(0.5, rng_.normal(t.distance_mean, t.distance_sd));
      Journey j{id_, day_index, std::clamp(start, 0.0, double(kMinutesPerDay - 1)), 0.0,
                std::round(distance * 100.0) / 100.0, std::nullopt};
      j.end_minute = j.start_minute + duration;
      out.push_back(j);
    }
    std::sort(out.begin(), out.end(),
              [](const Journey& a, const Journey& b) { return a.start_minute < b.start_minute; });
    std::vector<Journey> kept;
    for (auto j : out) {
      const double duration = j.end_minute - j.start_minute;
      if (!kept.empty()) {
        const double earliest = kept.back().end_minute + spec_.min_gap_minutes;
        if (j.start_minute < earliest) j.start_minute = earliest;
      }
      j.end_minute = j.start_minute + duration;
      if (j.end_minute > kMinutesPerDay - 1) {
        j.start_minute = kMinutesPerDay - 1 - duration;
        j.end_minute = kMinutesPerDay - 1;
        if (!kept.empty() && j.start_minute < kept.back().end_minute + spec_.min_gap_minutes) continue;
        if (j.start_minute < 0.0) continue;
      }
      j.energy_kwh = j.distance * spec_.kwh_per_mile;
      kept.push_back(j);
    }
    return kept;
  }

  void start_charge(double at) {
    open_ = OpenCharge{at, soc_, at + (1.0 - soc_) / rate_per_minute_};
  }

  void close_charge(double at, std::vector<ChargeEvent>& out) {
    const OpenCharge c = *open_;
    open_.reset();
    double end = std::min(at, c.full_at);
    double soc_end = end >= c.full_at ? 1.0 : std::min(1.0, c.soc_start + rate_per_minute_ * (end - c.start));
    if (end <= c.start) {
      // Plugged in while already full: logged as a one-minute event.
      end = c.start + 1.0;
      soc_end = c.soc_start;
    }
    soc_ = soc_end;
    const int day = static_cast<int>(std::floor(c.start / kMinutesPerDay));
    const double base = day * double(kMinutesPerDay);
    out.push_back({id_, day, c.start - base, end - base, c.soc_start, soc_end});
  }

  // Settles a charge that completed before `t`.
  void settle(double t, std::vector<ChargeEvent>& out) {
    if (open_ && open_->full_at <= t) close_charge(open_->full_at, out);
  }

  void simulate_day(const VehicleDay& day, std::vector<ChargeEvent>& out) {
    const double base = day.day_index * double(kMinutesPerDay);
    const auto& js = day.journeys;
    const auto& policy = spec_.charging;
    std::size_t next_start = 0, next_end = 0;
    for (int t = 0; t <= kSlotsPerDay; ++t) {
      const double slot_start = t * double(kSlotMinutes);
      // Journey events strictly before this slot start; ends at the slot
      // start are handled before the slot decision.
      while (true) {
        const double ts = next_start < js.size() ? js[next_start].start_minute : 1e18;
        const double te = next_end < js.size() ? js[next_end].end_minute : 1e18;
        const double limit = t == kSlotsPerDay ? 1e17 : slot_start;
        if (te <= limit && te <= ts) {
          handle_journey_end(day, next_end, base + te, out);
          ++next_end;
        } else if (ts < limit) {
          settle(base + ts, out);
          if (open_) close_charge(base + ts, out);
          ++next_start;
        } else {
          break;
        }
      }
      if (t == kSlotsPerDay) break;
      const double now = base + slot_start;
      settle(now, out);
      if (open_) continue;
      bool away = false, ends_in_slot = false;
      for (const auto& j : js) {
        if (j.start_minute <= slot_start && slot_start < j.end_minute) away = true;
        if (slot_of_minute(j.end_minute) == t) ends_in_slot = true;
      }
      if (away || ends_in_slot) continue;
      if (now - last_journey_end_ <= policy.window_minutes) continue;
      const double p = policy.independent_probability(t, soc_bin(soc_));
      if (rng_.uniform() < p) start_charge(now);
    }
  }

  void handle_journey_end(const VehicleDay& day, std::size_t index, double at,
                          std::vector<ChargeEvent>& out) {
    settle(at, out);
    const Journey& j = day.journeys[index];
    soc_ = std::max(0.0, soc_ - *j.energy_kwh / spec_.battery_kwh);
    last_journey_end_ = at;
    const auto& policy = spec_.charging;
    const bool final_journey = index + 1 == day.journeys.size();
    if (policy.final_journey_only && !final_journey) return;
    const double u = rng_.uniform();
    const double delay_draw = rng_.uniform();
    if (u < policy.after_journey_probability(soc_bin(soc_))) {
      const double delay = std::floor(delay_draw * (policy.max_delay_minutes + 1.0));
      start_charge(at + delay);
    }
  }

  const SynthesisSpec& spec_;
  std::string id_;
  Rng rng_;
  double soc_;
  double rate_per_minute_;
  double last_journey_end_ = -std::numeric_limits<double>::infinity();
  std::optional<OpenCharge> open_;
};

}  // namespace

double ChargingPolicy::after_journey_probability(int soc_state) const {
  return after_journey_by_soc.at(static_cast<std::size_t>(soc_state));
}

double ChargingPolicy::independent_probability(int slot, int soc_state) const {
  double p = independent_background;
  for (const auto& [s, prob] : independent_peaks)
    if (s == slot) p += prob;
  return std::clamp(p * independent_soc_factor.at(static_cast<std::size_t>(soc_state)), 0.0, 1.0);
}

void SynthesisSpec::validate() const {
  if (n_vehicles < 1) throw ConfigError("n_vehicles must be >= 1");
  if (n_days < 1) throw ConfigError("n_days must be >= 1");
  if (first_day_index < 0) throw ConfigError("first_day_index must be >= 0");
  if (!(battery_kwh > 0.0)) throw ConfigError("battery_kwh must be > 0");
  if (!(kwh_per_mile > 0.0)) throw ConfigError("kwh_per_mile must be > 0");
  check_probability(initial_soc, "initial_soc");
  if (!(charger_kw > 0.0)) throw ConfigError("charger_kw must be > 0");
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ConfigError("efficiency must be in (0, 1]");
  if (min_gap_minutes < 0.0) throw ConfigError("min_gap_minutes must be >= 0");
  validate_mix(weekday, "weekday");
  validate_mix(weekend, "weekend");
  for (double p : charging.after_journey_by_soc) check_probability(p, "charging.after_journey_by_soc");
  for (double f : charging.independent_soc_factor)
    if (f < 0.0) throw ConfigError("charging.independent_soc_factor must be >= 0");
  check_probability(charging.independent_background, "charging.independent_background");
  for (const auto& [slot, p] : charging.independent_peaks) {
    if (slot < 0 || slot >= kSlotsPerDay) throw ConfigError("independent peak slot out of range");
    check_probability(p, "independent peak probability");
  }
  if (!(charging.window_minutes > 0.0)) throw ConfigError("charging.window_minutes must be > 0");
  if (charging.max_delay_minutes < 0.0 || charging.max_delay_minutes > charging.window_minutes)
    throw ConfigError("charging.max_delay_minutes must be in [0, window_minutes]");
  if (charging.max_delay_minutes >= min_gap_minutes && min_gap_minutes > 0.0)
    throw ConfigError("charging.max_delay_minutes must be below min_gap_minutes");
}

SynthesisSpec SynthesisSpec::defaults() {
  SynthesisSpec s;
  auto trip = [](double start, double sd, double dur, double miles) {
    return JourneyTemplate{start, sd, dur, dur * 0.2, miles, miles * 0.2};
  };
  s.weekday.unused_probability = 0.15;
  s.weekday.persistence = 0.5;
  s.weekday.archetypes = {
      {"commuter", 0.4, {trip(450, 15, 45, 14), trip(1050, 15, 45, 14)}},
      {"morning", 0.3, {trip(570, 20, 25, 6), trip(690, 20, 25, 6)}},
      {"evening", 0.3, {trip(1170, 20, 25, 7), trip(1290, 20, 25, 7)}},
  };
  s.weekend.unused_probability = 0.3;
  s.weekend.persistence = 0.3;
  s.weekend.archetypes = {
      {"late_morning", 0.35, {trip(600, 30, 30, 8), trip(720, 30, 30, 8)}},
      {"afternoon", 0.35, {trip(840, 30, 30, 9), trip(960, 30, 30, 9)}},
      {"spread", 0.3, {trip(540, 30, 20, 5), trip(750, 30, 20, 5), trip(960, 30, 20, 5),
                       trip(1140, 30, 20, 5)}},
  };
  s.charging.after_journey_by_soc = {0.95, 0.85, 0.6, 0.35, 0.15, 0.05};
  s.charging.final_journey_only = false;
  s.charging.max_delay_minutes = 5.0;
  s.charging.independent_background = 0.002;
  s.charging.independent_peaks = {{0, 0.25}, {1, 0.05}};
  s.charging.independent_soc_factor = {1.0, 1.0, 0.8, 0.5, 0.2, 0.05};
  return s;
}

SynthesisSpec parse_synthesis_spec(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthesis spec: ") + e.what());
  }
  SynthesisSpec s = SynthesisSpec::defaults();
  try {
    reject_unknown(j,
                   {"n_vehicles", "n_days", "first_day_index", "id_prefix", "battery_kwh",
                    "kwh_per_mile", "initial_soc", "charger_kw", "efficiency", "min_gap_minutes",
                    "weekday", "weekend", "charging"},
                   "synthesis spec");
    read_opt(j, "n_vehicles", s.n_vehicles);
    read_opt(j, "n_days", s.n_days);
    read_opt(j, "first_day_index", s.first_day_index);
    read_opt(j, "id_prefix", s.id_prefix);
    read_opt(j, "battery_kwh", s.battery_kwh);
    read_opt(j, "kwh_per_mile", s.kwh_per_mile);
    read_opt(j, "initial_soc", s.initial_soc);
    read_opt(j, "charger_kw", s.charger_kw);
    read_opt(j, "efficiency", s.efficiency);
    read_opt(j, "min_gap_minutes", s.min_gap_minutes);
    if (j.contains("weekday")) s.weekday = mix_from_json(j["weekday"], "weekday");
    if (j.contains("weekend")) s.weekend = mix_from_json(j["weekend"], "weekend");
    if (j.contains("charging")) {
      const auto& c = j["charging"];
      reject_unknown(c,
                     {"after_journey_by_soc", "final_journey_only", "max_delay_minutes",
                      "independent_background", "independent_peaks", "independent_soc_factor",
                      "window_minutes"},
                     "charging");
      read_opt(c, "after_journey_by_soc", s.charging.after_journey_by_soc);
      read_opt(c, "final_journey_only", s.charging.final_journey_only);
      read_opt(c, "max_delay_minutes", s.charging.max_delay_minutes);
      read_opt(c, "independent_background", s.charging.independent_background);
      read_opt(c, "independent_soc_factor", s.charging.independent_soc_factor);
      read_opt(c, "window_minutes", s.charging.window_minutes);
      if (c.contains("independent_peaks")) {
        s.charging.independent_peaks.clear();
        for (const auto& p : c["independent_peaks"])
          s.charging.independent_peaks.emplace_back(p.at("slot").get<int>(),
                                                    p.at("probability").get<double>());
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synthesis spec: ") + e.what());
  }
  s.validate();
  return s;
}

SynthesisSpec load_synthesis_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read synthesis spec '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_synthesis_spec(ss.str());
}

std::string synthesis_spec_to_json(const SynthesisSpec& s) {
  json peaks = json::array();
  for (const auto& [slot, p] : s.charging.independent_peaks)
    peaks.push_back({{"slot", slot}, {"probability", p}});
  json j = {{"n_vehicles", s.n_vehicles},
            {"n_days", s.n_days},
            {"first_day_index", s.first_day_index},
            {"id_prefix", s.id_prefix},
            {"battery_kwh", s.battery_kwh},
            {"kwh_per_mile", s.kwh_per_mile},
            {"initial_soc", s.initial_soc},
            {"charger_kw", s.charger_kw},
            {"efficiency", s.efficiency},
            {"min_gap_minutes", s.min_gap_minutes},
            {"weekday", mix_to_json(s.weekday)},
            {"weekend", mix_to_json(s.weekend)},
            {"charging",
             {{"after_journey_by_soc", s.charging.after_journey_by_soc},
              {"final_journey_only", s.charging.final_journey_only},
              {"max_delay_minutes", s.charging.max_delay_minutes},
              {"independent_background", s.charging.independent_background},
              {"independent_peaks", peaks},
              {"independent_soc_factor", s.charging.independent_soc_factor},
              {"window_minutes", s.charging.window_minutes}}}};
  return j.dump(2);
}

SyntheticFleet synthesize_fleet(const SynthesisSpec& spec, std::uint64_t seed) {
  spec.validate();
  SyntheticFleet fleet;
  fleet.days.reserve(static_cast<std::size_t>(spec.n_vehicles) * spec.n_days);
  const int width = static_cast<int>(std::to_string(spec.n_vehicles - 1).size());
  for (int v = 0; v < spec.n_vehicles; ++v) {
    std::string num = std::to_string(v);
    std::string id = spec.id_prefix + std::string(width - num.size(), '0') + num;
    VehicleGenerator gen(spec, std::move(id), Rng(seed, "synth-vehicle", static_cast<std::uint64_t>(v)));
    gen.run(fleet);
  }
  return fleet;
}

void write_ground_truth_csv(std::ostream& out, const std::vector<GroundTruthLabel>& labels) {
  out << "vehicle_id,day_index,archetype,name\n";
  for (const auto& l : labels)
    out << csv::escape(l.vehicle_id) << ',' << l.day_index << ',' << l.archetype << ','
        << csv::escape(l.name) << '\n';
}

}  // namespace evcharge::ingest
