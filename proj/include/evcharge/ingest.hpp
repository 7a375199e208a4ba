#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evcharge/types.hpp"

namespace evcharge::ingest {

struct RowError {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string field;
  std::string message;
};

struct ParseReport {
  std::string source;
  std::size_t rows = 0;
  std::vector<RowError> errors;    // rows that were rejected
  std::vector<RowError> warnings;  // rows kept with a caveat

  bool ok() const { return errors.empty(); }
  std::string to_json() const;
};

struct ParseConfig {
  // Insert empty VehicleDays for days between a vehicle's first and last
  // observed day that have no rows.
  bool fill_gaps = true;
  // Journeys without an energy_kwh value are rejected (trial files).
  bool require_energy = false;
};

struct SurveyData {
  std::vector<VehicleDay> days;
  ParseReport report;
};

struct TrialData {
  std::vector<VehicleDay> days;
  std::vector<ChargeEvent> charges;  // sorted per vehicle by (day_index, start_minute)
  ParseReport journey_report;
  ParseReport charge_report;
};

// Survey CSV: vehicle_id,day_index,start_minute,end_minute,distance_miles
// [,energy_kwh]. A row whose start/end/distance fields are all empty marks an
// observed day without travel. Journeys crossing midnight (end_minute > 1440
// or end_minute < start_minute) are split at midnight with distance and
// energy shared in proportion to duration. Throws DataError if the file
// cannot be read or the header is wrong.
SurveyData parse_survey(const std::filesystem::path& path, const ParseConfig& config = {});
SurveyData parse_survey_text(std::string_view text, const ParseConfig& config = {},
                             std::string source = "<memory>");

// Trial journeys use the survey schema plus energy_kwh; charges use
// vehicle_id,day_index,start_minute,end_minute,soc_start,soc_end.
TrialData parse_trial(const std::filesystem::path& journeys_path,
                      const std::filesystem::path& charges_path, const ParseConfig& config = {});
TrialData parse_trial_text(std::string_view journeys_text, std::string_view charges_text,
                           const ParseConfig& config = {});

inline constexpr std::string_view kSurveyHeader =
    "vehicle_id,day_index,start_minute,end_minute,distance_miles";
inline constexpr std::string_view kTrialJourneyHeader =
    "vehicle_id,day_index,start_minute,end_minute,distance_miles,energy_kwh";
inline constexpr std::string_view kChargeHeader =
    "vehicle_id,day_index,start_minute,end_minute,soc_start,soc_end";

// Writes days in the survey (or trial, when with_energy) schema. Unused days
// are written as marker rows so they survive a re-parse.
void write_journeys_csv(std::ostream& out, const std::vector<VehicleDay>& days, bool with_energy);
void write_charges_csv(std::ostream& out, const std::vector<ChargeEvent>& charges);

// ---------------------------------------------------------------- SOC traces

struct SocSample {
  int day_index = 0;
  double minute = 0.0;
  double soc = 0.0;

  double abs() const { return abs_minute(day_index, minute); }
};

struct SocTrace {
  std::string vehicle_id;
  std::vector<SocSample> samples;  // ordered by time
  bool inconsistent = false;       // some inferred SOC was clamped at 0
  std::size_t clamp_count = 0;
  double max_snap_gap = 0.0;  // largest |inferred - logged| at a charge start

  // SOC in effect at an absolute minute: the value of the last sample at or
  // before it (the first sample's value before the trace starts).
  double soc_at(double abs_min) const;
};

struct SocOptions {
  double battery_kwh = 24.0;
  double initial_soc = 1.0;
  // Fallback consumption for journeys without energy_kwh; if unset such
  // journeys are a DataError.
  std::optional<double> kwh_per_mile;
};

// One vehicle's trace from its days and charges (other vehicles' records are
// ignored).
SocTrace infer_soc_trace(const std::vector<VehicleDay>& days,
                         const std::vector<ChargeEvent>& charges, const SocOptions& options);

std::map<std::string, SocTrace> infer_soc_traces(const std::vector<VehicleDay>& days,
                                                 const std::vector<ChargeEvent>& charges,
                                                 const SocOptions& options);

// ----------------------------------------------------------------- synthesis

struct JourneyTemplate {
  double start_mean = 480.0;  // minutes from midnight
  double start_sd = 20.0;
  double duration_mean = 30.0;
  double duration_sd = 5.0;
  double distance_mean = 10.0;  // miles
  double distance_sd = 2.0;
};

struct Archetype {
  std::string name;
  double weight = 0.0;
  std::vector<JourneyTemplate> journeys;
};

struct DayTypeMix {
  double unused_probability = 0.0;
  // Probability a vehicle keeps yesterday's archetype when both days share a
  // day type and yesterday was used.
  double persistence = 0.0;
  std::vector<Archetype> archetypes;
};

// Ground-truth charging behaviour used by the generator. Probabilities depend
// only on time slot and SOC state.
struct ChargingPolicy {
  std::array<double, kSocStates> after_journey_by_soc{0.9, 0.8, 0.6, 0.4, 0.2, 0.1};
  bool final_journey_only = false;
  double max_delay_minutes = 0.0;  // after-journey starts are delayed U{0..max}
  double independent_background = 0.0;
  std::vector<std::pair<int, double>> independent_peaks;  // (slot, probability)
  std::array<double, kSocStates> independent_soc_factor{1, 1, 1, 1, 1, 1};
  double window_minutes = 10.0;

  double after_journey_probability(int soc_state) const;
  double independent_probability(int slot, int soc_state) const;
};

struct SynthesisSpec {
  int n_vehicles = 50;
  int n_days = 7;
  int first_day_index = 0;
  std::string id_prefix = "veh";
  double battery_kwh = 24.0;
  double kwh_per_mile = 0.3;
  double initial_soc = 1.0;
  double charger_kw = 3.5;
  double efficiency = 0.9;
  double min_gap_minutes = 15.0;
  DayTypeMix weekday;
  DayTypeMix weekend;
  ChargingPolicy charging;

  // Throws ConfigError on invalid values, including mixture weights that do
  // not sum to 1 within 1e-9.
  void validate() const;

  // Three weekday archetypes (commuter, morning, evening) and three weekend
  // ones, with an overnight independent-charging peak.
  static SynthesisSpec defaults();
};

SynthesisSpec parse_synthesis_spec(std::string_view json_text);
SynthesisSpec load_synthesis_spec(const std::filesystem::path& path);
std::string synthesis_spec_to_json(const SynthesisSpec& spec);

struct GroundTruthLabel {
  std::string vehicle_id;
  int day_index = 0;
  int archetype = -1;  // index into the day type's archetype list, -1 = unused
  std::string name;    // archetype name or "U"
};

struct SyntheticFleet {
  std::vector<VehicleDay> days;
  std::vector<ChargeEvent> charges;
  std::vector<GroundTruthLabel> labels;  // sidecar, parallel to days
};

SyntheticFleet synthesize_fleet(const SynthesisSpec& spec, std::uint64_t seed);

void write_ground_truth_csv(std::ostream& out, const std::vector<GroundTruthLabel>& labels);

}  // namespace evcharge::ingest
