#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evcharge/charge_model.hpp"
#include "evcharge/clustering.hpp"
#include "evcharge/rng.hpp"
#include "evcharge/types.hpp"

namespace evcharge::sim {

struct SimConfig {
  double charger_kw = 3.5;
  double efficiency = 0.9;  // battery receives charger_kw * efficiency
  double battery_kwh = 24.0;
  double kwh_per_mile = 0.3;
  double initial_soc = 1.0;
  int n_runs = 100;
  std::uint64_t seed = 0;
  bool resample_vehicles = false;
  int sample_size = 50;
  int warmup_days = 0;  // leading simulated days dropped from the profile
  double window_minutes = 10.0;
  int threads = 1;
  bool retain_runs = false;

  void validate() const;
};

// Reads a JSON object of SimConfig fields; unknown keys are an error.
// Fields absent from the text keep the values of `base`.
SimConfig parse_sim_config(std::string_view json_text, const SimConfig& base = {});
std::string to_json(const SimConfig& cfg);

struct VehicleSimState {
  double soc = 1.0;
  bool charging = false;
  double last_journey_end_abs = -std::numeric_limits<double>::infinity();
};

struct DayOutcome {
  SlotArray power_kw{};  // mean grid draw in each slot of this day
  VehicleSimState end_state;
  double grid_kwh = 0.0;
  double battery_kwh_added = 0.0;
  double consumed_kwh = 0.0;  // energy removed by journeys (after clamping)
  std::vector<double> charge_starts;  // minutes from midnight
  bool soc_clamped = false;
};

// One day of the stochastic model: at each journey end the after-journey
// table is sampled; at each eligible slot start of a vehicle at home and not
// charging the independent table is sampled. Charging runs at charger_kw
// until the battery is full or the vehicle is next used, carrying over
// midnight in end_state. Unused days pass k = kUnused.
DayOutcome simulate_vehicle_day(const VehicleDay& day, clustering::ClusterLabel k,
                                const VehicleSimState& state,
                                const charging::PosteriorTables& tables, const SimConfig& cfg,
                                Rng& rng);

// Deterministic baseline: charge immediately after the day's final journey.
DayOutcome simulate_naive(const VehicleDay& day, const VehicleSimState& state,
                          const SimConfig& cfg);

// Continues a charge in progress through a day with no travel and no new
// charge decisions.
DayOutcome drain_charge(const VehicleSimState& state, const SimConfig& cfg);

enum class ChargeModel { Stochastic, Naive };

struct ChargeStart {
  int day_offset = 0;  // position in the schedule
  double minute = 0.0;
};

struct ScheduleRun {
  SlotArray average_day_kw{};  // kept days averaged, trailing charge wrapped
  std::vector<ChargeStart> starts;  // kept days only
  double grid_kwh = 0.0;
  double battery_kwh_added = 0.0;
  bool soc_clamped = false;
};

// Simulates a vehicle's consecutive days with SOC carried across midnight.
// labels[i] is the cluster of schedule.days[i].
ScheduleRun simulate_schedule(const VehicleSchedule& schedule,
                              const std::vector<clustering::ClusterLabel>& labels,
                              const charging::PosteriorTables& tables, const SimConfig& cfg,
                              ChargeModel model, Rng& rng);

struct SlotStats {
  double mean = 0.0;
  double sd = 0.0;
  double p05 = 0.0;
  double p95 = 0.0;
};

struct LoadDistribution {
  std::array<SlotStats, kSlotsPerDay> slots{};
  std::size_t n_runs = 0;
  std::vector<SlotArray> runs;  // per-run aggregate profiles, when retained
  std::optional<DayType> day_type;

  SlotArray mean_profile() const;
  double peak_mean() const;
};

LoadDistribution summarize_runs(const std::vector<SlotArray>& runs, bool retain);

// n_runs simulations of a fixed vehicle set. Run r, vehicle v draws from the
// stream derived from (seed, r, v), so results do not depend on cfg.threads.
LoadDistribution monte_carlo(const std::vector<VehicleSchedule>& vehicles,
                             const clustering::ClusterSet& clusters,
                             const charging::PosteriorTables& tables, const SimConfig& cfg,
                             ChargeModel model = ChargeModel::Stochastic);

// Each run draws cfg.sample_size vehicles from the pool without replacement.
// Throws ConfigError when the pool is smaller than the sample.
LoadDistribution monte_carlo_resampled(const std::vector<VehicleSchedule>& pool,
                                       const clustering::ClusterSet& clusters,
                                       const charging::PosteriorTables& tables,
                                       const SimConfig& cfg,
                                       ChargeModel model = ChargeModel::Stochastic);

// Every vehicle-day matching `day_of_week` (0 = Monday) as a one-day schedule.
std::vector<VehicleSchedule> single_day_units(const std::vector<VehicleDay>& days, int day_of_week);

}  // namespace evcharge::sim
