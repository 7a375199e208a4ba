#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evcharge/charge_model.hpp"
#include "evcharge/clustering.hpp"
#include "evcharge/simulator.hpp"
#include "evcharge/types.hpp"

namespace evcharge::analysis {

// 48 non-negative values summing to 1.
using SlotPdf = SlotArray;

// Histogram of start slots, normalized. Throws DataError when empty.
SlotPdf start_time_pdf(const std::vector<int>& slots);
SlotPdf start_time_pdf_from_minutes(const std::vector<double>& minutes);

// Scales a non-negative profile to unit sum. Throws DataError when it sums to 0.
SlotPdf normalize_profile(const SlotArray& profile);

// Mean absolute percentage error over slots where observed > 0.
double mape(const SlotPdf& predicted, const SlotPdf& observed);

// Fraction of observed charges with a simulated start on the same day in the
// same or an adjacent slot.
struct TimingMatch {
  int day_offset = 0;
  int slot = 0;
};
double timing_accuracy(const std::vector<TimingMatch>& observed,
                       const std::vector<TimingMatch>& simulated);

struct ModelScores {
  double start_mape = 0.0;
  double power_mape = 0.0;
  double timing_accuracy = 0.0;
};

struct VehicleValidation {
  std::string vehicle_id;
  std::size_t observed_charges = 0;
  ModelScores model;
  ModelScores naive;
};

struct ValidationReport {
  std::vector<VehicleValidation> vehicles;
  std::vector<std::pair<std::string, std::string>> skipped;  // (vehicle, reason)
  ModelScores model;
  ModelScores naive;
  SlotPdf observed_start_pdf{};
  SlotPdf model_start_pdf{};
  SlotPdf naive_start_pdf{};
  int runs_per_vehicle = 0;
  double sigma = 0.0;

  std::string to_json() const;
};

// Each vehicle is held out in turn: tables are fitted on the others, its days
// are simulated cfg.n_runs times and compared with its observed charging.
ValidationReport leave_one_out_validate(const std::vector<VehicleDay>& days,
                                        const std::vector<ChargeEvent>& charges,
                                        const clustering::ClusterSet& clusters,
                                        const sim::SimConfig& cfg, double sigma);

// Observed grid draw of logged charges at a constant charger_kw, folded onto
// one average day over n_days.
SlotArray observed_power_profile(const std::vector<ChargeEvent>& charges, double charger_kw,
                                 int n_days);

struct BaselineProfile {
  SlotArray kw{};
  DayType day_type = DayType::Weekday;
  std::string season = "unspecified";

  double daily_kwh() const;
};

// CSV: a `# day_type=<weekday|weekend>,season=<tag>` line, then `slot,kw` and 48 rows.
BaselineProfile parse_baseline_csv(std::string_view text);
BaselineProfile load_baseline(const std::filesystem::path& path);
void write_baseline_csv(std::ostream& out, const BaselineProfile& profile);

// (1 - e7_share) * flat + e7_share * e7, rescaled so that 365 days of the
// profile use annual_kwh.
BaselineProfile blend_baseline(const BaselineProfile& flat, const BaselineProfile& e7,
                               double e7_share, double annual_kwh);

enum class AdmdStatistic { Mean, P95 };

struct AdmdReport {
  std::string region;
  double baseline_admd_kw = 0.0;
  double combined_admd_kw = 0.0;
  double percent_increase = 0.0;
};

// ev_aggregate_kw is the fleet total; it is divided by n_households.
AdmdReport admd_increase(const BaselineProfile& baseline, const SlotArray& ev_aggregate_kw,
                         int n_households, std::string region = "");
AdmdReport admd_increase(const BaselineProfile& baseline, const sim::LoadDistribution& ev,
                         int n_households, AdmdStatistic statistic = AdmdStatistic::Mean,
                         std::string region = "");

struct RegionInput {
  std::string id;
  std::vector<VehicleDay> pool;
  double e7_share = 0.0;
  double annual_kwh = 0.0;
  int n_households = 0;  // also the number of vehicles drawn per run
};

struct RegionFailure {
  std::string region;
  std::string message;
};

struct BatchResult {
  std::vector<AdmdReport> reports;  // sorted by percent increase, largest first
  std::vector<RegionFailure> failures;
  std::vector<std::pair<std::string, SlotArray>> mean_profiles;  // per region, input order
};

struct BatchOptions {
  int day_of_week = 2;  // 0 = Monday
  AdmdStatistic statistic = AdmdStatistic::Mean;
};

// Each region draws from its own seed derived from cfg.seed and its id, so
// results do not depend on region order. A failing region is reported and
// the rest still run.
BatchResult regional_batch(const std::vector<RegionInput>& regions, const BaselineProfile& flat,
                           const BaselineProfile& e7, const clustering::ClusterSet& clusters,
                           const charging::PosteriorTables& tables, const sim::SimConfig& cfg,
                           const BatchOptions& options = {});

void write_admd_csv(std::ostream& out, const std::vector<AdmdReport>& reports);
std::string admd_to_json(const BatchResult& result);

void write_profile_csv(std::ostream& out, const sim::LoadDistribution& dist);
void write_runs_csv(std::ostream& out, const sim::LoadDistribution& dist);

}  // namespace evcharge::analysis
