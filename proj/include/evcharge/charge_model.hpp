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

#include "evcharge/clustering.hpp"
#include "evcharge/ingest.hpp"
#include "evcharge/types.hpp"

namespace evcharge::charging {

enum class ChargeKind { AfterJourney, Independent };

struct JourneyRef {
  int day_index = 0;
  std::size_t index = 0;  // position within the vehicle-day
  bool operator==(const JourneyRef&) const = default;
};

struct ChargeLabel {
  ChargeEvent event;
  ChargeKind kind = ChargeKind::Independent;
  std::optional<JourneyRef> matched;  // set iff kind == AfterJourney
  double gap_minutes = 0.0;           // charge start - matched journey end
};

struct Classification {
  std::vector<ChargeLabel> labels;  // parallel to the input charges
  double fraction_after_final = 0.0;
  double fraction_after_any = 0.0;
};

// A charge starting within [0, window] minutes after the end of any journey
// of its vehicle is AfterJourney, matched to the latest such journey;
// everything else is Independent. Also reports the share of charges that
// follow the day's final journey and the share that follow any journey.
Classification classify_charges(const std::vector<VehicleDay>& days,
                                const std::vector<ChargeEvent>& charges,
                                double window_minutes = 10.0);

// Uniform bins of width 1/6; 1.0 maps to the top state. Throws
// std::domain_error outside [0, 1].
int discretize_soc(double soc);

// Dense (d, t, k, s) and (d, t, s) tables. k is a 1-based cluster label.
class PosteriorTables {
 public:
  explicit PosteriorTables(int n_clusters = 3);

  int n_clusters() const { return n_clusters_; }
  std::size_t after_journey_cells() const { return after_journey_.size(); }
  std::size_t independent_cells() const { return independent_.size(); }

  // Throw std::out_of_range for indices outside the table.
  double after_journey(DayType d, int t, int k, int s) const;
  double independent(DayType d, int t, int s) const;
  void set_after_journey(DayType d, int t, int k, int s, double p);
  void set_independent(DayType d, int t, int s, double p);

  std::size_t after_journey_index(DayType d, int t, int k, int s) const;
  std::size_t independent_index(DayType d, int t, int s) const;

  std::vector<double>& after_journey_values() { return after_journey_; }
  const std::vector<double>& after_journey_values() const { return after_journey_; }
  std::vector<double>& independent_values() { return independent_; }
  const std::vector<double>& independent_values() const { return independent_; }

  // Opportunity / charge counts behind the probabilities (empty when the
  // tables were not fitted from data).
  std::vector<std::uint64_t> after_journey_opportunities, after_journey_charges;
  std::vector<std::uint64_t> independent_opportunities, independent_charges;
  double sigma = 0.0;
  double window_minutes = 10.0;
  std::vector<std::string> warnings;

 private:
  int n_clusters_;
  std::vector<double> after_journey_;
  std::vector<double> independent_;
};

inline double lookup_after_journey(const PosteriorTables& t, DayType d, int slot, int k, int s) {
  return t.after_journey(d, slot, k, s);
}
inline double lookup_independent(const PosteriorTables& t, DayType d, int slot, int s) {
  return t.independent(d, slot, s);
}

// Additive opportunity counts; partial counts over disjoint vehicle sets sum
// to the counts of their union.
struct OpportunityCounts {
  explicit OpportunityCounts(int n_clusters = 3);
  int n_clusters;
  std::vector<std::uint64_t> aj_opportunities, aj_charges;    // [d][t][k][s]
  std::vector<std::uint64_t> ind_opportunities, ind_charges;  // [d][t][s]
  std::size_t charge_events = 0;

  OpportunityCounts& operator+=(const OpportunityCounts& o);
  OpportunityCounts& operator-=(const OpportunityCounts& o);
};

// True when an independent charge may start at the beginning of `slot` on
// `day`: the vehicle is home, no journey ends in the slot, and no journey
// ended within `window` minutes before the slot start. `recent_end_abs` is the
// latest journey end (absolute minutes) at or before the slot start.
bool independent_slot_eligible(const VehicleDay& day, int slot, double recent_end_abs,
                               double window_minutes);

struct FitOptions {
  double sigma = 1.0;
  double window_minutes = 10.0;
};

// Counts after-journey opportunities (every journey end, at the SOC just after
// the journey) and independent opportunities (every eligible half-hour slot
// in which the vehicle is not already charging, at the SOC of the slot start).
// Unused days contribute to the independent table only.
OpportunityCounts count_opportunities(const std::vector<VehicleDay>& days,
                                      const std::vector<ChargeLabel>& labels,
                                      const clustering::ClusterSet& clusters,
                                      const std::map<std::string, ingest::SocTrace>& traces,
                                      double window_minutes = 10.0);

// Probabilities = charges / opportunities (0 where there were no
// opportunities), then smoothed with `sigma`.
PosteriorTables tables_from_counts(const OpportunityCounts& counts, double sigma,
                                   double window_minutes = 10.0);

PosteriorTables fit_posteriors(const std::vector<VehicleDay>& days,
                               const std::vector<ChargeLabel>& labels,
                               const clustering::ClusterSet& clusters,
                               const std::map<std::string, ingest::SocTrace>& traces,
                               const FitOptions& options = {});

using SlotSocGrid = std::array<std::array<double, kSocStates>, kSlotsPerDay>;

// Separable Gaussian filter over (time, SOC): time wraps at midnight, the SOC
// axis is truncated and renormalized at its ends. sigma = 0 is the identity.
// Output is clamped to [0, 1].
SlotSocGrid smooth_grid(const SlotSocGrid& grid, double sigma);

// smooth_grid applied to every (d, k) slice of the after-journey table and
// every d slice of the independent table.
PosteriorTables smooth_table(const PosteriorTables& tables, double sigma);

std::string to_json(const PosteriorTables& tables);
PosteriorTables tables_from_json(std::string_view text);
PosteriorTables load_tables(const std::filesystem::path& path);

// Long-format heatmaps: d,t,k,s,probability. The independent table is written
// with k = 0.
void write_after_journey_heatmap(std::ostream& out, const PosteriorTables& tables);
void write_independent_heatmap(std::ostream& out, const PosteriorTables& tables);

}  // namespace evcharge::charging
