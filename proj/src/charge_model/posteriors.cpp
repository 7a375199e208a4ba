#include <algorithm>
#include <limits>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include "evcharge/charge_model.hpp"
#include "evcharge/errors.hpp"

namespace evcharge::charging {
namespace {

std::size_t aj_size(int n_clusters) {
  return static_cast<std::size_t>(kDayTypes) * kSlotsPerDay * static_cast<std::size_t>(n_clusters) *
         kSocStates;
}
constexpr std::size_t ind_size() { return std::size_t{kDayTypes} * kSlotsPerDay * kSocStates; }

void check_slot_soc(int t, int s) {
  if (t < 0 || t >= kSlotsPerDay) throw std::out_of_range("time slot out of range");
  if (s < 0 || s >= kSocStates) throw std::out_of_range("SOC state out of range");
}

}  // namespace

PosteriorTables::PosteriorTables(int n_clusters)
    : n_clusters_(n_clusters), after_journey_(aj_size(std::max(n_clusters, 1)), 0.0),
      independent_(ind_size(), 0.0) {
  if (n_clusters < 1) throw ConfigError("posterior tables need at least one cluster");
}

std::size_t PosteriorTables::after_journey_index(DayType d, int t, int k, int s) const {
  check_slot_soc(t, s);
  if (k < 1 || k > n_clusters_) throw std::out_of_range("cluster label out of range");
  return ((static_cast<std::size_t>(d) * kSlotsPerDay + static_cast<std::size_t>(t)) *
              static_cast<std::size_t>(n_clusters_) +
          static_cast<std::size_t>(k - 1)) *
             kSocStates +
         static_cast<std::size_t>(s);
}

std::size_t PosteriorTables::independent_index(DayType d, int t, int s) const {
  check_slot_soc(t, s);
  return (static_cast<std::size_t>(d) * kSlotsPerDay + static_cast<std::size_t>(t)) * kSocStates +
         static_cast<std::size_t>(s);
}

double PosteriorTables::after_journey(DayType d, int t, int k, int s) const {
  return after_journey_[after_journey_index(d, t, k, s)];
}

double PosteriorTables::independent(DayType d, int t, int s) const {
  return independent_[independent_index(d, t, s)];
}

void PosteriorTables::set_after_journey(DayType d, int t, int k, int s, double p) {
  after_journey_[after_journey_index(d, t, k, s)] = p;
}

void PosteriorTables::set_independent(DayType d, int t, int s, double p) {
  independent_[independent_index(d, t, s)] = p;
}

OpportunityCounts::OpportunityCounts(int clusters)
    : n_clusters(clusters), aj_opportunities(aj_size(clusters), 0), aj_charges(aj_size(clusters), 0),
      ind_opportunities(ind_size(), 0), ind_charges(ind_size(), 0) {}

OpportunityCounts& OpportunityCounts::operator+=(const OpportunityCounts& o) {
  if (o.n_clusters != n_clusters) throw ConfigError("cannot merge counts with different k");
  for (std::size_t i = 0; i < aj_opportunities.size(); ++i) {
    aj_opportunities[i] += o.aj_opportunities[i];
    aj_charges[i] += o.aj_charges[i];
  }
  for (std::size_t i = 0; i < ind_opportunities.size(); ++i) {
    ind_opportunities[i] += o.ind_opportunities[i];
    ind_charges[i] += o.ind_charges[i];
  }
  charge_events += o.charge_events;
  return *this;
}

OpportunityCounts& OpportunityCounts::operator-=(const OpportunityCounts& o) {
  if (o.n_clusters != n_clusters) throw ConfigError("cannot subtract counts with different k");
  for (std::size_t i = 0; i < aj_opportunities.size(); ++i) {
    aj_opportunities[i] -= o.aj_opportunities[i];
    aj_charges[i] -= o.aj_charges[i];
  }
  for (std::size_t i = 0; i < ind_opportunities.size(); ++i) {
    ind_opportunities[i] -= o.ind_opportunities[i];
    ind_charges[i] -= o.ind_charges[i];
  }
  charge_events -= o.charge_events;
  return *this;
}

bool independent_slot_eligible(const VehicleDay& day, int slot, double recent_end_abs,
                               double window_minutes) {
  const double m = double(slot) * kSlotMinutes;
  for (const auto& j : day.journeys) {
    if (j.start_minute <= m && m < j.end_minute) return false;
    if (slot_of_minute(j.end_minute) == slot) return false;
  }
  return !(abs_minute(day.day_index, m) - recent_end_abs <= window_minutes);
}

OpportunityCounts count_opportunities(const std::vector<VehicleDay>& days,
                                      const std::vector<ChargeLabel>& labels,
                                      const clustering::ClusterSet& clusters,
                                      const std::map<std::string, ingest::SocTrace>& traces,
                                      double window_minutes) {
  const int n_clusters = clusters.max_k();
  OpportunityCounts counts(n_clusters);
  PosteriorTables index(n_clusters);  // for index arithmetic only

  std::unordered_map<std::string, std::vector<const ChargeLabel*>> by_vehicle;
  for (const auto& l : labels) by_vehicle[l.event.vehicle_id].push_back(&l);

  for (const auto& vehicle : group_by_vehicle(days)) {
    auto trace_it = traces.find(vehicle.vehicle_id);
    if (trace_it == traces.end())
      throw DataError("no SOC trace for vehicle '" + vehicle.vehicle_id + "'");
    const auto& trace = trace_it->second;

    std::set<std::pair<int, std::size_t>> matched;
    std::vector<double> independent_starts;
    std::vector<std::pair<double, double>> charging;  // (start, end) absolute
    if (auto it = by_vehicle.find(vehicle.vehicle_id); it != by_vehicle.end()) {
      for (const auto* l : it->second) {
        charging.emplace_back(l->event.abs_start(), l->event.abs_end());
        if (l->kind == ChargeKind::AfterJourney && l->matched) {
          matched.emplace(l->matched->day_index, l->matched->index);
        } else if (l->kind == ChargeKind::Independent) {
          independent_starts.push_back(l->event.abs_start());
        }
        ++counts.charge_events;
      }
    }
    std::sort(independent_starts.begin(), independent_starts.end());

    std::vector<double> journey_ends;
    for (const auto& day : vehicle.days)
      for (const auto& j : day.journeys) journey_ends.push_back(abs_minute(day.day_index, j.end_minute));
    std::sort(journey_ends.begin(), journey_ends.end());

    for (const auto& day : vehicle.days) {
      const auto d = day.day_type;
      const int k = clusters.classify(day);
      for (std::size_t i = 0; i < day.journeys.size(); ++i) {
        const double end = abs_minute(day.day_index, day.journeys[i].end_minute);
        const int t = slot_of_minute(day.journeys[i].end_minute);
        const int s = discretize_soc(trace.soc_at(end));
        const auto cell = index.after_journey_index(d, t, k, s);
        ++counts.aj_opportunities[cell];
        if (matched.count({day.day_index, i})) ++counts.aj_charges[cell];
      }
      for (int t = 0; t < kSlotsPerDay; ++t) {
        const double m = abs_minute(day.day_index, double(t) * kSlotMinutes);
        auto after = std::upper_bound(journey_ends.begin(), journey_ends.end(), m);
        const double recent = after == journey_ends.begin()
                                  ? -std::numeric_limits<double>::infinity()
                                  : *std::prev(after);
        if (!independent_slot_eligible(day, t, recent, window_minutes)) continue;
        const bool busy = std::any_of(charging.begin(), charging.end(), [&](const auto& c) {
          return c.first < m && m < c.second;
        });
        if (busy) continue;
        const int s = discretize_soc(trace.soc_at(m));
        const auto cell = index.independent_index(d, t, s);
        ++counts.ind_opportunities[cell];
        auto first = std::lower_bound(independent_starts.begin(), independent_starts.end(), m);
        if (first != independent_starts.end() && *first < m + kSlotMinutes) ++counts.ind_charges[cell];
      }
    }
  }
  return counts;
}

PosteriorTables tables_from_counts(const OpportunityCounts& counts, double sigma,
                                   double window_minutes) {
  PosteriorTables raw(counts.n_clusters);
  auto& aj = raw.after_journey_values();
  for (std::size_t i = 0; i < aj.size(); ++i)
    aj[i] = counts.aj_opportunities[i] == 0
                ? 0.0
                : static_cast<double>(counts.aj_charges[i]) / static_cast<double>(counts.aj_opportunities[i]);
  auto& ind = raw.independent_values();
  for (std::size_t i = 0; i < ind.size(); ++i)
    ind[i] = counts.ind_opportunities[i] == 0
                 ? 0.0
                 : static_cast<double>(counts.ind_charges[i]) / static_cast<double>(counts.ind_opportunities[i]);
  PosteriorTables out = smooth_table(raw, sigma);
  out.after_journey_opportunities = counts.aj_opportunities;
  out.after_journey_charges = counts.aj_charges;
  out.independent_opportunities = counts.ind_opportunities;
  out.independent_charges = counts.ind_charges;
  out.window_minutes = window_minutes;
  if (counts.charge_events == 0) out.warnings.push_back("no charge events: tables are all zero");
  return out;
}

PosteriorTables fit_posteriors(const std::vector<VehicleDay>& days,
                               const std::vector<ChargeLabel>& labels,
                               const clustering::ClusterSet& clusters,
                               const std::map<std::string, ingest::SocTrace>& traces,
                               const FitOptions& options) {
  if (options.sigma < 0.0) throw ConfigError("sigma must be >= 0");
  return tables_from_counts(count_opportunities(days, labels, clusters, traces, options.window_minutes),
                            options.sigma, options.window_minutes);
}

}  // namespace evcharge::charging
