#include <algorithm>

#include "evcharge/clustering.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/stats.hpp"

namespace evcharge::clustering {

TransitionMatrix transition_matrix(const std::vector<std::vector<LabeledDay>>& sequences, int k,
                                   TransitionFilter filter) {
  if (k < 1) throw ConfigError("k must be >= 1");
  TransitionMatrix m;
  m.k = k;
  const auto n = static_cast<std::size_t>(k + 1);
  m.counts.assign(n, std::vector<std::size_t>(n, 0));
  m.probs.assign(n, std::vector<double>(n, 0.0));
  m.imputed_rows.assign(n, false);
  for (const auto& seq : sequences) {
    for (const auto& d : seq)
      if (d.label < 0 || d.label > k) throw ConfigError("label out of range in transition sequence");
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const auto& prev = seq[i - 1];
      const auto& cur = seq[i];
      if (cur.day_index != prev.day_index + 1) continue;
      if (filter == TransitionFilter::WeekdaysOnly &&
          (day_type_for(prev.day_index) != DayType::Weekday ||
           day_type_for(cur.day_index) != DayType::Weekday))
        continue;
      ++m.counts[static_cast<std::size_t>(TransitionMatrix::state_of(prev.label, k))]
                [static_cast<std::size_t>(TransitionMatrix::state_of(cur.label, k))];
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    std::size_t total = 0;
    for (auto c : m.counts[a]) total += c;
    if (total == 0) {
      m.imputed_rows[a] = true;
      std::fill(m.probs[a].begin(), m.probs[a].end(), 1.0 / static_cast<double>(n));
      continue;
    }
    for (std::size_t b = 0; b < n; ++b)
      m.probs[a][b] = static_cast<double>(m.counts[a][b]) / static_cast<double>(total);
  }
  return m;
}

std::vector<std::vector<LabeledDay>> label_sequences(const ClusterSet& clusters,
                                                     const std::vector<VehicleDay>& days) {
  std::vector<std::vector<LabeledDay>> out;
  for (const auto& vehicle : group_by_vehicle(days)) {
    std::vector<LabeledDay> seq;
    for (const auto& d : vehicle.days) seq.push_back({d.day_index, clusters.classify(d)});
    out.push_back(std::move(seq));
  }
  return out;
}

CompositionReport composition(const ClusterModel& model, const std::vector<VehicleDay>& days) {
  CompositionReport r;
  const auto n = static_cast<std::size_t>(model.k + 1);
  std::vector<std::size_t> counts(n, 0);
  std::vector<double> miles(n, 0.0);
  double total_miles = 0.0;
  for (const auto& d : days) {
    if (d.day_type != model.day_type) continue;
    const auto f = build_feature_vector(d);
    const auto label = static_cast<std::size_t>(f ? model.assign(*f) : kUnused);
    ++counts[label];
    miles[label] += d.total_distance();
    total_miles += d.total_distance();
    ++r.days;
  }
  r.shares.assign(n, 0.0);
  r.mean_miles.assign(n, 0.0);
  if (r.days == 0) return r;
  for (std::size_t c = 0; c < n; ++c) {
    r.shares[c] = static_cast<double>(counts[c]) / static_cast<double>(r.days);
    if (counts[c] > 0) r.mean_miles[c] = miles[c] / static_cast<double>(counts[c]);
  }
  r.mean_daily_miles = total_miles / static_cast<double>(r.days);
  return r;
}

DatasetComparison compare_datasets(const ClusterModel& model, const std::vector<VehicleDay>& days_a,
                                   const std::vector<VehicleDay>& days_b) {
  DatasetComparison out{composition(model, days_a), composition(model, days_b), 0.0};
  if (out.a.days == 0 || out.b.days == 0)
    throw DataError("compare_datasets: a dataset has no " + std::string(to_string(model.day_type)) +
                    " days");
  if (out.a.mean_daily_miles <= 0.0) throw DataError("compare_datasets: reference dataset has no travel");
  out.distance_ratio = out.b.mean_daily_miles / out.a.mean_daily_miles;
  return out;
}

std::array<std::vector<double>, 7> weekly_composition(const ClusterSet& clusters,
                                                      const std::vector<VehicleDay>& days) {
  const auto n = static_cast<std::size_t>(clusters.max_k() + 1);
  std::array<std::vector<double>, 7> shares;
  std::array<std::size_t, 7> totals{};
  for (auto& s : shares) s.assign(n, 0.0);
  for (const auto& d : days) {
    const int dow = day_of_week(d.day_index);
    shares[dow][static_cast<std::size_t>(clusters.classify(d))] += 1.0;
    ++totals[dow];
  }
  for (int dow = 0; dow < 7; ++dow)
    if (totals[dow] > 0)
      for (auto& v : shares[dow]) v /= static_cast<double>(totals[dow]);
  return shares;
}

std::vector<ClusterProfile> cluster_profiles(const ClusterModel& model,
                                             const std::vector<VehicleDay>& days) {
  std::vector<std::vector<SlotArray>> members(static_cast<std::size_t>(model.k));
  for (const auto& d : days) {
    if (d.day_type != model.day_type) continue;
    const auto f = build_feature_vector(d);
    if (!f) continue;
    members[static_cast<std::size_t>(model.assign(*f) - 1)].push_back(speed_profile(d));
  }
  std::vector<ClusterProfile> out;
  for (int c = 0; c < model.k; ++c) {
    const auto& rows = members[static_cast<std::size_t>(c)];
    ClusterProfile p;
    p.label = c + 1;
    p.days = rows.size();
    p.centroid = model.centroids[static_cast<std::size_t>(c)];
    for (int s = 0; s < kSlotsPerDay; ++s) {
      std::vector<double> column;
      column.reserve(rows.size());
      for (const auto& r : rows) column.push_back(r[s]);
      p.mean_speed[s] = stats::mean(column);
      p.p05_speed[s] = stats::quantile(column, 0.05);
      p.p95_speed[s] = stats::quantile(column, 0.95);
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace evcharge::clustering
