#include <algorithm>

#include "evcharge/clustering.hpp"

namespace evcharge::clustering {

SlotArray speed_profile(const VehicleDay& day) {
  SlotArray profile{};
  for (const auto& j : day.journeys) {
    const double duration = j.end_minute - j.start_minute;
    if (duration <= 0.0) continue;
    const double mph = j.distance / (duration / 60.0);
    const int first = slot_of_minute(j.start_minute);
    for (int s = first; s < kSlotsPerDay; ++s) {
      const double lo = std::max(j.start_minute, double(s * kSlotMinutes));
      const double hi = std::min(j.end_minute, double((s + 1) * kSlotMinutes));
      if (hi <= lo) {
        if (lo >= j.end_minute) break;
        continue;
      }
      profile[s] += mph * (hi - lo) / kSlotMinutes;
    }
  }
  return profile;
}

std::optional<FeatureVector> build_feature_vector(const VehicleDay& day) {
  if (day.journeys.empty()) return std::nullopt;
  const SlotArray profile = speed_profile(day);
  double total = 0.0;
  for (double v : profile) total += v;
  if (!(total > 0.0)) return std::nullopt;
  FeatureVector out;
  for (int i = 0; i < kFeatureDim; ++i) out[i] = profile[i] / total;
  return out;
}

std::vector<FeatureVector> features_for(const std::vector<VehicleDay>& days, DayType type) {
  std::vector<FeatureVector> out;
  for (const auto& d : days) {
    if (d.day_type != type) continue;
    if (auto f = build_feature_vector(d)) out.push_back(*f);
  }
  return out;
}

ClusterLabel ClusterSet::classify(const VehicleDay& day) const {
  const auto f = build_feature_vector(day);
  if (!f) return kUnused;
  return for_day(day.day_type).assign(*f);
}

}  // namespace evcharge::clustering
