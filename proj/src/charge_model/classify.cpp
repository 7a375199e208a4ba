#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "evcharge/charge_model.hpp"
#include "evcharge/errors.hpp"

namespace evcharge::charging {
namespace {

struct JourneyEnd {
  double abs = 0.0;
  JourneyRef ref;
  bool final_of_day = false;
};

}  // namespace

int discretize_soc(double soc) {
  if (!(soc >= 0.0 && soc <= 1.0)) throw std::domain_error("SOC outside [0, 1]");
  return std::min(kSocStates - 1, static_cast<int>(std::floor(soc * kSocStates)));
}

Classification classify_charges(const std::vector<VehicleDay>& days,
                                const std::vector<ChargeEvent>& charges, double window_minutes) {
  if (!(window_minutes > 0.0)) throw ConfigError("window_minutes must be > 0");
  std::unordered_map<std::string, std::vector<JourneyEnd>> ends;
  for (const auto& day : days) {
    auto& v = ends[day.vehicle_id];
    for (std::size_t i = 0; i < day.journeys.size(); ++i)
      v.push_back({abs_minute(day.day_index, day.journeys[i].end_minute), {day.day_index, i},
                   i + 1 == day.journeys.size()});
  }
  for (auto& [_, v] : ends)
    std::stable_sort(v.begin(), v.end(),
                     [](const JourneyEnd& a, const JourneyEnd& b) { return a.abs < b.abs; });

  Classification out;
  std::size_t after_final = 0, after_any = 0;
  for (const auto& c : charges) {
    ChargeLabel label{c, ChargeKind::Independent, std::nullopt, 0.0};
    bool follows_final = false;
    if (auto it = ends.find(c.vehicle_id); it != ends.end()) {
      const auto& v = it->second;
      const double start = c.abs_start();
      auto pos = std::upper_bound(v.begin(), v.end(), start,
                                  [](double t, const JourneyEnd& e) { return t < e.abs; });
      bool first = true;
      while (pos != v.begin()) {
        --pos;
        const double gap = start - pos->abs;
        if (gap > window_minutes) break;
        if (first) {
          label.kind = ChargeKind::AfterJourney;
          label.matched = pos->ref;
          label.gap_minutes = gap;
          first = false;
        }
        if (pos->final_of_day) follows_final = true;
      }
    }
    if (label.kind == ChargeKind::AfterJourney) ++after_any;
    if (follows_final) ++after_final;
    out.labels.push_back(std::move(label));
  }
  if (!charges.empty()) {
    out.fraction_after_final = static_cast<double>(after_final) / static_cast<double>(charges.size());
    out.fraction_after_any = static_cast<double>(after_any) / static_cast<double>(charges.size());
  }
  return out;
}

}  // namespace evcharge::charging
