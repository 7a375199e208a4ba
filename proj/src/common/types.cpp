#include "evcharge/types.hpp"

#include <algorithm>
#include <unordered_map>

#include "evcharge/errors.hpp"

namespace evcharge {

std::string_view to_string(DayType d) {
  return d == DayType::Weekday ? "weekday" : "weekend";
}

DayType day_type_from_string(std::string_view s) {
  if (s == "weekday" || s == "Weekday" || s == "0") return DayType::Weekday;
  if (s == "weekend" || s == "Weekend" || s == "1") return DayType::Weekend;
  throw ConfigError("unknown day type '" + std::string(s) + "'");
}

double VehicleDay::total_distance() const {
  double total = 0.0;
  for (const auto& j : journeys) total += j.distance;
  return total;
}

std::vector<VehicleSchedule> group_by_vehicle(const std::vector<VehicleDay>& days) {
  std::vector<VehicleSchedule> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& day : days) {
    auto [it, inserted] = index.try_emplace(day.vehicle_id, out.size());
    if (inserted) out.push_back({day.vehicle_id, {}});
    out[it->second].days.push_back(day);
  }
  for (auto& v : out) {
    std::stable_sort(v.days.begin(), v.days.end(),
                     [](const VehicleDay& a, const VehicleDay& b) { return a.day_index < b.day_index; });
  }
  return out;
}

}  // namespace evcharge
