#pragma once

#include <string>
#include <utility>
#include <vector>

#include "evcharge/types.hpp"

namespace evcharge::testing {

inline Journey journey(const std::string& vehicle, int day, double start, double end, double miles,
                       std::optional<double> kwh = std::nullopt) {
  return {vehicle, day, start, end, miles, kwh};
}

// A vehicle-day with journeys given as (start, end) pairs, each `miles` long.
inline VehicleDay make_day(const std::string& vehicle, int day,
                           const std::vector<std::pair<double, double>>& trips, double miles = 10.0) {
  VehicleDay d{vehicle, day, day_type_for(day), {}};
  for (auto [s, e] : trips) d.journeys.push_back(journey(vehicle, day, s, e, miles));
  return d;
}

inline ChargeEvent charge(const std::string& vehicle, int day, double start, double end, double soc0,
                          double soc1) {
  return {vehicle, day, start, end, soc0, soc1};
}

}  // namespace evcharge::testing
