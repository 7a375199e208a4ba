#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace evcharge {

inline constexpr int kMinutesPerDay = 1440;
inline constexpr int kSlotMinutes = 30;
inline constexpr int kSlotsPerDay = 48;
inline constexpr int kSocStates = 6;

enum class DayType { Weekday = 0, Weekend = 1 };

inline constexpr int kDayTypes = 2;

// day_index 0 is a Monday.
constexpr DayType day_type_for(int day_index) {
  const int dow = ((day_index % 7) + 7) % 7;
  return dow >= 5 ? DayType::Weekend : DayType::Weekday;
}

constexpr int day_of_week(int day_index) { return ((day_index % 7) + 7) % 7; }

std::string_view to_string(DayType d);
DayType day_type_from_string(std::string_view s);

// Half-hour slot containing an instant in [0, 1440). Values outside are
// clamped to the first/last slot.
constexpr int slot_of_minute(double minute) {
  if (minute <= 0.0) return 0;
  const int slot = static_cast<int>(minute / kSlotMinutes);
  return slot >= kSlotsPerDay ? kSlotsPerDay - 1 : slot;
}

using SlotArray = std::array<double, kSlotsPerDay>;

struct Journey {
  std::string vehicle_id;
  int day_index = 0;
  double start_minute = 0.0;
  double end_minute = 0.0;
  double distance = 0.0;  // miles
  std::optional<double> energy_kwh;

  double duration_minutes() const { return end_minute - start_minute; }
  bool operator==(const Journey&) const = default;
};

struct VehicleDay {
  std::string vehicle_id;
  int day_index = 0;
  DayType day_type = DayType::Weekday;
  std::vector<Journey> journeys;  // sorted by start_minute, non-overlapping

  bool unused() const { return journeys.empty(); }
  double total_distance() const;
  bool operator==(const VehicleDay&) const = default;
};

// end_minute may exceed 1440 when a charge runs past midnight; day_index is
// the day on which the charge started.
struct ChargeEvent {
  std::string vehicle_id;
  int day_index = 0;
  double start_minute = 0.0;
  double end_minute = 0.0;
  double soc_start = 0.0;
  double soc_end = 0.0;

  double abs_start() const { return day_index * double(kMinutesPerDay) + start_minute; }
  double abs_end() const { return day_index * double(kMinutesPerDay) + end_minute; }
  bool operator==(const ChargeEvent&) const = default;
};

inline double abs_minute(int day_index, double minute) {
  return day_index * double(kMinutesPerDay) + minute;
}

// All consecutive days of one vehicle, ordered by day_index.
struct VehicleSchedule {
  std::string vehicle_id;
  std::vector<VehicleDay> days;
};

// Groups days by vehicle (first-appearance order) and sorts each group by
// day_index.
std::vector<VehicleSchedule> group_by_vehicle(const std::vector<VehicleDay>& days);

}  // namespace evcharge
