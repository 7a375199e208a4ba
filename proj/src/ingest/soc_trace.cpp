#include <algorithm>
#include <cmath>
#include <limits>

#include "evcharge/errors.hpp"
#include "evcharge/ingest.hpp"

namespace evcharge::ingest {
namespace {

enum class EventKind { ChargeEnd = 0, JourneyEnd = 1, ChargeStart = 2, JourneyStart = 3 };

struct TraceEvent {
  double time = 0.0;
  EventKind kind = EventKind::JourneyStart;
  double value = 0.0;  // energy (journey end) or logged SOC (charge boundary)
};

}  // namespace

double SocTrace::soc_at(double abs_min) const {
  if (samples.empty()) return 0.0;
  auto it = std::upper_bound(samples.begin(), samples.end(), abs_min,
                             [](double t, const SocSample& s) { return t < s.abs(); });
  if (it == samples.begin()) return samples.front().soc;
  return std::prev(it)->soc;
}

SocTrace infer_soc_trace(const std::vector<VehicleDay>& days,
                         const std::vector<ChargeEvent>& charges, const SocOptions& options) {
  if (!(options.battery_kwh > 0.0)) throw ConfigError("battery_kwh must be > 0");
  if (options.initial_soc < 0.0 || options.initial_soc > 1.0)
    throw ConfigError("initial_soc must be in [0, 1]");

  SocTrace trace;
  if (!days.empty()) {
    trace.vehicle_id = days.front().vehicle_id;
  } else if (!charges.empty()) {
    trace.vehicle_id = charges.front().vehicle_id;
  } else {
    return trace;
  }

  std::vector<TraceEvent> events;
  int first_day = std::numeric_limits<int>::max();
  for (const auto& day : days) {
    if (day.vehicle_id != trace.vehicle_id) continue;
    first_day = std::min(first_day, day.day_index);
    for (const auto& j : day.journeys) {
      double energy = 0.0;
      if (j.energy_kwh) {
        energy = *j.energy_kwh;
      } else if (options.kwh_per_mile) {
        energy = j.distance * *options.kwh_per_mile;
      } else {
        throw DataError("journey of vehicle '" + j.vehicle_id + "' on day " +
                        std::to_string(j.day_index) + " has no energy_kwh");
      }
      events.push_back({abs_minute(day.day_index, j.start_minute), EventKind::JourneyStart, 0.0});
      events.push_back({abs_minute(day.day_index, j.end_minute), EventKind::JourneyEnd, energy});
    }
  }
  for (const auto& c : charges) {
    if (c.vehicle_id != trace.vehicle_id) continue;
    first_day = std::min(first_day, c.day_index);
    events.push_back({c.abs_start(), EventKind::ChargeStart, c.soc_start});
    events.push_back({c.abs_end(), EventKind::ChargeEnd, c.soc_end});
  }
  std::stable_sort(events.begin(), events.end(), [](const TraceEvent& a, const TraceEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return static_cast<int>(a.kind) < static_cast<int>(b.kind);
  });

  auto push = [&](double time, double soc) {
    const int day = static_cast<int>(std::floor(time / kMinutesPerDay));
    trace.samples.push_back({day, time - day * double(kMinutesPerDay), soc});
  };

  double soc = options.initial_soc;
  push(abs_minute(first_day, 0.0), soc);
  for (const auto& ev : events) {
    switch (ev.kind) {
      case EventKind::JourneyStart:
        break;
      case EventKind::JourneyEnd:
        soc -= ev.value / options.battery_kwh;
        if (soc < 0.0) {
          soc = 0.0;
          trace.inconsistent = true;
          ++trace.clamp_count;
        }
        break;
      case EventKind::ChargeStart:
        trace.max_snap_gap = std::max(trace.max_snap_gap, std::fabs(soc - ev.value));
        soc = ev.value;
        break;
      case EventKind::ChargeEnd:
        soc = ev.value;
        break;
    }
    push(ev.time, soc);
  }
  return trace;
}

std::map<std::string, SocTrace> infer_soc_traces(const std::vector<VehicleDay>& days,
                                                 const std::vector<ChargeEvent>& charges,
                                                 const SocOptions& options) {
  std::map<std::string, std::vector<VehicleDay>> by_vehicle_days;
  std::map<std::string, std::vector<ChargeEvent>> by_vehicle_charges;
  for (const auto& d : days) by_vehicle_days[d.vehicle_id].push_back(d);
  for (const auto& c : charges) by_vehicle_charges[c.vehicle_id].push_back(c);
  std::map<std::string, SocTrace> out;
  for (const auto& [id, vdays] : by_vehicle_days) {
    static const std::vector<ChargeEvent> none;
    auto it = by_vehicle_charges.find(id);
    out.emplace(id, infer_soc_trace(vdays, it == by_vehicle_charges.end() ? none : it->second,
                                    options));
  }
  for (const auto& [id, vcharges] : by_vehicle_charges)
    if (!out.count(id)) out.emplace(id, infer_soc_trace({}, vcharges, options));
  return out;
}

}  // namespace evcharge::ingest
