#include <algorithm>
#include <cmath>

#include "evcharge/errors.hpp"
#include "evcharge/simulator.hpp"

namespace evcharge::sim {
namespace {

// Adds a constant draw over [from, to) (minutes within the day) as mean slot
// power.
void add_power(SlotArray& profile, double from, double to, double kw) {
  if (to <= from) return;
  for (int s = slot_of_minute(from); s < kSlotsPerDay; ++s) {
    const double lo = std::max(from, double(s * kSlotMinutes));
    const double hi = std::min(to, double((s + 1) * kSlotMinutes));
    if (hi <= lo) break;
    profile[s] += kw * (hi - lo) / kSlotMinutes;
  }
}

struct TablePolicy {
  const charging::PosteriorTables& tables;
  Rng& rng;
  bool after_journey(DayType d, int t, int k, int s, bool /*final*/) {
    return rng.uniform() < tables.after_journey(d, t, k, s);
  }
  bool independent(DayType d, int t, int s) { return rng.uniform() < tables.independent(d, t, s); }
};

struct NaivePolicy {
  bool after_journey(DayType, int, int, int, bool final_journey) { return final_journey; }
  bool independent(DayType, int, int) { return false; }
};

struct IdlePolicy {
  bool after_journey(DayType, int, int, int, bool) { return false; }
  bool independent(DayType, int, int) { return false; }
  static constexpr bool decides = false;
};

template <typename Policy>
constexpr bool makes_decisions() {
  if constexpr (requires { Policy::decides; }) {
    return Policy::decides;
  } else {
    return true;
  }
}

template <typename Policy>
DayOutcome step_day(const VehicleDay& day, clustering::ClusterLabel k, VehicleSimState st,
                    const SimConfig& cfg, Policy& policy) {
  DayOutcome out;
  const double battery_rate_kw = cfg.charger_kw * cfg.efficiency;
  const double base = abs_minute(day.day_index, 0.0);
  double now = 0.0;

  auto advance = [&](double to) {
    if (st.charging && to > now) {
      const double minutes_to_full = (1.0 - st.soc) * cfg.battery_kwh / battery_rate_kw * 60.0;
      const bool fills = now + minutes_to_full <= to;
      const double stop = fills ? now + minutes_to_full : to;
      add_power(out.power_kw, now, stop, cfg.charger_kw);
      const double hours = (stop - now) / 60.0;
      out.grid_kwh += cfg.charger_kw * hours;
      out.battery_kwh_added += battery_rate_kw * hours;
      if (fills) {
        st.soc = 1.0;
        st.charging = false;
      } else {
        st.soc = std::min(1.0, st.soc + battery_rate_kw * hours / cfg.battery_kwh);
      }
    }
    now = std::max(now, to);
  };

  auto begin_charge = [&](double at) {
    out.charge_starts.push_back(at);
    // A charge that starts full delivers nothing and ends immediately.
    st.charging = st.soc < 1.0;
  };

  const auto& js = day.journeys;
  const std::size_t n = js.size();
  std::size_t next_start = 0, next_end = 0;
  for (int t = 0; t <= kSlotsPerDay; ++t) {
    const double limit = t == kSlotsPerDay ? double(kMinutesPerDay) : double(t * kSlotMinutes);
    while (true) {
      const double ts = next_start < n ? js[next_start].start_minute : 1e300;
      const double te = next_end < n ? js[next_end].end_minute : 1e300;
      if (te <= limit && te <= ts) {
        advance(te);
        const Journey& j = js[next_end];
        const double energy = j.distance * cfg.kwh_per_mile;
        double after = st.soc - energy / cfg.battery_kwh;
        if (after < 0.0) {
          after = 0.0;
          out.soc_clamped = true;
        }
        out.consumed_kwh += (st.soc - after) * cfg.battery_kwh;
        st.soc = after;
        st.last_journey_end_abs = base + te;
        if (policy.after_journey(day.day_type, slot_of_minute(te), k,
                                 charging::discretize_soc(st.soc), next_end + 1 == n))
          begin_charge(te);
        ++next_end;
      } else if (ts < limit) {
        advance(ts);
        st.charging = false;  // the vehicle leaves
        ++next_start;
      } else {
        break;
      }
    }
    if (t == kSlotsPerDay) break;
    advance(limit);
    if constexpr (makes_decisions<Policy>()) {
      if (!st.charging &&
          charging::independent_slot_eligible(day, t, st.last_journey_end_abs, cfg.window_minutes)) {
        if (policy.independent(day.day_type, t, charging::discretize_soc(st.soc))) begin_charge(limit);
      }
    }
  }
  advance(kMinutesPerDay);
  out.end_state = st;
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (!(charger_kw > 0.0)) throw ConfigError("charger_kw must be > 0");
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ConfigError("efficiency must be in (0, 1]");
  if (!(battery_kwh > 0.0)) throw ConfigError("battery_kwh must be > 0");
  if (!(kwh_per_mile > 0.0)) throw ConfigError("kwh_per_mile must be > 0");
  if (!(initial_soc >= 0.0 && initial_soc <= 1.0)) throw ConfigError("initial_soc must be in [0, 1]");
  if (n_runs < 1) throw ConfigError("n_runs must be >= 1");
  if (sample_size < 1) throw ConfigError("sample_size must be >= 1");
  if (warmup_days < 0) throw ConfigError("warmup_days must be >= 0");
  if (!(window_minutes > 0.0)) throw ConfigError("window_minutes must be > 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

DayOutcome simulate_vehicle_day(const VehicleDay& day, clustering::ClusterLabel k,
                                const VehicleSimState& state,
                                const charging::PosteriorTables& tables, const SimConfig& cfg,
                                Rng& rng) {
  TablePolicy policy{tables, rng};
  return step_day(day, k, state, cfg, policy);
}

DayOutcome simulate_naive(const VehicleDay& day, const VehicleSimState& state,
                          const SimConfig& cfg) {
  NaivePolicy policy;
  return step_day(day, clustering::kUnused, state, cfg, policy);
}

DayOutcome drain_charge(const VehicleSimState& state, const SimConfig& cfg) {
  IdlePolicy policy;
  const VehicleDay empty{"", 0, DayType::Weekday, {}};
  VehicleSimState st = state;
  st.last_journey_end_abs = -std::numeric_limits<double>::infinity();
  return step_day(empty, clustering::kUnused, st, cfg, policy);
}

ScheduleRun simulate_schedule(const VehicleSchedule& schedule,
                              const std::vector<clustering::ClusterLabel>& labels,
                              const charging::PosteriorTables& tables, const SimConfig& cfg,
                              ChargeModel model, Rng& rng) {
  if (labels.size() != schedule.days.size())
    throw ConfigError("simulate_schedule: one label per day is required");
  ScheduleRun run;
  VehicleSimState state;
  state.soc = cfg.initial_soc;
  const int n_days = static_cast<int>(schedule.days.size());
  const int first_kept = n_days > cfg.warmup_days ? cfg.warmup_days : n_days - 1;
  int kept = 0;
  for (int i = 0; i < n_days; ++i) {
    const auto& day = schedule.days[static_cast<std::size_t>(i)];
    DayOutcome o = model == ChargeModel::Naive
                       ? simulate_naive(day, state, cfg)
                       : simulate_vehicle_day(day, labels[static_cast<std::size_t>(i)], state,
                                              tables, cfg, rng);
    state = o.end_state;
    if (i < first_kept) continue;
    ++kept;
    for (int s = 0; s < kSlotsPerDay; ++s) run.average_day_kw[s] += o.power_kw[s];
    for (double m : o.charge_starts) run.starts.push_back({i, m});
    run.grid_kwh += o.grid_kwh;
    run.battery_kwh_added += o.battery_kwh_added;
    run.soc_clamped = run.soc_clamped || o.soc_clamped;
  }
  // A charge still running after the last day wraps onto the early slots.
  for (int guard = 0; state.charging && guard < 366; ++guard) {
    DayOutcome o = drain_charge(state, cfg);
    state = o.end_state;
    for (int s = 0; s < kSlotsPerDay; ++s) run.average_day_kw[s] += o.power_kw[s];
    run.grid_kwh += o.grid_kwh;
    run.battery_kwh_added += o.battery_kwh_added;
  }
  if (kept > 0)
    for (auto& v : run.average_day_kw) v /= kept;
  return run;
}

}  // namespace evcharge::sim
