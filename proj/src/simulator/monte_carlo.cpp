#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "evcharge/errors.hpp"
#include "evcharge/parallel.hpp"
#include "evcharge/simulator.hpp"
#include "evcharge/stats.hpp"

namespace evcharge::sim {
namespace {

std::vector<std::vector<clustering::ClusterLabel>> label_all(
    const std::vector<VehicleSchedule>& vehicles, const clustering::ClusterSet& clusters,
    ChargeModel model) {
  std::vector<std::vector<clustering::ClusterLabel>> out;
  out.reserve(vehicles.size());
  for (const auto& v : vehicles) {
    std::vector<clustering::ClusterLabel> labels;
    labels.reserve(v.days.size());
    for (const auto& d : v.days)
      labels.push_back(model == ChargeModel::Naive ? clustering::kUnused : clusters.classify(d));
    out.push_back(std::move(labels));
  }
  return out;
}

SlotArray aggregate(const std::vector<VehicleSchedule>& vehicles,
                    const std::vector<std::vector<clustering::ClusterLabel>>& labels,
                    const std::vector<std::size_t>& chosen, const charging::PosteriorTables& tables,
                    const SimConfig& cfg, ChargeModel model, std::uint64_t run) {
  SlotArray total{};
  for (std::size_t pos = 0; pos < chosen.size(); ++pos) {
    const std::size_t v = chosen[pos];
    Rng rng(cfg.seed, "mc-vehicle", run, pos);
    const auto r = simulate_schedule(vehicles[v], labels[v], tables, cfg, model, rng);
    for (int s = 0; s < kSlotsPerDay; ++s) total[s] += r.average_day_kw[s];
  }
  return total;
}

std::optional<DayType> common_day_type(const std::vector<VehicleSchedule>& vehicles) {
  std::optional<DayType> type;
  for (const auto& v : vehicles)
    for (const auto& d : v.days) {
      if (type && *type != d.day_type) return std::nullopt;
      type = d.day_type;
    }
  return type;
}

}  // namespace

SlotArray LoadDistribution::mean_profile() const {
  SlotArray out{};
  for (int s = 0; s < kSlotsPerDay; ++s) out[s] = slots[s].mean;
  return out;
}

double LoadDistribution::peak_mean() const {
  double peak = 0.0;
  for (const auto& s : slots) peak = std::max(peak, s.mean);
  return peak;
}

LoadDistribution summarize_runs(const std::vector<SlotArray>& runs, bool retain) {
  LoadDistribution out;
  out.n_runs = runs.size();
  if (runs.empty()) return out;
  std::vector<double> column(runs.size());
  for (int s = 0; s < kSlotsPerDay; ++s) {
    for (std::size_t r = 0; r < runs.size(); ++r) column[r] = runs[r][s];
    out.slots[s].mean = stats::mean(column);
    out.slots[s].sd = runs.size() > 1 ? stats::sample_sd(column) : 0.0;
    out.slots[s].p05 = stats::quantile(column, 0.05);
    out.slots[s].p95 = stats::quantile(column, 0.95);
  }
  if (retain) out.runs = runs;
  return out;
}

LoadDistribution monte_carlo(const std::vector<VehicleSchedule>& vehicles,
                             const clustering::ClusterSet& clusters,
                             const charging::PosteriorTables& tables, const SimConfig& cfg,
                             ChargeModel model) {
  cfg.validate();
  if (vehicles.empty()) throw DataError("no vehicles to simulate");
  const auto labels = label_all(vehicles, clusters, model);
  std::vector<std::size_t> all(vehicles.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<SlotArray> runs(static_cast<std::size_t>(cfg.n_runs));
  parallel_for(runs.size(), cfg.threads, [&](std::size_t r) {
    runs[r] = aggregate(vehicles, labels, all, tables, cfg, model, r);
  });
  auto out = summarize_runs(runs, cfg.retain_runs);
  out.day_type = common_day_type(vehicles);
  return out;
}

LoadDistribution monte_carlo_resampled(const std::vector<VehicleSchedule>& pool,
                                       const clustering::ClusterSet& clusters,
                                       const charging::PosteriorTables& tables,
                                       const SimConfig& cfg, ChargeModel model) {
  cfg.validate();
  if (pool.size() < static_cast<std::size_t>(cfg.sample_size))
    throw ConfigError("vehicle pool (" + std::to_string(pool.size()) +
                      ") is smaller than sample_size (" + std::to_string(cfg.sample_size) + ")");
  const auto labels = label_all(pool, clusters, model);
  std::vector<SlotArray> runs(static_cast<std::size_t>(cfg.n_runs));
  parallel_for(runs.size(), cfg.threads, [&](std::size_t r) {
    std::vector<std::size_t> idx(pool.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng pick(cfg.seed, "mc-sample", r);
    const auto n = static_cast<std::size_t>(cfg.sample_size);
    for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + pick.below(idx.size() - i)]);
    idx.resize(n);
    runs[r] = aggregate(pool, labels, idx, tables, cfg, model, r);
  });
  auto out = summarize_runs(runs, cfg.retain_runs);
  out.day_type = common_day_type(pool);
  return out;
}

std::vector<VehicleSchedule> single_day_units(const std::vector<VehicleDay>& days, int day_of_week) {
  std::vector<VehicleSchedule> out;
  for (const auto& d : days)
    if (evcharge::day_of_week(d.day_index) == day_of_week) out.push_back({d.vehicle_id, {d}});
  return out;
}

SimConfig parse_sim_config(std::string_view json_text, const SimConfig& base) {
  using nlohmann::json;
  SimConfig cfg = base;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw ConfigError("simulation config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "charger_kw") cfg.charger_kw = value.get<double>();
      else if (key == "efficiency") cfg.efficiency = value.get<double>();
      else if (key == "battery_kwh") cfg.battery_kwh = value.get<double>();
      else if (key == "kwh_per_mile") cfg.kwh_per_mile = value.get<double>();
      else if (key == "initial_soc") cfg.initial_soc = value.get<double>();
      else if (key == "n_runs") cfg.n_runs = value.get<int>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "resample_vehicles") cfg.resample_vehicles = value.get<bool>();
      else if (key == "sample_size") cfg.sample_size = value.get<int>();
      else if (key == "warmup_days") cfg.warmup_days = value.get<int>();
      else if (key == "window_minutes") cfg.window_minutes = value.get<double>();
      else if (key == "threads") cfg.threads = value.get<int>();
      else if (key == "retain_runs") cfg.retain_runs = value.get<bool>();
      else throw ConfigError("unknown simulation config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("simulation config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string to_json(const SimConfig& cfg) {
  nlohmann::json j = {
      {"charger_kw", cfg.charger_kw},   {"efficiency", cfg.efficiency},
      {"battery_kwh", cfg.battery_kwh}, {"kwh_per_mile", cfg.kwh_per_mile},
      {"initial_soc", cfg.initial_soc}, {"n_runs", cfg.n_runs},
      {"seed", cfg.seed},               {"resample_vehicles", cfg.resample_vehicles},
      {"sample_size", cfg.sample_size}, {"warmup_days", cfg.warmup_days},
      {"window_minutes", cfg.window_minutes}, {"threads", cfg.threads},
      {"retain_runs", cfg.retain_runs},
  };
  return j.dump(1);
}

}  // namespace evcharge::sim
