#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "evcharge/analysis.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/parallel.hpp"

namespace evcharge::analysis {
namespace {

SlotPdf pdf_or_zero(const std::vector<int>& slots) {
  if (slots.empty()) return SlotPdf{};
  return start_time_pdf(slots);
}

SlotPdf profile_pdf_or_zero(const SlotArray& p) {
  double total = 0.0;
  for (double v : p) total += v;
  if (total <= 0.0) return SlotPdf{};
  return normalize_profile(p);
}

nlohmann::json scores_json(const ModelScores& s) {
  return {{"start_mape", s.start_mape},
          {"power_mape", s.power_mape},
          {"timing_accuracy", s.timing_accuracy}};
}

struct HeldOut {
  bool skipped = false;
  std::string reason;
  VehicleValidation result;
  std::vector<int> observed_slots, model_slots, naive_slots;
  SlotArray observed_power{}, model_power{}, naive_power{};
  std::size_t timing_hits_model = 0, timing_hits_naive = 0;
};

}  // namespace

SlotPdf start_time_pdf(const std::vector<int>& slots) {
  if (slots.empty()) throw DataError("start-time PDF needs at least one event");
  SlotPdf pdf{};
  for (int s : slots) {
    if (s < 0 || s >= kSlotsPerDay) throw DataError("start slot out of range");
    pdf[s] += 1.0;
  }
  for (auto& v : pdf) v /= static_cast<double>(slots.size());
  return pdf;
}

SlotPdf start_time_pdf_from_minutes(const std::vector<double>& minutes) {
  std::vector<int> slots;
  slots.reserve(minutes.size());
  for (double m : minutes) slots.push_back(slot_of_minute(std::fmod(m, double(kMinutesPerDay))));
  return start_time_pdf(slots);
}

SlotPdf normalize_profile(const SlotArray& profile) {
  double total = 0.0;
  for (double v : profile) {
    if (v < 0.0) throw DataError("profile has a negative value");
    total += v;
  }
  if (total <= 0.0) throw DataError("profile is all zero");
  SlotPdf out{};
  for (int s = 0; s < kSlotsPerDay; ++s) out[s] = profile[s] / total;
  return out;
}

double mape(const SlotPdf& predicted, const SlotPdf& observed) {
  double acc = 0.0;
  int active = 0;
  for (int s = 0; s < kSlotsPerDay; ++s) {
    if (observed[s] <= 0.0) continue;
    acc += std::abs(predicted[s] - observed[s]) / observed[s];
    ++active;
  }
  if (active == 0) throw DataError("observed distribution is all zero");
  return 100.0 * acc / active;
}

double timing_accuracy(const std::vector<TimingMatch>& observed,
                       const std::vector<TimingMatch>& simulated) {
  if (observed.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& o : observed) {
    const bool hit = std::any_of(simulated.begin(), simulated.end(), [&](const TimingMatch& s) {
      return s.day_offset == o.day_offset && std::abs(s.slot - o.slot) <= 1;
    });
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(observed.size());
}

SlotArray observed_power_profile(const std::vector<ChargeEvent>& charges, double charger_kw,
                                 int n_days) {
  SlotArray out{};
  if (n_days <= 0) return out;
  for (const auto& c : charges) {
    double from = c.start_minute;
    double remaining = c.abs_end() - c.abs_start();
    while (remaining > 0.0) {
      const int s = slot_of_minute(std::fmod(from, double(kMinutesPerDay)));
      const double slot_end = double(s + 1) * kSlotMinutes;
      const double local = std::fmod(from, double(kMinutesPerDay));
      const double span = std::min(remaining, slot_end - local);
      out[s] += charger_kw * span / kSlotMinutes;
      from += span;
      remaining -= span;
    }
  }
  for (auto& v : out) v /= n_days;
  return out;
}

ValidationReport leave_one_out_validate(const std::vector<VehicleDay>& days,
                                        const std::vector<ChargeEvent>& charges,
                                        const clustering::ClusterSet& clusters,
                                        const sim::SimConfig& cfg, double sigma) {
  cfg.validate();
  const auto vehicles = group_by_vehicle(days);
  if (vehicles.size() < 2) throw DataError("leave-one-out needs at least two vehicles");

  ingest::SocOptions soc_opts;
  soc_opts.battery_kwh = cfg.battery_kwh;
  soc_opts.initial_soc = cfg.initial_soc;
  soc_opts.kwh_per_mile = cfg.kwh_per_mile;
  const auto traces = ingest::infer_soc_traces(days, charges, soc_opts);
  const auto classification = charging::classify_charges(days, charges, cfg.window_minutes);

  std::unordered_map<std::string, std::vector<charging::ChargeLabel>> labels_by_vehicle;
  std::unordered_map<std::string, std::vector<ChargeEvent>> charges_by_vehicle;
  for (const auto& l : classification.labels) {
    labels_by_vehicle[l.event.vehicle_id].push_back(l);
    charges_by_vehicle[l.event.vehicle_id].push_back(l.event);
  }

  std::vector<charging::OpportunityCounts> per_vehicle;
  per_vehicle.reserve(vehicles.size());
  charging::OpportunityCounts total(clusters.max_k());
  for (const auto& v : vehicles) {
    per_vehicle.push_back(charging::count_opportunities(v.days, labels_by_vehicle[v.vehicle_id],
                                                        clusters, traces, cfg.window_minutes));
    total += per_vehicle.back();
  }

  std::vector<HeldOut> held(vehicles.size());
  parallel_for(vehicles.size(), cfg.threads, [&](std::size_t vi) {
    const auto& v = vehicles[vi];
    HeldOut& h = held[vi];
    h.result.vehicle_id = v.vehicle_id;
    const auto& observed = charges_by_vehicle[v.vehicle_id];
    if (observed.empty()) {
      h.skipped = true;
      h.reason = "no observed charges";
      return;
    }
    h.result.observed_charges = observed.size();
    const int first_day = v.days.front().day_index;
    const int n_days = static_cast<int>(v.days.size());

    std::vector<TimingMatch> obs_matches;
    for (const auto& c : observed) {
      const int s = slot_of_minute(c.start_minute);
      h.observed_slots.push_back(s);
      obs_matches.push_back({c.day_index - first_day, s});
    }
    h.observed_power = observed_power_profile(observed, cfg.charger_kw, n_days);

    charging::OpportunityCounts rest = total;
    rest -= per_vehicle[vi];
    const auto tables = charging::tables_from_counts(rest, sigma, cfg.window_minutes);

    std::vector<clustering::ClusterLabel> labels;
    for (const auto& d : v.days) labels.push_back(clusters.classify(d));

    sim::SimConfig local = cfg;
    local.warmup_days = 0;
    std::vector<TimingMatch> model_matches;
    for (int r = 0; r < cfg.n_runs; ++r) {
      Rng rng(cfg.seed, "loo", vi, static_cast<std::uint64_t>(r));
      const auto run = sim::simulate_schedule(v, labels, tables, local, sim::ChargeModel::Stochastic, rng);
      for (const auto& s : run.starts) {
        h.model_slots.push_back(slot_of_minute(s.minute));
        model_matches.push_back({s.day_offset, slot_of_minute(s.minute)});
      }
      for (int s = 0; s < kSlotsPerDay; ++s) h.model_power[s] += run.average_day_kw[s] / cfg.n_runs;
    }
    Rng unused(0);
    const auto naive = sim::simulate_schedule(v, labels, tables, local, sim::ChargeModel::Naive, unused);
    std::vector<TimingMatch> naive_matches;
    for (const auto& s : naive.starts) {
      h.naive_slots.push_back(slot_of_minute(s.minute));
      naive_matches.push_back({s.day_offset, slot_of_minute(s.minute)});
    }
    h.naive_power = naive.average_day_kw;

    const SlotPdf obs_pdf = start_time_pdf(h.observed_slots);
    const SlotPdf obs_power = profile_pdf_or_zero(h.observed_power);
    auto score = [&](const std::vector<int>& slots, const SlotArray& power,
                     const std::vector<TimingMatch>& matches) {
      ModelScores m;
      m.start_mape = mape(pdf_or_zero(slots), obs_pdf);
      m.power_mape = mape(profile_pdf_or_zero(power), obs_power);
      m.timing_accuracy = timing_accuracy(obs_matches, matches);
      return m;
    };
    h.result.model = score(h.model_slots, h.model_power, model_matches);
    h.result.naive = score(h.naive_slots, h.naive_power, naive_matches);
    h.timing_hits_model = static_cast<std::size_t>(
        std::llround(h.result.model.timing_accuracy * static_cast<double>(observed.size())));
    h.timing_hits_naive = static_cast<std::size_t>(
        std::llround(h.result.naive.timing_accuracy * static_cast<double>(observed.size())));
  });

  ValidationReport report;
  report.runs_per_vehicle = cfg.n_runs;
  report.sigma = sigma;
  std::vector<int> obs_slots, model_slots, naive_slots;
  SlotArray obs_power{}, model_power{}, naive_power{};
  std::size_t observed_total = 0, hits_model = 0, hits_naive = 0;
  for (const auto& h : held) {
    if (h.skipped) {
      report.skipped.emplace_back(h.result.vehicle_id, h.reason);
      continue;
    }
    report.vehicles.push_back(h.result);
    obs_slots.insert(obs_slots.end(), h.observed_slots.begin(), h.observed_slots.end());
    model_slots.insert(model_slots.end(), h.model_slots.begin(), h.model_slots.end());
    naive_slots.insert(naive_slots.end(), h.naive_slots.begin(), h.naive_slots.end());
    for (int s = 0; s < kSlotsPerDay; ++s) {
      obs_power[s] += h.observed_power[s];
      model_power[s] += h.model_power[s];
      naive_power[s] += h.naive_power[s];
    }
    observed_total += h.result.observed_charges;
    hits_model += h.timing_hits_model;
    hits_naive += h.timing_hits_naive;
  }
  if (report.vehicles.empty()) throw DataError("no vehicle has observed charges");

  report.observed_start_pdf = start_time_pdf(obs_slots);
  report.model_start_pdf = pdf_or_zero(model_slots);
  report.naive_start_pdf = pdf_or_zero(naive_slots);
  const SlotPdf obs_power_pdf = profile_pdf_or_zero(obs_power);
  report.model.start_mape = mape(report.model_start_pdf, report.observed_start_pdf);
  report.naive.start_mape = mape(report.naive_start_pdf, report.observed_start_pdf);
  report.model.power_mape = mape(profile_pdf_or_zero(model_power), obs_power_pdf);
  report.naive.power_mape = mape(profile_pdf_or_zero(naive_power), obs_power_pdf);
  report.model.timing_accuracy = static_cast<double>(hits_model) / static_cast<double>(observed_total);
  report.naive.timing_accuracy = static_cast<double>(hits_naive) / static_cast<double>(observed_total);
  return report;
}

std::string ValidationReport::to_json() const {
  nlohmann::json j;
  j["runs_per_vehicle"] = runs_per_vehicle;
  j["sigma"] = sigma;
  j["aggregate"] = {{"model", scores_json(model)}, {"naive", scores_json(naive)}};
  j["start_pdf"] = {{"observed", observed_start_pdf},
                    {"model", model_start_pdf},
                    {"naive", naive_start_pdf}};
  j["vehicles"] = nlohmann::json::array();
  for (const auto& v : vehicles)
    j["vehicles"].push_back({{"vehicle_id", v.vehicle_id},
                             {"observed_charges", v.observed_charges},
                             {"model", scores_json(v.model)},
                             {"naive", scores_json(v.naive)}});
  j["skipped"] = nlohmann::json::array();
  for (const auto& [id, reason] : skipped) j["skipped"].push_back({{"vehicle_id", id}, {"reason", reason}});
  return j.dump(1);
}

}  // namespace evcharge::analysis
