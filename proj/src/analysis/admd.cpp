#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "evcharge/analysis.hpp"
#include "evcharge/csv.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/rng.hpp"

namespace evcharge::analysis {

double BaselineProfile::daily_kwh() const {
  double total = 0.0;
  for (double v : kw) total += v * kSlotMinutes / 60.0;
  return total;
}

BaselineProfile parse_baseline_csv(std::string_view text) {
  BaselineProfile p;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool header_seen = false, tags_seen = false;
  std::vector<bool> filled(kSlotsPerDay, false);
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = csv::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      for (const auto& field : csv::split(trimmed.substr(1))) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        const std::string key(csv::trim(std::string_view(field).substr(0, eq)));
        const std::string value(csv::trim(std::string_view(field).substr(eq + 1)));
        if (key == "day_type") {
          p.day_type = day_type_from_string(value);
          tags_seen = true;
        } else if (key == "season") {
          p.season = value;
        }
      }
      continue;
    }
    if (!header_seen) {
      if (trimmed != "slot,kw") throw DataError("baseline profile: expected header 'slot,kw'");
      header_seen = true;
      continue;
    }
    const auto fields = csv::split(trimmed);
    if (fields.size() != 2)
      throw DataError("baseline profile line " + std::to_string(line_no) + ": expected 2 fields");
    const auto slot = csv::parse_int(fields[0]);
    const auto kw = csv::parse_double(fields[1]);
    if (!slot || *slot < 0 || *slot >= kSlotsPerDay)
      throw DataError("baseline profile line " + std::to_string(line_no) + ": bad slot");
    if (!kw || *kw < 0.0)
      throw DataError("baseline profile line " + std::to_string(line_no) + ": kw must be >= 0");
    if (filled[static_cast<std::size_t>(*slot)])
      throw DataError("baseline profile line " + std::to_string(line_no) + ": duplicate slot");
    filled[static_cast<std::size_t>(*slot)] = true;
    p.kw[static_cast<std::size_t>(*slot)] = *kw;
  }
  if (!tags_seen) throw DataError("baseline profile: missing '# day_type=...' line");
  if (std::count(filled.begin(), filled.end(), true) != kSlotsPerDay)
    throw DataError("baseline profile: all 48 slots are required");
  return p;
}

BaselineProfile load_baseline(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read baseline profile '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_baseline_csv(ss.str());
}

void write_baseline_csv(std::ostream& out, const BaselineProfile& p) {
  out << "# day_type=" << to_string(p.day_type) << ",season=" << p.season << "\nslot,kw\n";
  for (int s = 0; s < kSlotsPerDay; ++s) out << s << ',' << csv::format_double(p.kw[s]) << '\n';
}

BaselineProfile blend_baseline(const BaselineProfile& flat, const BaselineProfile& e7,
                               double e7_share, double annual_kwh) {
  if (!(e7_share >= 0.0 && e7_share <= 1.0)) throw ConfigError("e7_share must be in [0, 1]");
  if (!(annual_kwh > 0.0)) throw ConfigError("annual_kwh must be > 0");
  if (flat.day_type != e7.day_type || flat.season != e7.season)
    throw ConfigError("baseline profiles have different day_type or season tags");
  BaselineProfile out = flat;
  for (int s = 0; s < kSlotsPerDay; ++s) out.kw[s] = (1.0 - e7_share) * flat.kw[s] + e7_share * e7.kw[s];
  const double day = out.daily_kwh();
  if (day <= 0.0) throw DataError("blended baseline is all zero");
  const double scale = annual_kwh / (day * 365.0);
  for (auto& v : out.kw) v *= scale;
  return out;
}

AdmdReport admd_increase(const BaselineProfile& baseline, const SlotArray& ev_aggregate_kw,
                         int n_households, std::string region) {
  if (n_households < 1) throw ConfigError("n_households must be >= 1");
  const double base_peak = *std::max_element(baseline.kw.begin(), baseline.kw.end());
  if (base_peak <= 0.0) throw DataError("baseline profile is all zero");
  double combined = 0.0;
  for (int s = 0; s < kSlotsPerDay; ++s)
    combined = std::max(combined, baseline.kw[s] + ev_aggregate_kw[s] / n_households);
  AdmdReport r;
  r.region = std::move(region);
  r.baseline_admd_kw = base_peak;
  r.combined_admd_kw = combined;
  r.percent_increase = (combined - base_peak) / base_peak * 100.0;
  return r;
}

AdmdReport admd_increase(const BaselineProfile& baseline, const sim::LoadDistribution& ev,
                         int n_households, AdmdStatistic statistic, std::string region) {
  if (!ev.day_type) throw ConfigError("EV load mixes weekday and weekend days");
  if (*ev.day_type != baseline.day_type)
    throw ConfigError("EV load is " + std::string(to_string(*ev.day_type)) +
                      " but the baseline is " + std::string(to_string(baseline.day_type)));
  SlotArray load{};
  for (int s = 0; s < kSlotsPerDay; ++s)
    load[s] = statistic == AdmdStatistic::Mean ? ev.slots[s].mean : ev.slots[s].p95;
  return admd_increase(baseline, load, n_households, std::move(region));
}

BatchResult regional_batch(const std::vector<RegionInput>& regions, const BaselineProfile& flat,
                           const BaselineProfile& e7, const clustering::ClusterSet& clusters,
                           const charging::PosteriorTables& tables, const sim::SimConfig& cfg,
                           const BatchOptions& options) {
  BatchResult result;
  for (const auto& region : regions) {
    try {
      if (region.n_households < 1) throw ConfigError("n_households must be >= 1");
      const auto baseline = blend_baseline(flat, e7, region.e7_share, region.annual_kwh);
      const auto units = sim::single_day_units(region.pool, options.day_of_week);
      sim::SimConfig local = cfg;
      local.seed = derive_seed(cfg.seed, "region", hash_label(region.id));
      local.sample_size = region.n_households;
      local.warmup_days = 0;
      const auto dist = sim::monte_carlo_resampled(units, clusters, tables, local);
      result.reports.push_back(
          admd_increase(baseline, dist, region.n_households, options.statistic, region.id));
      result.mean_profiles.emplace_back(region.id, dist.mean_profile());
    } catch (const std::exception& e) {
      result.failures.push_back({region.id, e.what()});
    }
  }
  std::stable_sort(result.reports.begin(), result.reports.end(),
                   [](const AdmdReport& a, const AdmdReport& b) {
                     if (a.percent_increase != b.percent_increase)
                       return a.percent_increase > b.percent_increase;
                     return a.region < b.region;
                   });
  return result;
}

void write_admd_csv(std::ostream& out, const std::vector<AdmdReport>& reports) {
  out << "rank,region,baseline_admd_kw,combined_admd_kw,percent_increase\n";
  int rank = 1;
  for (const auto& r : reports)
    out << rank++ << ',' << csv::escape(r.region) << ',' << csv::format_double(r.baseline_admd_kw)
        << ',' << csv::format_double(r.combined_admd_kw) << ','
        << csv::format_double(r.percent_increase) << '\n';
}

std::string admd_to_json(const BatchResult& result) {
  nlohmann::json j;
  j["reports"] = nlohmann::json::array();
  int rank = 1;
  for (const auto& r : result.reports)
    j["reports"].push_back({{"rank", rank++},
                            {"region", r.region},
                            {"baseline_admd_kw", r.baseline_admd_kw},
                            {"combined_admd_kw", r.combined_admd_kw},
                            {"percent_increase", r.percent_increase}});
  j["failures"] = nlohmann::json::array();
  for (const auto& f : result.failures)
    j["failures"].push_back({{"region", f.region}, {"message", f.message}});
  return j.dump(1);
}

void write_profile_csv(std::ostream& out, const sim::LoadDistribution& dist) {
  out << "slot,mean_kw,p05_kw,p95_kw\n";
  for (int s = 0; s < kSlotsPerDay; ++s) {
    const auto& st = dist.slots[s];
    out << s << ',' << csv::format_double(st.mean) << ',' << csv::format_double(st.p05) << ','
        << csv::format_double(st.p95) << '\n';
  }
}

void write_runs_csv(std::ostream& out, const sim::LoadDistribution& dist) {
  out << "run";
  for (int s = 0; s < kSlotsPerDay; ++s) out << ",slot" << s;
  out << '\n';
  for (std::size_t r = 0; r < dist.runs.size(); ++r) {
    out << r;
    for (double v : dist.runs[r]) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

}  // namespace evcharge::analysis
