#include "cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "evcharge/analysis.hpp"
#include "evcharge/charge_model.hpp"
#include "evcharge/clustering.hpp"
#include "evcharge/csv.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/ingest.hpp"
#include "evcharge/rng.hpp"
#include "evcharge/simulator.hpp"

namespace evcharge::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Values from --config; flags override them.
struct FileConfig {
  sim::SimConfig sim;
  std::optional<double> sigma;
  std::optional<int> k, k_min, k_max, restarts, day_of_week;
};

FileConfig load_file_config(const std::string& path) {
  FileConfig fc;
  if (path.empty()) return fc;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "simulation") fc.sim = sim::parse_sim_config(value.dump(), fc.sim);
      else if (key == "sigma") fc.sigma = value.get<double>();
      else if (key == "k") fc.k = value.get<int>();
      else if (key == "k_min") fc.k_min = value.get<int>();
      else if (key == "k_max") fc.k_max = value.get<int>();
      else if (key == "restarts") fc.restarts = value.get<int>();
      else if (key == "day_of_week") fc.day_of_week = value.get<int>();
      else throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return fc;
}

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string config;
  std::string out;
};

struct SimFlags {
  std::optional<double> charger_kw, efficiency, battery_kwh, kwh_per_mile, initial_soc, window;
  std::optional<int> n_runs, sample_size, warmup_days;

  void add_to(CLI::App* app) {
    app->add_option("--charger-kw", charger_kw, "Charger power drawn from the grid (kW)");
    app->add_option("--efficiency", efficiency, "Fraction of grid energy stored");
    app->add_option("--battery-kwh", battery_kwh, "Battery capacity (kWh)");
    app->add_option("--kwh-per-mile", kwh_per_mile, "Energy use per mile (kWh)");
    app->add_option("--initial-soc", initial_soc, "SOC at the start of each simulated schedule");
    app->add_option("--window", window, "After-journey matching window (minutes)");
    app->add_option("--runs", n_runs, "Monte Carlo runs");
    app->add_option("--sample-size", sample_size, "Vehicles per run");
    app->add_option("--warmup-days", warmup_days, "Leading simulated days left out of profiles");
  }

  sim::SimConfig resolve(sim::SimConfig cfg, const GlobalFlags& g) const {
    if (charger_kw) cfg.charger_kw = *charger_kw;
    if (efficiency) cfg.efficiency = *efficiency;
    if (battery_kwh) cfg.battery_kwh = *battery_kwh;
    if (kwh_per_mile) cfg.kwh_per_mile = *kwh_per_mile;
    if (initial_soc) cfg.initial_soc = *initial_soc;
    if (window) cfg.window_minutes = *window;
    if (n_runs) cfg.n_runs = *n_runs;
    if (sample_size) cfg.sample_size = *sample_size;
    if (warmup_days) cfg.warmup_days = *warmup_days;
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    cfg.validate();
    return cfg;
  }
};

json sim_json(const sim::SimConfig& cfg) { return json::parse(sim::to_json(cfg)); }

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

// Collects data outputs in memory, writes them, then writes the manifest.
class OutputDir {
 public:
  explicit OutputDir(std::string dir) : dir_(std::move(dir)) {
    if (dir_.empty()) throw ConfigError("--out is required");
  }

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }

  void input(const std::string& path) { inputs_.push_back(path); }

  void commit(const std::string& subcommand, std::uint64_t seed, const json& config) {
    fs::create_directories(dir_);
    json outputs = json::array();
    for (const auto& [name, content] : files_) {
      std::ofstream f(fs::path(dir_) / name, std::ios::binary);
      if (!f) throw DataError("cannot write '" + (fs::path(dir_) / name).string() + "'");
      f << content;
      outputs.push_back({{"file", name}, {"sha256", sha256_hex(content)}});
    }
    json inputs = json::array();
    for (const auto& p : inputs_) inputs.push_back({{"path", p}, {"sha256", sha256_file(p)}});
    const json manifest = {{"subcommand", subcommand},   {"tool_version", kToolVersion},
                           {"timestamp", utc_timestamp()}, {"seed", seed},
                           {"config", config},             {"inputs", inputs},
                           {"outputs", outputs}};
    std::ofstream m(fs::path(dir_) / "manifest.json");
    m << manifest.dump(1) << '\n';
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
  std::vector<std::string> inputs_;
};

void report_parse(const ingest::ParseReport& report, std::ostream& err) {
  for (const auto& w : report.warnings)
    err << "warning: " << report.source << ':' << w.line << ": " << w.message << '\n';
  if (!report.ok()) {
    for (const auto& e : report.errors)
      err << "error: " << report.source << ':' << e.line << ": " << e.field << ": " << e.message
          << '\n';
    throw DataError(report.source + ": " + std::to_string(report.errors.size()) + " invalid row(s)");
  }
}

std::vector<VehicleDay> load_days(const std::string& path, std::ostream& err) {
  auto data = ingest::parse_survey(path);
  report_parse(data.report, err);
  return data.days;
}

ingest::TrialData load_trial(const std::string& journeys, const std::string& charges,
                             std::ostream& err) {
  ingest::ParseConfig pc;
  pc.require_energy = true;
  auto data = ingest::parse_trial(journeys, charges, pc);
  report_parse(data.journey_report, err);
  report_parse(data.charge_report, err);
  return data;
}

std::string label_name(int label) { return label == clustering::kUnused ? "U" : std::to_string(label); }

template <typename Fn>
std::string render(Fn&& fn) {
  std::ostringstream ss;
  fn(ss);
  return ss.str();
}

// --------------------------------------------------------------- synth

struct SynthArgs {
  std::string spec;
  std::optional<int> vehicles, days;
};

void cmd_synth(const GlobalFlags& g, const SynthArgs& a, std::ostream& out) {
  auto spec = a.spec.empty() ? ingest::SynthesisSpec::defaults() : ingest::load_synthesis_spec(a.spec);
  if (a.vehicles) spec.n_vehicles = *a.vehicles;
  if (a.days) spec.n_days = *a.days;
  spec.validate();
  const std::uint64_t seed = g.seed.value_or(0);
  const auto fleet = ingest::synthesize_fleet(spec, seed);

  OutputDir dir(g.out);
  if (!a.spec.empty()) dir.input(a.spec);
  dir.add("survey.csv", render([&](std::ostream& o) { ingest::write_journeys_csv(o, fleet.days, false); }));
  dir.add("trial_journeys.csv",
          render([&](std::ostream& o) { ingest::write_journeys_csv(o, fleet.days, true); }));
  dir.add("trial_charges.csv", render([&](std::ostream& o) { ingest::write_charges_csv(o, fleet.charges); }));
  dir.add("ground_truth.csv",
          render([&](std::ostream& o) { ingest::write_ground_truth_csv(o, fleet.labels); }));
  dir.commit("synth", seed, {{"spec", json::parse(ingest::synthesis_spec_to_json(spec))}});
  out << "synthesized " << fleet.days.size() << " vehicle-days and " << fleet.charges.size()
      << " charges\n";
}

// ------------------------------------------------------------- cluster

struct ClusterArgs {
  std::string data;
  std::optional<int> k, k_min, k_max, restarts;
};

clustering::KMeansResult best_fit(const std::vector<clustering::FeatureVector>& points, int k,
                                  int restarts, std::uint64_t seed, DayType type) {
  std::optional<clustering::KMeansResult> best;
  for (int r = 0; r < restarts; ++r) {
    auto fit = clustering::kmeans_fit(points, k, derive_seed(seed, "cluster-fit", int(type), r), {}, type);
    if (!best || fit.sos < best->sos) best = std::move(fit);
  }
  return std::move(*best);
}

void cmd_cluster(const GlobalFlags& g, const FileConfig& fc, const ClusterArgs& a, std::ostream& out,
                 std::ostream& err) {
  const int k = a.k.value_or(fc.k.value_or(3));
  const int k_min = a.k_min.value_or(fc.k_min.value_or(1));
  const int k_max = a.k_max.value_or(fc.k_max.value_or(8));
  const int restarts = a.restarts.value_or(fc.restarts.value_or(10));
  const int threads = g.threads.value_or(fc.sim.threads);
  const std::uint64_t seed = g.seed.value_or(fc.sim.seed);
  if (restarts < 1) throw ConfigError("--restarts must be >= 1");
  if (threads < 1) throw ConfigError("--threads must be >= 1");

  const auto days = load_days(a.data, err);
  clustering::ClusterSet set;
  json summary;
  std::ostringstream elbow;
  elbow << "day_type,k,sos\n";
  for (DayType type : {DayType::Weekday, DayType::Weekend}) {
    const auto points = clustering::features_for(days, type);
    const auto curve = clustering::elbow_scan(points, k_min, k_max, restarts,
                                              derive_seed(seed, "elbow", int(type)), threads);
    for (const auto& p : curve)
      elbow << to_string(type) << ',' << p.k << ',' << csv::format_double(p.sos) << '\n';
    const auto fit = best_fit(points, k, restarts, seed, type);
    (type == DayType::Weekday ? set.weekday : set.weekend) = fit.model;
    const auto suggested = clustering::elbow_k(curve);
    summary[std::string(to_string(type))] = {{"k", k},
                                             {"elbow_k", suggested ? json(*suggested) : json(nullptr)},
                                             {"sos", fit.sos},
                                             {"iterations", fit.iterations},
                                             {"converged", fit.converged},
                                             {"used_days", points.size()}};
    out << to_string(type) << ": k=" << k << " sos=" << fit.sos
        << " elbow suggests k=" << (suggested ? std::to_string(*suggested) : "n/a") << '\n';
  }

  std::ostringstream comp;
  comp << "day_type,label,share,mean_miles\n";
  for (DayType type : {DayType::Weekday, DayType::Weekend}) {
    const auto c = clustering::composition(set.for_day(type), days);
    for (std::size_t l = 0; l < c.shares.size(); ++l)
      comp << to_string(type) << ',' << label_name(static_cast<int>(l)) << ','
           << csv::format_double(c.shares[l]) << ',' << csv::format_double(c.mean_miles[l]) << '\n';
  }

  std::ostringstream weekly;
  weekly << "day_of_week,label,share\n";
  const auto wk = clustering::weekly_composition(set, days);
  for (int d = 0; d < 7; ++d)
    for (std::size_t l = 0; l < wk[static_cast<std::size_t>(d)].size(); ++l)
      weekly << d << ',' << label_name(static_cast<int>(l)) << ','
             << csv::format_double(wk[static_cast<std::size_t>(d)][l]) << '\n';

  std::ostringstream trans;
  trans << "filter,from,to,probability,count,imputed\n";
  const auto seqs = clustering::label_sequences(set, days);
  for (auto [filter, name] : {std::pair{clustering::TransitionFilter::AllDays, "all"},
                              std::pair{clustering::TransitionFilter::WeekdaysOnly, "weekdays"}}) {
    const auto tm = clustering::transition_matrix(seqs, set.max_k(), filter);
    auto state_name = [&](int s) { return s == tm.k ? std::string("U") : std::to_string(s + 1); };
    for (int i = 0; i < tm.states(); ++i)
      for (int j = 0; j < tm.states(); ++j)
        trans << name << ',' << state_name(i) << ',' << state_name(j) << ','
              << csv::format_double(tm.probs[i][j]) << ',' << tm.counts[i][j] << ','
              << (tm.imputed_rows[i] ? 1 : 0) << '\n';
  }

  std::ostringstream prof;
  prof << "day_type,label,slot,days,mean_speed,p05_speed,p95_speed,centroid\n";
  for (DayType type : {DayType::Weekday, DayType::Weekend})
    for (const auto& p : clustering::cluster_profiles(set.for_day(type), days))
      for (int s = 0; s < kSlotsPerDay; ++s)
        prof << to_string(type) << ',' << p.label << ',' << s << ',' << p.days << ','
             << csv::format_double(p.mean_speed[s]) << ',' << csv::format_double(p.p05_speed[s]) << ','
             << csv::format_double(p.p95_speed[s]) << ',' << csv::format_double(p.centroid[s]) << '\n';

  OutputDir dir(g.out);
  dir.input(a.data);
  dir.add("cluster_model.json", clustering::to_json(set) + "\n");
  dir.add("cluster_summary.json", summary.dump(1) + "\n");
  dir.add("elbow.csv", elbow.str());
  dir.add("composition.csv", comp.str());
  dir.add("weekly_composition.csv", weekly.str());
  dir.add("transitions.csv", trans.str());
  dir.add("cluster_profiles.csv", prof.str());
  dir.commit("cluster", seed,
             {{"k", k}, {"k_min", k_min}, {"k_max", k_max}, {"restarts", restarts}, {"threads", threads}});
}

// ----------------------------------------------------------------- fit

struct FitArgs {
  std::string journeys, charges, model;
  std::optional<double> sigma;
};

void cmd_fit(const GlobalFlags& g, const FileConfig& fc, const SimFlags& sf, const FitArgs& a,
             std::ostream& out, std::ostream& err) {
  const auto cfg = sf.resolve(fc.sim, g);
  const double sigma = a.sigma.value_or(fc.sigma.value_or(1.0));
  const auto trial = load_trial(a.journeys, a.charges, err);
  const auto clusters = clustering::load_cluster_set(a.model);

  ingest::SocOptions soc;
  soc.battery_kwh = cfg.battery_kwh;
  soc.initial_soc = cfg.initial_soc;
  soc.kwh_per_mile = cfg.kwh_per_mile;
  const auto traces = ingest::infer_soc_traces(trial.days, trial.charges, soc);
  for (const auto& [id, t] : traces)
    if (t.inconsistent)
      err << "warning: vehicle " << id << ": inferred SOC clamped at 0 " << t.clamp_count << " time(s)\n";
  const auto cls = charging::classify_charges(trial.days, trial.charges, cfg.window_minutes);
  const auto tables = charging::fit_posteriors(trial.days, cls.labels, clusters, traces,
                                               {sigma, cfg.window_minutes});
  for (const auto& w : tables.warnings) err << "warning: " << w << '\n';

  std::size_t after = 0;
  for (const auto& l : cls.labels)
    if (l.kind == charging::ChargeKind::AfterJourney) ++after;
  const json classification = {{"charges", cls.labels.size()},
                               {"after_journey", after},
                               {"independent", cls.labels.size() - after},
                               {"fraction_after_final_journey", cls.fraction_after_final},
                               {"fraction_after_any_journey", cls.fraction_after_any}};

  OutputDir dir(g.out);
  dir.input(a.journeys);
  dir.input(a.charges);
  dir.input(a.model);
  dir.add("tables.json", charging::to_json(tables) + "\n");
  dir.add("heatmap_after_journey.csv",
          render([&](std::ostream& o) { charging::write_after_journey_heatmap(o, tables); }));
  dir.add("heatmap_independent.csv",
          render([&](std::ostream& o) { charging::write_independent_heatmap(o, tables); }));
  dir.add("classification.json", classification.dump(1) + "\n");
  dir.commit("fit", cfg.seed, {{"sigma", sigma}, {"simulation", sim_json(cfg)}});
  out << "fitted tables from " << cls.labels.size() << " charges (" << after
      << " after a journey)\n";
}

// ------------------------------------------------------------ simulate

struct SimulateArgs {
  std::string data, model, tables;
  bool naive = false, fixed_set = false, resample = false, week = false, dump_runs = false;
  std::optional<int> day_of_week;
};

void cmd_simulate(const GlobalFlags& g, const FileConfig& fc, const SimFlags& sf,
                  const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  auto cfg = sf.resolve(fc.sim, g);
  cfg.retain_runs = a.dump_runs;
  const int dow = a.day_of_week.value_or(fc.day_of_week.value_or(2));
  if (dow < 0 || dow > 6) throw ConfigError("--day-of-week must be in 0..6");
  const auto days = load_days(a.data, err);
  const auto clusters = clustering::load_cluster_set(a.model);
  const auto tables = charging::load_tables(a.tables);
  if (tables.n_clusters() < clusters.max_k())
    throw ConfigError("tables have fewer clusters than the cluster model");

  const auto pool = a.week ? group_by_vehicle(days) : sim::single_day_units(days, dow);
  if (pool.size() < static_cast<std::size_t>(cfg.sample_size))
    throw ConfigError("pool of " + std::to_string(pool.size()) + " vehicles is smaller than sample_size " +
                      std::to_string(cfg.sample_size));

  std::vector<std::string> samplings;
  if (a.fixed_set || !a.resample) samplings.emplace_back("fixed");
  if (a.resample) samplings.emplace_back("resampled");
  std::vector<sim::ChargeModel> models{sim::ChargeModel::Stochastic};
  if (a.naive) models.push_back(sim::ChargeModel::Naive);

  // The fixed set is one draw from the pool.
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng pick(cfg.seed, "fixed-set");
  for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.sample_size); ++i)
    std::swap(idx[i], idx[i + pick.below(idx.size() - i)]);
  std::vector<VehicleSchedule> fixed;
  for (int i = 0; i < cfg.sample_size; ++i) fixed.push_back(pool[idx[static_cast<std::size_t>(i)]]);

  OutputDir dir(g.out);
  dir.input(a.data);
  dir.input(a.model);
  dir.input(a.tables);
  json panels = json::array();
  for (const auto& sampling : samplings) {
    for (auto model : models) {
      const std::string model_name = model == sim::ChargeModel::Naive ? "naive" : "model";
      const auto dist = sampling == "fixed"
                            ? sim::monte_carlo(fixed, clusters, tables, cfg, model)
                            : sim::monte_carlo_resampled(pool, clusters, tables, cfg, model);
      const std::string name = sampling + "_" + model_name;
      dir.add("profile_" + name + ".csv",
              render([&](std::ostream& o) { analysis::write_profile_csv(o, dist); }));
      if (a.dump_runs)
        dir.add("runs_" + name + ".csv", render([&](std::ostream& o) { analysis::write_runs_csv(o, dist); }));
      panels.push_back(name);
      out << name << ": peak mean load " << dist.peak_mean() << " kW\n";
    }
  }
  dir.commit("simulate", cfg.seed,
             {{"simulation", sim_json(cfg)},
              {"day_of_week", dow},
              {"week", a.week},
              {"panels", panels}});
}

// ------------------------------------------------------------ validate

struct ValidateArgs {
  std::string journeys, charges, model;
  std::optional<double> sigma;
};

void cmd_validate(const GlobalFlags& g, const FileConfig& fc, const SimFlags& sf,
                  const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  const auto cfg = sf.resolve(fc.sim, g);
  const double sigma = a.sigma.value_or(fc.sigma.value_or(1.0));
  const auto trial = load_trial(a.journeys, a.charges, err);
  const auto clusters = clustering::load_cluster_set(a.model);
  const auto report = analysis::leave_one_out_validate(trial.days, trial.charges, clusters, cfg, sigma);
  for (const auto& [id, reason] : report.skipped) err << "note: skipped " << id << ": " << reason << '\n';

  OutputDir dir(g.out);
  dir.input(a.journeys);
  dir.input(a.charges);
  dir.input(a.model);
  dir.add("validation.json", report.to_json() + "\n");
  dir.commit("validate", cfg.seed, {{"sigma", sigma}, {"simulation", sim_json(cfg)}});
  out << "start-time MAPE: model " << report.model.start_mape << "%, naive " << report.naive.start_mape
      << "%\n";
}

// ---------------------------------------------------------------- admd

struct AdmdArgs {
  std::string regions, model, tables, statistic = "mean";
  std::optional<int> day_of_week;
};

void cmd_admd(const GlobalFlags& g, const FileConfig& fc, const SimFlags& sf, const AdmdArgs& a,
              std::ostream& out, std::ostream& err) {
  const auto cfg = sf.resolve(fc.sim, g);
  const int dow = a.day_of_week.value_or(fc.day_of_week.value_or(2));
  if (dow < 0 || dow > 6) throw ConfigError("--day-of-week must be in 0..6");
  analysis::BatchOptions opts;
  opts.day_of_week = dow;
  if (a.statistic == "mean") opts.statistic = analysis::AdmdStatistic::Mean;
  else if (a.statistic == "p95") opts.statistic = analysis::AdmdStatistic::P95;
  else throw ConfigError("--statistic must be mean or p95");

  std::ifstream in(a.regions);
  if (!in) throw ConfigError("cannot read regions spec '" + a.regions + "'");
  json spec;
  try {
    spec = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("regions spec: " + std::string(e.what()));
  }
  const fs::path base = fs::path(a.regions).parent_path();
  auto resolve_path = [&](const std::string& p) {
    const fs::path path(p);
    return (path.is_absolute() ? path : base / path).string();
  };

  OutputDir dir(g.out);
  dir.input(a.regions);
  dir.input(a.model);
  dir.input(a.tables);
  std::vector<analysis::RegionInput> regions;
  std::vector<analysis::RegionFailure> load_failures;
  std::string flat_path, e7_path;
  try {
    flat_path = resolve_path(spec.at("flat_profile").get<std::string>());
    e7_path = resolve_path(spec.at("e7_profile").get<std::string>());
    for (const auto& r : spec.at("regions")) {
      analysis::RegionInput region;
      region.id = r.at("id").get<std::string>();
      try {
        region.e7_share = r.at("e7_share").get<double>();
        region.annual_kwh = r.at("annual_kwh").get<double>();
        region.n_households = r.value("n_households", cfg.sample_size);
        const auto pool = resolve_path(r.at("pool").get<std::string>());
        region.pool = load_days(pool, err);
        dir.input(pool);
        regions.push_back(std::move(region));
      } catch (const std::exception& e) {
        load_failures.push_back({region.id, e.what()});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError("regions spec: " + std::string(e.what()));
  }
  dir.input(flat_path);
  dir.input(e7_path);
  const auto flat = analysis::load_baseline(flat_path);
  const auto e7 = analysis::load_baseline(e7_path);
  const auto clusters = clustering::load_cluster_set(a.model);
  const auto tables = charging::load_tables(a.tables);

  auto result = analysis::regional_batch(regions, flat, e7, clusters, tables, cfg, opts);
  result.failures.insert(result.failures.begin(), load_failures.begin(), load_failures.end());
  for (const auto& f : result.failures) err << "region " << f.region << " failed: " << f.message << '\n';
  if (result.reports.empty()) throw DataError("every region failed");

  std::ostringstream profiles;
  profiles << "region,slot,mean_kw\n";
  for (const auto& [id, p] : result.mean_profiles)
    for (int s = 0; s < kSlotsPerDay; ++s)
      profiles << csv::escape(id) << ',' << s << ',' << csv::format_double(p[s]) << '\n';

  dir.add("admd.csv", render([&](std::ostream& o) { analysis::write_admd_csv(o, result.reports); }));
  dir.add("admd.json", analysis::admd_to_json(result) + "\n");
  dir.add("admd_profiles.csv", profiles.str());
  dir.commit("admd", cfg.seed,
             {{"simulation", sim_json(cfg)}, {"day_of_week", dow}, {"statistic", a.statistic}});
  for (const auto& r : result.reports)
    out << r.region << ": ADMD +" << csv::format_fixed(r.percent_increase, 2) << "%\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"EV home-charging demand toolkit", "evcharge"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Root seed for every random stream");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic fleet with known charging behaviour");
  s->add_option("--spec", synth.spec, "Synthesis spec (JSON)")->check(CLI::ExistingFile);
  s->add_option("--vehicles", synth.vehicles, "Override n_vehicles");
  s->add_option("--days", synth.days, "Override n_days");

  ClusterArgs cluster;
  auto* c = app.add_subcommand("cluster", "Cluster vehicle-days and report elbow, composition, transitions");
  c->add_option("--data", cluster.data, "Survey CSV")->required()->check(CLI::ExistingFile);
  c->add_option("-k,--k", cluster.k, "Clusters per day type");
  c->add_option("--k-min", cluster.k_min, "Smallest k in the elbow scan");
  c->add_option("--k-max", cluster.k_max, "Largest k in the elbow scan");
  c->add_option("--restarts", cluster.restarts, "K-means restarts per k");

  FitArgs fit;
  SimFlags fit_flags;
  auto* f = app.add_subcommand("fit", "Fit charging probability tables from trial data");
  f->add_option("--journeys", fit.journeys, "Trial journeys CSV")->required()->check(CLI::ExistingFile);
  f->add_option("--charges", fit.charges, "Trial charges CSV")->required()->check(CLI::ExistingFile);
  f->add_option("--model", fit.model, "Cluster model JSON")->required()->check(CLI::ExistingFile);
  f->add_option("--sigma", fit.sigma, "Gaussian smoothing width (0 = none)");
  fit_flags.add_to(f);

  SimulateArgs simulate;
  SimFlags sim_flags;
  auto* m = app.add_subcommand("simulate", "Monte Carlo aggregate charging load");
  m->add_option("--data", simulate.data, "Survey CSV")->required()->check(CLI::ExistingFile);
  m->add_option("--model", simulate.model, "Cluster model JSON")->required()->check(CLI::ExistingFile);
  m->add_option("--tables", simulate.tables, "Probability tables JSON")->required()->check(CLI::ExistingFile);
  m->add_flag("--naive", simulate.naive, "Also simulate the charge-after-final-journey baseline");
  m->add_flag("--fixed-set", simulate.fixed_set, "One vehicle sample for every run (default)");
  m->add_flag("--resample", simulate.resample, "Fresh vehicle sample each run");
  m->add_flag("--week", simulate.week, "Simulate whole vehicle schedules instead of one day of week");
  m->add_option("--day-of-week", simulate.day_of_week, "Day of week to sample (0 = Monday)");
  m->add_flag("--dump-runs", simulate.dump_runs, "Also write the per-run profiles");
  sim_flags.add_to(m);

  ValidateArgs validate;
  SimFlags val_flags;
  auto* v = app.add_subcommand("validate", "Leave-one-out validation against trial data");
  v->add_option("--journeys", validate.journeys, "Trial journeys CSV")->required()->check(CLI::ExistingFile);
  v->add_option("--charges", validate.charges, "Trial charges CSV")->required()->check(CLI::ExistingFile);
  v->add_option("--model", validate.model, "Cluster model JSON")->required()->check(CLI::ExistingFile);
  v->add_option("--sigma", validate.sigma, "Gaussian smoothing width");
  val_flags.add_to(v);

  AdmdArgs admd;
  SimFlags admd_flags;
  auto* d = app.add_subcommand("admd", "Per-region peak demand increase from EV charging");
  d->add_option("--regions", admd.regions, "Regions spec JSON")->required()->check(CLI::ExistingFile);
  d->add_option("--model", admd.model, "Cluster model JSON")->required()->check(CLI::ExistingFile);
  d->add_option("--tables", admd.tables, "Probability tables JSON")->required()->check(CLI::ExistingFile);
  d->add_option("--day-of-week", admd.day_of_week, "Day of week to sample (0 = Monday)");
  d->add_option("--statistic", admd.statistic, "EV load statistic: mean or p95");
  admd_flags.add_to(d);

  // CLI11 parses in reverse order from a vector.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(kToolVersion) + "\n"
                                                            : app.help());
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    const auto fc = load_file_config(g.config);
    if (*s) cmd_synth(g, synth, out);
    else if (*c) cmd_cluster(g, fc, cluster, out, err);
    else if (*f) cmd_fit(g, fc, fit_flags, fit, out, err);
    else if (*m) cmd_simulate(g, fc, sim_flags, simulate, out, err);
    else if (*v) cmd_validate(g, fc, val_flags, validate, out, err);
    else if (*d) cmd_admd(g, fc, admd_flags, admd, out, err);
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace evcharge::cli
