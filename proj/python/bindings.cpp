#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "evcharge/analysis.hpp"
#include "evcharge/charge_model.hpp"
#include "evcharge/clustering.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/ingest.hpp"
#include "evcharge/simulator.hpp"

namespace py = pybind11;
using namespace evcharge;

namespace {

clustering::ClusterSet fit_clusters(const std::vector<VehicleDay>& days, int k, std::uint64_t seed) {
  clustering::ClusterSet set;
  set.weekday = clustering::kmeans_fit(clustering::features_for(days, DayType::Weekday), k, seed, {},
                                       DayType::Weekday)
                    .model;
  set.weekend = clustering::kmeans_fit(clustering::features_for(days, DayType::Weekend), k, seed, {},
                                       DayType::Weekend)
                    .model;
  return set;
}

charging::PosteriorTables fit_tables(const std::vector<VehicleDay>& days, const std::vector<ChargeEvent>& charges,
                                     const clustering::ClusterSet& clusters, double sigma, double battery_kwh,
                                     double window_minutes) {
  ingest::SocOptions soc;
  soc.battery_kwh = battery_kwh;
  const auto traces = ingest::infer_soc_traces(days, charges, soc);
  const auto cls = charging::classify_charges(days, charges, window_minutes);
  return charging::fit_posteriors(days, cls.labels, clusters, traces, {sigma, window_minutes});
}

sim::LoadDistribution monte_carlo(const std::vector<VehicleDay>& days, const clustering::ClusterSet& clusters,
                                  const charging::PosteriorTables& tables, const sim::SimConfig& cfg,
                                  bool naive, bool resample, std::optional<int> day_of_week) {
  const auto units = day_of_week ? sim::single_day_units(days, *day_of_week) : group_by_vehicle(days);
  const auto model = naive ? sim::ChargeModel::Naive : sim::ChargeModel::Stochastic;
  if (resample) return sim::monte_carlo_resampled(units, clusters, tables, cfg, model);
  const std::size_t n = std::min<std::size_t>(units.size(), static_cast<std::size_t>(cfg.sample_size));
  return sim::monte_carlo({units.begin(), units.begin() + static_cast<std::ptrdiff_t>(n)}, clusters, tables, cfg,
                          model);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "EV home-charging demand model";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  m.attr("SLOTS_PER_DAY") = kSlotsPerDay;
  m.attr("SOC_STATES") = kSocStates;

  py::enum_<DayType>(m, "DayType").value("Weekday", DayType::Weekday).value("Weekend", DayType::Weekend);

  py::class_<Journey>(m, "Journey")
      .def_readonly("vehicle_id", &Journey::vehicle_id)
      .def_readonly("day_index", &Journey::day_index)
      .def_readonly("start_minute", &Journey::start_minute)
      .def_readonly("end_minute", &Journey::end_minute)
      .def_readonly("distance", &Journey::distance)
      .def_readonly("energy_kwh", &Journey::energy_kwh);

  py::class_<VehicleDay>(m, "VehicleDay")
      .def_readonly("vehicle_id", &VehicleDay::vehicle_id)
      .def_readonly("day_index", &VehicleDay::day_index)
      .def_readonly("day_type", &VehicleDay::day_type)
      .def_readonly("journeys", &VehicleDay::journeys)
      .def_property_readonly("unused", &VehicleDay::unused)
      .def_property_readonly("total_distance", &VehicleDay::total_distance);

  py::class_<ChargeEvent>(m, "ChargeEvent")
      .def_readonly("vehicle_id", &ChargeEvent::vehicle_id)
      .def_readonly("day_index", &ChargeEvent::day_index)
      .def_readonly("start_minute", &ChargeEvent::start_minute)
      .def_readonly("end_minute", &ChargeEvent::end_minute)
      .def_readonly("soc_start", &ChargeEvent::soc_start)
      .def_readonly("soc_end", &ChargeEvent::soc_end);

  m.def(
      "parse_survey",
      [](const std::string& text) {
        auto data = ingest::parse_survey_text(text);
        return py::make_tuple(data.days, data.report.to_json());
      },
      py::arg("text"), "Parse survey CSV text. Returns (days, report_json).");
  m.def(
      "load_survey", [](const std::filesystem::path& path) { return ingest::parse_survey(path).days; },
      py::arg("path"));
  m.def(
      "load_trial",
      [](const std::filesystem::path& journeys, const std::filesystem::path& charges) {
        auto t = ingest::parse_trial(journeys, charges);
        return py::make_tuple(t.days, t.charges);
      },
      py::arg("journeys"), py::arg("charges"));
  m.def(
      "synthesize",
      [](std::uint64_t seed, std::optional<int> n_vehicles, std::optional<int> n_days,
         std::optional<std::string> spec_json) {
        auto spec = spec_json ? ingest::parse_synthesis_spec(*spec_json) : ingest::SynthesisSpec::defaults();
        if (n_vehicles) spec.n_vehicles = *n_vehicles;
        if (n_days) spec.n_days = *n_days;
        spec.validate();
        auto fleet = ingest::synthesize_fleet(spec, seed);
        std::vector<int> archetypes;
        for (const auto& l : fleet.labels) archetypes.push_back(l.archetype);
        return py::make_tuple(fleet.days, fleet.charges, archetypes);
      },
      py::arg("seed") = 0, py::arg("n_vehicles") = py::none(), py::arg("n_days") = py::none(),
      py::arg("spec_json") = py::none(),
      "Synthetic fleet. Returns (days, charges, archetype per day, -1 for unused).");
  m.def(
      "survey_csv",
      [](const std::vector<VehicleDay>& days, bool with_energy) {
        std::ostringstream out;
        ingest::write_journeys_csv(out, days, with_energy);
        return out.str();
      },
      py::arg("days"), py::arg("with_energy") = false);

  py::class_<clustering::ClusterSet>(m, "ClusterSet")
      .def("classify", &clustering::ClusterSet::classify, py::arg("day"))
      .def_property_readonly("k", &clustering::ClusterSet::max_k)
      .def("to_json", [](const clustering::ClusterSet& s) { return clustering::to_json(s); })
      .def_static("from_json", [](const std::string& text) { return clustering::cluster_set_from_json(text); });

  m.def("fit_clusters", &fit_clusters, py::arg("days"), py::arg("k") = 3, py::arg("seed") = 0,
        "K-means on weekday and weekend vehicle-days separately.");
  m.def(
      "elbow",
      [](const std::vector<VehicleDay>& days, DayType day_type, int k_min, int k_max, int restarts,
         std::uint64_t seed) {
        const auto curve =
            clustering::elbow_scan(clustering::features_for(days, day_type), k_min, k_max, restarts, seed);
        std::vector<std::pair<int, double>> out;
        for (const auto& p : curve) out.emplace_back(p.k, p.sos);
        return py::make_tuple(out, clustering::elbow_k(curve));
      },
      py::arg("days"), py::arg("day_type") = DayType::Weekday, py::arg("k_min") = 1, py::arg("k_max") = 8,
      py::arg("restarts") = 3, py::arg("seed") = 0, "Returns ([(k, sos)], suggested k or None).");
  m.def(
      "transition_matrix",
      [](const clustering::ClusterSet& clusters, const std::vector<VehicleDay>& days, bool weekdays_only) {
        const auto t = clustering::transition_matrix(
            clustering::label_sequences(clusters, days), clusters.weekday.k,
            weekdays_only ? clustering::TransitionFilter::WeekdaysOnly : clustering::TransitionFilter::AllDays);
        return t.probs;
      },
      py::arg("clusters"), py::arg("days"), py::arg("weekdays_only") = false,
      "Row-stochastic (k+1)x(k+1) matrix; the last state is 'unused'.");

  py::class_<charging::PosteriorTables>(m, "PosteriorTables")
      .def(py::init<int>(), py::arg("n_clusters") = 3)
      .def_property_readonly("n_clusters", &charging::PosteriorTables::n_clusters)
      .def("after_journey", &charging::PosteriorTables::after_journey, py::arg("day_type"), py::arg("slot"),
           py::arg("k"), py::arg("soc_state"))
      .def("independent", &charging::PosteriorTables::independent, py::arg("day_type"), py::arg("slot"),
           py::arg("soc_state"))
      .def("set_after_journey", &charging::PosteriorTables::set_after_journey)
      .def("set_independent", &charging::PosteriorTables::set_independent)
      .def("to_json", [](const charging::PosteriorTables& t) { return charging::to_json(t); })
      .def_static("from_json", [](const std::string& text) { return charging::tables_from_json(text); });

  m.def("fit_tables", &fit_tables, py::arg("days"), py::arg("charges"), py::arg("clusters"), py::arg("sigma") = 1.0,
        py::arg("battery_kwh") = 24.0, py::arg("window_minutes") = 10.0);
  m.def("discretize_soc", &charging::discretize_soc, py::arg("soc"));

  py::class_<sim::SimConfig>(m, "SimConfig")
      .def(py::init<>())
      .def_readwrite("charger_kw", &sim::SimConfig::charger_kw)
      .def_readwrite("efficiency", &sim::SimConfig::efficiency)
      .def_readwrite("battery_kwh", &sim::SimConfig::battery_kwh)
      .def_readwrite("kwh_per_mile", &sim::SimConfig::kwh_per_mile)
      .def_readwrite("initial_soc", &sim::SimConfig::initial_soc)
      .def_readwrite("n_runs", &sim::SimConfig::n_runs)
      .def_readwrite("seed", &sim::SimConfig::seed)
      .def_readwrite("sample_size", &sim::SimConfig::sample_size)
      .def_readwrite("warmup_days", &sim::SimConfig::warmup_days)
      .def_readwrite("window_minutes", &sim::SimConfig::window_minutes)
      .def_readwrite("threads", &sim::SimConfig::threads)
      .def_readwrite("retain_runs", &sim::SimConfig::retain_runs)
      .def("validate", &sim::SimConfig::validate)
      .def("to_json", [](const sim::SimConfig& c) { return sim::to_json(c); })
      .def_static("from_json", [](const std::string& text) { return sim::parse_sim_config(text); });

  py::class_<sim::SlotStats>(m, "SlotStats")
      .def_readonly("mean", &sim::SlotStats::mean)
      .def_readonly("sd", &sim::SlotStats::sd)
      .def_readonly("p05", &sim::SlotStats::p05)
      .def_readonly("p95", &sim::SlotStats::p95);

  py::class_<sim::LoadDistribution>(m, "LoadDistribution")
      .def_readonly("slots", &sim::LoadDistribution::slots)
      .def_readonly("n_runs", &sim::LoadDistribution::n_runs)
      .def_readonly("runs", &sim::LoadDistribution::runs)
      .def_readonly("day_type", &sim::LoadDistribution::day_type)
      .def("mean_profile", &sim::LoadDistribution::mean_profile)
      .def("peak_mean", &sim::LoadDistribution::peak_mean);

  m.def("monte_carlo", &monte_carlo, py::arg("days"), py::arg("clusters"), py::arg("tables"), py::arg("config"),
        py::arg("naive") = false, py::arg("resample") = false, py::arg("day_of_week") = 2,
        "Aggregate load over config.n_runs runs. With day_of_week set, each vehicle contributes its day of that "
        "weekday; with None, whole schedules are simulated. Without resampling the first sample_size vehicles "
        "are used in every run.");

  m.def("mape", &analysis::mape, py::arg("predicted"), py::arg("observed"));
  m.def(
      "leave_one_out",
      [](const std::vector<VehicleDay>& days, const std::vector<ChargeEvent>& charges,
         const clustering::ClusterSet& clusters, const sim::SimConfig& cfg, double sigma) {
        return analysis::leave_one_out_validate(days, charges, clusters, cfg, sigma).to_json();
      },
      py::arg("days"), py::arg("charges"), py::arg("clusters"), py::arg("config"), py::arg("sigma") = 1.0,
      "Leave-one-out validation report as JSON text.");
  m.def(
      "admd_increase",
      [](const analysis::SlotPdf& baseline_kw, const SlotArray& ev_aggregate_kw, int n_households) {
        analysis::BaselineProfile b;
        b.kw = baseline_kw;
        const auto r = analysis::admd_increase(b, ev_aggregate_kw, n_households);
        py::dict d;
        d["baseline_admd_kw"] = r.baseline_admd_kw;
        d["combined_admd_kw"] = r.combined_admd_kw;
        d["percent_increase"] = r.percent_increase;
        return d;
      },
      py::arg("baseline_kw"), py::arg("ev_aggregate_kw"), py::arg("n_households"));
}
