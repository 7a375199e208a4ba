#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "evcharge/charge_model.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/ingest.hpp"

using namespace evcharge;
using namespace evcharge::charging;
using testing::make_day;

namespace {

PosteriorTables fit_handcrafted(double sigma) {
  const auto trial = testing::handcrafted_trial();
  const auto clusters = testing::handcrafted_clusters();
  const auto traces = ingest::infer_soc_traces(trial.days, trial.charges, ingest::SocOptions{});
  const auto cls = classify_charges(trial.days, trial.charges);
  return fit_posteriors(trial.days, cls.labels, clusters, traces, {sigma, 10.0});
}

}  // namespace

TEST_SUITE("charge_model") {
  TEST_CASE("after-journey classification window") {
    const std::vector<VehicleDay> days{make_day("v", 0, {{1050, 1080}}), make_day("v", 1, {{1170, 1200}})};
    const std::vector<ChargeEvent> charges{
        testing::charge("v", 0, 1085, 1200, 0.5, 0.9),  // 5 min after
        testing::charge("v", 1, 120, 200, 0.9, 1.0),    // 02:00, last end 18:00 the day before
        testing::charge("v", 1, 1210, 1300, 0.8, 1.0),  // exactly 10 min after
        testing::charge("v", 1, 1211, 1300, 0.8, 1.0),  // 11 min after
    };
    const auto cls = classify_charges(days, charges);
    CHECK(cls.labels[0].kind == ChargeKind::AfterJourney);
    CHECK(cls.labels[0].gap_minutes == 5.0);
    CHECK(cls.labels[0].matched == JourneyRef{0, 0});
    CHECK(cls.labels[1].kind == ChargeKind::Independent);
    CHECK_FALSE(cls.labels[1].matched);
    CHECK(cls.labels[2].kind == ChargeKind::AfterJourney);
    CHECK(cls.labels[3].kind == ChargeKind::Independent);
    CHECK(cls.fraction_after_any == doctest::Approx(0.5));
    CHECK(cls.fraction_after_final == doctest::Approx(0.5));
  }

  TEST_CASE("labels partition the charges") {
    const auto trial = testing::handcrafted_trial();
    const auto cls = classify_charges(trial.days, trial.charges);
    REQUIRE(cls.labels.size() == trial.charges.size());
    for (const auto& l : cls.labels) {
      const bool aj = l.kind == ChargeKind::AfterJourney;
      CHECK(aj == l.matched.has_value());
      if (aj) {
        CHECK(l.gap_minutes >= 0.0);
        CHECK(l.gap_minutes <= 10.0);
      }
    }
  }

  TEST_CASE("SOC discretization") {
    CHECK(discretize_soc(0.0) == 0);
    CHECK(discretize_soc(1.0) == 5);
    CHECK(discretize_soc(0.5) == 3);
    CHECK(discretize_soc(1.0 / 6.0 - 1e-12) == 0);
    CHECK(discretize_soc(0.99) == 5);
    CHECK_THROWS_AS(discretize_soc(-0.01), std::domain_error);
    CHECK_THROWS_AS(discretize_soc(1.01), std::domain_error);
  }

  TEST_CASE("table dimensions") {
    PosteriorTables t(3);
    CHECK(t.after_journey_cells() == 1728);
    CHECK(t.independent_cells() == 576);
    CHECK(t.after_journey(DayType::Weekend, 47, 3, 5) == 0.0);
    CHECK(lookup_independent(t, DayType::Weekday, 0, 0) == 0.0);
    CHECK_THROWS_AS(t.after_journey(DayType::Weekday, 48, 1, 0), std::out_of_range);
    CHECK_THROWS_AS(t.after_journey(DayType::Weekday, 0, 0, 0), std::out_of_range);
    CHECK_THROWS_AS(t.after_journey(DayType::Weekday, 0, 4, 0), std::out_of_range);
    CHECK_THROWS_AS(t.independent(DayType::Weekday, 0, 6), std::out_of_range);
    t.set_after_journey(DayType::Weekday, 36, 2, 3, 0.25);
    CHECK(lookup_after_journey(t, DayType::Weekday, 36, 2, 3) == 0.25);
  }

  TEST_CASE("one charge in four opportunities is 0.25 before smoothing") {
    std::vector<VehicleDay> days;
    std::vector<ChargeEvent> charges;
    for (int d = 0; d < 4; ++d) days.push_back(make_day("v", d * 7, {{1050, 1075}}, 1.0));
    for (auto& d : days) d.journeys[0].energy_kwh = 0.0;
    charges.push_back(testing::charge("v", 7, 1080, 1090, 1.0, 1.0));
    clustering::ClusterSet set = testing::handcrafted_clusters();
    const auto traces = ingest::infer_soc_traces(days, charges, ingest::SocOptions{});
    const auto t = fit_posteriors(days, classify_charges(days, charges).labels, set, traces, {0.0, 10.0});
    const int k = set.classify(days[0]);
    const auto cell = t.after_journey_index(DayType::Weekday, 35, k, 5);
    CHECK(t.after_journey_opportunities[cell] == 4);
    CHECK(t.after_journey(DayType::Weekday, 35, k, 5) == 0.25);
  }

  TEST_CASE("fitted counts match the brute-force oracle") {
    const auto trial = testing::handcrafted_trial();
    const auto clusters = testing::handcrafted_clusters();
    const auto oracle = testing::brute_force_counts(trial.days, trial.charges, clusters, 24.0);
    const auto t = fit_handcrafted(0.0);
    CHECK(t.after_journey_opportunities == oracle.aj_opp);
    CHECK(t.after_journey_charges == oracle.aj_chg);
    CHECK(t.independent_opportunities == oracle.ind_opp);
    CHECK(t.independent_charges == oracle.ind_chg);
    CHECK(t.after_journey_values() == oracle.aj_prob());
    CHECK(t.independent_values() == oracle.ind_prob());
    std::uint64_t aj_charges = 0;
    for (auto c : t.after_journey_charges) aj_charges += c;
    CHECK(aj_charges == 6);
  }

  TEST_CASE("no charges gives all-zero tables and a warning") {
    auto trial = testing::handcrafted_trial();
    trial.charges.clear();
    const auto traces = ingest::infer_soc_traces(trial.days, {}, ingest::SocOptions{});
    const auto t = fit_posteriors(trial.days, {}, testing::handcrafted_clusters(), traces);
    for (double p : t.after_journey_values()) CHECK(p == 0.0);
    for (double p : t.independent_values()) CHECK(p == 0.0);
    CHECK(t.warnings.size() == 1);
  }

  TEST_CASE("count subtraction equals refitting without a vehicle") {
    const auto trial = testing::handcrafted_trial();
    const auto clusters = testing::handcrafted_clusters();
    const auto traces = ingest::infer_soc_traces(trial.days, trial.charges, ingest::SocOptions{});
    const auto labels = classify_charges(trial.days, trial.charges).labels;
    auto all = count_opportunities(trial.days, labels, clusters, traces);
    std::vector<VehicleDay> a_days, rest_days;
    std::vector<ChargeLabel> a_labels, rest_labels;
    for (const auto& d : trial.days) (d.vehicle_id == "A" ? a_days : rest_days).push_back(d);
    for (const auto& l : labels) (l.event.vehicle_id == "A" ? a_labels : rest_labels).push_back(l);
    all -= count_opportunities(a_days, a_labels, clusters, traces);
    const auto rest = count_opportunities(rest_days, rest_labels, clusters, traces);
    CHECK(all.aj_opportunities == rest.aj_opportunities);
    CHECK(all.ind_charges == rest.ind_charges);
  }

  TEST_CASE("smoothing: identity, constants, bounds") {
    SlotSocGrid g{};
    for (int t = 0; t < kSlotsPerDay; ++t)
      for (int s = 0; s < kSocStates; ++s) g[t][s] = ((t * 7 + s * 3) % 11) / 10.0;
    CHECK(smooth_grid(g, 0.0) == g);
    SlotSocGrid c{};
    for (auto& row : c) row.fill(0.37);
    for (double sigma : {0.5, 1.0, 2.5}) {
      const auto out = smooth_grid(c, sigma);
      for (const auto& row : out)
        for (double x : row) CHECK(x == doctest::Approx(0.37).epsilon(1e-12));
      for (const auto& row : smooth_grid(g, sigma))
        for (double x : row) {
          CHECK(x >= 0.0);
          CHECK(x <= 1.0);
        }
    }
    CHECK_THROWS_AS(smooth_grid(g, -1.0), ConfigError);
  }

  TEST_CASE("smoothing matches a direct 2-D convolution") {
    for (int t0 : {0, 20, 47})
      for (int s0 : {0, 3, 5}) {
        SlotSocGrid g{};
        std::vector<std::vector<double>> ref(48, std::vector<double>(6, 0.0));
        g[t0][s0] = 1.0;
        ref[t0][s0] = 1.0;
        const auto out = smooth_grid(g, 1.0);
        const auto want = testing::direct_convolution(ref, 1.0);
        for (int t = 0; t < 48; ++t)
          for (int s = 0; s < 6; ++s) CHECK(out[t][s] == doctest::Approx(want[t][s]).epsilon(1e-12));
        // Mass spreads symmetrically in time, wrapping at midnight.
        CHECK(out[(t0 + 1) % 48][s0] == doctest::Approx(out[(t0 + 47) % 48][s0]));
      }
  }

  TEST_CASE("smooth_table smooths each slice") {
    PosteriorTables t(2);
    t.set_after_journey(DayType::Weekend, 10, 2, 2, 1.0);
    const auto s = smooth_table(t, 1.0);
    CHECK(s.sigma == 1.0);
    CHECK(s.after_journey(DayType::Weekend, 11, 2, 2) > 0.0);
    CHECK(s.after_journey(DayType::Weekend, 11, 1, 2) == 0.0);
    CHECK(s.after_journey(DayType::Weekday, 11, 2, 2) == 0.0);
  }

  TEST_CASE("tables JSON round trip and heatmaps") {
    const auto t = fit_handcrafted(1.0);
    const auto back = tables_from_json(to_json(t));
    CHECK(back.after_journey_values() == t.after_journey_values());
    CHECK(back.independent_values() == t.independent_values());
    CHECK(back.after_journey_opportunities == t.after_journey_opportunities);
    CHECK(back.sigma == 1.0);
    std::ostringstream aj, ind;
    write_after_journey_heatmap(aj, t);
    write_independent_heatmap(ind, t);
    const auto lines = [](const std::string& s) { return std::count(s.begin(), s.end(), '\n'); };
    CHECK(lines(aj.str()) == 1 + 1728);
    CHECK(lines(ind.str()) == 1 + 576);
    CHECK(aj.str().rfind("d,t,k,s,probability\n", 0) == 0);
    CHECK_THROWS_AS(tables_from_json(R"({"dimensions": {}})"), ConfigError);
  }

  TEST_CASE("fitted independent table peaks at midnight for a midnight policy") {
    auto spec = ingest::SynthesisSpec::defaults();
    spec.n_vehicles = 200;
    spec.n_days = 14;
    const auto fleet = ingest::synthesize_fleet(spec, 21);
    clustering::ClusterSet set;
    set.weekday = clustering::kmeans_fit(clustering::features_for(fleet.days, DayType::Weekday), 3, 1).model;
    set.weekend = clustering::kmeans_fit(clustering::features_for(fleet.days, DayType::Weekend), 3, 1, {},
                                         DayType::Weekend)
                      .model;
    ingest::SocOptions opts;
    const auto traces = ingest::infer_soc_traces(fleet.days, fleet.charges, opts);
    const auto t = fit_posteriors(fleet.days, classify_charges(fleet.days, fleet.charges).labels, set,
                                  traces, {0.0, 10.0});
    // Slot with the most independent charges overall.
    std::array<std::uint64_t, kSlotsPerDay> per_slot{};
    for (int d = 0; d < kDayTypes; ++d)
      for (int slot = 0; slot < kSlotsPerDay; ++slot)
        for (int s = 0; s < kSocStates; ++s)
          per_slot[slot] += t.independent_charges[t.independent_index(static_cast<DayType>(d), slot, s)];
    CHECK(std::max_element(per_slot.begin(), per_slot.end()) - per_slot.begin() == 0);
  }
}
