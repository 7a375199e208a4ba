#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "evcharge/analysis.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/ingest.hpp"

using namespace evcharge;
using namespace evcharge::analysis;

namespace {

BaselineProfile constant(double kw, DayType d = DayType::Weekday) {
  BaselineProfile b;
  b.kw.fill(kw);
  b.day_type = d;
  b.season = "winter";
  return b;
}

double sum(const SlotArray& a) {
  double s = 0.0;
  for (double x : a) s += x;
  return s;
}

ingest::SynthesisSpec small_spec(int vehicles) {
  auto spec = ingest::SynthesisSpec::defaults();
  spec.n_vehicles = vehicles;
  return spec;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("MAPE arithmetic") {
    SlotPdf pred{}, obs{};
    pred[0] = 0.6;
    pred[1] = 0.4;
    obs[0] = 0.5;
    obs[1] = 0.5;
    CHECK(mape(pred, obs) == doctest::Approx(20.0));
    CHECK(mape(obs, obs) == 0.0);
    pred[5] = 0.3;  // observed zero there: excluded
    CHECK(mape(pred, obs) == doctest::Approx(20.0));
    CHECK_THROWS_AS(mape(pred, SlotPdf{}), DataError);
  }

  TEST_CASE("start-time PDFs") {
    const auto pdf = start_time_pdf({3, 3, 10, 47});
    CHECK(sum(pdf) == doctest::Approx(1.0));
    CHECK(pdf[3] == doctest::Approx(0.5));
    CHECK_THROWS_AS(start_time_pdf({}), DataError);
    CHECK_THROWS_AS(start_time_pdf({48}), DataError);
    const auto m = start_time_pdf_from_minutes({0.0, 29.9, 30.0, 1439.0});
    CHECK(m[0] == doctest::Approx(0.5));
    CHECK(m[1] == doctest::Approx(0.25));
    CHECK(m[47] == doctest::Approx(0.25));
    SlotArray p{};
    p[4] = 2.0;
    p[5] = 6.0;
    CHECK(normalize_profile(p)[5] == doctest::Approx(0.75));
    CHECK_THROWS_AS(normalize_profile(SlotArray{}), DataError);
  }

  TEST_CASE("timing accuracy") {
    const std::vector<TimingMatch> obs{{0, 10}, {0, 20}, {1, 5}, {2, 30}};
    const std::vector<TimingMatch> sim{{0, 11}, {0, 22}, {2, 5}, {2, 29}};
    CHECK(timing_accuracy(obs, sim) == doctest::Approx(0.5));
    CHECK(timing_accuracy(obs, obs) == 1.0);
    CHECK(timing_accuracy(obs, {}) == 0.0);
  }

  TEST_CASE("observed power profile") {
    const auto p = observed_power_profile({testing::charge("v", 0, 1080, 1140, 0.5, 0.9)}, 3.5, 1);
    CHECK(p[36] == doctest::Approx(3.5));
    CHECK(p[37] == doctest::Approx(3.5));
    CHECK(sum(p) * 0.5 == doctest::Approx(3.5));
    const auto wrap = observed_power_profile({testing::charge("v", 0, 1425, 1470, 0.5, 0.9)}, 3.5, 2);
    CHECK(wrap[47] == doctest::Approx(3.5 * 0.5 / 2.0));
    CHECK(wrap[0] == doctest::Approx(3.5 / 2.0));
  }

  TEST_CASE("baseline blending") {
    const auto flat = constant(1.0);
    const auto e7 = constant(2.0);
    const auto zero = blend_baseline(flat, e7, 0.0, 365.0 * 48.0);
    CHECK(zero.kw[0] == doctest::Approx(2.0));  // flat scaled to 48 kWh/day
    auto shaped = constant(0.5);
    shaped.kw[4] = 3.0;
    const auto same = blend_baseline(flat, shaped, 1.0, shaped.daily_kwh() * 365.0);
    for (int s = 0; s < kSlotsPerDay; ++s) CHECK(same.kw[s] == doctest::Approx(shaped.kw[s]));
    const auto half = blend_baseline(flat, e7, 0.5, 1.5 * 24.0 * 365.0);
    for (double kw : half.kw) CHECK(kw == doctest::Approx(1.5));
    CHECK(half.daily_kwh() * 365.0 == doctest::Approx(1.5 * 24.0 * 365.0));
    CHECK_THROWS(blend_baseline(flat, constant(2.0, DayType::Weekend), 0.5, 1000.0));
  }

  TEST_CASE("ADMD increase") {
    const auto base = constant(1.0);
    SlotArray ev{};
    CHECK(admd_increase(base, ev, 1).percent_increase == 0.0);
    ev[36] = 0.5;
    const auto r = admd_increase(base, ev, 1, "x");
    CHECK(r.baseline_admd_kw == doctest::Approx(1.0));
    CHECK(r.combined_admd_kw == doctest::Approx(1.5));
    CHECK(r.percent_increase == doctest::Approx(50.0));
    ev[36] = 50.0;
    CHECK(admd_increase(base, ev, 100).percent_increase == doctest::Approx(50.0));
    CHECK_THROWS_AS(admd_increase(constant(0.0), ev, 1), DataError);
    CHECK_THROWS(admd_increase(base, ev, 0));
  }

  TEST_CASE("coincident EV peak raises ADMD more than shifted") {
    auto base = constant(0.5);
    base.kw[36] = 1.2;
    SlotArray on{}, off{};
    on[36] = 0.4;
    off[8] = 0.4;
    CHECK(admd_increase(base, on, 1).percent_increase > admd_increase(base, off, 1).percent_increase);
  }

  TEST_CASE("ADMD from a load distribution checks day type") {
    sim::LoadDistribution d;
    d.n_runs = 1;
    d.day_type = DayType::Weekend;
    d.slots[10].mean = 1.0;
    d.slots[10].p95 = 2.0;
    CHECK_THROWS(admd_increase(constant(1.0), d, 1));
    d.day_type = DayType::Weekday;
    CHECK(admd_increase(constant(1.0), d, 1).percent_increase == doctest::Approx(100.0));
    CHECK(admd_increase(constant(1.0), d, 1, AdmdStatistic::P95).percent_increase == doctest::Approx(200.0));
  }

  TEST_CASE("baseline CSV") {
    std::ostringstream out;
    auto b = constant(0.7);
    b.kw[3] = 1.1;
    write_baseline_csv(out, b);
    const auto back = parse_baseline_csv(out.str());
    CHECK(back.kw == b.kw);
    CHECK(back.season == "winter");
    CHECK(back.day_type == DayType::Weekday);
    CHECK_THROWS_AS(parse_baseline_csv("slot,kw\n0,1\n"), DataError);
    std::string missing = out.str();
    missing.resize(missing.rfind("47,"));
    CHECK_THROWS_AS(parse_baseline_csv(missing), DataError);
  }

  TEST_CASE("regional batch") {
    const auto set = testing::handcrafted_clusters();
    charging::PosteriorTables t(3);
    for (auto& p : t.after_journey_values()) p = 0.5;
    sim::SimConfig cfg;
    cfg.n_runs = 20;
    cfg.seed = 4;
    const auto a = ingest::synthesize_fleet(small_spec(60), 1);
    auto far = small_spec(60);
    for (auto* mix : {&far.weekday, &far.weekend})
      for (auto& arch : mix->archetypes)
        for (auto& j : arch.journeys) j.distance_mean *= 2.0;
    const auto b = ingest::synthesize_fleet(far, 1);
    std::vector<RegionInput> regions{{"near", a.days, 0.2, 3500, 40},
                                     {"tiny", std::vector<VehicleDay>(a.days.begin(), a.days.begin() + 7), 0.2, 3500, 40},
                                     {"far", b.days, 0.2, 3500, 40}};
    const auto flat = constant(0.4);
    const auto e7 = constant(0.4);
    const auto res = regional_batch(regions, flat, e7, set, t, cfg);
    REQUIRE(res.reports.size() == 2);
    REQUIRE(res.failures.size() == 1);
    CHECK(res.failures[0].region == "tiny");
    CHECK(res.reports[0].region == "far");
    CHECK(res.reports[0].percent_increase > res.reports[1].percent_increase);

    std::reverse(regions.begin(), regions.end());
    const auto rev = regional_batch(regions, flat, e7, set, t, cfg);
    REQUIRE(rev.reports.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(rev.reports[i].region == res.reports[i].region);
      CHECK(rev.reports[i].percent_increase == res.reports[i].percent_increase);
    }

    std::ostringstream csv;
    write_admd_csv(csv, res.reports);
    CHECK(csv.str().rfind("rank,region,baseline_admd_kw,combined_admd_kw,percent_increase\n1,far,", 0) == 0);
    CHECK(admd_to_json(res).find("\"tiny\"") != std::string::npos);
  }

  TEST_CASE("identical vehicles fit the same tables as one of them") {
    const auto tr = testing::handcrafted_trial();
    std::vector<VehicleDay> one, two;
    std::vector<ChargeEvent> c1, c2;
    for (const auto& d : tr.days)
      if (d.vehicle_id == "A") {
        one.push_back(d);
        two.push_back(d);
        auto copy = d;
        copy.vehicle_id = "A2";
        for (auto& j : copy.journeys) j.vehicle_id = "A2";
        two.push_back(copy);
      }
    for (const auto& c : tr.charges)
      if (c.vehicle_id == "A") {
        c1.push_back(c);
        c2.push_back(c);
        auto copy = c;
        copy.vehicle_id = "A2";
        c2.push_back(copy);
      }
    const auto set = testing::handcrafted_clusters();
    auto fit = [&](const std::vector<VehicleDay>& days, const std::vector<ChargeEvent>& ch) {
      ingest::SocOptions so;
      const auto traces = ingest::infer_soc_traces(days, ch, so);
      const auto cls = charging::classify_charges(days, ch);
      return charging::fit_posteriors(days, cls.labels, set, traces);
    };
    const auto t1 = fit(one, c1);
    const auto t2 = fit(two, c2);
    for (std::size_t i = 0; i < t1.after_journey_values().size(); ++i)
      CHECK(t1.after_journey_values()[i] == doctest::Approx(t2.after_journey_values()[i]));
    for (std::size_t i = 0; i < t1.independent_values().size(); ++i)
      CHECK(t1.independent_values()[i] == doctest::Approx(t2.independent_values()[i]));
  }

  TEST_CASE("leave-one-out on naive-generated trial data") {
    auto spec = small_spec(12);
    spec.charging.after_journey_by_soc.fill(1.0);
    spec.charging.final_journey_only = true;
    spec.charging.max_delay_minutes = 0.0;
    spec.charging.independent_background = 0.0;
    spec.charging.independent_peaks.clear();
    const auto fleet = ingest::synthesize_fleet(spec, 2);
    sim::SimConfig cfg;
    cfg.n_runs = 10;
    cfg.seed = 1;
    const auto set = testing::handcrafted_clusters();
    const auto rep = leave_one_out_validate(fleet.days, fleet.charges, set, cfg, 1.0);
    CHECK(rep.naive.start_mape == doctest::Approx(0.0));
    CHECK(rep.model.start_mape > rep.naive.start_mape);
    CHECK(rep.naive.timing_accuracy == doctest::Approx(1.0));
    CHECK(rep.runs_per_vehicle == 10);
    CHECK(sum(rep.observed_start_pdf) == doctest::Approx(1.0));
    CHECK(rep.to_json().find("\"naive\"") != std::string::npos);
  }

  TEST_CASE("leave-one-out skips silent vehicles and needs two vehicles") {
    const auto tr = testing::handcrafted_trial();
    sim::SimConfig cfg;
    cfg.n_runs = 2;
    const auto set = testing::handcrafted_clusters();
    std::vector<ChargeEvent> charges;
    for (const auto& c : tr.charges)
      if (c.vehicle_id != "B") charges.push_back(c);
    const auto rep = leave_one_out_validate(tr.days, charges, set, cfg, 1.0);
    REQUIRE(rep.skipped.size() == 1);
    CHECK(rep.skipped[0].first == "B");
    CHECK(rep.vehicles.size() == 4);
    std::vector<VehicleDay> only_a;
    for (const auto& d : tr.days)
      if (d.vehicle_id == "A") only_a.push_back(d);
    CHECK_THROWS(leave_one_out_validate(only_a, tr.charges, set, cfg, 1.0));
  }

  TEST_CASE("power MAPE is not worse than start MAPE on a synthetic fleet") {
    const auto fleet = ingest::synthesize_fleet(small_spec(30), 5);
    sim::SimConfig cfg;
    cfg.n_runs = 20;
    cfg.seed = 2;
    const auto rep = leave_one_out_validate(fleet.days, fleet.charges, testing::handcrafted_clusters(), cfg, 1.0);
    CHECK(rep.model.power_mape <= rep.model.start_mape);
    CHECK(rep.naive.power_mape <= rep.naive.start_mape);
  }

  TEST_CASE("profile writers") {
    sim::LoadDistribution d;
    d.n_runs = 2;
    d.runs = {SlotArray{}, SlotArray{}};
    d.runs[1][3] = 2.0;
    d.slots[3].mean = 1.0;
    std::ostringstream p, r;
    write_profile_csv(p, d);
    write_runs_csv(r, d);
    const std::string ps = p.str(), rs = r.str();
    CHECK(ps.rfind("slot,mean_kw,p05_kw,p95_kw\n", 0) == 0);
    CHECK(std::count(ps.begin(), ps.end(), '\n') == 49);
    CHECK(std::count(rs.begin(), rs.end(), '\n') == 3);
  }
}
