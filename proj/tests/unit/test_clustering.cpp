#include <doctest.h>

#include <cmath>
#include <limits>

#include "../support/fixtures.hpp"
#include "evcharge/clustering.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/ingest.hpp"
#include "evcharge/rng.hpp"

using namespace evcharge;
using namespace evcharge::clustering;
using testing::make_day;

namespace {

// Three tight clouds around unit masses at different slots.
std::vector<FeatureVector> clouds(int per_cloud, std::vector<int>* truth = nullptr,
                                  std::uint64_t seed = 1) {
  Rng rng(seed);
  std::vector<FeatureVector> pts;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per_cloud; ++i) {
      FeatureVector v{};
      v[static_cast<std::size_t>(8 + 14 * c)] = 1.0;
      for (auto& x : v) x += 0.01 * rng.uniform();
      pts.push_back(v);
      if (truth) truth->push_back(c);
    }
  return pts;
}

FeatureVector mean_of(const std::vector<FeatureVector>& pts, const std::vector<int>& truth, int c) {
  FeatureVector m{};
  int n = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    if (truth[i] == c) {
      for (int s = 0; s < kFeatureDim; ++s) m[s] += pts[i][s];
      ++n;
    }
  for (auto& x : m) x /= n;
  return m;
}

ClusterLabel brute_force_assign(const ClusterModel& m, const FeatureVector& v) {
  ClusterLabel best = 1;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < m.k; ++c) {
    double d = 0.0;
    for (int s = 0; s < kFeatureDim; ++s) d += (v[s] - m.centroids[c][s]) * (v[s] - m.centroids[c][s]);
    if (d < best_d) {
      best_d = d;
      best = c + 1;
    }
  }
  return best;
}

}  // namespace

TEST_SUITE("clustering") {
  TEST_CASE("one hour at 30 mph fills two slots equally") {
    const auto day = make_day("v", 0, {{540, 600}}, 30.0);
    const auto speed = speed_profile(day);
    CHECK(speed[18] == doctest::Approx(30.0));
    CHECK(speed[19] == doctest::Approx(30.0));
    const auto f = build_feature_vector(day);
    REQUIRE(f);
    for (int s = 0; s < kFeatureDim; ++s) CHECK((*f)[s] == doctest::Approx(s == 18 || s == 19 ? 0.5 : 0.0));
  }

  TEST_CASE("overlap weighting across a slot boundary") {
    const auto f = build_feature_vector(make_day("v", 0, {{555, 585}}, 7.0));
    REQUIRE(f);
    CHECK((*f)[18] == doctest::Approx(0.5));
    CHECK((*f)[19] == doctest::Approx(0.5));
  }

  TEST_CASE("unused day has no feature vector") {
    CHECK_FALSE(build_feature_vector(make_day("v", 0, {})));
  }

  TEST_CASE("features sum to 1 and ignore distance scale") {
    auto day = make_day("v", 0, {{430, 475}, {1000, 1047}, {1300, 1311}}, 13.0);
    day.journeys[1].distance = 4.0;
    const auto f = build_feature_vector(day);
    REQUIRE(f);
    double total = 0.0;
    for (double x : *f) total += x;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    for (auto& j : day.journeys) j.distance *= 3.7;
    const auto g = build_feature_vector(day);
    for (int s = 0; s < kFeatureDim; ++s) CHECK((*g)[s] == doctest::Approx((*f)[s]).epsilon(1e-12));
  }

  TEST_CASE("k = 1 centroid is the mean") {
    const auto pts = clouds(20);
    const auto fit = kmeans_fit(pts, 1, 3);
    FeatureVector m{};
    for (const auto& p : pts)
      for (int s = 0; s < kFeatureDim; ++s) m[s] += p[s] / pts.size();
    for (int s = 0; s < kFeatureDim; ++s) CHECK(fit.model.centroids[0][s] == doctest::Approx(m[s]));
  }

  TEST_CASE("two separated clouds: centroids match the cloud means") {
    std::vector<int> truth;
    auto pts = clouds(50, &truth);
    std::vector<FeatureVector> two;
    std::vector<int> two_truth;
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (truth[i] < 2) {
        two.push_back(pts[i]);
        two_truth.push_back(truth[i]);
      }
    const auto fit = kmeans_fit(two, 2, 17);
    for (int c = 0; c < 2; ++c) {
      const auto m = mean_of(two, two_truth, c);
      const double d = std::min(std::sqrt(squared_distance(m, fit.model.centroids[0])),
                                std::sqrt(squared_distance(m, fit.model.centroids[1])));
      CHECK(d < 0.01);
    }
  }

  TEST_CASE("sum of squares by definition") {
    ClusterModel m;
    m.k = 1;
    FeatureVector c{};
    m.centroids = {c};
    CHECK(sum_of_squares(m, {c}) == 0.0);
    FeatureVector p{};
    p[5] = 2.0;
    CHECK(sum_of_squares(m, {p}) == doctest::Approx(4.0));
  }

  TEST_CASE("growing a model never raises SoS") {
    const auto pts = clouds(30);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto base = kmeans_fit(pts, 2, seed);
      const auto grown = kmeans_grow(pts, base.model);
      CHECK(grown.model.k == 3);
      CHECK(grown.sos <= base.sos + 1e-12);
    }
  }

  TEST_CASE("SoS is non-increasing across Lloyd iterations") {
    Rng rng(4);
    std::vector<FeatureVector> pts(300);
    for (auto& p : pts)
      for (auto& x : p) x = rng.uniform();
    const auto fit = kmeans_fit(pts, 5, 8);
    for (std::size_t i = 1; i < fit.sos_history.size(); ++i)
      CHECK(fit.sos_history[i] <= fit.sos_history[i - 1] + 1e-9);
    CHECK(fit.converged);
  }

  TEST_CASE("fits are deterministic given the seed") {
    const auto pts = clouds(25);
    const auto a = kmeans_fit(pts, 3, 99);
    const auto b = kmeans_fit(pts, 3, 99);
    CHECK(a.labels == b.labels);
    CHECK(a.model.centroids == b.model.centroids);
  }

  TEST_CASE("k larger than the distinct points is a config error") {
    FeatureVector v{};
    v[0] = 1.0;
    CHECK_THROWS_AS(kmeans_fit({v, v, v}, 2, 1), ConfigError);
    CHECK_THROWS_AS(kmeans_fit({v}, 0, 1), ConfigError);
  }

  TEST_CASE("elbow at the number of clouds") {
    const auto pts = clouds(40);
    const auto curve = elbow_scan(pts, 1, 8, 5, 2);
    REQUIRE(curve.size() == 8);
    CHECK(elbow_k(curve) == 3);
    CHECK(elbow_scan(pts, 1, 1, 2, 2).size() == 1);
    CHECK_FALSE(elbow_k(elbow_scan(pts, 1, 1, 2, 2)));
    // Thread count does not change the scan.
    const auto threaded = elbow_scan(pts, 1, 8, 5, 2, 3);
    for (std::size_t i = 0; i < curve.size(); ++i) CHECK(threaded[i].sos == curve[i].sos);
  }

  TEST_CASE("assignment: exact centroid, ties and brute force") {
    ClusterModel m;
    m.k = 3;
    FeatureVector a{}, b{}, c{};
    a[0] = 1.0;
    b[10] = 1.0;
    c[20] = 1.0;
    m.centroids = {a, b, c};
    CHECK(m.assign(b) == 2);
    FeatureVector mid{};
    mid[0] = 0.5;
    mid[20] = 0.5;
    CHECK(m.assign(mid) == 1);

    const auto pts = clouds(30);
    const auto fit = kmeans_fit(pts, 3, 5);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(fit.model.assign(pts[i]) == brute_force_assign(fit.model, pts[i]));
      CHECK(fit.labels[i] == fit.model.assign(pts[i]));
    }
  }

  TEST_CASE("transition matrix by counting") {
    const auto m1 = transition_matrix({{{0, 1}, {1, 1}, {2, 1}}}, 3);
    CHECK(m1.probs[0] == std::vector<double>{1, 0, 0, 0});

    const auto m2 = transition_matrix({{{0, 1}, {1, 2}}, {{0, 1}, {1, kUnused}}}, 3);
    CHECK(m2.probs[0] == std::vector<double>{0, 0.5, 0, 0.5});
    CHECK(m2.counts[0][1] == 1);
    CHECK(m2.imputed_rows[2]);
    for (const auto& row : m2.probs) {
      double total = 0.0;
      for (double p : row) total += p;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("transitions skip gaps and can exclude weekends") {
    // Day 1 -> day 3 is not a consecutive pair.
    const auto gap = transition_matrix({{{1, 1}, {3, 2}}}, 2);
    CHECK(gap.imputed_rows[0]);
    // Friday (4) -> Saturday (5) counts only in the all-days matrix.
    const std::vector<std::vector<LabeledDay>> seq{{{4, 1}, {5, 2}}};
    CHECK(transition_matrix(seq, 2).counts[0][1] == 1);
    CHECK(transition_matrix(seq, 2, TransitionFilter::WeekdaysOnly).counts[0][1] == 0);
  }

  TEST_CASE("dataset comparison") {
    std::vector<VehicleDay> a;
    for (int v = 0; v < 10; ++v) {
      a.push_back(make_day("v" + std::to_string(v), 0, {{450, 490}, {1050, 1090}}, 20.0));
      a.push_back(make_day("v" + std::to_string(v), 1, {{600, 630}}, 5.0));
      a.push_back(make_day("v" + std::to_string(v), 2, {}));
    }
    std::vector<FeatureVector> pts = features_for(a, DayType::Weekday);
    const auto model = kmeans_fit(pts, 2, 1).model;

    const auto same = compare_datasets(model, a, a);
    CHECK(same.distance_ratio == doctest::Approx(1.0));
    CHECK(same.a.shares == same.b.shares);

    auto scaled = a;
    for (auto& d : scaled)
      for (auto& j : d.journeys) j.distance *= 1.12;
    const auto cmp = compare_datasets(model, a, scaled);
    CHECK(cmp.distance_ratio == doctest::Approx(1.12));
    CHECK(cmp.a.shares == cmp.b.shares);

    auto biased = a;
    for (int v = 0; v < 10; ++v)
      biased.push_back(make_day("w" + std::to_string(v), 0, {{450, 490}, {1050, 1090}}, 20.0));
    const auto commuter = model.assign(*build_feature_vector(a[0]));
    const auto b = compare_datasets(model, a, biased);
    CHECK(b.b.shares[static_cast<std::size_t>(commuter)] > b.a.shares[static_cast<std::size_t>(commuter)]);

    std::vector<VehicleDay> weekend_only{make_day("x", 5, {{600, 630}})};
    CHECK_THROWS_AS(compare_datasets(model, a, weekend_only), DataError);
  }

  TEST_CASE("cluster model JSON round trip") {
    ClusterSet set;
    set.weekday = kmeans_fit(clouds(10), 3, 1, {}, DayType::Weekday).model;
    set.weekend = kmeans_fit(clouds(10, nullptr, 2), 2, 1, {}, DayType::Weekend).model;
    const auto back = cluster_set_from_json(to_json(set));
    CHECK(back.weekday.k == 3);
    CHECK(back.weekend.k == 2);
    CHECK(back.weekday.centroids == set.weekday.centroids);
    CHECK(back.weekend.day_type == DayType::Weekend);
    CHECK(back.max_k() == 3);
    CHECK_THROWS_AS(cluster_set_from_json(R"({"models": []})"), ConfigError);
  }

  TEST_CASE("cluster profiles average raw speeds") {
    std::vector<VehicleDay> days{make_day("a", 0, {{540, 600}}, 30.0), make_day("b", 0, {{540, 600}}, 60.0)};
    ClusterModel m;
    m.k = 1;
    m.centroids = {*build_feature_vector(days[0])};
    const auto profiles = cluster_profiles(m, days);
    REQUIRE(profiles.size() == 1);
    CHECK(profiles[0].days == 2);
    CHECK(profiles[0].mean_speed[18] == doctest::Approx(45.0));
    CHECK(profiles[0].centroid[18] == doctest::Approx(0.5));
  }

  TEST_CASE("weekly composition rows sum to 1") {
    auto spec = ingest::SynthesisSpec::defaults();
    spec.n_vehicles = 30;
    spec.n_days = 14;
    const auto fleet = ingest::synthesize_fleet(spec, 3);
    ClusterSet set;
    set.weekday = kmeans_fit(features_for(fleet.days, DayType::Weekday), 3, 1).model;
    set.weekend = kmeans_fit(features_for(fleet.days, DayType::Weekend), 3, 1, {}, DayType::Weekend).model;
    const auto wk = weekly_composition(set, fleet.days);
    for (const auto& row : wk) {
      double total = 0.0;
      for (double x : row) total += x;
      CHECK(total == doctest::Approx(1.0));
    }
  }
}
