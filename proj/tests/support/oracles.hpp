#pragma once

// Reference implementations written independently of the library code, used
// by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evcharge/clustering.hpp"
#include "evcharge/types.hpp"

namespace evcharge::testing {

struct Trial {
  std::vector<VehicleDay> days;
  std::vector<ChargeEvent> charges;
};

// Five vehicles over Friday, Saturday and Sunday (day indices 4..6) covering
// after-journey charges (including one exactly at the window edge), charges
// across midnight, unused days, a journey ending on a slot boundary and one
// at midnight, and an SOC clamp.
inline Trial handcrafted_trial() {
  Trial t;
  auto day = [&](const std::string& v, int d, std::vector<std::vector<double>> trips) {
    VehicleDay vd{v, d, day_type_for(d), {}};
    for (const auto& r : trips) vd.journeys.push_back({v, d, r[0], r[1], r[2], r[3]});
    t.days.push_back(vd);
  };
  auto chg = [&](const std::string& v, int d, double s, double e, double a, double b) {
    t.charges.push_back({v, d, s, e, a, b});
  };
  day("A", 4, {{450, 495, 20, 6}, {1050, 1095, 20, 6}});
  day("A", 5, {});
  day("A", 6, {{600, 660, 10, 3}});
  chg("A", 4, 1100, 1300, 0.5, 0.8);
  chg("A", 5, 30, 200, 0.8, 1.0);
  chg("A", 6, 670, 760, 0.875, 1.0);

  day("B", 4, {{540, 600, 12, 4}, {1200, 1230, 5, 2}});
  day("B", 5, {{60, 90, 3, 1}});
  day("B", 6, {{1410, 1440, 15, 5}});
  chg("B", 4, 1380, 1500, 0.75, 1.0);
  chg("B", 5, 101, 150, 0.958, 1.0);

  day("C", 4, {});
  day("C", 5, {});
  day("C", 6, {});
  chg("C", 4, 0, 1, 1.0, 1.0);

  day("D", 4, {{300, 330, 8, 2.5}, {360, 420, 8, 2.5}, {900, 960, 8, 2.5}});
  day("D", 5, {{720, 780, 30, 10}});
  day("D", 6, {{0, 45, 5, 1.5}});
  chg("D", 4, 335, 358, 0.896, 0.95);
  chg("D", 4, 965, 1100, 0.85, 1.0);
  chg("D", 6, 1000, 1100, 0.5, 0.7);

  day("E", 4, {{1000, 1100, 50, 20}, {1110, 1200, 40, 15}});
  day("E", 5, {});
  day("E", 6, {{480, 500, 2, 0.6}});
  chg("E", 4, 1205, 1439, 0.0, 0.5);
  chg("E", 6, 505, 700, 0.475, 0.9);
  return t;
}

// Cluster models whose centroids are unit masses at slots 15, 30 and 40.
inline clustering::ClusterSet handcrafted_clusters() {
  clustering::ClusterSet set;
  for (auto* m : {&set.weekday, &set.weekend}) {
    m->k = 3;
    for (int slot : {15, 30, 40}) {
      clustering::FeatureVector c{};
      c[static_cast<std::size_t>(slot)] = 1.0;
      m->centroids.push_back(c);
    }
  }
  set.weekend.day_type = DayType::Weekend;
  return set;
}

struct CountTables {
  int k = 0;
  std::vector<std::uint64_t> aj_opp, aj_chg, ind_opp, ind_chg;

  static std::size_t aj(int k, int d, int t, int c, int s) {
    return static_cast<std::size_t>((((d * 48 + t) * k + (c - 1)) * 6) + s);
  }
  static std::size_t ind(int d, int t, int s) { return static_cast<std::size_t>((d * 48 + t) * 6 + s); }

  std::vector<double> aj_prob() const { return ratio(aj_chg, aj_opp); }
  std::vector<double> ind_prob() const { return ratio(ind_chg, ind_opp); }

  static std::vector<double> ratio(const std::vector<std::uint64_t>& c,
                                   const std::vector<std::uint64_t>& o) {
    std::vector<double> p(o.size(), 0.0);
    for (std::size_t i = 0; i < o.size(); ++i)
      if (o[i] > 0) p[i] = static_cast<double>(c[i]) / static_cast<double>(o[i]);
    return p;
  }
};

// Brute-force opportunity and charge counter. SOC is replayed from scratch for
// every query; every slot scans every journey and charge of the vehicle.
inline CountTables brute_force_counts(const std::vector<VehicleDay>& days,
                                      const std::vector<ChargeEvent>& charges,
                                      const clustering::ClusterSet& clusters, double battery_kwh,
                                      double window = 10.0, double initial_soc = 1.0) {
  const int K = std::max(clusters.weekday.k, clusters.weekend.k);
  CountTables out;
  out.k = K;
  out.aj_opp.assign(static_cast<std::size_t>(2 * 48 * K * 6), 0);
  out.aj_chg = out.aj_opp;
  out.ind_opp.assign(2 * 48 * 6, 0);
  out.ind_chg = out.ind_opp;

  std::vector<std::string> vehicles;
  for (const auto& d : days)
    if (std::find(vehicles.begin(), vehicles.end(), d.vehicle_id) == vehicles.end())
      vehicles.push_back(d.vehicle_id);

  for (const auto& v : vehicles) {
    std::vector<const VehicleDay*> vdays;
    for (const auto& d : days)
      if (d.vehicle_id == v) vdays.push_back(&d);
    std::sort(vdays.begin(), vdays.end(),
              [](auto* a, auto* b) { return a->day_index < b->day_index; });
    std::vector<ChargeEvent> vch;
    for (const auto& c : charges)
      if (c.vehicle_id == v) vch.push_back(c);

    struct Ev {
      double time;
      int order;  // charge end, journey end, charge start
      double value;
      bool is_journey;
    };
    std::vector<Ev> evs;
    std::vector<double> ends;  // absolute journey ends
    for (auto* d : vdays)
      for (const auto& j : d->journeys) {
        evs.push_back({d->day_index * 1440.0 + j.end_minute, 1, *j.energy_kwh / battery_kwh, true});
        ends.push_back(d->day_index * 1440.0 + j.end_minute);
      }
    for (const auto& c : vch) {
      evs.push_back({c.day_index * 1440.0 + c.start_minute, 2, c.soc_start, false});
      evs.push_back({c.day_index * 1440.0 + c.end_minute, 0, c.soc_end, false});
    }
    std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) {
      return a.time != b.time ? a.time < b.time : a.order < b.order;
    });
    auto soc_at = [&](double t) {
      double soc = initial_soc;
      for (const auto& e : evs) {
        if (e.time > t) break;
        soc = e.is_journey ? std::max(0.0, soc - e.value) : e.value;
      }
      return soc;
    };
    auto state = [](double soc) { return std::min(5, static_cast<int>(std::floor(soc * 6))); };
    auto latest_end_at_or_before = [&](double t) {
      double best = -1e300;
      for (double e : ends)
        if (e <= t) best = std::max(best, e);
      return best;
    };
    auto is_after_journey = [&](const ChargeEvent& c) {
      const double s = c.day_index * 1440.0 + c.start_minute;
      return s - latest_end_at_or_before(s) <= window;
    };

    for (auto* d : vdays) {
      const int dt = static_cast<int>(d->day_type);
      int k = clustering::kUnused;
      if (!d->journeys.empty()) {
        clustering::FeatureVector f{};
        double total = 0.0;
        for (const auto& j : d->journeys) {
          const double mph = j.distance / ((j.end_minute - j.start_minute) / 60.0);
          for (int s = 0; s < 48; ++s) {
            const double lo = std::max(j.start_minute, s * 30.0), hi = std::min(j.end_minute, s * 30.0 + 30.0);
            if (hi > lo) f[static_cast<std::size_t>(s)] += mph * (hi - lo) / 30.0;
          }
        }
        for (double x : f) total += x;
        for (auto& x : f) x /= total;
        const auto& model = clusters.for_day(d->day_type);
        double best = 1e300;
        for (int c = 0; c < model.k; ++c) {
          double dist = 0.0;
          for (int s = 0; s < 48; ++s) {
            const double diff = f[static_cast<std::size_t>(s)] - model.centroids[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
            dist += diff * diff;
          }
          if (dist < best) {
            best = dist;
            k = c + 1;
          }
        }
      }

      for (const auto& j : d->journeys) {
        const double e = d->day_index * 1440.0 + j.end_minute;
        const int t = std::min(47, static_cast<int>(j.end_minute / 30.0));
        const auto cell = CountTables::aj(K, dt, t, k, state(soc_at(e)));
        ++out.aj_opp[cell];
        const bool charged = std::any_of(vch.begin(), vch.end(), [&](const ChargeEvent& c) {
          const double s = c.day_index * 1440.0 + c.start_minute;
          return is_after_journey(c) && latest_end_at_or_before(s) == e;
        });
        if (charged) ++out.aj_chg[cell];
      }

      for (int t = 0; t < 48; ++t) {
        const double local = t * 30.0;
        const double m = d->day_index * 1440.0 + local;
        bool ok = true;
        for (const auto& j : d->journeys) {
          if (j.start_minute <= local && local < j.end_minute) ok = false;
          if (std::min(47, static_cast<int>(j.end_minute / 30.0)) == t) ok = false;
        }
        for (double e : ends)
          if (e <= m && m - e <= window) ok = false;
        for (const auto& c : vch)
          if (c.day_index * 1440.0 + c.start_minute < m && m < c.day_index * 1440.0 + c.end_minute) ok = false;
        if (!ok) continue;
        const auto cell = CountTables::ind(dt, t, state(soc_at(m)));
        ++out.ind_opp[cell];
        const bool charged = std::any_of(vch.begin(), vch.end(), [&](const ChargeEvent& c) {
          const double s = c.day_index * 1440.0 + c.start_minute;
          return !is_after_journey(c) && s >= m && s < m + 30.0;
        });
        if (charged) ++out.ind_chg[cell];
      }
    }
  }
  return out;
}

// Direct 2-D Gaussian convolution over a 48 x 6 grid: circular in time,
// truncated and renormalized over SOC.
inline std::vector<std::vector<double>> direct_convolution(const std::vector<std::vector<double>>& g,
                                                           double sigma) {
  const int r = static_cast<int>(std::ceil(4 * sigma));
  std::vector<std::vector<double>> out(48, std::vector<double>(6, 0.0));
  for (int t = 0; t < 48; ++t)
    for (int s = 0; s < 6; ++s) {
      double acc = 0.0, norm = 0.0;
      for (int dt = -r; dt <= r; ++dt)
        for (int ds = -r; ds <= r; ++ds) {
          const int ss = s + ds;
          if (ss < 0 || ss > 5) continue;
          const double w = std::exp(-(dt * dt + ds * ds) / (2 * sigma * sigma));
          acc += w * g[static_cast<std::size_t>(((t + dt) % 48 + 48) % 48)][static_cast<std::size_t>(ss)];
          norm += w;
        }
      out[static_cast<std::size_t>(t)][static_cast<std::size_t>(s)] = std::clamp(acc / norm, 0.0, 1.0);
    }
  return out;
}

}  // namespace evcharge::testing
