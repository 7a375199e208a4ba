#include <algorithm>
#include <cmath>
#include <vector>

#include "evcharge/charge_model.hpp"
#include "evcharge/errors.hpp"

namespace evcharge::charging {
namespace {

std::vector<double> kernel(double sigma, int radius) {
  std::vector<double> w(static_cast<std::size_t>(2 * radius + 1));
  for (int o = -radius; o <= radius; ++o)
    w[static_cast<std::size_t>(o + radius)] = std::exp(-0.5 * (o * o) / (sigma * sigma));
  return w;
}

}  // namespace

SlotSocGrid smooth_grid(const SlotSocGrid& grid, double sigma) {
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");
  if (sigma == 0.0) return grid;
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  const auto w = kernel(sigma, radius);

  // Time axis, circular.
  double w_total = 0.0;
  for (double v : w) w_total += v;
  SlotSocGrid along_t{};
  for (int t = 0; t < kSlotsPerDay; ++t) {
    for (int s = 0; s < kSocStates; ++s) {
      double acc = 0.0;
      for (int o = -radius; o <= radius; ++o) {
        const int src = ((t + o) % kSlotsPerDay + kSlotsPerDay) % kSlotsPerDay;
        acc += w[static_cast<std::size_t>(o + radius)] * grid[src][s];
      }
      along_t[t][s] = acc / w_total;
    }
  }

  // SOC axis, truncated and renormalized.
  SlotSocGrid out{};
  for (int t = 0; t < kSlotsPerDay; ++t) {
    for (int s = 0; s < kSocStates; ++s) {
      double acc = 0.0, norm = 0.0;
      for (int o = -radius; o <= radius; ++o) {
        const int src = s + o;
        if (src < 0 || src >= kSocStates) continue;
        const double wt = w[static_cast<std::size_t>(o + radius)];
        acc += wt * along_t[t][src];
        norm += wt;
      }
      out[t][s] = std::clamp(acc / norm, 0.0, 1.0);
    }
  }
  return out;
}

PosteriorTables smooth_table(const PosteriorTables& tables, double sigma) {
  if (sigma < 0.0) throw ConfigError("sigma must be >= 0");
  PosteriorTables out = tables;
  out.sigma = sigma;
  for (int di = 0; di < kDayTypes; ++di) {
    const auto d = static_cast<DayType>(di);
    for (int k = 1; k <= tables.n_clusters(); ++k) {
      SlotSocGrid g;
      for (int t = 0; t < kSlotsPerDay; ++t)
        for (int s = 0; s < kSocStates; ++s) g[t][s] = tables.after_journey(d, t, k, s);
      g = smooth_grid(g, sigma);
      for (int t = 0; t < kSlotsPerDay; ++t)
        for (int s = 0; s < kSocStates; ++s) out.set_after_journey(d, t, k, s, g[t][s]);
    }
    SlotSocGrid g;
    for (int t = 0; t < kSlotsPerDay; ++t)
      for (int s = 0; s < kSocStates; ++s) g[t][s] = tables.independent(d, t, s);
    g = smooth_grid(g, sigma);
    for (int t = 0; t < kSlotsPerDay; ++t)
      for (int s = 0; s < kSocStates; ++s) out.set_independent(d, t, s, g[t][s]);
  }
  return out;
}

}  // namespace evcharge::charging
