#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "evcharge/clustering.hpp"
#include "evcharge/errors.hpp"
#include "evcharge/parallel.hpp"
#include "evcharge/rng.hpp"

namespace evcharge::clustering {
namespace {

std::size_t count_distinct(std::vector<FeatureVector> points) {
  std::sort(points.begin(), points.end());
  return static_cast<std::size_t>(std::unique(points.begin(), points.end()) - points.begin());
}

std::size_t nearest(const std::vector<FeatureVector>& centroids, const FeatureVector& v,
                    double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(centroids[c], v);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

std::vector<FeatureVector> plus_plus_seeds(const std::vector<FeatureVector>& points, int k,
                                           Rng& rng) {
  std::vector<FeatureVector> seeds;
  seeds.push_back(points[rng.below(points.size())]);
  std::vector<double> d2(points.size(), std::numeric_limits<double>::infinity());
  while (static_cast<int>(seeds.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], seeds.back()));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = points.size() - 1;
      for (std::size_t i = 0; i < points.size(); ++i) {
        if (d2[i] <= 0.0) continue;
        target -= d2[i];
        if (target < 0.0) {
          pick = i;
          break;
        }
      }
      // Floating round-off may leave the walk on a zero-weight tail point.
      while (d2[pick] <= 0.0) pick = (pick + points.size() - 1) % points.size();
    }
    seeds.push_back(points[pick]);
  }
  return seeds;
}

double time_center(const FeatureVector& c) {
  double weighted = 0.0, total = 0.0;
  for (int i = 0; i < kFeatureDim; ++i) {
    weighted += i * c[i];
    total += c[i];
  }
  return total > 0.0 ? weighted / total : 0.0;
}

}  // namespace

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  double d = 0.0;
  for (int i = 0; i < kFeatureDim; ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

ClusterLabel ClusterModel::assign(const FeatureVector& v) const {
  return static_cast<ClusterLabel>(nearest(centroids, v)) + 1;
}

double sum_of_squares(const ClusterModel& model, const std::vector<FeatureVector>& points) {
  double total = 0.0;
  for (const auto& p : points) {
    double d = 0.0;
    nearest(model.centroids, p, &d);
    total += d;
  }
  return total;
}

KMeansResult kmeans_refine(const std::vector<FeatureVector>& points,
                           std::vector<FeatureVector> centroids, const KMeansOptions& options,
                           DayType day_type) {
  if (points.empty()) throw ConfigError("k-means needs at least one point");
  const std::size_t k = centroids.size();
  if (k < 1) throw ConfigError("k must be >= 1");
  const std::size_t n = points.size();

  KMeansResult result;
  std::vector<std::size_t> labels(n, k);
  std::vector<double> dist(n, 0.0);
  for (int iter = 1; iter <= options.max_iter; ++iter) {
    std::size_t changes = 0;
    double sos = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = nearest(centroids, points[i], &dist[i]);
      if (c != labels[i]) ++changes;
      labels[i] = c;
      sos += dist[i];
    }
    result.sos_history.push_back(sos);
    result.iterations = iter;

    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] != 0) continue;
      // Re-seed from the point farthest from its centroid.
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] > 1 && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      if (far == n) throw ConfigError("cannot repair empty cluster: too few distinct points");
      --sizes[labels[far]];
      labels[far] = c;
      sizes[c] = 1;
      dist[far] = 0.0;
      ++changes;
    }

    std::vector<FeatureVector> next(k, FeatureVector{});
    for (std::size_t i = 0; i < n; ++i)
      for (int d = 0; d < kFeatureDim; ++d) next[labels[i]][d] += points[i][d];
    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      for (int d = 0; d < kFeatureDim; ++d) next[c][d] /= static_cast<double>(sizes[c]);
      movement = std::max(movement, std::sqrt(squared_distance(next[c], centroids[c])));
    }
    centroids = std::move(next);
    if ((changes == 0 && iter > 1) || movement < options.tol) {
      result.converged = true;
      break;
    }
  }

  result.model.day_type = day_type;
  result.model.k = static_cast<int>(k);
  result.model.centroids = std::move(centroids);
  result.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) result.labels[i] = static_cast<ClusterLabel>(labels[i]) + 1;
  result.sos = sum_of_squares(result.model, points);
  return result;
}

KMeansResult kmeans_fit(const std::vector<FeatureVector>& points, int k, std::uint64_t seed,
                        const KMeansOptions& options, DayType day_type) {
  if (points.empty()) throw ConfigError("k-means needs at least one point");
  if (k < 1) throw ConfigError("k must be >= 1");
  if (static_cast<std::size_t>(k) > count_distinct(points))
    throw ConfigError("k = " + std::to_string(k) + " exceeds the number of distinct points");

  Rng rng(seed, "kmeans++");
  auto result = kmeans_refine(points, plus_plus_seeds(points, k, rng), options, day_type);

  std::vector<std::size_t> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  const auto& cents = result.model.centroids;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ta = time_center(cents[a]), tb = time_center(cents[b]);
    if (ta != tb) return ta < tb;
    return cents[a] < cents[b];
  });
  std::vector<FeatureVector> sorted;
  std::vector<ClusterLabel> relabel(static_cast<std::size_t>(k));
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    sorted.push_back(cents[order[pos]]);
    relabel[order[pos]] = static_cast<ClusterLabel>(pos) + 1;
  }
  result.model.centroids = std::move(sorted);
  for (auto& l : result.labels) l = relabel[static_cast<std::size_t>(l - 1)];
  return result;
}

KMeansResult kmeans_grow(const std::vector<FeatureVector>& points, const ClusterModel& base,
                         const KMeansOptions& options) {
  if (points.empty()) throw ConfigError("k-means needs at least one point");
  std::size_t far = 0;
  double far_d = -1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    double d = 0.0;
    nearest(base.centroids, points[i], &d);
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  if (far_d <= 0.0) throw ConfigError("cannot grow: every point coincides with a centroid");
  auto init = base.centroids;
  init.push_back(points[far]);
  return kmeans_refine(points, std::move(init), options, base.day_type);
}

std::vector<ElbowPoint> elbow_scan(const std::vector<FeatureVector>& points, int k_min, int k_max,
                                   int seeds_per_k, std::uint64_t seed, int threads,
                                   const KMeansOptions& options) {
  if (k_min < 1 || k_max > 12 || k_min > k_max) throw ConfigError("k range must lie within [1, 12]");
  if (seeds_per_k < 1) throw ConfigError("seeds_per_k must be >= 1");
  const int n_k = k_max - k_min + 1;
  const std::size_t tasks = static_cast<std::size_t>(n_k) * static_cast<std::size_t>(seeds_per_k);
  std::vector<double> sos(tasks, 0.0);
  parallel_for(tasks, threads, [&](std::size_t task) {
    const int k = k_min + static_cast<int>(task / static_cast<std::size_t>(seeds_per_k));
    const auto restart = task % static_cast<std::size_t>(seeds_per_k);
    sos[task] = kmeans_fit(points, k, derive_seed(seed, "elbow", static_cast<std::uint64_t>(k), restart),
                           options)
                    .sos;
  });
  std::vector<ElbowPoint> curve;
  for (int i = 0; i < n_k; ++i) {
    const auto begin = sos.begin() + static_cast<std::ptrdiff_t>(i) * seeds_per_k;
    curve.push_back({k_min + i, *std::min_element(begin, begin + seeds_per_k)});
  }
  return curve;
}

std::optional<int> elbow_k(const std::vector<ElbowPoint>& curve) {
  if (curve.size() < 3) return std::nullopt;
  std::optional<int> best;
  double best_curv = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    const double curv = curve[i - 1].sos - 2.0 * curve[i].sos + curve[i + 1].sos;
    if (curv > best_curv) {
      best_curv = curv;
      best = curve[i].k;
    }
  }
  return best;
}

}  // namespace evcharge::clustering
