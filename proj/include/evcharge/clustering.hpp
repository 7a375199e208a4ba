#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evcharge/types.hpp"

namespace evcharge::clustering {

inline constexpr int kFeatureDim = kSlotsPerDay;

using FeatureVector = std::array<double, kFeatureDim>;

// Cluster labels are 1..k; kUnused marks a day without journeys.
using ClusterLabel = int;
inline constexpr ClusterLabel kUnused = 0;

// Mean speed (mph) in each half-hour slot, assuming constant speed over each
// journey.
SlotArray speed_profile(const VehicleDay& day);

// Normalized speed profile (sums to 1), or nullopt for a day without travel.
std::optional<FeatureVector> build_feature_vector(const VehicleDay& day);

double squared_distance(const FeatureVector& a, const FeatureVector& b);

struct ClusterModel {
  DayType day_type = DayType::Weekday;
  int k = 0;
  std::vector<FeatureVector> centroids;  // centroids[i] has label i + 1

  // Nearest centroid by Euclidean distance; ties go to the lowest label.
  ClusterLabel assign(const FeatureVector& v) const;
};

struct KMeansOptions {
  int max_iter = 300;
  double tol = 1e-6;  // max centroid movement (Euclidean) at convergence
};

struct KMeansResult {
  ClusterModel model;
  std::vector<ClusterLabel> labels;  // per point, after the final update
  double sos = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> sos_history;  // SoS after each assignment step
};

// k-means++ seeding from `seed`, then Lloyd iterations. Empty clusters are
// re-seeded from the point farthest from its assigned centroid. Throws
// ConfigError when k < 1 or k exceeds the number of distinct points.
// Centroids are ordered by their weighted mean time of day so labels are
// stable across seeds.
KMeansResult kmeans_fit(const std::vector<FeatureVector>& points, int k, std::uint64_t seed,
                        const KMeansOptions& options = {}, DayType day_type = DayType::Weekday);

// Lloyd iterations from explicit initial centroids (no reordering).
KMeansResult kmeans_refine(const std::vector<FeatureVector>& points,
                           std::vector<FeatureVector> initial, const KMeansOptions& options = {},
                           DayType day_type = DayType::Weekday);

// Fits k+1 clusters starting from a k-cluster model plus the point farthest
// from its nearest centroid; the result's SoS never exceeds the base model's.
KMeansResult kmeans_grow(const std::vector<FeatureVector>& points, const ClusterModel& base,
                         const KMeansOptions& options = {});

// Sum over points of the squared distance to the nearest centroid.
double sum_of_squares(const ClusterModel& model, const std::vector<FeatureVector>& points);

struct ElbowPoint {
  int k = 0;
  double sos = 0.0;
};

// Best SoS over `seeds_per_k` restarts for each k in [k_min, k_max] (within
// [1, 12]). Independent fits may run on `threads` workers; the result does not
// depend on the thread count.
std::vector<ElbowPoint> elbow_scan(const std::vector<FeatureVector>& points, int k_min, int k_max,
                                   int seeds_per_k, std::uint64_t seed, int threads = 1,
                                   const KMeansOptions& options = {});

// k with the largest discrete second difference of the SoS curve (interior
// points only). Reported, never applied automatically.
std::optional<int> elbow_k(const std::vector<ElbowPoint>& curve);

// Weekday and weekend models.
struct ClusterSet {
  ClusterModel weekday;
  ClusterModel weekend;

  const ClusterModel& for_day(DayType d) const { return d == DayType::Weekday ? weekday : weekend; }
  ClusterLabel classify(const VehicleDay& day) const;
  int max_k() const { return std::max(weekday.k, weekend.k); }
};

std::string to_json(const ClusterModel& model);
std::string to_json(const ClusterSet& set);
ClusterModel cluster_model_from_json(std::string_view text);
ClusterSet cluster_set_from_json(std::string_view text);
ClusterSet load_cluster_set(const std::filesystem::path& path);

// Feature vectors of the used days of one day type.
std::vector<FeatureVector> features_for(const std::vector<VehicleDay>& days, DayType type);

// -------------------------------------------------------------- analyses

struct TransitionMatrix {
  int k = 0;  // states 0..k-1 are clusters 1..k, state k is U
  std::vector<std::vector<double>> probs;
  std::vector<std::vector<std::size_t>> counts;
  std::vector<bool> imputed_rows;  // rows with no observations (set uniform)

  int states() const { return k + 1; }
  static int state_of(ClusterLabel label, int k) { return label == kUnused ? k : label - 1; }
};

struct LabeledDay {
  int day_index = 0;
  ClusterLabel label = kUnused;
};

enum class TransitionFilter { AllDays, WeekdaysOnly };

// Counts transitions between consecutive calendar days of each sequence.
// Sequences must be ordered by day_index.
TransitionMatrix transition_matrix(const std::vector<std::vector<LabeledDay>>& sequences, int k,
                                   TransitionFilter filter = TransitionFilter::AllDays);

// Per-vehicle label sequences for a dataset.
std::vector<std::vector<LabeledDay>> label_sequences(const ClusterSet& clusters,
                                                     const std::vector<VehicleDay>& days);

struct CompositionReport {
  std::size_t days = 0;
  // Index 0 is U, index c is cluster c.
  std::vector<double> shares;
  std::vector<double> mean_miles;  // mean daily miles per cluster
  double mean_daily_miles = 0.0;
};

// Composition of the days of one day type under `model`.
CompositionReport composition(const ClusterModel& model, const std::vector<VehicleDay>& days);

struct DatasetComparison {
  CompositionReport a;
  CompositionReport b;
  double distance_ratio = 0.0;  // mean daily miles of b / a
};

// Throws DataError when either dataset has no days of the model's day type.
DatasetComparison compare_datasets(const ClusterModel& model, const std::vector<VehicleDay>& days_a,
                                   const std::vector<VehicleDay>& days_b);

// Share of each label per day of week (index 0 = Monday). Rows hold U first.
std::array<std::vector<double>, 7> weekly_composition(const ClusterSet& clusters,
                                                      const std::vector<VehicleDay>& days);

struct ClusterProfile {
  ClusterLabel label = 0;
  std::size_t days = 0;
  SlotArray mean_speed{};  // unnormalized mean speed profile
  SlotArray p05_speed{};
  SlotArray p95_speed{};
  FeatureVector centroid{};
};

std::vector<ClusterProfile> cluster_profiles(const ClusterModel& model,
                                             const std::vector<VehicleDay>& days);

}  // namespace evcharge::clustering
