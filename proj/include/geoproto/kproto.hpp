#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "geoproto/distance.hpp"
#include "geoproto/random.hpp"
#include "geoproto/schema.hpp"

namespace geoproto {

/// Cluster center: mean numerical values, modal levels, and an observed
/// coordinate.
using Prototype = MixedPoint;

/// How the spatial part of a prototype moves in the update step.
///  - Paper: the member coordinate closest to the previous prototype
///    coordinate, excluding that coordinate itself. Does not minimize the
///    spatial cost, so the objective is not guaranteed to decrease.
///  - Medoid: the coordinate minimizing summed distance to the members,
///    chosen among member coordinates and the previous prototype. Every
///    half-step then minimizes its term and the objective is non-increasing.
enum class SpatialRule { Paper, Medoid };

enum class EmptyClusterPolicy { ReseedFarthest };

struct KProtoConfig {
  std::size_t k = 0;
  Weights weights;
  std::size_t max_iterations = 100;
  std::size_t restarts = 20;
  SpatialRule spatial_rule = SpatialRule::Paper;
  Seed seed = 0;
  EmptyClusterPolicy empty_cluster_policy = EmptyClusterPolicy::ReseedFarthest;
  EarthModel earth;
  unsigned threads = 1;  // 0 = default_thread_count()

  void validate() const;
};

struct ClusteringModel {
  std::size_t k = 0;
  std::vector<Prototype> prototypes;
  std::vector<std::uint32_t> assignment;
  double cost_total = 0.0;
  double cost_numerical = 0.0;
  double cost_categorical = 0.0;
  double cost_spatial = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool repair_exhausted = false;  // an empty cluster could not be reseeded
  std::size_t restart_index = 0;
  Seed seed = 0;
  // Objective after each assignment step: sum of per-record kernel distances
  // in record order.
  std::vector<double> cost_history;

  std::vector<std::size_t> cluster_sizes() const;
};

struct Assignment {
  std::vector<std::uint32_t> cluster;
  std::vector<double> distance;
};

/// k distinct records drawn uniformly without replacement.
std::vector<Prototype> initialize(const Dataset& data, std::size_t k, Seed seed);

/// Nearest prototype per record; ties go to the lowest cluster index.
Assignment assign(const Dataset& data, std::span<const Prototype> prototypes, const Weights& w,
                  const EarthModel& earth = {}, unsigned threads = 1);

/// Means, modes (ties to the lowest level index) and the spatial rule.
/// Every cluster must be non-empty.
std::vector<Prototype> update_prototypes(const Dataset& data,
                                         std::span<const std::uint32_t> assignment,
                                         std::span<const Prototype> previous, SpatialRule rule,
                                         const EarthModel& earth = {});

/// Best of cfg.restarts runs (smallest cost_total, ties to the lowest
/// restart index). Run r is seeded with cfg.seed + r.
ClusteringModel fit(const Dataset& data, const KProtoConfig& cfg);

/// One run of the alternating minimization from a given seed.
ClusteringModel fit_once(const Dataset& data, const KProtoConfig& cfg, Seed run_seed,
                         unsigned threads = 1);

struct CostBreakdown {
  double total = 0.0;
  double numerical = 0.0;
  double categorical = 0.0;
  double spatial = 0.0;
};

/// Objective of a model evaluated from scratch with the scalar distance.
CostBreakdown recompute_cost(const Dataset& data, const ClusteringModel& model, const Weights& w,
                             const EarthModel& earth = {});

}  // namespace geoproto
