#include "geoproto/kproto.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>
#include <unordered_map>

#include "geoproto/error.hpp"
#include "geoproto/kernel_view.hpp"
#include "geoproto/kernels.hpp"
#include "geoproto/numeric.hpp"
#include "geoproto/parallel.hpp"

namespace geoproto {

void KProtoConfig::validate() const {
  if (k < 1) throw ValidationError("k must be at least 1");
  if (restarts < 1) throw ValidationError("restarts must be at least 1");
  weights.validate();
}

std::vector<std::size_t> ClusteringModel::cluster_sizes() const {
  std::vector<std::size_t> sizes(k, 0);
  for (std::uint32_t c : assignment) ++sizes[c];
  return sizes;
}

std::vector<Prototype> initialize(const Dataset& data, std::size_t k, Seed seed) {
  const std::size_t n = data.size();
  if (k > n) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds the number of records (" +
                          std::to_string(n) + ")");
  }
  // Fisher-Yates over a virtual identity permutation; only touched slots
  // are stored.
  Rng rng(seed);
  std::unordered_map<std::size_t, std::size_t> moved;
  auto at = [&](std::size_t i) {
    auto it = moved.find(i);
    return it == moved.end() ? i : it->second;
  };
  std::vector<Prototype> prototypes;
  prototypes.reserve(k);
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t j = t + rng.below(n - t);
    const std::size_t picked = at(j);
    moved[j] = at(t);
    prototypes.push_back(data.record(picked));
  }
  return prototypes;
}

namespace {

constexpr std::size_t kBlock = 2048;

void assign_block(const kernels::RecordColumns& cols, std::size_t begin, std::size_t end,
                  std::span<const kernels::Target> targets, const kernels::Scale& scale,
                  kernels::DistanceFn fn, std::uint32_t* cluster, double* distance) {
  double buffer[kBlock];
  const std::size_t len = end - begin;
  for (std::size_t l = 0; l < targets.size(); ++l) {
    fn(cols, begin, end, targets[l], scale, buffer);
    if (l == 0) {
      for (std::size_t i = 0; i < len; ++i) {
        cluster[i] = 0;
        distance[i] = buffer[i];
      }
      continue;
    }
    for (std::size_t i = 0; i < len; ++i) {
      if (buffer[i] < distance[i]) {
        distance[i] = buffer[i];
        cluster[i] = static_cast<std::uint32_t>(l);
      }
    }
  }
}

}  // namespace

Assignment assign(const Dataset& data, std::span<const Prototype> prototypes, const Weights& w,
                  const EarthModel& earth, unsigned threads) {
  if (prototypes.empty()) throw ValidationError("assign: no prototypes");
  const KernelView view(data);
  std::vector<kernels::Target> targets;
  targets.reserve(prototypes.size());
  for (const auto& p : prototypes) {
    if (p.numerical.size() != data.schema().numerical_count() ||
        p.categorical.size() != data.schema().categorical_count() ||
        p.spatial.has_value() != data.has_spatial()) {
      throw ValidationError("assign: prototype does not match the dataset schema");
    }
    targets.push_back(make_target(p));
  }
  const kernels::Scale scale = make_scale(w, earth);
  const kernels::DistanceFn fn = kernels::distance_fn(kernels::active_isa());

  Assignment out;
  out.cluster.resize(data.size());
  out.distance.resize(data.size());
  const std::size_t blocks = (data.size() + kBlock - 1) / kBlock;
  parallel_for(blocks, resolve_threads(threads), [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(data.size(), begin + kBlock);
    assign_block(view.columns(), begin, end, targets, scale, fn, out.cluster.data() + begin,
                 out.distance.data() + begin);
  });
  return out;
}

namespace {

struct CoordKey {
  std::uint64_t lat, lon;
  bool operator==(const CoordKey&) const = default;
};

struct CoordKeyHash {
  std::size_t operator()(const CoordKey& k) const noexcept {
    return static_cast<std::size_t>(splitmix64(k.lat ^ splitmix64(k.lon)));
  }
};

CoordKey key_of(const GeoPoint& g) {
  return {std::bit_cast<std::uint64_t>(g.lat), std::bit_cast<std::uint64_t>(g.lon)};
}

// Paper rule: member coordinate closest to the previous prototype, skipping
// exact copies of it. Ties go to the lowest record index.
std::vector<SpatialPoint> spatial_closest_to_previous(const Dataset& data,
                                                      std::span<const std::uint32_t> assignment,
                                                      std::span<const Prototype> previous) {
  const std::size_t k = previous.size();
  std::vector<double> best(k, INFINITY);
  std::vector<std::size_t> best_index(k, data.size());
  const auto lat = data.latitude();
  const auto lon = data.longitude();
  const auto ux = data.unit_x(), uy = data.unit_y(), uz = data.unit_z();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint32_t l = assignment[i];
    const SpatialPoint& prev = *previous[l].spatial;
    if (lat[i] == prev.geo.lat && lon[i] == prev.geo.lon) continue;
    const double a[3] = {ux[i], uy[i], uz[i]};
    const double angle = kernels::kernel_angle(a, prev.unit.data());
    if (angle < best[l]) {
      best[l] = angle;
      best_index[l] = i;
    }
  }
  std::vector<SpatialPoint> out(k);
  for (std::size_t l = 0; l < k; ++l) {
    out[l] = best_index[l] < data.size() ? data.spatial_point(best_index[l]) : *previous[l].spatial;
  }
  return out;
}

// Medoid rule over distinct coordinates weighted by multiplicity. The
// previous prototype is the incumbent and is replaced only on strict
// improvement.
std::vector<SpatialPoint> spatial_medoid(const Dataset& data,
                                         std::span<const std::uint32_t> assignment,
                                         std::span<const Prototype> previous) {
  const std::size_t k = previous.size();
  struct Distinct {
    std::vector<double> ux, uy, uz, weight;
    std::vector<std::size_t> first_index;
    std::unordered_map<CoordKey, std::size_t, CoordKeyHash> slot;
  };
  std::vector<Distinct> clusters(k);
  for (std::size_t i = 0; i < data.size(); ++i) {
    Distinct& c = clusters[assignment[i]];
    const auto key = key_of({data.latitude()[i], data.longitude()[i]});
    auto [it, inserted] = c.slot.try_emplace(key, c.weight.size());
    if (inserted) {
      c.ux.push_back(data.unit_x()[i]);
      c.uy.push_back(data.unit_y()[i]);
      c.uz.push_back(data.unit_z()[i]);
      c.weight.push_back(0.0);
      c.first_index.push_back(i);
    }
    c.weight[it->second] += 1.0;
  }
  const kernels::AngleFn angle_fn = kernels::angle_fn(kernels::active_isa());
  std::vector<SpatialPoint> out(k);
  std::vector<double> angles;
  for (std::size_t l = 0; l < k; ++l) {
    const Distinct& c = clusters[l];
    const std::size_t u = c.weight.size();
    angles.resize(u);
    auto cost_of = [&](const double target[3]) {
      angle_fn(c.ux.data(), c.uy.data(), c.uz.data(), u, target, angles.data());
      CompensatedSum s;
      for (std::size_t m = 0; m < u; ++m) s.add(c.weight[m] * angles[m]);
      return s.value();
    };
    const SpatialPoint& prev = *previous[l].spatial;
    double best = cost_of(prev.unit.data());
    out[l] = prev;
    for (std::size_t m = 0; m < u; ++m) {
      const double target[3] = {c.ux[m], c.uy[m], c.uz[m]};
      const double cost = cost_of(target);
      if (cost < best) {
        best = cost;
        out[l] = data.spatial_point(c.first_index[m]);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Prototype> update_prototypes(const Dataset& data,
                                         std::span<const std::uint32_t> assignment,
                                         std::span<const Prototype> previous, SpatialRule rule,
                                         const EarthModel& earth) {
  (void)earth;  // the choice depends on angles only
  const std::size_t k = previous.size();
  const std::size_t d1 = data.schema().numerical_count();
  const std::size_t d2 = data.schema().categorical_count();
  if (assignment.size() != data.size()) throw ValidationError("assignment length mismatch");

  std::vector<std::size_t> sizes(k, 0);
  for (std::uint32_t c : assignment) {
    if (c >= k) throw ValidationError("assignment refers to a missing cluster");
    ++sizes[c];
  }
  for (std::size_t l = 0; l < k; ++l) {
    if (sizes[l] == 0) {
      throw ComputationError("update_prototypes: cluster " + std::to_string(l) + " is empty");
    }
  }

  std::vector<Prototype> next(k);
  for (std::size_t l = 0; l < k; ++l) {
    next[l].numerical.assign(d1, 0.0);
    next[l].categorical.assign(d2, 0);
  }

  std::vector<CompensatedSum> sums(k);
  for (std::size_t j = 0; j < d1; ++j) {
    std::fill(sums.begin(), sums.end(), CompensatedSum{});
    const auto col = data.numerical(j);
    for (std::size_t i = 0; i < data.size(); ++i) sums[assignment[i]].add(col[i]);
    for (std::size_t l = 0; l < k; ++l) {
      next[l].numerical[j] = sums[l].value() / static_cast<double>(sizes[l]);
    }
  }

  for (std::size_t j = 0; j < d2; ++j) {
    const std::size_t levels = data.schema().categorical(j).levels.size();
    std::vector<std::size_t> counts(k * levels, 0);
    const auto col = data.categorical(j);
    for (std::size_t i = 0; i < data.size(); ++i) {
      ++counts[assignment[i] * levels + static_cast<std::size_t>(col[i])];
    }
    for (std::size_t l = 0; l < k; ++l) {
      std::size_t best = 0;
      for (std::size_t v = 1; v < levels; ++v) {
        if (counts[l * levels + v] > counts[l * levels + best]) best = v;
      }
      next[l].categorical[j] = static_cast<std::int32_t>(best);
    }
  }

  if (data.has_spatial()) {
    for (const auto& p : previous) {
      if (!p.spatial) throw ValidationError("update_prototypes: previous prototype lacks a location");
    }
    const auto spatial = rule == SpatialRule::Paper
                             ? spatial_closest_to_previous(data, assignment, previous)
                             : spatial_medoid(data, assignment, previous);
    for (std::size_t l = 0; l < k; ++l) next[l].spatial = spatial[l];
  }
  return next;
}

namespace {

double ordered_sum(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

// Reseeds each empty cluster with the record farthest from its prototype,
// taken from a cluster that keeps at least one member. Returns false when a
// cluster stays empty because every candidate sits on its prototype.
bool repair_empty_clusters(const Dataset& data, Assignment& a, std::vector<Prototype>& prototypes) {
  const std::size_t k = prototypes.size();
  std::vector<std::size_t> sizes(k, 0);
  for (std::uint32_t c : a.cluster) ++sizes[c];
  for (std::size_t l = 0; l < k; ++l) {
    if (sizes[l] > 0) continue;
    std::size_t far = data.size();
    double far_distance = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (sizes[a.cluster[i]] > 1 && a.distance[i] > far_distance) {
        far_distance = a.distance[i];
        far = i;
      }
    }
    if (far == data.size()) return false;
    prototypes[l] = data.record(far);
    --sizes[a.cluster[far]];
    a.cluster[far] = static_cast<std::uint32_t>(l);
    a.distance[far] = 0.0;
    sizes[l] = 1;
  }
  return true;
}

// Distance of every record to the prototype of its own cluster, through the
// same kernel as assign() so values match assign's bit for bit.
std::vector<double> assigned_distances(const Dataset& data, std::span<const std::uint32_t> cluster,
                                       std::span<const Prototype> prototypes, const Weights& w,
                                       const EarthModel& earth, unsigned threads) {
  const KernelView view(data);
  std::vector<kernels::Target> targets;
  for (const auto& p : prototypes) targets.push_back(make_target(p));
  const kernels::Scale scale = make_scale(w, earth);
  const kernels::DistanceFn fn = kernels::distance_fn(kernels::active_isa());
  std::vector<double> out(data.size());
  const std::size_t blocks = (data.size() + kBlock - 1) / kBlock;
  parallel_for(blocks, resolve_threads(threads), [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(data.size(), begin + kBlock);
    double buffer[kBlock];
    for (std::size_t l = 0; l < targets.size(); ++l) {
      fn(view.columns(), begin, end, targets[l], scale, buffer);
      for (std::size_t i = begin; i < end; ++i) {
        if (cluster[i] == l) out[i] = buffer[i - begin];
      }
    }
  });
  return out;
}

// Under the medoid rule every half-step minimizes its term, but ties (equal
// mode counts, equal medoid sums) can still move the rounded total up by an
// ulp. Undo such updates, per cluster first and then wholesale.
void keep_cost_monotone(const Dataset& data, const Assignment& current,
                        const std::vector<Prototype>& previous, std::vector<Prototype>& updated,
                        const Weights& w, const EarthModel& earth, unsigned threads) {
  const std::size_t k = previous.size();
  std::vector<double> fresh =
      assigned_distances(data, current.cluster, updated, w, earth, threads);
  std::vector<double> before(k, 0.0), after(k, 0.0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    before[current.cluster[i]] += current.distance[i];
    after[current.cluster[i]] += fresh[i];
  }
  bool reverted = false;
  for (std::size_t l = 0; l < k; ++l) {
    if (after[l] > before[l]) {
      updated[l] = previous[l];
      reverted = true;
    }
  }
  if (reverted) fresh = assigned_distances(data, current.cluster, updated, w, earth, threads);
  if (ordered_sum(fresh) > ordered_sum(current.distance)) updated = previous;
}

}  // namespace

ClusteringModel fit_once(const Dataset& data, const KProtoConfig& cfg, Seed run_seed,
                         unsigned threads) {
  ClusteringModel model;
  model.k = cfg.k;
  model.seed = run_seed;

  std::vector<Prototype> prototypes = initialize(data, cfg.k, run_seed);
  Assignment current = assign(data, prototypes, cfg.weights, cfg.earth, threads);
  bool repaired = repair_empty_clusters(data, current, prototypes);
  model.cost_history.push_back(ordered_sum(current.distance));

  while (repaired && model.iterations < cfg.max_iterations) {
    std::vector<Prototype> updated =
        update_prototypes(data, current.cluster, prototypes, cfg.spatial_rule, cfg.earth);
    if (cfg.spatial_rule == SpatialRule::Medoid) {
      keep_cost_monotone(data, current, prototypes, updated, cfg.weights, cfg.earth, threads);
    }
    ++model.iterations;
    Assignment next = assign(data, updated, cfg.weights, cfg.earth, threads);
    prototypes = std::move(updated);
    repaired = repair_empty_clusters(data, next, prototypes);
    model.cost_history.push_back(ordered_sum(next.distance));
    const bool changed = next.cluster != current.cluster;
    current = std::move(next);
    if (!changed) {
      model.converged = repaired;
      break;
    }
  }
  model.repair_exhausted = !repaired;
  model.prototypes = std::move(prototypes);
  model.assignment = std::move(current.cluster);

  const CostBreakdown cost = recompute_cost(data, model, cfg.weights, cfg.earth);
  model.cost_numerical = cost.numerical;
  model.cost_categorical = cost.categorical;
  model.cost_spatial = cost.spatial;
  model.cost_total = cost.total;
  return model;
}

ClusteringModel fit(const Dataset& data, const KProtoConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ValidationError("fit: empty dataset");
  if (cfg.k > data.size()) {
    throw ValidationError("k = " + std::to_string(cfg.k) + " exceeds the number of records (" +
                          std::to_string(data.size()) + ")");
  }
  const unsigned threads = resolve_threads(cfg.threads);
  const std::size_t outer = std::min<std::size_t>(threads, cfg.restarts);
  const unsigned inner = std::max<unsigned>(1, threads / static_cast<unsigned>(outer));

  std::vector<ClusteringModel> runs(cfg.restarts);
  parallel_for(cfg.restarts, static_cast<unsigned>(outer), [&](std::size_t r) {
    runs[r] = fit_once(data, cfg, cfg.seed + r, inner);
    runs[r].restart_index = r;
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].cost_total < runs[best].cost_total) best = r;
  }
  return std::move(runs[best]);
}

CostBreakdown recompute_cost(const Dataset& data, const ClusteringModel& model, const Weights& w,
                             const EarthModel& earth) {
  if (model.assignment.size() != data.size()) {
    throw ValidationError("recompute_cost: model does not cover the dataset");
  }
  CompensatedSum num, cat, spa;
  MixedPoint x;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint32_t l = model.assignment[i];
    if (l >= model.prototypes.size()) throw ValidationError("recompute_cost: bad cluster index");
    x = data.record(i);
    const DistanceComponents d = mixed_distance_components(x, model.prototypes[l], w, earth);
    num.add(d.numerical);
    cat.add(d.categorical);
    spa.add(d.spatial);
  }
  CostBreakdown c;
  c.numerical = num.value();
  c.categorical = cat.value();
  c.spatial = spa.value();
  c.total = c.numerical + c.categorical + c.spatial;
  return c;
}

}  // namespace geoproto
