#include "geoproto/gap.hpp"

#include <algorithm>
#include <cmath>

#include "geoproto/error.hpp"
#include "geoproto/kernel_view.hpp"
#include "geoproto/kernels.hpp"
#include "geoproto/lambda.hpp"
#include "geoproto/numeric.hpp"
#include "geoproto/parallel.hpp"

namespace geoproto {

namespace {

// Substream ids under the master seed.
constexpr std::uint64_t kSampleStream = 1;
constexpr std::uint64_t kObservedStream = 2;
constexpr std::uint64_t kReferenceStream = 3;

}  // namespace

void GapConfig::validate() const {
  if (k_min < 1) throw ValidationError("k_min must be at least 1");
  if (k_max < k_min) throw ValidationError("k_max must be at least k_min");
  if (B < 1) throw ValidationError("B must be at least 1");
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) {
    throw ValidationError("sample fraction must be in (0, 1]");
  }
  if (kproto.restarts < 1) throw ValidationError("restarts must be at least 1");
  if (lambda1 && !(std::isfinite(*lambda1) && *lambda1 >= 0.0)) {
    throw ValidationError("lambda1 must be finite and non-negative");
  }
  if (lambda2 && !(std::isfinite(*lambda2) && *lambda2 >= 0.0)) {
    throw ValidationError("lambda2 must be finite and non-negative");
  }
}

const GapRow* GapProfile::row(std::size_t k) const {
  for (const auto& r : rows) {
    if (r.k == k) return &r;
  }
  return nullptr;
}

double within_dispersion(const Dataset& data, std::span<const std::uint32_t> assignment,
                         std::size_t k, const Weights& w, const EarthModel& earth) {
  if (assignment.size() != data.size()) throw ValidationError("assignment length mismatch");
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= k) throw ValidationError("assignment refers to a missing cluster");
    members[assignment[i]].push_back(i);
  }
  const kernels::Scale scale = make_scale(w, earth);
  CompensatedSum total;
  std::vector<double> row;
  for (std::size_t l = 0; l < k; ++l) {
    if (members[l].empty()) {
      throw ValidationError("within_dispersion: cluster " + std::to_string(l) + " is empty");
    }
    const Dataset cluster = data.subset(members[l]);
    const KernelView view(cluster);
    const std::size_t n = cluster.size();
    row.resize(n);
    CompensatedSum pairs;
    for (std::size_t i = 0; i < n; ++i) {
      const MixedPoint x = cluster.record(i);
      kernels::distances(view.columns(), 0, n, make_target(x), scale, row.data());
      for (double d : row) pairs.add(d);
    }
    total.add(pairs.value() / (2.0 * static_cast<double>(n)));
  }
  return total.value();
}

Dataset sample_reference(const Dataset& data, Seed seed) {
  if (data.empty()) throw ValidationError("sample_reference: empty dataset");
  const Schema& schema = data.schema();
  const std::size_t n = data.size();
  Rng rng(seed);
  DatasetColumns cols;
  cols.ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) cols.ids.push_back(std::to_string(i + 1));

  for (std::size_t j = 0; j < schema.numerical_count(); ++j) {
    const auto col = data.numerical(j);
    const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
    const auto& params = data.normalization()[j];
    std::vector<double> raw(n);
    for (auto& x : raw) x = denormalize_value(rng.uniform(*lo, *hi), params);
    cols.numerical_raw.push_back(std::move(raw));
  }
  for (std::size_t j = 0; j < schema.categorical_count(); ++j) {
    const std::size_t levels = schema.categorical(j).levels.size();
    std::vector<std::size_t> cumulative(levels, 0);
    for (std::int32_t v : data.categorical(j)) ++cumulative[static_cast<std::size_t>(v)];
    for (std::size_t l = 1; l < levels; ++l) cumulative[l] += cumulative[l - 1];
    std::vector<std::int32_t> draws(n);
    for (auto& v : draws) {
      const std::size_t r = rng.below(n);
      v = static_cast<std::int32_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    }
    cols.categorical.push_back(std::move(draws));
  }
  if (data.has_spatial()) {
    const auto [lat_lo, lat_hi] = std::minmax_element(data.latitude().begin(), data.latitude().end());
    const auto [lon_lo, lon_hi] =
        std::minmax_element(data.longitude().begin(), data.longitude().end());
    cols.latitude_deg.resize(n);
    cols.longitude_deg.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      cols.latitude_deg[i] = std::clamp(rng.uniform(*lat_lo, *lat_hi) * kRadToDeg, -90.0, 90.0);
    }
    for (std::size_t i = 0; i < n; ++i) {
      cols.longitude_deg[i] = std::clamp(rng.uniform(*lon_lo, *lon_hi) * kRadToDeg, -180.0, 180.0);
    }
  }
  return Dataset::build(data.schema_ptr(), std::move(cols),
                        std::vector<NormalizationParams>(data.normalization().begin(),
                                                         data.normalization().end()),
                        true);
}

std::optional<std::size_t> choose_k(std::span<const GapRow> rows, std::size_t k_min,
                                    std::size_t k_max) {
  auto find = [&](std::size_t k) -> const GapRow* {
    for (const auto& r : rows) {
      if (r.k == k) return &r;
    }
    return nullptr;
  };
  for (std::size_t k = k_min; k <= k_max; ++k) {
    const GapRow* here = find(k);
    const GapRow* next = find(k + 1);
    if (!here || !next || !here->valid || !next->valid) continue;
    if (here->gap_k >= next->gap_k - next->s_k) return k;
  }
  return std::nullopt;
}

namespace {

struct LogDispersion {
  double value = 0.0;
  bool valid = false;
  std::string diagnostic;
};

LogDispersion log_dispersion(const Dataset& data, const KProtoConfig& base, std::size_t k,
                             Seed seed) {
  LogDispersion out;
  if (k > data.size()) {
    out.diagnostic = "k exceeds sample size";
    return out;
  }
  KProtoConfig cfg = base;
  cfg.k = k;
  cfg.seed = seed;
  cfg.threads = 1;
  const ClusteringModel model = fit(data, cfg);
  for (std::size_t size : model.cluster_sizes()) {
    if (size == 0) {
      out.diagnostic = "fit left an empty cluster";
      return out;
    }
  }
  const double w = within_dispersion(data, model, cfg.weights, cfg.earth);
  if (!(w > 0.0)) {
    out.diagnostic = "W_k = 0, log undefined";
    return out;
  }
  out.value = std::log(w);
  out.valid = true;
  return out;
}

}  // namespace

GapProfile gap_select(const Dataset& data, const GapConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ValidationError("gap_select: empty dataset");

  GapProfile profile;
  profile.k_min = cfg.k_min;
  profile.k_max = cfg.k_max;
  profile.B = cfg.B;
  profile.seed = cfg.seed;

  const Dataset sample =
      stratified_sample(data, cfg.sample_fraction, cfg.strata, derive_seed(cfg.seed, kSampleStream));
  profile.sample_size = sample.size();
  if (sample.size() < 2) throw ValidationError("gap_select: subsample has fewer than two records");

  Weights weights;
  if (!cfg.lambda1 || !cfg.lambda2) {
    const LambdaEstimate est = estimate_lambdas(sample, cfg.kproto.earth);
    if (!cfg.lambda1 && sample.schema().categorical_count() > 0 && !est.has_lambda1) {
      throw ValidationError("lambda1 cannot be estimated (constant categorical attributes); set it");
    }
    if (!cfg.lambda2 && sample.has_spatial() && !est.has_lambda2) {
      throw ValidationError("lambda2 cannot be estimated (no spatial spread); set it");
    }
    weights = est.weights();
  }
  if (cfg.lambda1) weights.lambda1 = *cfg.lambda1;
  if (cfg.lambda2) weights.lambda2 = *cfg.lambda2;
  profile.weights = weights;

  KProtoConfig base = cfg.kproto;
  base.weights = weights;

  const std::size_t k_count = cfg.k_max + 2 - cfg.k_min;
  auto k_at = [&](std::size_t idx) { return cfg.k_min + idx; };
  const unsigned threads = resolve_threads(cfg.threads);

  std::vector<LogDispersion> observed(k_count);
  const Seed observed_seed = derive_seed(cfg.seed, kObservedStream);
  parallel_for(k_count, threads, [&](std::size_t idx) {
    observed[idx] = log_dispersion(sample, base, k_at(idx), derive_seed(observed_seed, k_at(idx)));
  });

  std::vector<std::vector<LogDispersion>> reference(cfg.B, std::vector<LogDispersion>(k_count));
  const Seed reference_seed = derive_seed(cfg.seed, kReferenceStream);
  parallel_for(cfg.B, threads, [&](std::size_t b) {
    const Seed stream = derive_seed(reference_seed, b);
    const Dataset ref = sample_reference(sample, derive_seed(stream, 0));
    for (std::size_t idx = 0; idx < k_count; ++idx) {
      reference[b][idx] = log_dispersion(ref, base, k_at(idx), derive_seed(stream, 1 + k_at(idx)));
    }
  });

  const double B = static_cast<double>(cfg.B);
  for (std::size_t idx = 0; idx < k_count; ++idx) {
    GapRow row;
    row.k = k_at(idx);
    if (!observed[idx].valid) {
      row.valid = false;
      row.diagnostic = "data: " + observed[idx].diagnostic;
    }
    CompensatedSum sum;
    for (std::size_t b = 0; b < cfg.B && row.valid; ++b) {
      if (!reference[b][idx].valid) {
        row.valid = false;
        row.diagnostic = "reference " + std::to_string(b + 1) + ": " + reference[b][idx].diagnostic;
        break;
      }
      sum.add(reference[b][idx].value);
    }
    if (row.valid) {
      row.log_wk = observed[idx].value;
      row.expected_log_wk_ref = sum.value() / B;
      CompensatedSum ss;
      for (std::size_t b = 0; b < cfg.B; ++b) {
        const double dev = reference[b][idx].value - row.expected_log_wk_ref;
        ss.add(dev * dev);
      }
      row.sd_k = std::sqrt(ss.value() / B);
      row.s_k = std::sqrt(1.0 + 1.0 / B) * row.sd_k;
      row.gap_k = row.expected_log_wk_ref - row.log_wk;
    } else {
      profile.diagnostics.push_back("k = " + std::to_string(row.k) + " excluded: " + row.diagnostic);
    }
    profile.rows.push_back(std::move(row));
  }

  profile.chosen_k = choose_k(profile.rows, cfg.k_min, cfg.k_max);
  if (!profile.chosen_k) {
    profile.diagnostics.push_back("no k in range satisfies gap(k) >= gap(k+1) - s(k+1)");
  }
  return profile;
}

}  // namespace geoproto
