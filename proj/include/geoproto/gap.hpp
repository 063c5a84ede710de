#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoproto/kproto.hpp"
#include "geoproto/schema.hpp"

namespace geoproto {

struct GapConfig {
  std::size_t k_min = 1;
  std::size_t k_max = 10;
  std::size_t B = 50;
  double sample_fraction = 0.10;
  std::vector<std::string> strata;
  // k, seed and weights are set per fit; the rest applies to every fit.
  KProtoConfig kproto;
  // Unset weights are estimated once on the subsample.
  std::optional<double> lambda1;
  std::optional<double> lambda2;
  Seed seed = 0;
  unsigned threads = 0;

  void validate() const;
};

struct GapRow {
  std::size_t k = 0;
  double log_wk = 0.0;
  double expected_log_wk_ref = 0.0;
  double sd_k = 0.0;
  double s_k = 0.0;
  double gap_k = 0.0;
  bool valid = true;
  std::string diagnostic;
};

struct GapProfile {
  // k_min .. k_max + 1; the last row only makes the rule decidable at k_max.
  std::vector<GapRow> rows;
  std::size_t k_min = 1;
  std::size_t k_max = 10;
  std::size_t B = 50;
  std::optional<std::size_t> chosen_k;
  Seed seed = 0;
  Weights weights;
  std::size_t sample_size = 0;
  std::vector<std::string> diagnostics;

  const GapRow* row(std::size_t k) const;
};

/// Sum over clusters of (sum of D over ordered member pairs) / (2 n_l).
/// Throws ValidationError on an empty cluster.
double within_dispersion(const Dataset& data, std::span<const std::uint32_t> assignment,
                         std::size_t k, const Weights& w, const EarthModel& earth = {});

inline double within_dispersion(const Dataset& data, const ClusteringModel& model,
                                const Weights& w, const EarthModel& earth = {}) {
  return within_dispersion(data, model.assignment, model.k, w, earth);
}

/// Null reference sample of the same size: numerical attributes uniform over
/// their observed normalized range, categorical levels drawn from observed
/// marginal frequencies, locations uniform over the latitude/longitude box.
Dataset sample_reference(const Dataset& data, Seed seed);

/// Smallest k in [k_min, k_max] with gap(k) >= gap(k+1) - s(k+1), skipping
/// rows that are invalid.
std::optional<std::size_t> choose_k(std::span<const GapRow> rows, std::size_t k_min,
                                    std::size_t k_max);

/// Gap-statistic selection on one stratified subsample of the data.
GapProfile gap_select(const Dataset& data, const GapConfig& cfg);

}  // namespace geoproto
