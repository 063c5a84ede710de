#include "geoproto/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <ostream>

#include "geoproto/distance.hpp"
#include "geoproto/error.hpp"

namespace geoproto {

namespace {

struct City {
  double lat, lon;
};

// Spread-out continental US metros used as spatial cluster centers.
constexpr std::array<City, 10> kCities{{{47.61, -122.33},
                                         {25.76, -80.19},
                                         {42.36, -71.06},
                                         {34.05, -118.24},
                                         {41.88, -87.63},
                                         {39.74, -104.99},
                                         {32.78, -96.80},
                                         {33.75, -84.39},
                                         {44.98, -93.27},
                                         {33.45, -112.07}}};

constexpr double kLatMin = 24.5, kLatMax = 49.4, kLonMin = -124.8, kLonMax = -66.9;
constexpr double kAgeMin = 18.0, kAgeMax = 85.0;
constexpr double kLogFaceMin = 9.2, kLogFaceMax = 14.6;  // roughly 10k to 2.2M
constexpr double kKmPerDegree = 111.2;

double gompertz_q(double age, bool male) {
  const double q = 0.0004 * std::exp(0.085 * (age - 30.0)) * (male ? 1.3 : 1.0);
  return std::min(q, 1.0);
}

}  // namespace

void SynthSpec::validate() const {
  if (n == 0) throw ValidationError("synth: n must be positive");
  if (clusters == 0 || clusters > kCities.size()) {
    throw ValidationError("synth: clusters must be in [1, " + std::to_string(kCities.size()) + "]");
  }
  if (clusters > n) throw ValidationError("synth: more clusters than records");
  if (!(separation >= 0.0 && separation <= 1.0)) {
    throw ValidationError("synth: separation must be in [0, 1]");
  }
  if (q_constant && !(*q_constant >= 0.0 && *q_constant <= 1.0)) {
    throw ValidationError("synth: q must be in [0, 1]");
  }
  if (!ae_multipliers.empty() && ae_multipliers.size() != clusters) {
    throw ValidationError("synth: ae_multipliers needs one value per cluster");
  }
  for (double m : ae_multipliers) {
    if (!(m >= 0.0) || !std::isfinite(m)) throw ValidationError("synth: bad ae multiplier");
  }
}

const std::vector<std::string>& synth_gender_levels() {
  static const std::vector<std::string> levels{"F", "M"};
  return levels;
}

const std::vector<std::string>& synth_plan_levels() {
  static const std::vector<std::string> levels{"CONV", "PERM", "TERM", "UL"};
  return levels;
}

std::vector<AttributeDescriptor> synth_schema() {
  return {AttributeDescriptor::numerical("issue_age", Normalization::MinMax),
          AttributeDescriptor::numerical("face_amount", Normalization::LogMinMax),
          AttributeDescriptor::categorical("gender", synth_gender_levels()),
          AttributeDescriptor::categorical("plan", synth_plan_levels()),
          AttributeDescriptor::spatial("location", "latitude", "longitude")};
}

IngestOptions synth_ingest_options() {
  IngestOptions o;
  o.id_column = "policy_id";
  o.payload_columns = {"face_amount", "death_indicator", "expected_rate"};
  return o;
}

SynthPortfolio synth_portfolio(const SynthSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n, K = spec.clusters;
  const double loose = 1.0 - spec.separation;
  // Spread in [0,1]-normalized units and in km.
  const double num_sd = 0.02 + 0.25 * loose;
  const double km_sd = 40.0 + 900.0 * loose;
  const double dominant = 0.55 + 0.43 * spec.separation;

  Rng layout(derive_seed(spec.seed, 0));
  Rng attrs(derive_seed(spec.seed, 1));
  Rng deaths(derive_seed(spec.seed, 2));

  SynthPortfolio p;
  p.ids.resize(n);
  p.issue_age.resize(n);
  p.face_amount.resize(n);
  p.gender.resize(n);
  p.plan.resize(n);
  p.latitude_deg.resize(n);
  p.longitude_deg.resize(n);
  p.death_indicator.resize(n);
  p.expected_rate.resize(n);
  p.truth.resize(n);

  // Balanced labels in shuffled order.
  for (std::size_t i = 0; i < n; ++i) p.truth[i] = static_cast<std::uint32_t>(i % K);
  for (std::size_t i = n; i > 1; --i) std::swap(p.truth[i - 1], p.truth[layout.below(i)]);

  const auto genders = static_cast<std::int32_t>(synth_gender_levels().size());
  const auto plans = static_cast<std::int32_t>(synth_plan_levels().size());
  auto categorical = [&](std::int32_t mode, std::int32_t levels) {
    if (attrs.uniform() < dominant) return mode;
    return static_cast<std::int32_t>(attrs.below(static_cast<std::uint64_t>(levels)));
  };

  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = p.truth[i];
    const double center = (static_cast<double>(c) + 0.5) / static_cast<double>(K);
    // Age rises with the cluster index, face amount falls.
    const double age_u = std::clamp(center + num_sd * attrs.normal(), 0.0, 1.0);
    const double face_u = std::clamp(1.0 - center + num_sd * attrs.normal(), 0.0, 1.0);
    p.issue_age[i] = std::round(kAgeMin + age_u * (kAgeMax - kAgeMin));
    p.face_amount[i] = std::round(std::exp(kLogFaceMin + face_u * (kLogFaceMax - kLogFaceMin)));
    p.gender[i] = categorical(static_cast<std::int32_t>(c % genders), genders);
    p.plan[i] = categorical(static_cast<std::int32_t>(c % plans), plans);

    const City& city = kCities[c];
    const double dlat = km_sd * attrs.normal() / kKmPerDegree;
    const double dlon = km_sd * attrs.normal() / (kKmPerDegree * std::cos(city.lat * kDegToRad));
    // Four decimals (about 10 m) keeps the CSV compact and round-trips exactly.
    p.latitude_deg[i] = std::round(std::clamp(city.lat + dlat, kLatMin, kLatMax) * 1e4) / 1e4;
    p.longitude_deg[i] = std::round(std::clamp(city.lon + dlon, kLonMin, kLonMax) * 1e4) / 1e4;

    const double q = spec.q_constant ? *spec.q_constant
                                     : gompertz_q(p.issue_age[i], synth_gender_levels()[p.gender[i]] == "M");
    p.expected_rate[i] = q;
    const double mult = spec.ae_multipliers.empty() ? 1.0 : spec.ae_multipliers[c];
    p.death_indicator[i] = deaths.bernoulli(std::min(1.0, q * mult)) ? 1 : 0;

    std::snprintf(id, sizeof id, "P%07zu", i + 1);
    p.ids[i] = id;
  }
  return p;
}

Dataset synth_dataset(const SynthPortfolio& p, bool with_payload) {
  DatasetColumns cols;
  cols.numerical_raw = {p.issue_age, p.face_amount};
  cols.categorical = {p.gender, p.plan};
  cols.latitude_deg = p.latitude_deg;
  cols.longitude_deg = p.longitude_deg;
  cols.ids = p.ids;
  if (with_payload) {
    PayloadColumn fa{"face_amount", {}}, death{"death_indicator", {}}, q{"expected_rate", {}};
    fa.values.reserve(p.size());
    death.values.reserve(p.size());
    q.values.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      fa.values.push_back(format_double(p.face_amount[i]));
      death.values.push_back(std::to_string(p.death_indicator[i]));
      q.values.push_back(format_double(p.expected_rate[i]));
    }
    cols.payload = {std::move(fa), std::move(death), std::move(q)};
  }
  return Dataset::build(std::make_shared<const Schema>(synth_schema()), std::move(cols));
}

void write_portfolio_csv(const SynthPortfolio& p, std::ostream& out) {
  write_csv_row(out, {"policy_id", "issue_age", "face_amount", "gender", "plan", "latitude",
                      "longitude", "death_indicator", "expected_rate"});
  for (std::size_t i = 0; i < p.size(); ++i) {
    write_csv_row(out, {p.ids[i], format_double(p.issue_age[i]), format_double(p.face_amount[i]),
                        synth_gender_levels()[p.gender[i]], synth_plan_levels()[p.plan[i]],
                        format_double(p.latitude_deg[i]), format_double(p.longitude_deg[i]),
                        std::to_string(p.death_indicator[i]), format_double(p.expected_rate[i])});
  }
}

void write_truth_csv(const SynthPortfolio& p, std::ostream& out) {
  write_csv_row(out, {"policy_id", "cluster"});
  for (std::size_t i = 0; i < p.size(); ++i) {
    write_csv_row(out, {p.ids[i], std::to_string(p.truth[i])});
  }
}

}  // namespace geoproto
