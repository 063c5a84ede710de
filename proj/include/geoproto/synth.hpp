#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "geoproto/csv.hpp"
#include "geoproto/random.hpp"
#include "geoproto/schema.hpp"

namespace geoproto {

/// Generator for a synthetic insurance portfolio with planted clusters.
/// Columns: policy_id, issue_age, face_amount, gender, plan, latitude,
/// longitude, death_indicator, expected_rate.
struct SynthSpec {
  std::size_t n = 3000;
  std::size_t clusters = 3;
  // 0 = clusters overlap heavily, 1 = tight and far apart.
  double separation = 0.9;
  // Constant expected rate; otherwise a Gompertz-style table by age and gender.
  std::optional<double> q_constant;
  // Per-cluster true mortality multiplier used when drawing deaths (default 1).
  std::vector<double> ae_multipliers;
  Seed seed = 0;

  void validate() const;
};

struct SynthPortfolio {
  std::vector<std::string> ids;
  std::vector<double> issue_age;
  std::vector<double> face_amount;
  std::vector<std::int32_t> gender;  // index into synth_gender_levels()
  std::vector<std::int32_t> plan;    // index into synth_plan_levels()
  std::vector<double> latitude_deg;
  std::vector<double> longitude_deg;
  std::vector<int> death_indicator;
  std::vector<double> expected_rate;
  std::vector<std::uint32_t> truth;

  std::size_t size() const { return ids.size(); }
};

const std::vector<std::string>& synth_gender_levels();
const std::vector<std::string>& synth_plan_levels();

/// issue_age (minmax), face_amount (logminmax), gender, plan, location.
std::vector<AttributeDescriptor> synth_schema();
/// id_column policy_id; payload face_amount, death_indicator, expected_rate.
IngestOptions synth_ingest_options();

SynthPortfolio synth_portfolio(const SynthSpec& spec);

/// Builds the dataset directly, equal to ingesting the written CSV.
Dataset synth_dataset(const SynthPortfolio& p, bool with_payload = true);

void write_portfolio_csv(const SynthPortfolio& p, std::ostream& out);
void write_truth_csv(const SynthPortfolio& p, std::ostream& out);

}  // namespace geoproto
