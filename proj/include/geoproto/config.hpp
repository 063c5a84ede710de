#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "geoproto/experience.hpp"
#include "geoproto/kproto.hpp"
#include "geoproto/random.hpp"
#include "geoproto/schema.hpp"

namespace geoproto {

inline constexpr int kConfigSchemaVersion = 1;

struct ClusterSection {
  std::optional<std::size_t> k;
  std::size_t restarts = 20;
  std::size_t max_iterations = 100;
  SpatialRule spatial_rule = SpatialRule::Paper;
  std::optional<double> lambda1;
  std::optional<double> lambda2;
};

struct SelectKSection {
  std::size_t k_min = 1;
  std::size_t k_max = 10;
  std::size_t B = 50;
  double sample_fraction = 0.10;
  std::vector<std::string> strata;
  bool refit = true;  // refit on the full data with the chosen k
};

struct ExperienceSection {
  std::optional<std::string> assignments;
  std::optional<std::string> portfolio;
  std::vector<double> levels{0.90, 0.95};
  IntervalCenter center = IntervalCenter::Null;
  PayloadNames columns;
  // Optional (age, sex, smoker) -> q table used when expected rates are absent.
  std::optional<std::string> rate_table;
  std::string age_column = "issue_age";
  std::string sex_column = "gender";
  std::string smoker_column = "smoker";
};

struct SynthSection {
  std::size_t n = 3000;
  std::size_t clusters = 3;
  double separation = 0.9;
  std::optional<double> q;
  std::vector<double> ae_multipliers;
};

enum class Verbosity { Quiet, Info, Debug };

/// JSON run configuration. Relative paths are resolved against the config
/// file's directory at load time.
struct RunConfig {
  int schema_version = kConfigSchemaVersion;
  std::optional<std::string> input;
  std::optional<std::string> id_column;
  std::vector<AttributeDescriptor> attributes;
  std::vector<std::string> payload;
  BadRowPolicy on_bad_row = BadRowPolicy::Fail;
  Seed seed = 0;
  std::string output_dir = ".";
  std::optional<unsigned> threads;
  Verbosity verbosity = Verbosity::Info;
  ClusterSection cluster;
  SelectKSection select_k;
  ExperienceSection experience;
  SynthSection synth;

  IngestOptions ingest_options() const;
};

/// Throws ValidationError on malformed JSON, unknown keys, wrong types or a
/// schema_version other than kConfigSchemaVersion.
RunConfig parse_run_config(std::string_view json_text, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

/// Deterministic serialization (sorted keys), used for hashing and for
/// writing generated configs.
std::string to_json(const RunConfig& cfg, int indent = 2);

std::string to_string(SpatialRule r);
SpatialRule parse_spatial_rule(const std::string& s);
std::string to_string(IntervalCenter c);
IntervalCenter parse_interval_center(const std::string& s);

}  // namespace geoproto
