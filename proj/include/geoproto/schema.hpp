#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geoproto/csv.hpp"
#include "geoproto/distance.hpp"
#include "geoproto/random.hpp"

namespace geoproto {

enum class Normalization { MinMax, LogMinMax };
enum class AttributeKind { Numerical, Categorical, SpatialPair };

struct AttributeDescriptor {
  std::string name;
  AttributeKind kind = AttributeKind::Numerical;
  Normalization normalization = Normalization::MinMax;
  // Categorical only. Empty means "discover at ingestion, sorted".
  std::vector<std::string> levels;
  // SpatialPair only: source columns, decimal degrees.
  std::string latitude_column;
  std::string longitude_column;

  static AttributeDescriptor numerical(std::string name, Normalization n = Normalization::MinMax);
  static AttributeDescriptor categorical(std::string name, std::vector<std::string> levels = {});
  static AttributeDescriptor spatial(std::string name, std::string latitude_column,
                                     std::string longitude_column);
};

std::string to_string(Normalization n);
std::string to_string(AttributeKind k);

/// Ordered attributes: numerical first, then categorical, then at most one
/// spatial pair. Construction validates the ordering.
class Schema {
 public:
  explicit Schema(std::vector<AttributeDescriptor> attributes);

  std::span<const AttributeDescriptor> attributes() const { return attributes_; }
  std::size_t numerical_count() const { return numerical_count_; }
  std::size_t categorical_count() const { return categorical_count_; }
  bool has_spatial() const { return has_spatial_; }

  const AttributeDescriptor& numerical(std::size_t j) const { return attributes_[j]; }
  const AttributeDescriptor& categorical(std::size_t j) const {
    return attributes_[numerical_count_ + j];
  }
  const AttributeDescriptor& spatial() const;

  // Index of a categorical attribute within the categorical block.
  std::optional<std::size_t> categorical_index(const std::string& name) const;

 private:
  std::vector<AttributeDescriptor> attributes_;
  std::size_t numerical_count_ = 0;
  std::size_t categorical_count_ = 0;
  bool has_spatial_ = false;
};

/// Min/max of one numerical attribute, in log space for LogMinMax.
struct NormalizationParams {
  double min = 0.0;
  double max = 0.0;
  Normalization mode = Normalization::MinMax;
  bool fitted = false;

  static NormalizationParams fit(std::span<const double> raw, Normalization mode);
};

/// Maps a raw value into [0,1]. Constant attributes (max == min) map to 0.
/// Out-of-range values throw unless `clamp`, in which case they are clipped.
double normalize_value(double x, const NormalizationParams& params, bool clamp = false);

/// Inverse of normalize_value for in-range inputs.
double denormalize_value(double y, const NormalizationParams& params);

/// A pass-through column kept as the original strings.
struct PayloadColumn {
  std::string name;
  std::vector<std::string> values;
};

/// Column storage handed to Dataset. Numerical values are raw here.
struct DatasetColumns {
  std::vector<std::vector<double>> numerical_raw;
  std::vector<std::vector<std::int32_t>> categorical;
  std::vector<double> latitude_deg;
  std::vector<double> longitude_deg;
  std::vector<std::string> ids;
  std::vector<PayloadColumn> payload;
};

/// Immutable mixed-type table. Numerical values are stored normalized (and
/// raw), categorical values as level indices, coordinates in radians with
/// precomputed unit vectors for the distance kernels.
class Dataset {
 public:
  Dataset() = default;

  /// Fits normalization on the given raw columns.
  static Dataset build(std::shared_ptr<const Schema> schema, DatasetColumns columns);

  /// Applies previously fitted normalization (used for subsets and
  /// reference samples that must share one scale).
  static Dataset build(std::shared_ptr<const Schema> schema, DatasetColumns columns,
                       std::vector<NormalizationParams> params, bool clamp);

  const Schema& schema() const { return *schema_; }
  std::shared_ptr<const Schema> schema_ptr() const { return schema_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  std::span<const double> numerical(std::size_t j) const { return numerical_[j]; }
  std::span<const double> numerical_raw(std::size_t j) const { return numerical_raw_[j]; }
  std::span<const std::int32_t> categorical(std::size_t j) const { return categorical_[j]; }
  std::span<const NormalizationParams> normalization() const { return params_; }

  bool has_spatial() const { return schema_ && schema_->has_spatial(); }
  std::span<const double> latitude() const { return latitude_; }
  std::span<const double> longitude() const { return longitude_; }
  std::span<const double> unit_x() const { return unit_x_; }
  std::span<const double> unit_y() const { return unit_y_; }
  std::span<const double> unit_z() const { return unit_z_; }
  SpatialPoint spatial_point(std::size_t i) const;

  std::span<const std::string> ids() const { return ids_; }
  std::span<const PayloadColumn> payload() const { return payload_; }
  const std::vector<std::string>& payload_column(const std::string& name) const;

  /// Gathers record i into a point (the scalar reference representation).
  MixedPoint record(std::size_t i) const;

  /// Rows in the given order, sharing schema and normalization.
  Dataset subset(std::span<const std::size_t> rows) const;

  /// Raw columns of this dataset, e.g. for rebuilding with other params.
  DatasetColumns columns() const;

 private:
  std::shared_ptr<const Schema> schema_;
  std::size_t size_ = 0;
  std::vector<NormalizationParams> params_;
  std::vector<std::vector<double>> numerical_;
  std::vector<std::vector<double>> numerical_raw_;
  std::vector<std::vector<std::int32_t>> categorical_;
  std::vector<double> latitude_deg_raw_;
  std::vector<double> longitude_deg_raw_;
  std::vector<double> latitude_;
  std::vector<double> longitude_;
  std::vector<double> unit_x_, unit_y_, unit_z_;
  std::vector<std::string> ids_;
  std::vector<PayloadColumn> payload_;
};

enum class BadRowPolicy { Fail, Skip };

struct IngestOptions {
  std::optional<std::string> id_column;   // defaults to 1-based row numbers
  std::vector<std::string> payload_columns;
  BadRowPolicy on_bad_row = BadRowPolicy::Fail;
};

struct IngestResult {
  Dataset data;
  std::size_t skipped_rows = 0;
  std::vector<std::string> diagnostics;  // one line per skipped row (capped)
};

IngestResult ingest_csv(const std::string& path, const std::vector<AttributeDescriptor>& schema,
                        const IngestOptions& options);

IngestResult ingest_table(const CsvTable& table,
                          const std::vector<AttributeDescriptor>& schema,
                          const IngestOptions& options);

/// Writes id plus payload columns exactly as ingested.
void export_payload_csv(const Dataset& data, std::ostream& out);

/// Proportional stratified sample without replacement: each joint stratum of
/// the named categorical attributes contributes round(fraction * size) rows.
/// No strata means one stratum (simple random sample). Rows keep their
/// original relative order.
Dataset stratified_sample(const Dataset& data, double fraction,
                          const std::vector<std::string>& strata, Seed seed);

/// Row indices chosen by stratified_sample (same draw for the same seed).
std::vector<std::size_t> stratified_sample_rows(const Dataset& data, double fraction,
                                                const std::vector<std::string>& strata,
                                                Seed seed);

/// Per-attribute summary: min/mean/max (raw) for numerical attributes,
/// level counts and frequencies for categorical ones, bounds for the
/// spatial pair. CSV with header attribute,kind,level,count,frequency,min,mean,max.
void write_inspect_csv(const Dataset& data, std::ostream& out);

}  // namespace geoproto
