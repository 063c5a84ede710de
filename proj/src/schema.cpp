#include "geoproto/schema.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "geoproto/csv.hpp"
#include "geoproto/error.hpp"
#include "geoproto/numeric.hpp"

namespace geoproto {

AttributeDescriptor AttributeDescriptor::numerical(std::string name, Normalization n) {
  AttributeDescriptor d;
  d.name = std::move(name);
  d.kind = AttributeKind::Numerical;
  d.normalization = n;
  return d;
}

AttributeDescriptor AttributeDescriptor::categorical(std::string name,
                                                     std::vector<std::string> levels) {
  AttributeDescriptor d;
  d.name = std::move(name);
  d.kind = AttributeKind::Categorical;
  d.levels = std::move(levels);
  return d;
}

AttributeDescriptor AttributeDescriptor::spatial(std::string name, std::string latitude_column,
                                                 std::string longitude_column) {
  AttributeDescriptor d;
  d.name = std::move(name);
  d.kind = AttributeKind::SpatialPair;
  d.latitude_column = std::move(latitude_column);
  d.longitude_column = std::move(longitude_column);
  return d;
}

std::string to_string(Normalization n) {
  return n == Normalization::MinMax ? "minmax" : "logminmax";
}

std::string to_string(AttributeKind k) {
  switch (k) {
    case AttributeKind::Numerical:
      return "numerical";
    case AttributeKind::Categorical:
      return "categorical";
    case AttributeKind::SpatialPair:
      return "spatial";
  }
  return "unknown";
}

Schema::Schema(std::vector<AttributeDescriptor> attributes) : attributes_(std::move(attributes)) {
  std::set<std::string> names;
  int stage = 0;  // 0 numerical, 1 categorical, 2 spatial
  for (const auto& a : attributes_) {
    if (a.name.empty()) throw ValidationError("schema: attribute with empty name");
    if (!names.insert(a.name).second) {
      throw ValidationError("schema: duplicate attribute '" + a.name + "'");
    }
    const int s = a.kind == AttributeKind::Numerical ? 0 : a.kind == AttributeKind::Categorical ? 1 : 2;
    if (s < stage) {
      throw ValidationError("schema: attribute '" + a.name +
                            "' out of order (numerical, then categorical, then spatial)");
    }
    if (s == 2 && has_spatial_) throw ValidationError("schema: more than one spatial pair");
    stage = s;
    switch (a.kind) {
      case AttributeKind::Numerical:
        ++numerical_count_;
        break;
      case AttributeKind::Categorical: {
        ++categorical_count_;
        std::set<std::string> levels(a.levels.begin(), a.levels.end());
        if (levels.size() != a.levels.size()) {
          throw ValidationError("schema: duplicate level in '" + a.name + "'");
        }
        break;
      }
      case AttributeKind::SpatialPair:
        if (a.latitude_column.empty() || a.longitude_column.empty()) {
          throw ValidationError("schema: spatial pair '" + a.name +
                                "' needs latitude and longitude columns");
        }
        has_spatial_ = true;
        break;
    }
  }
}

const AttributeDescriptor& Schema::spatial() const {
  if (!has_spatial_) throw ValidationError("schema has no spatial pair");
  return attributes_.back();
}

std::optional<std::size_t> Schema::categorical_index(const std::string& name) const {
  for (std::size_t j = 0; j < categorical_count_; ++j) {
    if (categorical(j).name == name) return j;
  }
  return std::nullopt;
}

NormalizationParams NormalizationParams::fit(std::span<const double> raw, Normalization mode) {
  NormalizationParams p;
  p.mode = mode;
  p.fitted = true;
  if (raw.empty()) return p;
  double lo = INFINITY, hi = -INFINITY;
  for (double x : raw) {
    double v = x;
    if (mode == Normalization::LogMinMax) {
      if (!(x > 0.0)) throw ValidationError("log-min-max normalization needs positive values");
      v = std::log(x);
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  p.min = lo;
  p.max = hi;
  return p;
}

double normalize_value(double x, const NormalizationParams& params, bool clamp) {
  if (!params.fitted) throw ValidationError("normalize_value: parameters not fitted");
  double v = x;
  if (params.mode == Normalization::LogMinMax) {
    if (!(x > 0.0)) {
      if (!clamp) throw ValidationError("normalize_value: non-positive value under log-min-max");
      return 0.0;
    }
    v = std::log(x);
  }
  if (params.max == params.min) return 0.0;
  double y = (v - params.min) / (params.max - params.min);
  if (y < 0.0 || y > 1.0) {
    constexpr double kSlack = 1e-12;
    if (!clamp && (y < -kSlack || y > 1.0 + kSlack)) {
      throw ValidationError("normalize_value: " + format_double(x) + " outside fitted range");
    }
    y = std::clamp(y, 0.0, 1.0);
  }
  return y;
}

double denormalize_value(double y, const NormalizationParams& params) {
  const double v = params.min + y * (params.max - params.min);
  return params.mode == Normalization::LogMinMax ? std::exp(v) : v;
}

namespace {

void check_lengths(const Schema& schema, const DatasetColumns& c, std::size_t& n) {
  if (c.numerical_raw.size() != schema.numerical_count() ||
      c.categorical.size() != schema.categorical_count()) {
    throw ValidationError("dataset columns do not match schema");
  }
  n = c.ids.size();
  auto same = [n](std::size_t m) {
    if (m != n) throw ValidationError("dataset columns have unequal lengths");
  };
  for (const auto& col : c.numerical_raw) same(col.size());
  for (const auto& col : c.categorical) same(col.size());
  if (schema.has_spatial()) {
    same(c.latitude_deg.size());
    same(c.longitude_deg.size());
  }
  for (const auto& p : c.payload) same(p.values.size());
}

}  // namespace

Dataset Dataset::build(std::shared_ptr<const Schema> schema, DatasetColumns columns) {
  std::vector<NormalizationParams> params;
  for (std::size_t j = 0; j < schema->numerical_count(); ++j) {
    params.push_back(
        NormalizationParams::fit(columns.numerical_raw.at(j), schema->numerical(j).normalization));
  }
  return build(std::move(schema), std::move(columns), std::move(params), false);
}

Dataset Dataset::build(std::shared_ptr<const Schema> schema, DatasetColumns columns,
                       std::vector<NormalizationParams> params, bool clamp) {
  if (!schema) throw ValidationError("dataset without schema");
  Dataset d;
  check_lengths(*schema, columns, d.size_);
  if (params.size() != schema->numerical_count()) {
    throw ValidationError("normalization parameters do not match schema");
  }
  d.schema_ = std::move(schema);
  d.params_ = std::move(params);
  const Schema& s = *d.schema_;

  for (std::size_t j = 0; j < s.numerical_count(); ++j) {
    std::vector<double> norm(d.size_);
    const auto& raw = columns.numerical_raw[j];
    for (std::size_t i = 0; i < d.size_; ++i) norm[i] = normalize_value(raw[i], d.params_[j], clamp);
    d.numerical_.push_back(std::move(norm));
  }
  d.numerical_raw_ = std::move(columns.numerical_raw);

  for (std::size_t j = 0; j < s.categorical_count(); ++j) {
    const auto levels = static_cast<std::int32_t>(s.categorical(j).levels.size());
    for (std::int32_t v : columns.categorical[j]) {
      if (v < 0 || v >= levels) {
        throw ValidationError("categorical index out of range for '" + s.categorical(j).name + "'");
      }
    }
  }
  d.categorical_ = std::move(columns.categorical);

  if (s.has_spatial()) {
    d.latitude_.resize(d.size_);
    d.longitude_.resize(d.size_);
    d.unit_x_.resize(d.size_);
    d.unit_y_.resize(d.size_);
    d.unit_z_.resize(d.size_);
    for (std::size_t i = 0; i < d.size_; ++i) {
      const double lat = columns.latitude_deg[i], lon = columns.longitude_deg[i];
      if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
        throw ValidationError("coordinate out of range at record " + columns.ids[i]);
      }
      const SpatialPoint p = SpatialPoint::from_radians(lat * kDegToRad, lon * kDegToRad);
      d.latitude_[i] = p.geo.lat;
      d.longitude_[i] = p.geo.lon;
      d.unit_x_[i] = p.unit[0];
      d.unit_y_[i] = p.unit[1];
      d.unit_z_[i] = p.unit[2];
    }
    d.latitude_deg_raw_ = std::move(columns.latitude_deg);
    d.longitude_deg_raw_ = std::move(columns.longitude_deg);
  }
  d.ids_ = std::move(columns.ids);
  d.payload_ = std::move(columns.payload);
  return d;
}

SpatialPoint Dataset::spatial_point(std::size_t i) const {
  SpatialPoint p;
  p.geo = {latitude_[i], longitude_[i]};
  p.unit = {unit_x_[i], unit_y_[i], unit_z_[i]};
  return p;
}

const std::vector<std::string>& Dataset::payload_column(const std::string& name) const {
  for (const auto& p : payload_) {
    if (p.name == name) return p.values;
  }
  throw ValidationError("missing payload column '" + name + "'");
}

MixedPoint Dataset::record(std::size_t i) const {
  MixedPoint p;
  p.numerical.reserve(numerical_.size());
  for (const auto& col : numerical_) p.numerical.push_back(col[i]);
  p.categorical.reserve(categorical_.size());
  for (const auto& col : categorical_) p.categorical.push_back(col[i]);
  if (has_spatial()) p.spatial = spatial_point(i);
  return p;
}

namespace {

template <typename T>
std::vector<T> gather(const std::vector<T>& src, std::span<const std::size_t> rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(src[r]);
  return out;
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  for (std::size_t r : rows) {
    if (r >= size_) throw ValidationError("subset row out of range");
  }
  Dataset d;
  d.schema_ = schema_;
  d.size_ = rows.size();
  d.params_ = params_;
  for (const auto& col : numerical_) d.numerical_.push_back(gather(col, rows));
  for (const auto& col : numerical_raw_) d.numerical_raw_.push_back(gather(col, rows));
  for (const auto& col : categorical_) d.categorical_.push_back(gather(col, rows));
  if (has_spatial()) {
    d.latitude_deg_raw_ = gather(latitude_deg_raw_, rows);
    d.longitude_deg_raw_ = gather(longitude_deg_raw_, rows);
    d.latitude_ = gather(latitude_, rows);
    d.longitude_ = gather(longitude_, rows);
    d.unit_x_ = gather(unit_x_, rows);
    d.unit_y_ = gather(unit_y_, rows);
    d.unit_z_ = gather(unit_z_, rows);
  }
  d.ids_ = gather(ids_, rows);
  for (const auto& p : payload_) d.payload_.push_back({p.name, gather(p.values, rows)});
  return d;
}

DatasetColumns Dataset::columns() const {
  DatasetColumns c;
  c.numerical_raw = numerical_raw_;
  c.categorical = categorical_;
  c.latitude_deg = latitude_deg_raw_;
  c.longitude_deg = longitude_deg_raw_;
  c.ids = ids_;
  c.payload = payload_;
  return c;
}

IngestResult ingest_table(const CsvTable& table, const std::vector<AttributeDescriptor>& schema_config,
                          const IngestOptions& options) {
  Schema probe(schema_config);  // validates ordering up front

  struct NumCol {
    std::size_t src;
    Normalization mode;
  };
  std::vector<NumCol> num_cols;
  std::vector<std::size_t> cat_cols;
  std::optional<std::size_t> lat_col, lon_col;
  for (const auto& a : schema_config) {
    switch (a.kind) {
      case AttributeKind::Numerical:
        num_cols.push_back({table.require_column(a.name), a.normalization});
        break;
      case AttributeKind::Categorical:
        cat_cols.push_back(table.require_column(a.name));
        break;
      case AttributeKind::SpatialPair:
        lat_col = table.require_column(a.latitude_column);
        lon_col = table.require_column(a.longitude_column);
        break;
    }
  }
  std::optional<std::size_t> id_col;
  if (options.id_column) id_col = table.require_column(*options.id_column);
  std::vector<std::size_t> payload_cols;
  for (const auto& name : options.payload_columns) payload_cols.push_back(table.require_column(name));

  IngestResult result;
  DatasetColumns cols;
  cols.numerical_raw.resize(num_cols.size());
  std::vector<std::vector<std::string>> cat_raw(cat_cols.size());
  for (const auto& name : options.payload_columns) cols.payload.push_back({name, {}});

  // Declared level sets, if any, for early rejection of unknown levels.
  std::vector<std::unordered_map<std::string, std::int32_t>> declared(cat_cols.size());
  for (std::size_t j = 0; j < cat_cols.size(); ++j) {
    const auto& levels = probe.categorical(j).levels;
    for (std::size_t l = 0; l < levels.size(); ++l) {
      declared[j].emplace(levels[l], static_cast<std::int32_t>(l));
    }
  }

  std::vector<double> num_values(num_cols.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string row_label = "row " + std::to_string(r + 1);
    std::string problem;
    for (std::size_t j = 0; j < num_cols.size() && problem.empty(); ++j) {
      const auto v = parse_double(row[num_cols[j].src]);
      if (!v) {
        problem = "unparseable numeric '" + row[num_cols[j].src] + "' in column '" +
                  table.header[num_cols[j].src] + "'";
      } else if (num_cols[j].mode == Normalization::LogMinMax && !(*v > 0.0)) {
        problem = "non-positive value in log-min-max column '" + table.header[num_cols[j].src] + "'";
      } else {
        num_values[j] = *v;
      }
    }
    for (std::size_t j = 0; j < cat_cols.size() && problem.empty(); ++j) {
      const std::string& level = row[cat_cols[j]];
      if (level.empty()) {
        problem = "missing value in column '" + table.header[cat_cols[j]] + "'";
      } else if (!declared[j].empty() && !declared[j].contains(level)) {
        problem = "level '" + level + "' not declared for '" + table.header[cat_cols[j]] + "'";
      }
    }
    double lat = 0.0, lon = 0.0;
    if (lat_col && problem.empty()) {
      const auto a = parse_double(row[*lat_col]);
      const auto b = parse_double(row[*lon_col]);
      if (!a || !b) {
        problem = "unparseable coordinate";
      } else if (*a < -90.0 || *a > 90.0) {
        problem = "latitude " + row[*lat_col] + " out of range";
      } else if (*b < -180.0 || *b > 180.0) {
        problem = "longitude " + row[*lon_col] + " out of range";
      } else {
        lat = *a;
        lon = *b;
      }
    }
    if (!problem.empty()) {
      if (options.on_bad_row == BadRowPolicy::Fail) throw ValidationError(row_label + ": " + problem);
      ++result.skipped_rows;
      if (result.diagnostics.size() < 100) result.diagnostics.push_back(row_label + ": " + problem);
      continue;
    }
    for (std::size_t j = 0; j < num_cols.size(); ++j) cols.numerical_raw[j].push_back(num_values[j]);
    for (std::size_t j = 0; j < cat_cols.size(); ++j) cat_raw[j].push_back(row[cat_cols[j]]);
    if (lat_col) {
      cols.latitude_deg.push_back(lat);
      cols.longitude_deg.push_back(lon);
    }
    cols.ids.push_back(id_col ? row[*id_col] : std::to_string(r + 1));
    for (std::size_t p = 0; p < payload_cols.size(); ++p) {
      cols.payload[p].values.push_back(row[payload_cols[p]]);
    }
  }
  if (cols.ids.empty()) throw ValidationError("empty input: no usable records");

  // Level indices: declared order, or sorted discovered levels.
  std::vector<AttributeDescriptor> resolved = schema_config;
  std::size_t cat_j = 0;
  for (auto& a : resolved) {
    if (a.kind != AttributeKind::Categorical) continue;
    if (a.levels.empty()) {
      std::set<std::string> seen(cat_raw[cat_j].begin(), cat_raw[cat_j].end());
      a.levels.assign(seen.begin(), seen.end());
      declared[cat_j].clear();
      for (std::size_t l = 0; l < a.levels.size(); ++l) {
        declared[cat_j].emplace(a.levels[l], static_cast<std::int32_t>(l));
      }
    }
    std::vector<std::int32_t> idx;
    idx.reserve(cat_raw[cat_j].size());
    for (const auto& v : cat_raw[cat_j]) idx.push_back(declared[cat_j].at(v));
    cols.categorical.push_back(std::move(idx));
    ++cat_j;
  }

  result.data = Dataset::build(std::make_shared<const Schema>(std::move(resolved)), std::move(cols));
  return result;
}

IngestResult ingest_csv(const std::string& path, const std::vector<AttributeDescriptor>& schema,
                        const IngestOptions& options) {
  return ingest_table(read_csv(path), schema, options);
}

void export_payload_csv(const Dataset& data, std::ostream& out) {
  std::vector<std::string> header{"id"};
  for (const auto& p : data.payload()) header.push_back(p.name);
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (std::size_t i = 0; i < data.size(); ++i) {
    row.clear();
    row.push_back(data.ids()[i]);
    for (const auto& p : data.payload()) row.push_back(p.values[i]);
    write_csv_row(out, row);
  }
}

std::vector<std::size_t> stratified_sample_rows(const Dataset& data, double fraction,
                                                const std::vector<std::string>& strata,
                                                Seed seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("sample fraction must be in (0, 1]");
  }
  std::vector<std::size_t> keys;
  for (const auto& name : strata) {
    const auto j = data.schema().categorical_index(name);
    if (!j) throw ValidationError("stratum '" + name + "' is not a categorical attribute");
    keys.push_back(*j);
  }
  std::map<std::vector<std::int32_t>, std::vector<std::size_t>> groups;
  std::vector<std::int32_t> key(keys.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t s = 0; s < keys.size(); ++s) key[s] = data.categorical(keys[s])[i];
    groups[key].push_back(i);
  }
  Rng rng(seed);
  std::vector<std::size_t> chosen;
  for (auto& [k, rows] : groups) {
    const auto take = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(rows.size())));
    // Partial Fisher-Yates: the first `take` slots become the sample.
    for (std::size_t t = 0; t < take; ++t) {
      const std::size_t pick = t + rng.below(rows.size() - t);
      std::swap(rows[t], rows[pick]);
      chosen.push_back(rows[t]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Dataset stratified_sample(const Dataset& data, double fraction,
                          const std::vector<std::string>& strata, Seed seed) {
  const auto rows = stratified_sample_rows(data, fraction, strata, seed);
  return data.subset(rows);
}

void write_inspect_csv(const Dataset& data, std::ostream& out) {
  write_csv_row(out, {"attribute", "kind", "level", "count", "frequency", "min", "mean", "max"});
  const Schema& s = data.schema();
  const std::string n = std::to_string(data.size());
  auto summary = [&](std::span<const double> xs) {
    double lo = INFINITY, hi = -INFINITY;
    CompensatedSum sum;
    for (double x : xs) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      sum.add(x);
    }
    const double mean = xs.empty() ? 0.0 : sum.value() / static_cast<double>(xs.size());
    return std::array<std::string, 3>{format_double(lo), format_double(mean), format_double(hi)};
  };
  for (std::size_t j = 0; j < s.numerical_count(); ++j) {
    const auto st = summary(data.numerical_raw(j));
    write_csv_row(out, {s.numerical(j).name, "numerical", "", n, "", st[0], st[1], st[2]});
  }
  for (std::size_t j = 0; j < s.categorical_count(); ++j) {
    const auto& levels = s.categorical(j).levels;
    std::vector<std::size_t> counts(levels.size(), 0);
    for (std::int32_t v : data.categorical(j)) ++counts[static_cast<std::size_t>(v)];
    for (std::size_t l = 0; l < levels.size(); ++l) {
      const double freq = data.empty() ? 0.0 : static_cast<double>(counts[l]) / data.size();
      write_csv_row(out, {s.categorical(j).name, "categorical", levels[l], std::to_string(counts[l]),
                          format_double(freq), "", "", ""});
    }
  }
  if (s.has_spatial()) {
    std::vector<double> lat(data.size()), lon(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      lat[i] = data.latitude()[i] * kRadToDeg;
      lon[i] = data.longitude()[i] * kRadToDeg;
    }
    const auto a = summary(lat);
    const auto b = summary(lon);
    write_csv_row(out, {s.spatial().name, "spatial", "latitude", n, "", a[0], a[1], a[2]});
    write_csv_row(out, {s.spatial().name, "spatial", "longitude", n, "", b[0], b[1], b[2]});
  }
}

}  // namespace geoproto
