#include "geoproto/experience.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "geoproto/csv.hpp"
#include "geoproto/error.hpp"
#include "geoproto/numeric.hpp"

namespace geoproto {

void validate_record(const ExperienceRecord& r) {
  if (!std::isfinite(r.face_amount) || r.face_amount < 0.0) {
    throw ValidationError("record " + r.id + ": face amount must be finite and non-negative");
  }
  if (r.death_indicator != 0 && r.death_indicator != 1) {
    throw ValidationError("record " + r.id + ": death indicator must be 0 or 1");
  }
  if (!(r.expected_rate >= 0.0 && r.expected_rate <= 1.0)) {
    throw ValidationError("record " + r.id + ": expected rate must be in [0, 1]");
  }
}

std::string to_string(Position p) {
  switch (p) {
    case Position::Below:
      return "below";
    case Position::Inside:
      return "inside";
    case Position::Above:
      return "above";
  }
  return "inside";
}

double ClusterExperience::sd() const { return std::sqrt(variance); }

namespace {

std::string cluster_label(std::size_t c) {
  return c == kPortfolioRow ? std::string("portfolio") : std::to_string(c);
}

ClusterExperience aggregate(std::span<const ExperienceRecord> records, std::size_t cluster) {
  ClusterExperience e;
  e.cluster = cluster;
  e.n = records.size();
  CompensatedSum actual, expected, var_num;
  for (const auto& r : records) {
    validate_record(r);
    actual.add(r.face_amount * r.death_indicator);
    expected.add(r.face_amount * r.expected_rate);
    var_num.add(r.face_amount * r.face_amount * r.expected_rate * (1.0 - r.expected_rate));
  }
  e.actual = actual.value();
  e.expected = expected.value();
  if (!(e.expected > 0.0)) {
    throw ComputationError("cluster " + cluster_label(cluster) +
                           ": expected total is zero, A/E ratio undefined");
  }
  e.ratio = e.actual / e.expected;
  e.variance = var_num.value() / (e.expected * e.expected);
  e.lyapunov = lyapunov_check(records);
  return e;
}

}  // namespace

ClusterExperience ae_ratio(std::span<const ExperienceRecord> records) {
  if (records.empty()) throw ValidationError("ae_ratio: no records");
  return aggregate(records, records.front().cluster);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -INFINITY;
    if (p == 1.0) return INFINITY;
    throw ValidationError("normal_quantile: p must be in [0, 1]");
  }
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  // Work in the lower tail, where 1 - p is exact and erfc keeps full relative
  // precision during the refinement.
  if (p > 0.5) return -normal_quantile(1.0 - p);
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  // Halley refinement (relative error of the raw approximation ~1.15e-9).
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
  return x - u / (1.0 + x * u / 2.0);
}

ConfidenceInterval ae_confidence_interval(const ClusterExperience& exp, double level,
                                          IntervalCenter center) {
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must be in (0, 1)");
  if (!std::isfinite(exp.variance) || exp.variance < 0.0) {
    throw ValidationError("confidence interval needs a finite, non-negative variance");
  }
  ConfidenceInterval ci;
  ci.level = level;
  ci.z = normal_quantile((1.0 + level) / 2.0);
  const double half = ci.z * exp.sd();
  const double mid = center == IntervalCenter::Null ? 1.0 : exp.ratio;
  ci.lower = mid - half;
  ci.upper = mid + half;
  // Against the null band the observed ratio is the thing being judged; an
  // observed-centered interval is judged by whether it covers 1.
  const double probe = center == IntervalCenter::Null ? exp.ratio : 1.0;
  ci.observed = probe < ci.lower ? Position::Below : probe > ci.upper ? Position::Above
                                                                       : Position::Inside;
  return ci;
}

LyapunovDiagnostics lyapunov_check(std::span<const ExperienceRecord> records) {
  LyapunovDiagnostics diag;
  CompensatedSum expected;
  for (const auto& r : records) expected.add(r.face_amount * r.expected_rate);
  const double total = expected.value();
  if (!(total > 0.0)) return diag;
  bool first = true, first_positive = true;
  for (const auto& r : records) {
    const double c = r.face_amount / total;
    const double q = r.expected_rate;
    const double pq = q * (1.0 - q);
    const double var = c * c * pq;
    const double third = c * c * c * pq * (q * q + (1.0 - q) * (1.0 - q));
    if (first || var < diag.min_variance) diag.min_variance = var;
    if (var > 0.0 && (first_positive || var < diag.min_positive_variance)) {
      diag.min_positive_variance = var;
      first_positive = false;
    }
    diag.max_third_moment = std::max(diag.max_third_moment, third);
    first = false;
    if (q == 0.0 || q == 1.0) {
      ++diag.degenerate_count;
      if (diag.degenerate_ids.size() < 10) diag.degenerate_ids.push_back(r.id);
    }
  }
  return diag;
}

ExperienceReport experience_report(std::span<const ExperienceRecord> records,
                                   std::span<const double> levels, IntervalCenter center) {
  if (records.empty()) throw ValidationError("experience report: no records");
  ExperienceReport report;
  report.levels.assign(levels.begin(), levels.end());
  report.center = center;

  std::map<std::size_t, std::vector<ExperienceRecord>> groups;
  for (const auto& r : records) groups[r.cluster].push_back(r);
  auto with_intervals = [&](ClusterExperience e) {
    for (double level : levels) e.intervals.push_back(ae_confidence_interval(e, level, center));
    return e;
  };
  for (const auto& [cluster, members] : groups) {
    report.clusters.push_back(with_intervals(aggregate(members, cluster)));
  }
  report.portfolio = with_intervals(aggregate(records, kPortfolioRow));
  return report;
}

std::vector<ExperienceRecord> experience_records(const Dataset& data,
                                                 std::span<const std::uint32_t> assignment,
                                                 const PayloadNames& names) {
  if (assignment.size() != data.size()) {
    throw ValidationError("experience: assignment does not cover every record");
  }
  const auto& fa = data.payload_column(names.face_amount);
  const auto& death = data.payload_column(names.death_indicator);
  const auto& q = data.payload_column(names.expected_rate);
  std::vector<ExperienceRecord> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& r = out[i];
    r.id = data.ids()[i];
    r.cluster = assignment[i];
    const auto f = parse_double(fa[i]);
    const auto d = parse_double(death[i]);
    const auto rate = parse_double(q[i]);
    if (!f || !d || !rate) throw ValidationError("record " + r.id + ": unparseable payload value");
    r.face_amount = *f;
    r.death_indicator = *d == 1.0 ? 1 : *d == 0.0 ? 0 : -1;
    r.expected_rate = *rate;
    validate_record(r);
  }
  return out;
}

ExperienceReport experience_report(const Dataset& data, const ClusteringModel& model,
                                   std::span<const double> levels, const PayloadNames& names,
                                   IntervalCenter center) {
  const auto records = experience_records(data, model.assignment, names);
  return experience_report(records, levels, center);
}

void write_report_csv(const ExperienceReport& report, std::ostream& out) {
  std::vector<std::string> header{"cluster", "n", "actual", "expected", "ratio", "sd"};
  for (double level : report.levels) {
    const std::string tag = format_double(level * 100.0);
    header.push_back("lower_" + tag);
    header.push_back("upper_" + tag);
    header.push_back("position_" + tag);
    header.push_back("significant_" + tag);
  }
  write_csv_row(out, header);
  auto emit = [&](const ClusterExperience& e) {
    std::vector<std::string> row{cluster_label(e.cluster), std::to_string(e.n),
                                 format_double(e.actual), format_double(e.expected),
                                 format_double(e.ratio), format_double(e.sd())};
    for (const auto& ci : e.intervals) {
      row.push_back(format_double(ci.lower));
      row.push_back(format_double(ci.upper));
      row.push_back(to_string(ci.observed));
      row.push_back(ci.observed == Position::Inside ? "0" : "1");
    }
    write_csv_row(out, row);
  };
  for (const auto& e : report.clusters) emit(e);
  emit(report.portfolio);
}

RateTable RateTable::load(const std::string& path) {
  const CsvTable t = read_csv(path);
  const std::size_t age = t.require_column("age"), sex = t.require_column("sex"),
                    smoker = t.require_column("smoker"), q = t.require_column("q");
  RateTable table;
  for (const auto& row : t.rows) {
    const auto a = parse_double(row[age]);
    const auto rate = parse_double(row[q]);
    if (!a || !rate || *a != std::floor(*a)) {
      throw ValidationError("rate table '" + path + "': bad age or rate");
    }
    table.add(static_cast<int>(*a), row[sex], row[smoker], *rate);
  }
  return table;
}

void RateTable::add(int age, const std::string& sex, const std::string& smoker, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw ValidationError("rate table: q must be in [0, 1]");
  rates_[{age, sex, smoker}] = q;
}

double RateTable::lookup(int age, const std::string& sex, const std::string& smoker) const {
  auto it = rates_.find({age, sex, smoker});
  if (it == rates_.end()) {
    throw ValidationError("rate table has no entry for age " + std::to_string(age) + ", sex '" +
                          sex + "', smoker '" + smoker + "'");
  }
  return it->second;
}

}  // namespace geoproto
