#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "geoproto/kproto.hpp"
#include "geoproto/schema.hpp"

namespace geoproto {

struct ExperienceRecord {
  std::string id;
  std::size_t cluster = 0;
  double face_amount = 0.0;
  int death_indicator = 0;
  double expected_rate = 0.0;
};

/// Throws ValidationError unless FA is finite and >= 0, I is 0/1 and q is in [0, 1].
void validate_record(const ExperienceRecord& r);

struct LyapunovDiagnostics {
  double min_variance = 0.0;           // inf_i c_i^2 q_i (1 - q_i)
  double min_positive_variance = 0.0;  // same, over records with positive variance
  double max_third_moment = 0.0;       // sup_i E|Y_i - E Y_i|^3
  std::size_t degenerate_count = 0;    // records with q in {0, 1}
  std::vector<std::string> degenerate_ids;  // first few of them
};

enum class IntervalCenter { Null, Observed };
enum class Position { Below, Inside, Above };

std::string to_string(Position p);

struct ConfidenceInterval {
  double level = 0.0;
  double z = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  Position observed = Position::Inside;  // where the observed ratio falls
};

inline constexpr std::size_t kPortfolioRow = std::numeric_limits<std::size_t>::max();

struct ClusterExperience {
  std::size_t cluster = 0;  // kPortfolioRow for the portfolio total
  std::size_t n = 0;
  double actual = 0.0;    // sum FA_i I_i
  double expected = 0.0;  // sum FA_i q_i
  double ratio = 0.0;
  double variance = 0.0;  // sum FA_i^2 q_i (1 - q_i) / (sum FA_i q_i)^2
  std::vector<ConfidenceInterval> intervals;
  LyapunovDiagnostics lyapunov;

  double sd() const;
};

/// Aggregates one group of records (labelled with the first record's
/// cluster). Throws ComputationError when the expected total is zero.
ClusterExperience ae_ratio(std::span<const ExperienceRecord> records);

/// z * sd around 1 (the mean of R under the expected rates), or around the
/// observed R when asked; z is the (1 + level) / 2 normal quantile.
ConfidenceInterval ae_confidence_interval(const ClusterExperience& exp, double level,
                                          IntervalCenter center = IntervalCenter::Null);

/// Advisory moment checks for the normal approximation.
LyapunovDiagnostics lyapunov_check(std::span<const ExperienceRecord> records);

/// Standard normal quantile: Acklam's rational approximation followed by one
/// Halley step against erfc, giving close to full double precision.
double normal_quantile(double p);

struct ExperienceReport {
  std::vector<ClusterExperience> clusters;  // ascending cluster index
  ClusterExperience portfolio;
  std::vector<double> levels;
  IntervalCenter center = IntervalCenter::Null;
};

ExperienceReport experience_report(std::span<const ExperienceRecord> records,
                                   std::span<const double> levels,
                                   IntervalCenter center = IntervalCenter::Null);

struct PayloadNames {
  std::string face_amount = "face_amount";
  std::string death_indicator = "death_indicator";
  std::string expected_rate = "expected_rate";
};

/// Records from a dataset's payload columns and a model's assignment.
std::vector<ExperienceRecord> experience_records(const Dataset& data,
                                                 std::span<const std::uint32_t> assignment,
                                                 const PayloadNames& names = {});

ExperienceReport experience_report(const Dataset& data, const ClusteringModel& model,
                                   std::span<const double> levels, const PayloadNames& names = {},
                                   IntervalCenter center = IntervalCenter::Null);

/// cluster,n,actual,expected,ratio,sd, then lower/upper/position/significant
/// per level.
void write_report_csv(const ExperienceReport& report, std::ostream& out);

/// Expected rates keyed by (age, sex, smoker), e.g. a valuation table
/// extract with columns age,sex,smoker,q.
class RateTable {
 public:
  static RateTable load(const std::string& path);
  void add(int age, const std::string& sex, const std::string& smoker, double q);
  double lookup(int age, const std::string& sex, const std::string& smoker) const;
  std::size_t size() const { return rates_.size(); }

 private:
  std::map<std::tuple<int, std::string, std::string>, double> rates_;
};

}  // namespace geoproto
