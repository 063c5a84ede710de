#include "geoproto/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "geoproto/config.hpp"
#include "geoproto/csv.hpp"
#include "geoproto/error.hpp"
#include "geoproto/experience.hpp"
#include "geoproto/gap.hpp"
#include "geoproto/io.hpp"
#include "geoproto/kproto.hpp"
#include "geoproto/lambda.hpp"
#include "geoproto/parallel.hpp"
#include "geoproto/schema.hpp"
#include "geoproto/synth.hpp"
#include "json.hpp"

namespace geoproto {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Flags {
  std::optional<std::string> config;
  std::optional<unsigned> threads;
  std::optional<Seed> seed;
  std::optional<std::string> input;
  std::optional<std::string> output_dir;
  bool quiet = false;
  bool verbose = false;

  std::optional<std::size_t> k, restarts, max_iter;
  std::optional<double> lambda1, lambda2;
  std::optional<std::string> spatial_rule;

  std::optional<std::size_t> k_min, k_max, B;
  std::optional<double> sample_fraction;
  std::optional<std::vector<std::string>> strata;
  bool no_refit = false;

  std::optional<std::string> assignments, portfolio, rate_table, center;
  std::optional<std::vector<double>> levels;

  std::vector<double> dist_args;

  std::optional<std::size_t> n, clusters;
  std::optional<double> separation, q;
  std::optional<std::vector<double>> ae_multipliers;
};

class Log {
 public:
  Log(std::ostream& err, Verbosity v) : err_(err), v_(v) {}
  void info(const std::string& msg) const {
    if (v_ != Verbosity::Quiet) err_ << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (v_ == Verbosity::Debug) err_ << msg << '\n';
  }
  void warn(const std::string& msg) const { err_ << "warning: " << msg << '\n'; }

 private:
  std::ostream& err_;
  Verbosity v_;
};

[[noreturn]] void missing(const std::string& key, const std::string& flag) {
  throw ValidationError("missing required value '" + key + "': pass " + flag + " or set " + key +
                        " in the config");
}

struct Context {
  std::string command;
  RunConfig cfg;
  std::string config_hash;
  unsigned threads = 1;
  Log log;
  std::ostream& out;
};

std::string output_path(const Context& ctx, const std::string& name) {
  return (fs::path(ctx.cfg.output_dir) / name).string();
}

void finish(const Context& ctx, std::vector<std::string> outputs, std::string input_hash = {}) {
  ManifestEntry entry;
  entry.command = ctx.command;
  entry.seed = ctx.cfg.seed;
  entry.config_hash = ctx.config_hash;
  entry.input_hash = std::move(input_hash);
  entry.outputs = std::move(outputs);
  update_run_manifest(ctx.cfg.output_dir, entry);
}

struct Loaded {
  Dataset data;
  std::string input_hash;
};

Loaded load_data(const Context& ctx) {
  if (!ctx.cfg.input) missing("input", "--input");
  if (ctx.cfg.attributes.empty()) missing("attributes", "--config");
  IngestResult r = ingest_csv(*ctx.cfg.input, ctx.cfg.attributes, ctx.cfg.ingest_options());
  if (r.skipped_rows > 0) {
    ctx.log.warn("skipped " + std::to_string(r.skipped_rows) + " bad rows");
    for (const auto& d : r.diagnostics) ctx.log.debug("  " + d);
  }
  ctx.log.info("loaded " + std::to_string(r.data.size()) + " records from " + *ctx.cfg.input);
  return {std::move(r.data), file_hash(*ctx.cfg.input)};
}

json lambda_json(const LambdaEstimate& est) {
  json j;
  j["lambda1"] = est.has_lambda1 ? json(est.lambda1) : json(nullptr);
  j["lambda2"] = est.has_lambda2 ? json(est.lambda2) : json(nullptr);
  j["numerical_average_variance"] = est.numer_avg_variance;
  j["categorical_average_gini"] = est.categorical_avg_gini;
  j["spatial_distance_variance_m2"] = est.spatial_distance_variance;
  j["center"] = {{"latitude", est.center.lat * kRadToDeg},
                 {"longitude", est.center.lon * kRadToDeg}};
  return j;
}

// Overrides win; otherwise the estimate; a component the data cannot
// support (no categorical or spatial spread) gets weight 0.
Weights resolve_weights(const Context& ctx, const Dataset& data) {
  const auto& c = ctx.cfg.cluster;
  Weights w;
  if (c.lambda1 && c.lambda2) {
    w = {*c.lambda1, *c.lambda2};
  } else {
    const LambdaEstimate est = estimate_lambdas(data);
    ctx.log.info("lambda estimate: " + lambda_json(est).dump());
    w.lambda1 = c.lambda1 ? *c.lambda1 : est.has_lambda1 ? est.lambda1 : 0.0;
    w.lambda2 = c.lambda2 ? *c.lambda2 : est.has_lambda2 ? est.lambda2 : 0.0;
    if (!c.lambda1 && !est.has_lambda1 && data.schema().categorical_count() > 0) {
      ctx.log.warn("categorical attributes have no spread; lambda1 set to 0");
    }
    if (!c.lambda2 && !est.has_lambda2 && data.has_spatial()) {
      ctx.log.warn("coordinates have no spread; lambda2 set to 0");
    }
  }
  w.validate();
  return w;
}

json model_json(const Context& ctx, const Dataset& data, const ClusteringModel& m,
                const Weights& w) {
  const Schema& s = data.schema();
  json protos = json::array();
  for (std::size_t c = 0; c < m.k; ++c) {
    const Prototype& p = m.prototypes[c];
    json num = json::object(), cat = json::object();
    for (std::size_t j = 0; j < s.numerical_count(); ++j) {
      num[s.numerical(j).name] = {{"normalized", p.numerical[j]},
                                  {"value", denormalize_value(p.numerical[j], data.normalization()[j])}};
    }
    for (std::size_t j = 0; j < s.categorical_count(); ++j) {
      cat[s.categorical(j).name] = s.categorical(j).levels.at(static_cast<std::size_t>(p.categorical[j]));
    }
    json proto{{"cluster", c}, {"numerical", num}, {"categorical", cat}};
    if (p.spatial) {
      proto["spatial"] = {{"latitude", p.spatial->geo.lat * kRadToDeg},
                          {"longitude", p.spatial->geo.lon * kRadToDeg}};
    }
    protos.push_back(proto);
  }
  return json{{"seed", ctx.cfg.seed},
              {"config_hash", ctx.config_hash},
              {"k", m.k},
              {"weights", {{"lambda1", w.lambda1}, {"lambda2", w.lambda2}}},
              {"spatial_rule", to_string(ctx.cfg.cluster.spatial_rule)},
              {"restarts", ctx.cfg.cluster.restarts},
              {"max_iterations", ctx.cfg.cluster.max_iterations},
              {"cost",
               {{"total", m.cost_total},
                {"numerical", m.cost_numerical},
                {"categorical", m.cost_categorical},
                {"spatial", m.cost_spatial}}},
              {"iterations", m.iterations},
              {"converged", m.converged},
              {"repair_exhausted", m.repair_exhausted},
              {"best_restart", m.restart_index},
              {"restart_seed", m.seed},
              {"cluster_sizes", m.cluster_sizes()},
              {"prototypes", protos},
              {"cost_history", m.cost_history}};
}

std::vector<std::string> write_model(const Context& ctx, const Dataset& data,
                                     const ClusteringModel& m, const Weights& w) {
  std::ostringstream csv;
  csv << csv_preamble(ctx.cfg.seed, ctx.config_hash);
  write_csv_row(csv, {"id", "cluster"});
  for (std::size_t i = 0; i < data.size(); ++i) {
    write_csv_row(csv, {data.ids()[i], std::to_string(m.assignment[i])});
  }
  const std::string assignments = output_path(ctx, "assignments.csv");
  const std::string model = output_path(ctx, "model.json");
  atomic_write(assignments, csv.str());
  atomic_write(model, model_json(ctx, data, m, w).dump(2) + "\n");
  ctx.log.info("k=" + std::to_string(m.k) + " cost=" + format_double(m.cost_total) +
               " iterations=" + std::to_string(m.iterations) +
               (m.converged ? "" : " (not converged)"));
  if (m.repair_exhausted) ctx.log.warn("an empty cluster could not be repaired");
  return {"assignments.csv", "model.json"};
}

ClusteringModel fit_full(const Context& ctx, const Dataset& data, std::size_t k,
                         const Weights& w) {
  KProtoConfig kc;
  kc.k = k;
  kc.weights = w;
  kc.restarts = ctx.cfg.cluster.restarts;
  kc.max_iterations = ctx.cfg.cluster.max_iterations;
  kc.spatial_rule = ctx.cfg.cluster.spatial_rule;
  kc.seed = ctx.cfg.seed;
  kc.threads = ctx.threads;
  return fit(data, kc);
}

int cmd_inspect(const Context& ctx) {
  const Loaded in = load_data(ctx);
  ctx.out << csv_preamble(ctx.cfg.seed, ctx.config_hash);
  write_inspect_csv(in.data, ctx.out);
  return 0;
}

int cmd_lambda(const Context& ctx) {
  const Loaded in = load_data(ctx);
  const LambdaEstimate est = estimate_lambdas(in.data);
  json j = lambda_json(est);
  j["n"] = in.data.size();
  j["seed"] = ctx.cfg.seed;
  j["config_hash"] = ctx.config_hash;
  const std::string text = j.dump(2) + "\n";
  ctx.out << text;
  atomic_write(output_path(ctx, "lambda.json"), text);
  finish(ctx, {"lambda.json"}, in.input_hash);
  return 0;
}

int cmd_cluster(const Context& ctx) {
  if (!ctx.cfg.cluster.k) missing("cluster.k", "--k");
  const Loaded in = load_data(ctx);
  const Weights w = resolve_weights(ctx, in.data);
  const ClusteringModel m = fit_full(ctx, in.data, *ctx.cfg.cluster.k, w);
  finish(ctx, write_model(ctx, in.data, m, w), in.input_hash);
  return 0;
}

int cmd_select_k(const Context& ctx) {
  const Loaded in = load_data(ctx);
  const auto& sk = ctx.cfg.select_k;
  GapConfig g;
  g.k_min = sk.k_min;
  g.k_max = sk.k_max;
  g.B = sk.B;
  g.sample_fraction = sk.sample_fraction;
  g.strata = sk.strata;
  g.kproto.restarts = ctx.cfg.cluster.restarts;
  g.kproto.max_iterations = ctx.cfg.cluster.max_iterations;
  g.kproto.spatial_rule = ctx.cfg.cluster.spatial_rule;
  g.lambda1 = ctx.cfg.cluster.lambda1;
  g.lambda2 = ctx.cfg.cluster.lambda2;
  g.seed = ctx.cfg.seed;
  g.threads = ctx.threads;
  const GapProfile profile = gap_select(in.data, g);
  for (const auto& d : profile.diagnostics) ctx.log.warn(d);

  std::ostringstream csv;
  csv << csv_preamble(ctx.cfg.seed, ctx.config_hash);
  write_csv_row(csv, {"k", "log_wk", "expected_log_wk_ref", "sd_k", "s_k", "gap_k", "valid",
                      "diagnostic"});
  for (const auto& r : profile.rows) {
    write_csv_row(csv, {std::to_string(r.k), format_double(r.log_wk),
                        format_double(r.expected_log_wk_ref), format_double(r.sd_k),
                        format_double(r.s_k), format_double(r.gap_k), r.valid ? "1" : "0",
                        r.diagnostic});
  }
  atomic_write(output_path(ctx, "gap_profile.csv"), csv.str());
  json sel{{"seed", ctx.cfg.seed},
           {"config_hash", ctx.config_hash},
           {"chosen_k", profile.chosen_k ? json(*profile.chosen_k) : json(nullptr)},
           {"k_min", profile.k_min},
           {"k_max", profile.k_max},
           {"B", profile.B},
           {"sample_size", profile.sample_size},
           {"weights", {{"lambda1", profile.weights.lambda1}, {"lambda2", profile.weights.lambda2}}},
           {"diagnostics", profile.diagnostics}};
  atomic_write(output_path(ctx, "selection.json"), sel.dump(2) + "\n");
  std::vector<std::string> outputs{"gap_profile.csv", "selection.json"};

  if (profile.chosen_k) {
    ctx.out << "chosen_k=" << *profile.chosen_k << "\n";
    if (sk.refit) {
      const Weights w = resolve_weights(ctx, in.data);
      const ClusteringModel m = fit_full(ctx, in.data, *profile.chosen_k, w);
      for (auto& f : write_model(ctx, in.data, m, w)) outputs.push_back(f);
    }
  } else {
    ctx.out << "chosen_k=none\n";
    ctx.log.warn("no k in range satisfied the gap rule");
  }
  finish(ctx, outputs, in.input_hash);
  return 0;
}

int cmd_experience(const Context& ctx) {
  const auto& x = ctx.cfg.experience;
  if (!x.assignments) missing("experience.assignments", "--assignments");
  const std::optional<std::string> portfolio_path = x.portfolio ? x.portfolio : ctx.cfg.input;
  if (!portfolio_path) missing("experience.portfolio", "--portfolio");

  const CsvTable assignments = read_csv(*x.assignments);
  const CsvTable portfolio = read_csv(*portfolio_path);
  const std::size_t a_id = assignments.require_column("id");
  const std::size_t a_cluster = assignments.require_column("cluster");

  std::optional<std::size_t> p_id;
  if (ctx.cfg.id_column) p_id = portfolio.require_column(*ctx.cfg.id_column);
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t r = 0; r < portfolio.rows.size(); ++r) {
    const std::string id = p_id ? portfolio.rows[r][*p_id] : std::to_string(r + 1);
    if (!row_of.emplace(id, r).second) {
      throw ValidationError("portfolio: duplicate id '" + id + "'");
    }
  }

  const std::size_t fa = portfolio.require_column(x.columns.face_amount);
  const std::size_t death = portfolio.require_column(x.columns.death_indicator);
  std::optional<RateTable> table;
  std::size_t q_col = 0, age_col = 0, sex_col = 0, smoker_col = 0;
  if (x.rate_table) {
    table = RateTable::load(*x.rate_table);
    age_col = portfolio.require_column(x.age_column);
    sex_col = portfolio.require_column(x.sex_column);
    smoker_col = portfolio.require_column(x.smoker_column);
  } else {
    q_col = portfolio.require_column(x.columns.expected_rate);
  }

  auto number = [](const std::string& field, const std::string& what, const std::string& id) {
    const auto v = parse_double(field);
    if (!v) throw ValidationError("record " + id + ": unparseable " + what + " '" + field + "'");
    return *v;
  };

  std::vector<ExperienceRecord> records;
  records.reserve(assignments.rows.size());
  for (const auto& arow : assignments.rows) {
    const std::string& id = arow[a_id];
    const auto it = row_of.find(id);
    if (it == row_of.end()) throw ValidationError("assignment id '" + id + "' not in portfolio");
    const auto& prow = portfolio.rows[it->second];
    ExperienceRecord r;
    r.id = id;
    const double c = number(arow[a_cluster], "cluster", id);
    if (c < 0 || c != std::floor(c)) throw ValidationError("record " + id + ": bad cluster index");
    r.cluster = static_cast<std::size_t>(c);
    r.face_amount = number(prow[fa], "face amount", id);
    const double d = number(prow[death], "death indicator", id);
    r.death_indicator = d == 1.0 ? 1 : d == 0.0 ? 0 : -1;
    if (table) {
      const double age = number(prow[age_col], "age", id);
      r.expected_rate =
          table->lookup(static_cast<int>(std::lround(age)), prow[sex_col], prow[smoker_col]);
    } else {
      r.expected_rate = number(prow[q_col], "expected rate", id);
    }
    records.push_back(std::move(r));
  }
  if (records.size() < row_of.size()) {
    ctx.log.warn(std::to_string(row_of.size() - records.size()) +
                 " portfolio rows have no assignment and are ignored");
  }

  const ExperienceReport report = experience_report(records, x.levels, x.center);

  std::ostringstream csv;
  csv << csv_preamble(ctx.cfg.seed, ctx.config_hash);
  write_report_csv(report, csv);

  json rows = json::array();
  auto row_json = [&](const ClusterExperience& e) {
    json cis = json::array();
    for (const auto& ci : e.intervals) {
      cis.push_back({{"level", ci.level},
                     {"z", ci.z},
                     {"lower", ci.lower},
                     {"upper", ci.upper},
                     {"observed", to_string(ci.observed)}});
    }
    const auto& l = e.lyapunov;
    return json{{"cluster", e.cluster == kPortfolioRow ? json("portfolio") : json(e.cluster)},
                {"n", e.n},
                {"actual", e.actual},
                {"expected", e.expected},
                {"ratio", e.ratio},
                {"variance", e.variance},
                {"sd", e.sd()},
                {"intervals", cis},
                {"lyapunov",
                 {{"min_variance", l.min_variance},
                  {"min_positive_variance", l.min_positive_variance},
                  {"max_third_moment", l.max_third_moment},
                  {"degenerate_count", l.degenerate_count},
                  {"degenerate_ids", l.degenerate_ids}}}};
  };
  for (const auto& e : report.clusters) rows.push_back(row_json(e));
  json j{{"seed", ctx.cfg.seed},
         {"config_hash", ctx.config_hash},
         {"center", to_string(report.center)},
         {"levels", report.levels},
         {"clusters", rows},
         {"portfolio", row_json(report.portfolio)}};

  atomic_write(output_path(ctx, "experience.csv"), csv.str());
  atomic_write(output_path(ctx, "experience.json"), j.dump(2) + "\n");
  if (report.portfolio.lyapunov.degenerate_count > 0) {
    ctx.log.warn(std::to_string(report.portfolio.lyapunov.degenerate_count) +
                 " records have q in {0, 1} and contribute no variance");
  }
  ctx.log.info("portfolio A/E=" + format_double(report.portfolio.ratio));
  finish(ctx, {"experience.csv", "experience.json"},
         hex64(fnv1a64(file_hash(*x.assignments) + file_hash(*portfolio_path))));
  return 0;
}

int cmd_dist(const Context& ctx, const std::vector<double>& v) {
  if (v.size() != 4) throw ValidationError("dist needs LAT1 LON1 LAT2 LON2 in degrees");
  for (int i = 0; i < 4; i += 2) {
    if (!(std::fabs(v[i]) <= 90.0)) throw ValidationError("latitude out of range [-90, 90]");
    if (!(std::fabs(v[i + 1]) <= 180.0)) throw ValidationError("longitude out of range [-180, 180]");
  }
  const double m = geodetic_distance_m(GeoPoint::from_degrees(v[0], v[1]),
                                       GeoPoint::from_degrees(v[2], v[3]));
  ctx.out << format_double(m) << "\n";
  return 0;
}

int cmd_synth(const Context& ctx) {
  const auto& y = ctx.cfg.synth;
  SynthSpec spec;
  spec.n = y.n;
  spec.clusters = y.clusters;
  spec.separation = y.separation;
  spec.q_constant = y.q;
  spec.ae_multipliers = y.ae_multipliers;
  spec.seed = ctx.cfg.seed;
  const SynthPortfolio p = synth_portfolio(spec);

  std::ostringstream portfolio, truth;
  portfolio << csv_preamble(ctx.cfg.seed, ctx.config_hash);
  write_portfolio_csv(p, portfolio);
  truth << csv_preamble(ctx.cfg.seed, ctx.config_hash);
  write_truth_csv(p, truth);
  atomic_write(output_path(ctx, "portfolio.csv"), portfolio.str());
  atomic_write(output_path(ctx, "truth.csv"), truth.str());

  // A config that runs the rest of the pipeline on the generated data.
  RunConfig next;
  next.input = "portfolio.csv";
  next.id_column = "policy_id";
  next.attributes = synth_schema();
  next.payload = synth_ingest_options().payload_columns;
  next.seed = ctx.cfg.seed;
  next.output_dir = ".";
  next.cluster.k = y.clusters;
  next.experience.assignments = "assignments.csv";
  next.experience.portfolio = "portfolio.csv";
  next.synth = y;
  atomic_write(output_path(ctx, "config.json"), to_json(next) + "\n");

  std::size_t deaths = 0;
  for (int d : p.death_indicator) deaths += static_cast<std::size_t>(d);
  ctx.log.info("wrote " + std::to_string(p.size()) + " policies, " + std::to_string(deaths) +
               " deaths");
  finish(ctx, {"portfolio.csv", "truth.csv", "config.json"});
  return 0;
}

void apply_flags(RunConfig& cfg, const Flags& f) {
  if (f.seed) cfg.seed = *f.seed;
  if (f.input) cfg.input = *f.input;
  if (f.output_dir) cfg.output_dir = *f.output_dir;
  if (f.quiet) cfg.verbosity = Verbosity::Quiet;
  if (f.verbose) cfg.verbosity = Verbosity::Debug;

  if (f.k) cfg.cluster.k = *f.k;
  if (f.restarts) cfg.cluster.restarts = *f.restarts;
  if (f.max_iter) cfg.cluster.max_iterations = *f.max_iter;
  if (f.lambda1) cfg.cluster.lambda1 = *f.lambda1;
  if (f.lambda2) cfg.cluster.lambda2 = *f.lambda2;
  if (f.spatial_rule) cfg.cluster.spatial_rule = parse_spatial_rule(*f.spatial_rule);

  if (f.k_min) cfg.select_k.k_min = *f.k_min;
  if (f.k_max) cfg.select_k.k_max = *f.k_max;
  if (f.B) cfg.select_k.B = *f.B;
  if (f.sample_fraction) cfg.select_k.sample_fraction = *f.sample_fraction;
  if (f.strata) cfg.select_k.strata = *f.strata;
  if (f.no_refit) cfg.select_k.refit = false;

  if (f.assignments) cfg.experience.assignments = *f.assignments;
  if (f.portfolio) cfg.experience.portfolio = *f.portfolio;
  if (f.rate_table) cfg.experience.rate_table = *f.rate_table;
  if (f.levels) cfg.experience.levels = *f.levels;
  if (f.center) cfg.experience.center = parse_interval_center(*f.center);

  if (f.n) cfg.synth.n = *f.n;
  if (f.clusters) cfg.synth.clusters = *f.clusters;
  if (f.separation) cfg.synth.separation = *f.separation;
  if (f.q) cfg.synth.q = *f.q;
  if (f.ae_multipliers) cfg.synth.ae_multipliers = *f.ae_multipliers;
}

// Hash of everything that can change results; thread count, verbosity and
// the output location are excluded so they do not perturb outputs.
std::string config_hash(const std::string& command, RunConfig cfg) {
  cfg.threads.reset();
  cfg.verbosity = Verbosity::Info;
  cfg.output_dir = ".";
  return hex64(fnv1a64(command + "\n" + to_json(cfg, -1)));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Geo-spatial k-prototypes clustering and A/E mortality analysis", "geoproto"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", version_string());

  Flags f;
  app.add_option("--config", f.config, "JSON run configuration");
  app.add_option("--threads", f.threads, "Worker threads (overrides GEOPROTO_THREADS)");
  app.add_option("--seed", f.seed, "Master seed");
  app.add_option("--input", f.input, "Input CSV");
  app.add_option("-o,--output-dir", f.output_dir, "Output directory");
  app.add_flag("-q,--quiet", f.quiet, "Only warnings and errors");
  app.add_flag("-v,--verbose", f.verbose, "Debug logging");

  app.add_subcommand("inspect", "Per-attribute summary CSV on stdout");
  app.add_subcommand("lambda", "Estimate lambda1/lambda2 as JSON");
  auto* cluster = app.add_subcommand("cluster", "Fit k-prototypes");
  cluster->add_option("--k", f.k, "Number of clusters");
  auto* select = app.add_subcommand("select-k", "Gap statistic selection of k");
  for (auto* sub : {cluster, select}) {
    sub->add_option("--restarts", f.restarts, "Random restarts");
    sub->add_option("--max-iter", f.max_iter, "Iteration cap per restart");
    sub->add_option("--lambda1", f.lambda1, "Categorical weight override");
    sub->add_option("--lambda2", f.lambda2, "Spatial weight override");
    sub->add_option("--spatial-rule", f.spatial_rule, "paper | medoid");
  }
  select->add_option("--k-min", f.k_min, "Smallest k");
  select->add_option("--k-max", f.k_max, "Largest k");
  select->add_option("--B", f.B, "Reference datasets");
  select->add_option("--sample-fraction", f.sample_fraction, "Stratified subsample fraction");
  select->add_option("--strata", f.strata, "Categorical attributes to stratify on")->delimiter(',');
  select->add_flag("--no-refit", f.no_refit, "Skip the full-data fit with the chosen k");
  auto* experience = app.add_subcommand("experience", "A/E ratio report per cluster");
  experience->add_option("--assignments", f.assignments, "Assignments CSV (id,cluster)");
  experience->add_option("--portfolio", f.portfolio, "Portfolio CSV with FA, death, q");
  experience->add_option("--levels", f.levels, "Confidence levels, e.g. 0.90,0.95")
      ->delimiter(',');
  experience->add_option("--center", f.center, "null | observed");
  experience->add_option("--rate-table", f.rate_table, "CSV age,sex,smoker,q");
  auto* dist = app.add_subcommand("dist", "Geodetic distance in meters");
  dist->add_option("coords", f.dist_args, "LAT1 LON1 LAT2 LON2 (degrees)")->expected(4);
  auto* synth = app.add_subcommand("synth", "Generate a synthetic portfolio");
  synth->add_option("--n", f.n, "Policies");
  synth->add_option("--clusters", f.clusters, "Planted clusters");
  synth->add_option("--separation", f.separation, "0 (overlapping) to 1 (well separated)");
  synth->add_option("--q", f.q, "Constant expected rate");
  synth->add_option("--ae-multipliers", f.ae_multipliers, "True mortality multiplier per cluster")
      ->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    RunConfig cfg = f.config ? load_run_config(*f.config) : RunConfig{};
    apply_flags(cfg, f);
    Context ctx{command, cfg, config_hash(command, cfg), 1, Log(err, cfg.verbosity), out};
    ctx.threads = f.threads ? resolve_threads(*f.threads)
                            : resolve_threads(cfg.threads.value_or(0));
    ctx.log.debug("config_hash=" + ctx.config_hash + " threads=" + std::to_string(ctx.threads));

    if (command == "inspect") return cmd_inspect(ctx);
    if (command == "lambda") return cmd_lambda(ctx);
    if (command == "cluster") return cmd_cluster(ctx);
    if (command == "select-k") return cmd_select_k(ctx);
    if (command == "experience") return cmd_experience(ctx);
    if (command == "dist") return cmd_dist(ctx, f.dist_args);
    if (command == "synth") return cmd_synth(ctx);
    throw ValidationError("unknown subcommand '" + command + "'");
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace geoproto
