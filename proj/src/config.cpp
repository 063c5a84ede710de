#include "geoproto/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "geoproto/error.hpp"
#include "json.hpp"

namespace geoproto {

using nlohmann::json;

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("", "must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) && !obj_.at(key).is_null();
  }

  const json& at(const std::string& key) { return obj_.at(key); }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const std::string where = key.empty() ? (path_.empty() ? "config" : path_) : key_path(key);
    throw ValidationError("config: '" + where + "' " + what);
  }

  std::string string(const std::string& key) {
    const json& v = obj_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  double number(const std::string& key) {
    const json& v = obj_.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    return v.get<double>();
  }

  std::uint64_t unsigned_int(const std::string& key) {
    const json& v = obj_.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    fail(key, "must be a non-negative integer");
  }

  bool boolean(const std::string& key) {
    const json& v = obj_.at(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::vector<std::string> strings(const std::string& key) {
    const json& v = obj_.at(key);
    if (!v.is_array()) fail(key, "must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
      if (!e.is_string()) fail(key, "must be an array of strings");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = obj_.at(key);
    if (!v.is_array()) fail(key, "must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) fail(key, "must be an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ValidationError("config: unknown key '" + key_path(key) + "'");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& base, const std::string& p) {
  if (base.empty() || p.empty() || p == "-") return p;
  std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base) / path).lexically_normal().string();
}

AttributeDescriptor parse_attribute(const json& j, std::size_t index) {
  Section s(j, "attributes[" + std::to_string(index) + "]");
  if (!s.has("name")) s.fail("name", "is required");
  if (!s.has("kind")) s.fail("kind", "is required");
  const std::string name = s.string("name");
  const std::string kind = s.string("kind");
  AttributeDescriptor a;
  if (kind == "numerical") {
    Normalization n = Normalization::MinMax;
    if (s.has("normalization")) {
      const std::string v = s.string("normalization");
      if (v == "minmax") {
        n = Normalization::MinMax;
      } else if (v == "logminmax") {
        n = Normalization::LogMinMax;
      } else {
        s.fail("normalization", "must be 'minmax' or 'logminmax'");
      }
    }
    a = AttributeDescriptor::numerical(name, n);
  } else if (kind == "categorical") {
    a = AttributeDescriptor::categorical(name, s.has("levels") ? s.strings("levels")
                                                               : std::vector<std::string>{});
  } else if (kind == "spatial") {
    if (!s.has("latitude")) s.fail("latitude", "is required for a spatial attribute");
    if (!s.has("longitude")) s.fail("longitude", "is required for a spatial attribute");
    a = AttributeDescriptor::spatial(name, s.string("latitude"), s.string("longitude"));
  } else {
    s.fail("kind", "must be 'numerical', 'categorical' or 'spatial'");
  }
  s.reject_unknown();
  return a;
}

json attribute_json(const AttributeDescriptor& a) {
  json j{{"name", a.name}, {"kind", to_string(a.kind)}};
  switch (a.kind) {
    case AttributeKind::Numerical:
      j["normalization"] = to_string(a.normalization);
      break;
    case AttributeKind::Categorical:
      if (!a.levels.empty()) j["levels"] = a.levels;
      break;
    case AttributeKind::SpatialPair:
      j["latitude"] = a.latitude_column;
      j["longitude"] = a.longitude_column;
      break;
  }
  return j;
}

int kind_rank(AttributeKind k) {
  return k == AttributeKind::Numerical ? 0 : k == AttributeKind::Categorical ? 1 : 2;
}

std::string verbosity_name(Verbosity v) {
  switch (v) {
    case Verbosity::Quiet:
      return "quiet";
    case Verbosity::Info:
      return "info";
    case Verbosity::Debug:
      return "debug";
  }
  return "info";
}

}  // namespace

std::string to_string(SpatialRule r) { return r == SpatialRule::Paper ? "paper" : "medoid"; }

SpatialRule parse_spatial_rule(const std::string& s) {
  if (s == "paper") return SpatialRule::Paper;
  if (s == "medoid") return SpatialRule::Medoid;
  throw ValidationError("spatial rule must be 'paper' or 'medoid', got '" + s + "'");
}

std::string to_string(IntervalCenter c) { return c == IntervalCenter::Null ? "null" : "observed"; }

IntervalCenter parse_interval_center(const std::string& s) {
  if (s == "null") return IntervalCenter::Null;
  if (s == "observed") return IntervalCenter::Observed;
  throw ValidationError("interval center must be 'null' or 'observed', got '" + s + "'");
}

IngestOptions RunConfig::ingest_options() const {
  IngestOptions o;
  o.id_column = id_column;
  o.payload_columns = payload;
  o.on_bad_row = on_bad_row;
  return o;
}

RunConfig parse_run_config(std::string_view json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: malformed JSON: ") + e.what());
  }
  Section s(root, "");
  RunConfig cfg;
  if (!s.has("schema_version")) s.fail("schema_version", "is required");
  const auto version = s.unsigned_int("schema_version");
  if (version != kConfigSchemaVersion) {
    s.fail("schema_version", "is " + std::to_string(version) + "; this build reads version " +
                                 std::to_string(kConfigSchemaVersion));
  }
  if (s.has("input")) cfg.input = resolve(base_dir, s.string("input"));
  if (s.has("id_column")) cfg.id_column = s.string("id_column");
  if (s.has("attributes")) {
    const json& attrs = s.at("attributes");
    if (!attrs.is_array()) s.fail("attributes", "must be an array");
    for (std::size_t i = 0; i < attrs.size(); ++i) {
      cfg.attributes.push_back(parse_attribute(attrs[i], i));
    }
    // Schema wants numerical, categorical, spatial; config order is free.
    std::stable_sort(cfg.attributes.begin(), cfg.attributes.end(),
                     [](const auto& a, const auto& b) {
                       return kind_rank(a.kind) < kind_rank(b.kind);
                     });
  }
  if (s.has("payload")) cfg.payload = s.strings("payload");
  if (s.has("on_bad_row")) {
    const std::string v = s.string("on_bad_row");
    if (v == "fail") {
      cfg.on_bad_row = BadRowPolicy::Fail;
    } else if (v == "skip") {
      cfg.on_bad_row = BadRowPolicy::Skip;
    } else {
      s.fail("on_bad_row", "must be 'fail' or 'skip'");
    }
  }
  if (s.has("seed")) cfg.seed = s.unsigned_int("seed");
  if (s.has("output_dir")) cfg.output_dir = resolve(base_dir, s.string("output_dir"));
  if (s.has("threads")) cfg.threads = static_cast<unsigned>(s.unsigned_int("threads"));
  if (s.has("verbosity")) {
    const std::string v = s.string("verbosity");
    if (v == "quiet") {
      cfg.verbosity = Verbosity::Quiet;
    } else if (v == "info") {
      cfg.verbosity = Verbosity::Info;
    } else if (v == "debug") {
      cfg.verbosity = Verbosity::Debug;
    } else {
      s.fail("verbosity", "must be 'quiet', 'info' or 'debug'");
    }
  }

  if (s.has("cluster")) {
    Section c(s.at("cluster"), "cluster");
    if (c.has("k")) cfg.cluster.k = c.unsigned_int("k");
    if (c.has("restarts")) cfg.cluster.restarts = c.unsigned_int("restarts");
    if (c.has("max_iterations")) cfg.cluster.max_iterations = c.unsigned_int("max_iterations");
    if (c.has("spatial_rule")) {
      try {
        cfg.cluster.spatial_rule = parse_spatial_rule(c.string("spatial_rule"));
      } catch (const ValidationError&) {
        c.fail("spatial_rule", "must be 'paper' or 'medoid'");
      }
    }
    if (c.has("lambda1")) cfg.cluster.lambda1 = c.number("lambda1");
    if (c.has("lambda2")) cfg.cluster.lambda2 = c.number("lambda2");
    c.reject_unknown();
  }

  if (s.has("select_k")) {
    Section g(s.at("select_k"), "select_k");
    if (g.has("k_min")) cfg.select_k.k_min = g.unsigned_int("k_min");
    if (g.has("k_max")) cfg.select_k.k_max = g.unsigned_int("k_max");
    if (g.has("B")) cfg.select_k.B = g.unsigned_int("B");
    if (g.has("sample_fraction")) cfg.select_k.sample_fraction = g.number("sample_fraction");
    if (g.has("strata")) cfg.select_k.strata = g.strings("strata");
    if (g.has("refit")) cfg.select_k.refit = g.boolean("refit");
    g.reject_unknown();
  }

  if (s.has("experience")) {
    Section e(s.at("experience"), "experience");
    auto& x = cfg.experience;
    if (e.has("assignments")) x.assignments = resolve(base_dir, e.string("assignments"));
    if (e.has("portfolio")) x.portfolio = resolve(base_dir, e.string("portfolio"));
    if (e.has("levels")) x.levels = e.numbers("levels");
    if (e.has("center")) {
      try {
        x.center = parse_interval_center(e.string("center"));
      } catch (const ValidationError&) {
        e.fail("center", "must be 'null' or 'observed'");
      }
    }
    if (e.has("face_amount")) x.columns.face_amount = e.string("face_amount");
    if (e.has("death_indicator")) x.columns.death_indicator = e.string("death_indicator");
    if (e.has("expected_rate")) x.columns.expected_rate = e.string("expected_rate");
    if (e.has("rate_table")) x.rate_table = resolve(base_dir, e.string("rate_table"));
    if (e.has("age_column")) x.age_column = e.string("age_column");
    if (e.has("sex_column")) x.sex_column = e.string("sex_column");
    if (e.has("smoker_column")) x.smoker_column = e.string("smoker_column");
    e.reject_unknown();
  }

  if (s.has("synth")) {
    Section y(s.at("synth"), "synth");
    if (y.has("n")) cfg.synth.n = y.unsigned_int("n");
    if (y.has("clusters")) cfg.synth.clusters = y.unsigned_int("clusters");
    if (y.has("separation")) cfg.synth.separation = y.number("separation");
    if (y.has("q")) cfg.synth.q = y.number("q");
    if (y.has("ae_multipliers")) cfg.synth.ae_multipliers = y.numbers("ae_multipliers");
    y.reject_unknown();
  }
  s.reject_unknown();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto base = std::filesystem::path(path).parent_path().string();
  return parse_run_config(ss.str(), base);
}

std::string to_json(const RunConfig& cfg, int indent) {
  json j;
  j["schema_version"] = cfg.schema_version;
  if (cfg.input) j["input"] = *cfg.input;
  if (cfg.id_column) j["id_column"] = *cfg.id_column;
  json attrs = json::array();
  for (const auto& a : cfg.attributes) attrs.push_back(attribute_json(a));
  j["attributes"] = attrs;
  j["payload"] = cfg.payload;
  j["on_bad_row"] = cfg.on_bad_row == BadRowPolicy::Fail ? "fail" : "skip";
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir;
  if (cfg.threads) j["threads"] = *cfg.threads;
  j["verbosity"] = verbosity_name(cfg.verbosity);

  json c{{"restarts", cfg.cluster.restarts},
         {"max_iterations", cfg.cluster.max_iterations},
         {"spatial_rule", to_string(cfg.cluster.spatial_rule)}};
  if (cfg.cluster.k) c["k"] = *cfg.cluster.k;
  if (cfg.cluster.lambda1) c["lambda1"] = *cfg.cluster.lambda1;
  if (cfg.cluster.lambda2) c["lambda2"] = *cfg.cluster.lambda2;
  j["cluster"] = c;

  j["select_k"] = json{{"k_min", cfg.select_k.k_min},
                       {"k_max", cfg.select_k.k_max},
                       {"B", cfg.select_k.B},
                       {"sample_fraction", cfg.select_k.sample_fraction},
                       {"strata", cfg.select_k.strata},
                       {"refit", cfg.select_k.refit}};

  const auto& x = cfg.experience;
  json e{{"levels", x.levels},
         {"center", to_string(x.center)},
         {"face_amount", x.columns.face_amount},
         {"death_indicator", x.columns.death_indicator},
         {"expected_rate", x.columns.expected_rate},
         {"age_column", x.age_column},
         {"sex_column", x.sex_column},
         {"smoker_column", x.smoker_column}};
  if (x.assignments) e["assignments"] = *x.assignments;
  if (x.portfolio) e["portfolio"] = *x.portfolio;
  if (x.rate_table) e["rate_table"] = *x.rate_table;
  j["experience"] = e;

  json y{{"n", cfg.synth.n},
         {"clusters", cfg.synth.clusters},
         {"separation", cfg.synth.separation},
         {"ae_multipliers", cfg.synth.ae_multipliers}};
  if (cfg.synth.q) y["q"] = *cfg.synth.q;
  j["synth"] = y;
  return j.dump(indent);
}

}  // namespace geoproto
