#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "geoproto/cli.hpp"
#include "geoproto/config.hpp"
#include "geoproto/csv.hpp"
#include "geoproto/error.hpp"
#include "geoproto/io.hpp"

using namespace geoproto;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("geoproto_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 1") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"dist", "1", "2"}).code == 1);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("dist prints meters") {
  const auto r = cli({"dist", "0", "0", "0", "1"});
  CHECK(r.code == 0);
  CHECK(std::stod(r.out) == doctest::Approx(110946.2576).epsilon(1e-9));
  CHECK(cli({"dist", "95", "0", "0", "1"}).code == 1);
}

TEST_CASE("missing k names the key") {
  TempDir dir;
  REQUIRE(cli({"synth", "--n", "200", "-o", dir.path.string(), "-q"}).code == 0);
  const auto r = cli({"--config", dir / "config.json", "cluster", "--input", dir / "portfolio.csv"});
  CHECK(r.code == 0);
  std::string cfg = slurp(dir / "config.json");
  const auto pos = cfg.find("\"k\": 3,");
  REQUIRE(pos != std::string::npos);
  cfg.erase(pos, 7);
  std::ofstream(dir / "nok.json") << cfg;
  const auto missing = cli({"--config", dir / "nok.json", "cluster"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("cluster.k") != std::string::npos);
  CHECK(missing.err.find("--k") != std::string::npos);
}

TEST_CASE("config errors are validation errors") {
  TempDir dir;
  std::ofstream(dir / "unknown.json") << R"({"schema_version": 1, "cluster": {"kk": 3}})";
  auto r = cli({"--config", dir / "unknown.json", "cluster"});
  CHECK(r.code == 1);
  CHECK(r.err.find("cluster.kk") != std::string::npos);
  std::ofstream(dir / "version.json") << R"({"schema_version": 2})";
  r = cli({"--config", dir / "version.json", "cluster", "--k", "2"});
  CHECK(r.code == 1);
  CHECK(r.err.find("schema_version") != std::string::npos);
  std::ofstream(dir / "broken.json") << R"({"schema_version": 1,)";
  CHECK(cli({"--config", dir / "broken.json", "lambda"}).code == 1);
  std::ofstream(dir / "type.json") << R"({"schema_version": 1, "seed": "seven"})";
  r = cli({"--config", dir / "type.json", "lambda"});
  CHECK(r.code == 1);
  CHECK(r.err.find("seed") != std::string::npos);
  CHECK(cli({"--config", dir / "absent.json", "lambda"}).code == 1);
}

TEST_CASE("config json round-trips") {
  RunConfig c;
  c.input = "/data/p.csv";
  c.attributes = {AttributeDescriptor::numerical("a", Normalization::LogMinMax),
                  AttributeDescriptor::categorical("b", {"x", "y"}),
                  AttributeDescriptor::spatial("s", "la", "lo")};
  c.seed = 12345678901234ULL;
  c.cluster.k = 4;
  c.cluster.lambda2 = 1e-7;
  c.select_k.strata = {"b"};
  c.experience.levels = {0.8};
  c.synth.q = 0.01;
  const RunConfig back = parse_run_config(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.attributes[0].normalization == Normalization::LogMinMax);
}

TEST_CASE("config attribute order is free and relative paths follow the file") {
  const auto c = parse_run_config(R"({"schema_version": 1, "input": "in.csv", "attributes": [
      {"name": "g", "kind": "categorical"},
      {"name": "loc", "kind": "spatial", "latitude": "lat", "longitude": "lon"},
      {"name": "age", "kind": "numerical"}]})",
                                  "/base");
  CHECK(*c.input == "/base/in.csv");
  CHECK(c.attributes[0].name == "age");
  CHECK(c.attributes[2].name == "loc");
  CHECK_THROWS_AS(parse_run_config(R"({"schema_version": 1, "attributes": [{"name": "x", "kind": "blob"}]})"),
                  ValidationError);
}

TEST_CASE("full pipeline on the bundled generator") {
  TempDir dir;
  const std::string cfg = dir / "config.json";
  REQUIRE(cli({"synth", "--n", "600", "--seed", "5", "-o", dir.path.string(), "-q"}).code == 0);
  for (auto f : {"portfolio.csv", "truth.csv", "config.json", "run-manifest.json"}) {
    CHECK(fs::exists(dir.path / f));
  }
  const auto inspect = cli({"--config", cfg, "inspect", "-q"});
  CHECK(inspect.code == 0);
  CHECK(inspect.out.find("issue_age,numerical") != std::string::npos);
  CHECK(cli({"--config", cfg, "lambda", "-q"}).code == 0);
  CHECK(cli({"--config", cfg, "cluster", "--restarts", "3", "-q"}).code == 0);
  const std::string first = slurp(dir / "assignments.csv");
  CHECK(cli({"--config", cfg, "cluster", "--restarts", "3", "-q", "--threads", "3"}).code == 0);
  CHECK(slurp(dir / "assignments.csv") == first);
  CHECK(first.find("# seed=5 config_hash=") != std::string::npos);
  const auto sel = cli({"--config", cfg, "select-k", "--k-max", "4", "--B", "4", "--restarts", "2",
                        "--sample-fraction", "0.5", "-q"});
  CHECK(sel.code == 0);
  CHECK(sel.out.rfind("chosen_k=", 0) == 0);
  CHECK(cli({"--config", cfg, "experience", "--levels", "0.8,0.9", "-q"}).code == 0);
  for (auto f : {"lambda.json", "model.json", "gap_profile.csv", "selection.json",
                 "experience.csv", "experience.json"}) {
    CHECK(fs::exists(dir.path / f));
  }
  const std::string manifest = slurp(dir / "run-manifest.json");
  for (auto cmd : {"synth", "lambda", "cluster", "select-k", "experience"}) {
    CHECK(manifest.find(std::string("\"") + cmd + "\"") != std::string::npos);
  }
  const CsvTable report = read_csv(dir / "experience.csv");
  CHECK(report.header[6] == "lower_80");
  for (const auto& entry : fs::directory_iterator(dir.path)) {
    CHECK(entry.path().string().find(".tmp.") == std::string::npos);
  }
}

TEST_CASE("zero expected deaths is a runtime error") {
  TempDir dir;
  REQUIRE(cli({"synth", "--n", "100", "--q", "0", "-o", dir.path.string(), "-q"}).code == 0);
  const CsvTable p = read_csv(dir / "portfolio.csv");
  const auto death = p.require_column("death_indicator");
  for (const auto& row : p.rows) CHECK(row[death] == "0");
  const std::string cfg = dir / "config.json";
  REQUIRE(cli({"--config", cfg, "cluster", "--restarts", "1", "-q"}).code == 0);
  const auto r = cli({"--config", cfg, "experience", "-q"});
  CHECK(r.code == 2);
  CHECK(r.err.find("cluster") != std::string::npos);
}

TEST_CASE("experience joins a rate table") {
  TempDir dir;
  std::ofstream(dir / "p.csv") << "id,age,sex,smoker,fa,dead\n1,40,M,N,1000,1\n2,41,F,Y,2000,0\n";
  std::ofstream(dir / "a.csv") << "id,cluster\n1,0\n2,0\n";
  std::ofstream(dir / "rates.csv") << "age,sex,smoker,q\n40,M,N,0.5\n41,F,Y,0.25\n";
  std::ofstream(dir / "cfg.json") << R"({"schema_version": 1, "id_column": "id",
    "experience": {"assignments": "a.csv", "portfolio": "p.csv", "rate_table": "rates.csv",
      "face_amount": "fa", "death_indicator": "dead", "age_column": "age", "sex_column": "sex",
      "smoker_column": "smoker", "levels": [0.95]}, "output_dir": "."})";
  const auto r = cli({"--config", dir / "cfg.json", "experience", "-q"});
  REQUIRE(r.code == 0);
  const CsvTable t = read_csv(dir / "experience.csv");
  CHECK(std::stod(t.rows[0][t.require_column("expected")]) == 1000.0);
  CHECK(std::stod(t.rows[0][t.require_column("ratio")]) == 1.0);
}

TEST_CASE("hash and atomic write helpers") {
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
  TempDir dir;
  atomic_write(dir / "sub/x.txt", "hello");
  CHECK(slurp(dir / "sub/x.txt") == "hello");
  atomic_write(dir / "sub/x.txt", "bye");
  CHECK(slurp(dir / "sub/x.txt") == "bye");
}
