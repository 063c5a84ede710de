#include <algorithm>
#include <map>
#include <sstream>

#include "doctest.h"
#include "geoproto/csv.hpp"
#include "geoproto/error.hpp"
#include "geoproto/schema.hpp"
#include "support.hpp"

using namespace geoproto;

namespace {

CsvTable table_of(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}

std::vector<AttributeDescriptor> small_schema() {
  return {AttributeDescriptor::numerical("age"),
          AttributeDescriptor::numerical("face", Normalization::LogMinMax),
          AttributeDescriptor::categorical("plan"),
          AttributeDescriptor::spatial("loc", "lat", "lon")};
}

const char* kSmall =
    "id,age,face,plan,lat,lon,death\n"
    "a,30,1000,TERM,40.0,-75.0,0\n"
    "b,50,100000,PERM,35.0,-80.0,1\n"
    "c,40,10000,TERM,45.0,-90.0,0\n";

}  // namespace

TEST_CASE("csv parsing handles quotes, crlf and embedded newlines") {
  const auto t = table_of("# comment\r\nname,note\r\n\"x, y\",\"say \"\"hi\"\"\"\r\nz,\"two\nlines\"\n");
  REQUIRE(t.header == std::vector<std::string>{"name", "note"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][0] == "x, y");
  CHECK(t.rows[0][1] == "say \"hi\"");
  CHECK(t.rows[1][1] == "two\nlines");
}

TEST_CASE("csv rejects ragged rows") {
  CHECK_THROWS_AS(table_of("a,b\n1,2,3\n"), ValidationError);
}

TEST_CASE("csv escaping round-trips") {
  std::ostringstream out;
  write_csv_row(out, {"plain", "with,comma", "with \"quote\"", "multi\nline"});
  const auto t = table_of("h1,h2,h3,h4\n" + out.str());
  CHECK(t.rows[0] == std::vector<std::string>{"plain", "with,comma", "with \"quote\"", "multi\nline"});
}

TEST_CASE("double formatting round-trips exactly") {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.uniform(-1e6, 1e6) * std::pow(10.0, rng.uniform(-20, 20));
    CHECK(*parse_double(format_double(x)) == x);
  }
  CHECK_FALSE(parse_double("abc"));
  CHECK_FALSE(parse_double(""));
  CHECK_FALSE(parse_double("nan"));
  CHECK(*parse_double(" 2.5 ") == 2.5);
}

TEST_CASE("min-max and log-min-max normalization") {
  const std::vector<double> raw{10, 20, 30};
  const auto p = NormalizationParams::fit(raw, Normalization::MinMax);
  CHECK(normalize_value(10, p) == 0.0);
  CHECK(normalize_value(20, p) == doctest::Approx(0.5));
  CHECK(normalize_value(30, p) == 1.0);
  CHECK_THROWS_AS(normalize_value(40, p), ValidationError);
  CHECK(normalize_value(40, p, true) == 1.0);
  CHECK(normalize_value(0, p, true) == 0.0);

  const std::vector<double> faces{1e3, 1e4, 1e5};
  const auto lp = NormalizationParams::fit(faces, Normalization::LogMinMax);
  CHECK(normalize_value(1e4, lp) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(denormalize_value(0.5, lp) == doctest::Approx(1e4).epsilon(1e-12));
  const std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS_AS(NormalizationParams::fit(bad, Normalization::LogMinMax), ValidationError);

  const std::vector<double> flat{7, 7, 7};
  CHECK(normalize_value(7, NormalizationParams::fit(flat, Normalization::MinMax)) == 0.0);
}

TEST_CASE("schema validation") {
  using A = AttributeDescriptor;
  CHECK_THROWS_AS(Schema({A::numerical("a"), A::numerical("a")}), ValidationError);
  CHECK_THROWS_AS(Schema({A::spatial("p", "a", "b"), A::spatial("q", "c", "d")}), ValidationError);
  CHECK_THROWS_AS(Schema({A::categorical("c"), A::numerical("x")}), ValidationError);
  CHECK_THROWS_AS(Schema({A::categorical("c", {"x", "x"})}), ValidationError);
  const Schema s({A::numerical("x"), A::categorical("c", {"a"}), A::spatial("p", "la", "lo")});
  CHECK(s.numerical_count() == 1);
  CHECK(s.categorical_count() == 1);
  CHECK(s.has_spatial());
  CHECK(*s.categorical_index("c") == 0);
}

TEST_CASE("ingestion normalizes, sorts levels and keeps payload") {
  IngestOptions o;
  o.id_column = "id";
  o.payload_columns = {"death"};
  const auto r = ingest_table(table_of(kSmall), small_schema(), o);
  const Dataset& d = r.data;
  REQUIRE(d.size() == 3);
  CHECK(d.numerical(0)[0] == 0.0);
  CHECK(d.numerical(0)[1] == 1.0);
  CHECK(d.numerical(0)[2] == doctest::Approx(0.5));
  CHECK(d.numerical(1)[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.schema().categorical(0).levels == std::vector<std::string>{"PERM", "TERM"});
  CHECK(d.categorical(0)[0] == 1);
  CHECK(d.categorical(0)[1] == 0);
  CHECK(d.latitude()[0] == doctest::Approx(40.0 * kDegToRad));
  CHECK(d.ids()[1] == "b");
  CHECK(d.payload_column("death")[1] == "1");
  CHECK_THROWS_AS(d.payload_column("nope"), ValidationError);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& u = d.spatial_point(i).unit;
    CHECK(u[0] * u[0] + u[1] * u[1] + u[2] * u[2] == doctest::Approx(1.0));
  }
}

TEST_CASE("ingestion rejects bad rows or skips them on request") {
  const std::string bad = std::string(kSmall) + "d,,5000,TERM,40,-75,0\n" +
                          "e,30,-5,TERM,40,-75,0\n" + "f,30,500,,40,-75,0\n" +
                          "g,30,500,TERM,95,-75,0\n" + "h,30,500,TERM,40,-190,0\n";
  CHECK_THROWS_AS(ingest_table(table_of(bad), small_schema(), {}), ValidationError);
  IngestOptions skip;
  skip.on_bad_row = BadRowPolicy::Skip;
  const auto r = ingest_table(table_of(bad), small_schema(), skip);
  CHECK(r.data.size() == 3);
  CHECK(r.skipped_rows == 5);
  CHECK(r.diagnostics.size() == 5);
  // Default ids are 1-based row numbers of the surviving rows.
  CHECK(r.data.ids()[2] == "3");
}

TEST_CASE("declared levels are enforced and keep their order") {
  auto schema = small_schema();
  schema[2].levels = {"TERM", "PERM"};
  const auto r = ingest_table(table_of(kSmall), schema, {});
  CHECK(r.data.categorical(0)[0] == 0);
  schema[2].levels = {"TERM"};
  CHECK_THROWS_AS(ingest_table(table_of(kSmall), schema, {}), ValidationError);
}

TEST_CASE("missing column and empty input are errors") {
  auto schema = small_schema();
  schema.push_back(AttributeDescriptor::numerical("nope"));
  std::rotate(schema.begin(), schema.end() - 1, schema.end());
  CHECK_THROWS_WITH_AS(ingest_table(table_of(kSmall), schema, {}),
                       doctest::Contains("nope"), ValidationError);
  CHECK_THROWS_AS(ingest_table(table_of("id,age,face,plan,lat,lon\n"), small_schema(), {}),
                  ValidationError);
}

TEST_CASE("normalized numerical values stay in [0, 1]") {
  for (Seed seed = 0; seed < 20; ++seed) {
    const Dataset d = testing::random_dataset({.n = 200}, seed);
    for (std::size_t j = 0; j < d.schema().numerical_count(); ++j) {
      for (double v : d.numerical(j)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
}

TEST_CASE("stratified sample takes the rounded fraction of every stratum") {
  const Dataset d = testing::random_dataset({.n = 997, .levels = 4}, 11);
  const auto rows = stratified_sample_rows(d, 0.1, {"c0", "c1"}, 5);
  CHECK(std::is_sorted(rows.begin(), rows.end()));
  CHECK(std::adjacent_find(rows.begin(), rows.end()) == rows.end());
  std::map<std::pair<int, int>, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < d.size(); ++i) ++counts[{d.categorical(0)[i], d.categorical(1)[i]}].first;
  for (auto i : rows) ++counts[{d.categorical(0)[i], d.categorical(1)[i]}].second;
  for (const auto& [key, c] : counts) {
    CHECK(c.second == static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(c.first))));
  }
  CHECK(rows == stratified_sample_rows(d, 0.1, {"c0", "c1"}, 5));
  CHECK(rows != stratified_sample_rows(d, 0.1, {"c0", "c1"}, 6));
  CHECK_THROWS_AS(stratified_sample_rows(d, 0.1, {"x0"}, 5), ValidationError);
  CHECK_THROWS_AS(stratified_sample_rows(d, 0.0, {}, 5), ValidationError);
}

TEST_CASE("subsets reuse the parent's normalization") {
  const Dataset d = testing::random_dataset({.n = 50}, 2);
  const std::vector<std::size_t> rows{3, 7, 9};
  const Dataset s = d.subset(rows);
  REQUIRE(s.size() == 3);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(s.normalization()[j].min == d.normalization()[j].min);
    for (std::size_t r = 0; r < 3; ++r) CHECK(s.numerical(j)[r] == d.numerical(j)[rows[r]]);
  }
  CHECK(s.ids()[1] == d.ids()[7]);
}

TEST_CASE("inspect summary lists numerical ranges and level frequencies") {
  const auto r = ingest_table(table_of(kSmall), small_schema(), {});
  std::ostringstream out;
  write_inspect_csv(r.data, out);
  const auto t = table_of(out.str());
  REQUIRE(t.rows.size() == 2 + 2 + 2);
  CHECK(t.rows[0] == std::vector<std::string>{"age", "numerical", "", "3", "", "30", "40", "50"});
  CHECK(t.rows[2][2] == "PERM");
  CHECK(t.rows[3][3] == "2");
}
