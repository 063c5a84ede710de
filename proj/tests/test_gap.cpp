#include <algorithm>
#include <array>
#include <cmath>

#include "doctest.h"
#include "geoproto/error.hpp"
#include "geoproto/gap.hpp"
#include "geoproto/synth.hpp"
#include "support.hpp"

using namespace geoproto;

namespace {

GapRow row(std::size_t k, double gap, double s) {
  GapRow r;
  r.k = k;
  r.gap_k = gap;
  r.s_k = s;
  return r;
}

}  // namespace

TEST_CASE("within dispersion matches the pairwise definition") {
  const Dataset d = testing::random_dataset({.n = 120}, 5);
  const Weights w{0.3, 4e-7};
  Rng rng(1);
  std::vector<std::uint32_t> a(d.size());
  for (auto& c : a) c = static_cast<std::uint32_t>(rng.below(4));
  long double want = 0;
  for (std::uint32_t l = 0; l < 4; ++l) {
    long double pairs = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (a[i] != l) continue;
      ++n;
      for (std::size_t j = 0; j < d.size(); ++j) {
        if (a[j] == l) pairs += testing::oracle_distance(d.record(i), d.record(j), w.lambda1, w.lambda2);
      }
    }
    want += pairs / (2.0L * n);
  }
  CHECK(testing::relative_close(within_dispersion(d, a, 4, w), static_cast<double>(want), 1e-9));
  a[0] = 7;
  CHECK_THROWS_AS(within_dispersion(d, a, 4, w), ValidationError);
}

TEST_CASE("k selection takes the first k that holds against k + 1") {
  const std::vector<GapRow> rows{row(1, 0.1, 0.05), row(2, 0.5, 0.05), row(3, 0.9, 0.05),
                                 row(4, 0.92, 0.05), row(5, 0.7, 0.05)};
  CHECK(*choose_k(rows, 1, 4) == 3);
  CHECK(*choose_k(rows, 4, 4) == 4);
  const std::vector<GapRow> rising{row(1, 0.1, 0.01), row(2, 0.2, 0.01), row(3, 0.3, 0.01)};
  CHECK_FALSE(choose_k(rising, 1, 2).has_value());
  std::vector<GapRow> invalid = rows;
  invalid[2].valid = false;
  CHECK(*choose_k(invalid, 1, 4) == 4);
}

TEST_CASE("reference samples stay inside the observed box") {
  const Dataset d = testing::random_dataset({.n = 400, .levels = 4}, 3);
  const Dataset ref = sample_reference(d, 8);
  REQUIRE(ref.size() == d.size());
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(ref.normalization()[j].min == d.normalization()[j].min);
    for (double v : ref.numerical(j)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  const auto [lat_lo, lat_hi] = std::minmax_element(d.latitude().begin(), d.latitude().end());
  for (double v : ref.latitude()) {
    CHECK(v >= *lat_lo - 1e-12);
    CHECK(v <= *lat_hi + 1e-12);
  }
  const Dataset again = sample_reference(d, 8);
  CHECK(std::equal(ref.numerical(0).begin(), ref.numerical(0).end(), again.numerical(0).begin()));
}

TEST_CASE("reference categoricals follow the observed frequencies") {
  const Dataset d = testing::random_dataset({.n = 20000, .categorical = 1, .levels = 3}, 10);
  const Dataset ref = sample_reference(d, 4);
  std::array<double, 3> f{}, g{};
  for (auto v : d.categorical(0)) f[v] += 1.0 / 20000;
  for (auto v : ref.categorical(0)) g[v] += 1.0 / 20000;
  for (int l = 0; l < 3; ++l) CHECK(std::fabs(f[l] - g[l]) < 0.02);
}

TEST_CASE("gap selection recovers planted clusters and is reproducible") {
  SynthSpec spec;
  spec.n = 1500;
  spec.seed = 2;
  const Dataset d = synth_dataset(synth_portfolio(spec), false);
  GapConfig cfg;
  cfg.k_max = 5;
  cfg.B = 10;
  cfg.sample_fraction = 0.5;
  cfg.kproto.restarts = 5;
  cfg.seed = 3;
  cfg.threads = 1;
  const GapProfile a = gap_select(d, cfg);
  CHECK(a.rows.size() == 6);
  REQUIRE(a.chosen_k.has_value());
  CHECK(*a.chosen_k == 3);
  CHECK(a.sample_size == 750);
  for (const auto& r : a.rows) {
    CHECK(r.valid);
    CHECK(r.s_k == doctest::Approx(std::sqrt(1.1) * r.sd_k));
    CHECK(r.gap_k == doctest::Approx(r.expected_log_wk_ref - r.log_wk));
  }
  cfg.threads = 4;
  const GapProfile b = gap_select(d, cfg);
  REQUIRE(b.rows.size() == a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].log_wk == b.rows[i].log_wk);
    CHECK(a.rows[i].gap_k == b.rows[i].gap_k);
    CHECK(a.rows[i].sd_k == b.rows[i].sd_k);
  }
}

TEST_CASE("lambda overrides are used as given") {
  const Dataset d = testing::random_dataset({.n = 200}, 1);
  GapConfig cfg;
  cfg.k_max = 2;
  cfg.B = 2;
  cfg.sample_fraction = 1.0;
  cfg.kproto.restarts = 1;
  cfg.lambda1 = 0.7;
  cfg.lambda2 = 1e-6;
  const GapProfile p = gap_select(d, cfg);
  CHECK(p.weights.lambda1 == 0.7);
  CHECK(p.weights.lambda2 == 1e-6);
}

TEST_CASE("gap configuration is validated") {
  const Dataset d = testing::random_dataset({.n = 50}, 1);
  GapConfig cfg;
  cfg.k_min = 3;
  cfg.k_max = 2;
  CHECK_THROWS_AS(gap_select(d, cfg), ValidationError);
  cfg = {};
  cfg.B = 0;
  CHECK_THROWS_AS(gap_select(d, cfg), ValidationError);
  cfg = {};
  cfg.sample_fraction = 1.5;
  CHECK_THROWS_AS(gap_select(d, cfg), ValidationError);
}
