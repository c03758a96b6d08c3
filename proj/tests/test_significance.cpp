#include <doctest.h>

#include <algorithm>

#include "blockmask/error.hpp"
#include "blockmask/rng.hpp"
#include "blockmask/significance.hpp"

using namespace blockmask;

namespace {

PerturbationRecord record_from(const std::vector<std::vector<bool>>& masks, const std::vector<double>& deltas) {
  PerturbationRecord rec;
  rec.labels = {"l"};
  rec.block_size = 1;
  rec.token_count = masks.front().size();
  rec.mask_probability = 0.1;
  rec.baseline = {0.5};
  rec.deltas = Matrix(masks.size(), 1);
  rec.masks = BitMatrix(masks.size(), masks.front().size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    rec.deltas(i, 0) = deltas[i];
    for (std::size_t b = 0; b < masks[i].size(); ++b)
      if (masks[i][b]) rec.masks.set(i, b);
  }
  return rec;
}

// Block 0 masked on iterations 0..9 (delta 0.4), nothing else happens.
PerturbationRecord hot_block_record() {
  std::vector<std::vector<bool>> masks(100, std::vector<bool>(3, false));
  std::vector<double> deltas(100, 0.0);
  for (std::size_t i = 0; i < 10; ++i) {
    masks[i][0] = true;
    deltas[i] = 0.4;
  }
  for (std::size_t i = 10; i < 40; ++i) masks[i][1 + i % 2] = true;
  return record_from(masks, deltas);
}

}  // namespace

TEST_CASE("hot block gets a small corrected p, matching a brute-force bootstrap") {
  const auto rec = hot_block_record();
  BootstrapConfig cfg;
  cfg.seed = 77;
  const auto res = p_values(rec, cfg);
  REQUIRE(res[0].p_value);
  CHECK(*res[0].p_value <= 0.01);
  CHECK(*res[0].observed == doctest::Approx(0.4));
  CHECK(res[0].masked_count == 10);

  // Brute force with the same stream address: means of 10 draws from all
  // 100 deltas, counting those >= 0.4.
  CounterRng rng(77, RngDomain::kBootstrap, 0, 0);
  std::size_t hits = 0;
  for (std::size_t it = 0; it < 1000; ++it) {
    double sum = 0;
    for (std::size_t k = 0; k < 10; ++k) sum += rec.deltas(rng.next_below(100), 0);
    hits += sum / 10 >= 0.4;
  }
  CHECK(*res[0].p_value == doctest::Approx((hits + 1.0) / 1001.0));
}

TEST_CASE("all-zero deltas give p = 1 for every block") {
  std::vector<std::vector<bool>> masks(200, std::vector<bool>(4, false));
  for (std::size_t i = 0; i < 200; ++i) masks[i][i % 4] = true;
  const auto rec = record_from(masks, std::vector<double>(200, 0.0));
  for (const auto& r : p_values(rec, {})) CHECK(*r.p_value == 1.0);
}

TEST_CASE("never-masked blocks have no p-value") {
  std::vector<std::vector<bool>> masks(50, std::vector<bool>(2, false));
  for (auto& m : masks) m[0] = true;
  const auto rec = record_from(masks, std::vector<double>(50, 0.1));
  const auto res = p_values(rec, {});
  CHECK(res[0].p_value);
  CHECK_FALSE(res[1].p_value);
}

TEST_CASE("corrected p is bounded, monotone and deterministic") {
  std::vector<double> pool;
  CounterRng noise(3, RngDomain::kMaskPattern, 0);
  for (int i = 0; i < 500; ++i) pool.push_back(noise.next_double() - 0.5);
  double previous = 1.0;
  for (double observed = -0.5; observed <= 0.5; observed += 0.05) {
    const double p = corrected_p_value(pool, observed, 20, 500, 9, 0, 0);
    CHECK(p >= 1.0 / 501.0);
    CHECK(p <= 1.0);
    CHECK(p <= previous);
    previous = p;
    CHECK(p == corrected_p_value(pool, observed, 20, 500, 9, 0, 0));
  }
}

TEST_CASE("results do not depend on worker count") {
  const auto rec = hot_block_record();
  BootstrapConfig one, many;
  many.max_in_flight = 8;
  CHECK(p_values(rec, one) == p_values(rec, many));
  CHECK(p_values(rec, one, SignificanceMode::kLiteral) == p_values(rec, many, SignificanceMode::kLiteral));
}

TEST_CASE("literal mode follows the printed inequality") {
  const auto rec = hot_block_record();
  const auto res = p_values(rec, {}, SignificanceMode::kLiteral);
  // The hot block's own deltas are all 0.4 > grand mean 0.04: every bootstrap
  // mean exceeds it, so the printed test reports p = 1.
  CHECK(*res[0].p_value == 1.0);
  CHECK(*res[0].observed == doctest::Approx(0.04));
  CHECK(res[0].mode == SignificanceMode::kLiteral);
  // Blocks 1 and 2 only ever see delta 0 < 0.04.
  CHECK(*res[1].p_value == 0.0);
}

TEST_CASE("bootstrap configuration is validated") {
  const auto rec = hot_block_record();
  BootstrapConfig cfg;
  cfg.iterations = 99;
  CHECK_THROWS_AS(p_values(rec, cfg), InvalidArgument);
  cfg.iterations = 100;
  cfg.sample_size = 0;
  CHECK_THROWS_AS(p_values(rec, cfg), InvalidArgument);
  CHECK(significance_mode_from_string("literal") == SignificanceMode::kLiteral);
  CHECK_THROWS_AS(significance_mode_from_string("x"), InvalidArgument);
}
