#include <doctest.h>

#include <cmath>
#include <set>

#include "blockmask/error.hpp"
#include "blockmask/msp.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace blockmask;

namespace {

MspConfig config(std::uint64_t n, double p, std::uint64_t seed, std::size_t in_flight = 1) {
  MspConfig cfg;
  cfg.iterations = n;
  cfg.expected_masks.reset();
  cfg.mask_probability = p;
  cfg.seed = seed;
  cfg.max_in_flight = in_flight;
  return cfg;
}

// Record where block `hot` carries delta `value` whenever it is masked.
PerturbationRecord separable_record(std::size_t n, std::size_t blocks, std::size_t hot, double value) {
  PerturbationRecord rec;
  rec.document_id = "sep";
  rec.labels = {"l"};
  rec.token_count = blocks;
  rec.block_size = 1;
  rec.mask_probability = 0.3;
  rec.baseline = {0.5};
  rec.deltas = Matrix(n, 1);
  rec.masks = BitMatrix(n, blocks);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = mask_pattern(5, i, blocks, 0.3);
    for (std::size_t b = 0; b < blocks; ++b)
      if (row[b]) rec.masks.set(i, b);
    rec.deltas(i, 0) = row[hot] ? value : 0.0;
  }
  return rec;
}

}  // namespace

TEST_CASE("iteration budget from expected masks") {
  MspConfig cfg;
  CHECK(resolve_iterations(cfg) == 1000);
  cfg.mask_probability = 0.3;
  CHECK(resolve_iterations(cfg) == 334);
  cfg.mask_probability = 0.5;
  CHECK(resolve_iterations(cfg) == 200);
  cfg.mask_probability = 1.0;
  CHECK_THROWS_AS(resolve_iterations(cfg), InvalidArgument);
  cfg.mask_probability = 0.0;
  CHECK_THROWS_AS(resolve_iterations(cfg), InvalidArgument);
  CHECK(ceil_count(100.0 / 0.1) == 1000);
  CHECK(ceil_count(100.0 / (0.1 * 0.1)) == 10000);
  CHECK(ceil_count(2.5) == 3);
}

TEST_CASE("mask pattern is a function of (seed, iteration) only") {
  CHECK(mask_pattern(3, 17, 40, 0.2) == mask_pattern(3, 17, 40, 0.2));
  CHECK(mask_pattern(3, 17, 40, 0.2) != mask_pattern(3, 18, 40, 0.2));
  CHECK(mask_pattern(3, 17, 40, 0.2) != mask_pattern(4, 17, 40, 0.2));
}

TEST_CASE("constant backend gives zero deltas, zero scores, lowest-index top-k") {
  CountingBackend backend(std::make_shared<ConstantBackend>(std::vector<std::string>{"a", "b"}, 0.4));
  const auto doc = fixture::keyword_doc(12, 10, {});
  const auto rec = run_msp(doc, backend, config(200, 0.1, 1));
  CHECK(backend.count() == 201);
  for (std::size_t i = 0; i < rec.iterations(); ++i)
    for (std::size_t l = 0; l < 2; ++l) CHECK(rec.deltas(i, l) == 0.0);
  const auto scores = block_importance(rec);
  for (const auto& s : scores)
    if (s.score) CHECK(*s.score == 0.0);
  CHECK(top_k(scores, 3, 0).blocks == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("exactly N+1 evaluations regardless of length and batching") {
  for (std::size_t length : {5u, 100u, 1000u}) {
    for (std::size_t batch : {1u, 7u, 32u}) {
      CountingBackend backend(std::make_shared<ConstantBackend>(std::vector<std::string>{"a"}, 0.4));
      Document doc{"d", TokenSequence(length, "t")};
      auto cfg = config(123, 0.1, 2, 3);
      cfg.batch_size = batch;
      run_msp(doc, backend, cfg);
      CHECK(backend.count() == 124);
    }
  }
}

TEST_CASE("per-block mask counts follow Binomial(N, P)") {
  auto model = fixture::single_keyword_model();
  const auto doc = fixture::keyword_doc(50, 10, {{7, "kw"}});
  const auto rec = run_msp(doc, model, config(1000, 0.1, 11));
  for (std::size_t b = 0; b < rec.block_count(); ++b) {
    std::size_t masked = 0;
    for (std::size_t i = 0; i < rec.iterations(); ++i) masked += rec.masks.test(i, b);
    CHECK(oracle::within_3_sigma(static_cast<double>(masked), 1000, 0.1));
  }
}

TEST_CASE("record is identical across in-flight limits and batch sizes") {
  auto model = fixture::single_keyword_model();
  const auto doc = fixture::keyword_doc(30, 10, {{4, "kw"}});
  const auto a = run_msp(doc, model, config(500, 0.1, 9, 1));
  auto cfg = config(500, 0.1, 9, 8);
  cfg.batch_size = 5;
  const auto b = run_msp(doc, model, cfg);
  CHECK(a == b);
}

TEST_CASE("separable construction scores the hot block at its delta") {
  const auto rec = separable_record(2000, 6, 2, 0.4);
  const auto scores = block_importance(rec);
  REQUIRE(scores[2].score);
  CHECK(*scores[2].score == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(*scores[2].masked_mean == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(scores[2].masked_count + scores[2].unmasked_count == 2000);
  CHECK(top_k(scores, 1, 0).blocks == std::vector<std::size_t>{2});
}

TEST_CASE("planted keyword block matches its closed-form importance") {
  auto model = fixture::single_keyword_model();
  const auto doc = fixture::keyword_doc(50, 10, {{7, "kw"}});
  const auto rec = run_msp(doc, model, config(1000, 0.1, 42));
  const auto scores = block_importance(rec);
  // Only block 7 changes the target label: delta = D when masked, 0 otherwise.
  const double d = oracle::logistic(2.0) - oracle::logistic(-2.0);
  for (std::size_t i = 0; i < rec.iterations(); ++i) CHECK(rec.deltas(i, 0) == doctest::Approx(rec.masks.test(i, 7) ? d : 0.0));
  CHECK(*scores[7].score == doctest::Approx(d).epsilon(1e-12));
  CHECK(top_k(scores, 1, 0).blocks == std::vector<std::size_t>{7});
  // Null blocks score only the chance correlation of their masks with block 7's.
  for (std::size_t b = 0; b < 50; ++b) {
    if (b == 7) continue;
    double in = 0, out = 0, n_in = 0, n_out = 0;
    for (std::size_t i = 0; i < rec.iterations(); ++i) {
      const double delta = rec.masks.test(i, 7) ? d : 0.0;
      (rec.masks.test(i, b) ? in : out) += delta;
      (rec.masks.test(i, b) ? n_in : n_out) += 1;
    }
    CHECK(*scores[b].score == doctest::Approx(in / n_in - out / n_out).epsilon(1e-9));
    CHECK(*scores[b].score < *scores[7].score);
  }
}

TEST_CASE("undefined scores are flagged, never fabricated") {
  PerturbationRecord rec;
  rec.labels = {"l"};
  rec.block_size = 1;
  rec.token_count = 2;
  rec.mask_probability = 0.5;
  rec.baseline = {0.5};
  rec.deltas = Matrix(3, 1, 0.1);
  rec.masks = BitMatrix(3, 2);
  for (std::size_t i = 0; i < 3; ++i) rec.masks.set(i, 1);  // block 0 never, block 1 always masked
  const auto scores = block_importance(rec);
  CHECK_FALSE(scores[0].score);
  CHECK_FALSE(scores[0].masked_mean);
  CHECK_FALSE(scores[1].score);
  CHECK(scores[1].masked_mean);
  const auto t = top_k(scores, 2, 0);
  CHECK(t.blocks.empty());
  CHECK(t.truncated);
}

TEST_CASE("top_k ordering, ties and scale invariance") {
  auto make = [](std::vector<double> v) {
    std::vector<BlockScore> s;
    for (std::size_t i = 0; i < v.size(); ++i) s.push_back(BlockScore{0, i, v[i], v[i], 1, 1});
    return s;
  };
  CHECK(top_k(make({0.1, 0.9, 0.5}), 2, 0).blocks == std::vector<std::size_t>{1, 2});
  CHECK(top_k(make({0.0, 0.1, 0.5, 0.2, 0.5}), 1, 0).blocks == std::vector<std::size_t>{2});
  const auto t = top_k(make({0.3, 0.2}), 5, 0);
  CHECK(t.blocks.size() == 2);
  CHECK(t.truncated);

  auto model = fixture::single_keyword_model();
  const auto doc = fixture::keyword_doc(20, 10, {{3, "kw"}, {11, "unrelated"}});
  auto rec = run_msp(doc, model, config(400, 0.2, 4));
  const auto before = top_k(block_importance(rec), 5, 0).blocks;
  for (std::size_t i = 0; i < rec.iterations(); ++i) rec.deltas(i, 0) *= 3.7;
  CHECK(top_k(block_importance(rec), 5, 0).blocks == before);
}

TEST_CASE("random blocks") {
  auto all = random_blocks(10, 10, 1);
  CHECK(std::set<std::size_t>(all.begin(), all.end()).size() == 10);
  CHECK(random_blocks(100, 5, 7) == random_blocks(100, 5, 7));
  // Two 5-subsets of 100 collide with probability 1/C(100,5) < 1e-7.
  CHECK(random_blocks(100, 5, 7) != random_blocks(100, 5, 8));
  CHECK_THROWS_AS(random_blocks(3, 5, 1), InvalidArgument);
}

TEST_CASE("documents shorter than a block form one maskable block") {
  auto model = fixture::single_keyword_model();
  Document doc{"short", {"kw", "x", "y"}};
  const auto rec = run_msp(doc, model, config(200, 0.5, 1));
  CHECK(rec.block_count() == 1);
  const auto s = block_importance(rec);
  CHECK(*s[0].score == doctest::Approx(oracle::logistic(2.0) - oracle::logistic(-2.0)));
}

TEST_CASE("pairs: co-mask floor, one pair for two blocks, distance") {
  auto model = fixture::single_keyword_model();
  const auto doc = fixture::keyword_doc(2, 10, {{0, "kw"}});
  const auto rec = run_msp(doc, model, config(1000, 0.1, 3));
  CHECK_THROWS_AS(pair_importance(rec, 10.0 + 1e-6), InvalidArgument);  // N P^2 = 10
  const auto pairs = pair_importance(rec, 10.0);
  REQUIRE(pairs.size() == 2);  // one pair per label
  CHECK(pairs[0].first == 0);
  CHECK(pairs[0].second == 1);
  CHECK(pairs[0].distance == 10);
}

TEST_CASE("pair estimators agree with the four-state enumeration") {
  SUBCASE("additive model in its near-linear regime") {
    auto model = fixture::additive_model(0.3);
    const auto doc = fixture::keyword_doc(20, 10, {{3, "alpha"}, {12, "beta"}});
    const auto rec = run_msp(doc, model, config(10000, 0.1, 8));
    const double base = oracle::logistic(0.6);
    const auto e = oracle::enumerate_two_blocks(
        [&](bool ma, bool mb) { return base - oracle::logistic(0.3 * !ma + 0.3 * !mb); }, 0.1);
    CHECK(std::abs(e.interaction) < 0.05);
    const auto pairs = pair_importance(rec);
    const auto& p = *std::find_if(pairs.begin(), pairs.end(), [](auto& x) { return x.first == 3 && x.second == 12; });
    CHECK(std::abs(*p.interaction) < 0.05);
    CHECK(std::abs(*p.interaction - e.interaction) < 0.02);
  }
  SUBCASE("AND gate: sign of the interaction depends on P") {
    auto model = fixture::and_gate_model();
    const auto doc = fixture::keyword_doc(20, 10, {{3, "alpha"}, {12, "beta"}});
    const double on = oracle::logistic(3.0), off = oracle::logistic(-3.0);
    for (double p : {0.1, 0.75}) {
      const auto rec = run_msp(doc, model, config(10000, p, 21));
      const auto e = oracle::enumerate_two_blocks([&](bool ma, bool mb) { return (ma || mb) ? on - off : 0.0; }, p);
      const auto pairs = pair_importance(rec);
      const auto& got =
          *std::find_if(pairs.begin(), pairs.end(), [](auto& x) { return x.first == 3 && x.second == 12; });
      CAPTURE(p);
      CHECK(e.interaction == doctest::Approx((on - off) * (2 * p - 1)));
      // sampling error of a difference of conditional means at N=10^4
      CHECK(std::abs(*got.interaction - e.interaction) < 0.05);
      CHECK(*got.score == doctest::Approx(on - off));
    }
  }
}

TEST_CASE("partial results carry the completed count") {
  struct Flaky final : ClassifierBackend {
    std::vector<std::string> l{"a"};
    std::string m = "[MASK]";
    std::size_t calls = 0;
    const std::vector<std::string>& labels() const override { return l; }
    const std::string& mask_token() const override { return m; }
    bool concurrent() const override { return false; }
    Matrix predict_batch(std::span<const TokenSequence> batch) override {
      if (++calls > 3) throw BackendError("model crashed");
      return Matrix(batch.size(), 1, 0.5);
    }
  } flaky;
  const auto doc = fixture::keyword_doc(5, 10, {});
  auto cfg = config(100, 0.1, 1);
  cfg.batch_size = 10;
  try {
    run_msp(doc, flaky, cfg);
    FAIL("expected PartialResultsError");
  } catch (const PartialResultsError& e) {
    CHECK(e.completed() == 20);  // baseline call, then two batches of 10
    CHECK(e.kind() == ErrorKind::kBackend);
  }
}

TEST_CASE("record JSON round trip") {
  auto model = fixture::single_keyword_model();
  const auto doc = fixture::keyword_doc(9, 10, {{2, "kw"}});
  const auto rec = run_msp(doc, model, config(64, 0.3, 5));
  const auto back = record_from_json(nlohmann::json::parse(record_to_json(rec).dump()));
  CHECK(back == rec);
}
