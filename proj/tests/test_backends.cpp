#include <doctest.h>

#include <sstream>
#include <thread>

#include "blockmask/backends.hpp"
#include "blockmask/error.hpp"
#include "fake_server.hpp"
#include "oracles.hpp"

using namespace blockmask;

namespace {

KeywordLogitModel amiodarone_model() {
  return KeywordLogitModel({"afib", "chf"}, {-2.0, -1.0},
                           {{{"amiodarone", 4.0}}, {{"furosemide", 3.0}, {"edema", 1.0}}});
}

Matrix predict_one(ClassifierBackend& b, TokenSequence seq) {
  std::vector<TokenSequence> batch{std::move(seq)};
  return b.predict_batch(batch);
}

}  // namespace

TEST_CASE("constant backend ignores input") {
  ConstantBackend b({"a", "b"}, 0.3);
  const auto m = predict_one(b, {"x", "y"});
  CHECK(m(0, 0) == 0.3);
  CHECK(m(0, 1) == 0.3);
  CHECK_THROWS_AS(ConstantBackend({"a"}, 1.2), InvalidArgument);
}

TEST_CASE("keyword model is a logistic of present token weights") {
  auto model = amiodarone_model();
  auto p = model.predict({"started", "amiodarone", "today"});
  CHECK(p[0] == doctest::Approx(oracle::logistic(2.0)).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.8808).epsilon(1e-4));
  p = model.predict({"started", "[MASK]", "today"});
  CHECK(p[0] == doctest::Approx(oracle::logistic(-2.0)).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.1192).epsilon(1e-4));
  // repeated tokens count once
  p = model.predict({"edema", "edema", "furosemide"});
  CHECK(p[1] == doctest::Approx(oracle::logistic(3.0)).epsilon(1e-12));
  // all-mask and empty input fall back to the bias
  CHECK(model.predict({"[MASK]", "[MASK]"})[1] == doctest::Approx(oracle::logistic(-1.0)));
  CHECK(model.predict({})[0] == doctest::Approx(oracle::logistic(-2.0)));
}

TEST_CASE("interaction terms fire only when every token is present") {
  KeywordLogitModel m({"and"}, {-3.0}, {{}}, {InteractionTerm{0, {"a", "b"}, 6.0}});
  CHECK(m.predict({"a", "b"})[0] == doctest::Approx(oracle::logistic(3.0)));
  CHECK(m.predict({"a", "[MASK]"})[0] == doctest::Approx(oracle::logistic(-3.0)));
  CHECK(m.predict({"b"})[0] == doctest::Approx(oracle::logistic(-3.0)));
}

TEST_CASE("weights file round trip") {
  std::istringstream in(R"({"labels":["x","y"],"bias":[0.5,-1],"weights":[{"k":2},{}],
    "interactions":[{"label":1,"tokens":["p","q"],"weight":1.5}],"mask_token":"<m>"})");
  auto m = load_keyword_model(in);
  CHECK(m.labels() == std::vector<std::string>{"x", "y"});
  CHECK(m.mask_token() == "<m>");
  const auto p = m.predict({"k", "p", "q"});
  CHECK(p[0] == doctest::Approx(oracle::logistic(2.5)));
  CHECK(p[1] == doctest::Approx(oracle::logistic(0.5)));

  std::istringstream bad(R"({"labels":["x"],"bias":[0.5,1],"weights":[{}]})");
  CHECK_THROWS_AS(load_keyword_model(bad), InputError);
  std::istringstream dup(R"({"labels":["x","x"],"bias":[0,0],"weights":[{},{}]})");
  CHECK_THROWS_AS(load_keyword_model(dup), InputError);
}

TEST_CASE("counting backend counts sequences, also under concurrency") {
  auto counter = CountingBackend(std::make_shared<ConstantBackend>(std::vector<std::string>{"a"}, 0.5));
  CHECK(counter.count() == 0);
  std::vector<TokenSequence> seven(7, TokenSequence{"t"});
  counter.predict_batch(seven);
  CHECK(counter.count() == 7);
  counter.reset();
  {
    std::vector<std::jthread> threads;
    for (int t = 0; t < 8; ++t)
      threads.emplace_back([&] {
        for (int i = 0; i < 100; ++i) counter.predict_batch(seven);
      });
  }
  CHECK(counter.count() == 8 * 100 * 7);
}

TEST_CASE("label mismatch is a hard error") {
  CHECK_NOTHROW(require_same_labels({"a", "b"}, {"a", "b"}));
  CHECK_THROWS_AS(require_same_labels({"a", "b"}, {"b", "a"}), LabelMismatchError);
  CHECK_THROWS_AS(require_same_labels({"a"}, {"a", "b"}), LabelMismatchError);
}

TEST_CASE("remote backend agrees with the in-process model") {
  FakeServer server(amiodarone_model());
  RemoteBackendConfig cfg;
  cfg.base_url = server.url();
  cfg.batch_size = 3;
  RemoteBackend remote(cfg);
  auto local = amiodarone_model();
  CHECK(remote.labels() == local.labels());
  CHECK(remote.mask_token() == "[MASK]");

  std::vector<TokenSequence> batch{{"amiodarone"}, {"edema", "x"}, {"[MASK]"}, {"furosemide", "amiodarone"},
                                   {"q"},          {"r"},           {"s"}};
  const auto r = remote.predict_batch(batch);
  const auto l = local.predict_batch(batch);
  REQUIRE(r.rows() == batch.size());
  for (std::size_t i = 0; i < r.rows(); ++i)
    for (std::size_t j = 0; j < r.cols(); ++j) CHECK(std::abs(r(i, j) - l(i, j)) <= 1e-9);
  CHECK(server.requests() == 3);  // 7 instances in batches of 3
  CHECK(server.max_batch() == 3);
}

TEST_CASE("remote backend error taxonomy") {
  FakeServer server(amiodarone_model());
  RemoteBackendConfig cfg;
  cfg.base_url = server.url();
  RemoteBackend remote(cfg);
  std::vector<TokenSequence> batch{{"a"}, {"b"}};

  server.set_fault(FakeServer::Fault::kHttp500);
  CHECK_THROWS_AS(remote.predict_batch(batch), ProtocolError);
  server.set_fault(FakeServer::Fault::kNotJson);
  CHECK_THROWS_AS(remote.predict_batch(batch), ProtocolError);
  server.set_fault(FakeServer::Fault::kShortRows);
  CHECK_THROWS_AS(remote.predict_batch(batch), ProtocolError);
  server.set_fault(FakeServer::Fault::kOutOfRange);
  CHECK_THROWS_AS(remote.predict_batch(batch), ProtocolError);
  server.set_fault(FakeServer::Fault::kStringValue);
  CHECK_THROWS_AS(remote.predict_batch(batch), ProtocolError);

  server.set_labels({"afib", "other"});
  const std::vector<std::string> expected{"afib", "chf"};
  CHECK_THROWS_AS(RemoteBackend(cfg, &expected), LabelMismatchError);

  RemoteBackendConfig dead;
  dead.base_url = "http://127.0.0.1:1";
  dead.retries = 1;
  dead.timeout = std::chrono::milliseconds(500);
  CHECK_THROWS_AS(RemoteBackend{dead}, TransportError);
  dead.base_url = "localhost:8080";
  CHECK_THROWS_AS(RemoteBackend{dead}, InvalidArgument);
}

TEST_CASE("serialized dispatch validates shape and range") {
  struct Broken final : ClassifierBackend {
    std::vector<std::string> l{"a"};
    std::string m = "[MASK]";
    double value = 2.0;
    const std::vector<std::string>& labels() const override { return l; }
    const std::string& mask_token() const override { return m; }
    Matrix predict_batch(std::span<const TokenSequence> batch) override {
      Matrix out(batch.size(), 1);
      for (std::size_t i = 0; i < batch.size(); ++i) out(i, 0) = value;
      return out;
    }
  } broken;
  SerializedDispatch dispatch(broken);
  std::vector<TokenSequence> batch{{"x"}};
  CHECK_THROWS_AS(dispatch.predict(batch), BackendError);
  broken.value = 0.25;
  CHECK(dispatch.predict(batch)(0, 0) == 0.25);
}
