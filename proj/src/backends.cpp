#include "blockmask/backends.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "blockmask/error.hpp"

namespace blockmask {

double logistic(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ConstantBackend::ConstantBackend(std::vector<std::string> labels, double probability, std::string mask_token)
    : labels_(std::move(labels)), probability_(probability), mask_token_(std::move(mask_token)) {
  if (labels_.empty()) throw InvalidArgument("constant backend needs at least one label");
  if (!(probability_ >= 0.0 && probability_ <= 1.0))
    throw InvalidArgument("constant backend probability must lie in [0, 1]");
}

Matrix ConstantBackend::predict_batch(std::span<const TokenSequence> batch) {
  return Matrix(batch.size(), labels_.size(), probability_);
}

KeywordLogitModel::KeywordLogitModel(std::vector<std::string> labels, std::vector<double> bias,
                                     std::vector<std::unordered_map<std::string, double>> weights,
                                     std::vector<InteractionTerm> interactions, std::string mask_token)
    : labels_(std::move(labels)),
      bias_(std::move(bias)),
      weights_(std::move(weights)),
      interactions_(std::move(interactions)),
      mask_token_(std::move(mask_token)) {
  if (labels_.empty()) throw InvalidArgument("keyword model needs at least one label");
  if (bias_.size() != labels_.size() || weights_.size() != labels_.size())
    throw InvalidArgument("keyword model: labels, bias and weights must have equal length");
  if (std::unordered_set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size())
    throw InvalidArgument("keyword model: duplicate label");
  for (const auto& term : interactions_) {
    if (term.label >= labels_.size()) throw InvalidArgument("keyword model: interaction label out of range");
    if (term.tokens.empty()) throw InvalidArgument("keyword model: interaction needs at least one token");
  }
}

std::vector<double> KeywordLogitModel::predict(const TokenSequence& tokens) const {
  std::unordered_set<std::string_view> present;
  present.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (t != mask_token_) present.insert(t);
  }
  std::vector<double> logits = bias_;
  for (std::size_t l = 0; l < labels_.size(); ++l) {
    const auto& w = weights_[l];
    if (w.size() < present.size()) {
      for (const auto& [token, weight] : w) {
        if (present.contains(token)) logits[l] += weight;
      }
    } else {
      for (const auto token : present) {
        if (auto it = w.find(std::string(token)); it != w.end()) logits[l] += it->second;
      }
    }
  }
  for (const auto& term : interactions_) {
    bool all = true;
    for (const auto& token : term.tokens) all = all && present.contains(token);
    if (all) logits[term.label] += term.weight;
  }
  for (auto& v : logits) v = logistic(v);
  return logits;
}

Matrix KeywordLogitModel::predict_batch(std::span<const TokenSequence> batch) {
  Matrix out(batch.size(), labels_.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto probs = predict(batch[i]);
    std::copy(probs.begin(), probs.end(), out.row(i).begin());
  }
  return out;
}

KeywordLogitModel load_keyword_model(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    auto labels = doc.at("labels").get<std::vector<std::string>>();
    auto bias = doc.at("bias").get<std::vector<double>>();
    auto weights = doc.at("weights").get<std::vector<std::unordered_map<std::string, double>>>();
    std::vector<InteractionTerm> interactions;
    if (doc.contains("interactions")) {
      for (const auto& t : doc.at("interactions")) {
        interactions.push_back(
            {t.at("label").get<std::size_t>(), t.at("tokens").get<std::vector<std::string>>(), t.at("weight").get<double>()});
      }
    }
    std::string mask = doc.value("mask_token", std::string(kDefaultMaskToken));
    return KeywordLogitModel(std::move(labels), std::move(bias), std::move(weights), std::move(interactions),
                             std::move(mask));
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed weights file: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw InputError(std::string("invalid weights file: ") + e.what());
  }
}

KeywordLogitModel load_keyword_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open weights file '" + path + "'");
  return load_keyword_model(in);
}

CountingBackend::CountingBackend(std::shared_ptr<ClassifierBackend> inner) : inner_(std::move(inner)) {
  if (!inner_) throw InvalidArgument("counting backend needs an inner backend");
}

Matrix CountingBackend::predict_batch(std::span<const TokenSequence> batch) {
  calls_.fetch_add(batch.size(), std::memory_order_relaxed);
  return inner_->predict_batch(batch);
}

void require_same_labels(const std::vector<std::string>& expected, const std::vector<std::string>& actual) {
  if (expected == actual) return;
  std::string msg = "label set mismatch: expected " + std::to_string(expected.size()) + " labels, backend has " +
                    std::to_string(actual.size());
  for (std::size_t i = 0; i < std::min(expected.size(), actual.size()); ++i) {
    if (expected[i] != actual[i]) {
      msg += "; first difference at index " + std::to_string(i) + " ('" + expected[i] + "' vs '" + actual[i] + "')";
      break;
    }
  }
  throw LabelMismatchError(msg);
}

Matrix SerializedDispatch::predict(std::span<const TokenSequence> batch) {
  Matrix out;
  if (backend_.concurrent()) {
    out = backend_.predict_batch(batch);
  } else {
    std::lock_guard lock(mutex_);
    out = backend_.predict_batch(batch);
  }
  if (out.rows() != batch.size() || out.cols() != backend_.labels().size())
    throw BackendError("backend returned a " + std::to_string(out.rows()) + "x" + std::to_string(out.cols()) +
                       " matrix for a batch of " + std::to_string(batch.size()));
  for (const double p : out.data()) {
    if (!(p >= 0.0 && p <= 1.0)) throw BackendError("backend returned a probability outside [0, 1]");
  }
  return out;
}

}  // namespace blockmask
