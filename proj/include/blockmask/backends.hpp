#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <istream>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "blockmask/core.hpp"
#include "blockmask/matrix.hpp"

namespace blockmask {

inline constexpr const char* kDefaultMaskToken = "[MASK]";

/// Contract for any scoring model. `predict_batch` returns a
/// batch.size() x labels().size() matrix of probabilities in [0, 1] and must
/// be deterministic. Implementations that cannot take concurrent calls
/// return false from `concurrent()`; callers then serialize dispatch.
class ClassifierBackend {
 public:
  virtual ~ClassifierBackend() = default;

  virtual const std::vector<std::string>& labels() const = 0;
  virtual const std::string& mask_token() const = 0;
  virtual Matrix predict_batch(std::span<const TokenSequence> batch) = 0;
  virtual bool concurrent() const { return true; }
};

/// Returns the same probability for every label and input.
class ConstantBackend final : public ClassifierBackend {
 public:
  ConstantBackend(std::vector<std::string> labels, double probability,
                  std::string mask_token = kDefaultMaskToken);

  const std::vector<std::string>& labels() const override { return labels_; }
  const std::string& mask_token() const override { return mask_token_; }
  Matrix predict_batch(std::span<const TokenSequence> batch) override;

 private:
  std::vector<std::string> labels_;
  double probability_;
  std::string mask_token_;
};

/// Conjunctive logit term: adds `weight` to `label` when every token in
/// `tokens` is present in the input.
struct InteractionTerm {
  std::size_t label = 0;
  std::vector<std::string> tokens;
  double weight = 0.0;
};

/// Bag-of-tokens logistic model:
///   p_l = logistic(bias_l + sum over distinct present tokens t of w_l(t) [+ interaction terms]).
/// The mask token never carries weight.
class KeywordLogitModel final : public ClassifierBackend {
 public:
  KeywordLogitModel(std::vector<std::string> labels, std::vector<double> bias,
                    std::vector<std::unordered_map<std::string, double>> weights,
                    std::vector<InteractionTerm> interactions = {},
                    std::string mask_token = kDefaultMaskToken);

  const std::vector<std::string>& labels() const override { return labels_; }
  const std::string& mask_token() const override { return mask_token_; }
  Matrix predict_batch(std::span<const TokenSequence> batch) override;

  /// Single-sequence convenience.
  std::vector<double> predict(const TokenSequence& tokens) const;

  const std::vector<double>& bias() const noexcept { return bias_; }
  const std::vector<std::unordered_map<std::string, double>>& weights() const noexcept { return weights_; }
  const std::vector<InteractionTerm>& interactions() const noexcept { return interactions_; }

 private:
  std::vector<std::string> labels_;
  std::vector<double> bias_;
  std::vector<std::unordered_map<std::string, double>> weights_;
  std::vector<InteractionTerm> interactions_;
  std::string mask_token_;
};

double logistic(double x) noexcept;

/// Weights file: {"labels":[...], "bias":[...], "weights":[{token: w,...},...],
/// optional "interactions":[{"label": i, "tokens": [...], "weight": w}],
/// optional "mask_token": string}.
KeywordLogitModel load_keyword_model(std::istream& in);
KeywordLogitModel load_keyword_model_file(const std::string& path);

/// Forwards to `inner` and counts single-sequence evaluations (a batch of k
/// counts k). Safe under concurrent dispatch.
class CountingBackend final : public ClassifierBackend {
 public:
  explicit CountingBackend(std::shared_ptr<ClassifierBackend> inner);

  const std::vector<std::string>& labels() const override { return inner_->labels(); }
  const std::string& mask_token() const override { return inner_->mask_token(); }
  Matrix predict_batch(std::span<const TokenSequence> batch) override;
  bool concurrent() const override { return inner_->concurrent(); }

  std::uint64_t count() const noexcept { return calls_.load(std::memory_order_relaxed); }
  void reset() noexcept { calls_.store(0, std::memory_order_relaxed); }

 private:
  std::shared_ptr<ClassifierBackend> inner_;
  std::atomic<std::uint64_t> calls_{0};
};

struct RemoteBackendConfig {
  std::string base_url;
  std::size_t batch_size = 32;
  std::chrono::milliseconds timeout{30000};
  unsigned retries = 2;
};

/// HTTP client for the /v1/labels + /v1/predict wire protocol. The label set
/// is fetched once at construction. Transport failures (after retries) throw
/// TransportError; non-2xx responses and schema violations throw
/// ProtocolError; a label set differing from `expected_labels` (when given)
/// throws LabelMismatchError.
class RemoteBackend final : public ClassifierBackend {
 public:
  explicit RemoteBackend(RemoteBackendConfig config, const std::vector<std::string>* expected_labels = nullptr);
  ~RemoteBackend() override;

  const std::vector<std::string>& labels() const override { return labels_; }
  const std::string& mask_token() const override { return mask_token_; }
  Matrix predict_batch(std::span<const TokenSequence> batch) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::vector<std::string> labels_;
  std::string mask_token_;
};

/// Throws LabelMismatchError unless `actual` equals `expected` element-wise.
void require_same_labels(const std::vector<std::string>& expected, const std::vector<std::string>& actual);

/// Serializes calls into a backend that declared itself non-concurrent.
class SerializedDispatch {
 public:
  explicit SerializedDispatch(ClassifierBackend& backend) : backend_(backend) {}
  Matrix predict(std::span<const TokenSequence> batch);

 private:
  ClassifierBackend& backend_;
  std::mutex mutex_;
};

}  // namespace blockmask
