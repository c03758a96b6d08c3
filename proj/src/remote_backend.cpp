#include <httplib.h>

#include <json.hpp>

#include "blockmask/backends.hpp"
#include "blockmask/error.hpp"

namespace blockmask {

struct RemoteBackend::Impl {
  RemoteBackendConfig config;
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash

  httplib::Client client() const {
    httplib::Client c(origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    c.set_connection_timeout(secs.count(), usecs.count());
    c.set_read_timeout(secs.count(), usecs.count());
    c.set_write_timeout(secs.count(), usecs.count());
    return c;
  }

  // Sends the request, retrying transport failures only.
  template <typename Send>
  httplib::Result send_with_retries(Send&& send, const std::string& what) const {
    std::string last_error;
    for (unsigned attempt = 0; attempt <= config.retries; ++attempt) {
      auto c = client();
      auto res = send(c);
      if (res) return res;
      last_error = httplib::to_string(res.error());
    }
    throw TransportError(what + " to " + origin + prefix + " failed after " + std::to_string(config.retries + 1) +
                         " attempt(s): " + last_error);
  }
};

namespace {

void split_url(const std::string& url, std::string& origin, std::string& prefix) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("remote backend url needs a scheme: '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  origin = url.substr(0, path_start);
  prefix = path_start == std::string::npos ? std::string() : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
}

nlohmann::json parse_body(const httplib::Result& res, const std::string& what) {
  if (res->status < 200 || res->status >= 300)
    throw ProtocolError(what + ": HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(what + ": response is not JSON: " + e.what());
  }
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteBackendConfig config, const std::vector<std::string>* expected_labels)
    : impl_(std::make_unique<Impl>()) {
  if (config.batch_size == 0) throw InvalidArgument("remote batch size must be at least 1");
  impl_->config = std::move(config);
  split_url(impl_->config.base_url, impl_->origin, impl_->prefix);

  const std::string what = "GET /v1/labels";
  auto res = impl_->send_with_retries([&](httplib::Client& c) { return c.Get(impl_->prefix + "/v1/labels"); }, what);
  const auto body = parse_body(res, what);
  if (!body.is_object() || !body.contains("labels") || !body["labels"].is_array() || !body.contains("mask_token") ||
      !body["mask_token"].is_string())
    throw ProtocolError(what + ": expected {\"labels\": [...], \"mask_token\": string}");
  for (const auto& l : body["labels"]) {
    if (!l.is_string()) throw ProtocolError(what + ": labels must be strings");
    labels_.push_back(l.get<std::string>());
  }
  if (labels_.empty()) throw ProtocolError(what + ": empty label set");
  mask_token_ = body["mask_token"].get<std::string>();
  if (expected_labels) require_same_labels(*expected_labels, labels_);
}

RemoteBackend::~RemoteBackend() = default;

Matrix RemoteBackend::predict_batch(std::span<const TokenSequence> batch) {
  Matrix out(batch.size(), labels_.size());
  const std::string what = "POST /v1/predict";
  for (std::size_t begin = 0; begin < batch.size(); begin += impl_->config.batch_size) {
    const std::size_t end = std::min(batch.size(), begin + impl_->config.batch_size);
    nlohmann::json request = {{"instances", nlohmann::json::array()}};
    for (std::size_t i = begin; i < end; ++i) request["instances"].push_back(batch[i]);
    const std::string payload = request.dump();
    auto res = impl_->send_with_retries(
        [&](httplib::Client& c) { return c.Post(impl_->prefix + "/v1/predict", payload, "application/json"); }, what);
    const auto body = parse_body(res, what);
    if (!body.is_object() || !body.contains("probabilities") || !body["probabilities"].is_array())
      throw ProtocolError(what + ": expected {\"probabilities\": [[...], ...]}");
    const auto& rows = body["probabilities"];
    if (rows.size() != end - begin)
      throw ProtocolError(what + ": sent " + std::to_string(end - begin) + " instances, received " +
                          std::to_string(rows.size()) + " rows");
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (!row.is_array() || row.size() != labels_.size())
        throw ProtocolError(what + ": row " + std::to_string(r) + " does not have " + std::to_string(labels_.size()) +
                            " probabilities");
      for (std::size_t l = 0; l < labels_.size(); ++l) {
        if (!row[l].is_number()) throw ProtocolError(what + ": non-numeric probability");
        const double p = row[l].get<double>();
        if (!(p >= 0.0 && p <= 1.0)) throw ProtocolError(what + ": probability outside [0, 1]");
        out(begin + r, l) = p;
      }
    }
  }
  return out;
}

}  // namespace blockmask
