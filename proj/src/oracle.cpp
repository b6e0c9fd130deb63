#include "gem/oracle.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace gem {

LogitVector recover_logits(const ProbVector& p) {
  LogitVector phi(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    phi[i] = std::log(std::max(p[i], 1e-12));
  }
  return phi;
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Features are serialized by hand so every double crosses the wire in
// shortest round-trip form; the loopback path then reproduces local results
// bit for bit.
std::string classify_body(const Vec& x) {
  std::string body = "{\"features\": [";
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i > 0) body += ", ";
    body += fmt_double(x[i]);
  }
  body += "]}";
  return body;
}

ProbVector parse_scores(const nlohmann::json& j, const OracleEndpoint& endpoint) {
  ProbVector probs;
  if (j.contains("probabilities")) {
    const auto& arr = j.at("probabilities");
    if (!arr.is_array() || arr.empty()) {
      throw ProtocolError("remote_classify: 'probabilities' is not a non-empty array");
    }
    probs.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number()) throw ProtocolError("remote_classify: non-numeric probability");
      probs.push_back(v.get<double>());
    }
  } else if (j.contains("scores")) {
    const auto& scores = j.at("scores");
    if (!scores.is_object()) throw ProtocolError("remote_classify: 'scores' is not an object");
    if (endpoint.category_order.empty()) {
      throw ProtocolError("remote_classify: named scores need a configured category order");
    }
    probs.reserve(endpoint.category_order.size());
    for (const std::string& name : endpoint.category_order) {
      if (!scores.contains(name)) {
        throw ProtocolError("remote_classify: response is missing category '" + name + "'");
      }
      probs.push_back(scores.at(name).get<double>());
    }
  } else {
    throw ProtocolError("remote_classify: response has neither 'probabilities' nor 'scores'");
  }

  double sum = 0.0;
  for (double p : probs) {
    if (!std::isfinite(p) || p < 0.0) throw ProtocolError("remote_classify: invalid score");
    sum += p;
  }
  if (sum < 0.99 || sum > 1.01) {
    throw ProtocolError("remote_classify: scores sum to " + fmt_double(sum) +
                        ", outside [0.99, 1.01]");
  }
  // Renormalize rounded scores; a sub-1e-9 deviation needs no correction and
  // keeping it untouched preserves bitwise local/remote agreement.
  if (std::abs(sum - 1.0) > 1e-9) {
    for (double& p : probs) p /= sum;
  }
  return probs;
}

struct HttpReply {
  int status = 0;
  std::string body;
};

HttpReply http_with_retries(const OracleEndpoint& endpoint, RemoteStats* stats,
                            const std::function<httplib::Result(httplib::Client&)>& call) {
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= endpoint.retry_limit; ++attempt) {
    if (attempt > 0) {
      const auto backoff = std::chrono::milliseconds(250) * (1LL << (attempt - 1));
      std::this_thread::sleep_for(backoff);
      if (stats) ++stats->retries;
    }
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(0, endpoint.timeout_ms * 1000LL);
    client.set_read_timeout(0, endpoint.timeout_ms * 1000LL);
    if (!endpoint.auth_token.empty()) {
      client.set_default_headers({{"Authorization", "Bearer " + endpoint.auth_token}});
    }
    httplib::Result res = call(client);
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      return {res->status, res->body};
    }
    if (res->status >= 400 && res->status < 500) {
      // Client errors will not improve on retry.
      throw ProtocolError("remote endpoint returned HTTP " + std::to_string(res->status) +
                          ": " + res->body);
    }
    last_error = "HTTP " + std::to_string(res->status);
  }
  throw TransportError("remote endpoint failed after " + std::to_string(endpoint.retry_limit) +
                       " retries (" + last_error + ")");
}

}  // namespace

ProbVector remote_classify(const OracleEndpoint& endpoint, const Vec& x, RemoteStats* stats) {
  const std::string body = classify_body(x);
  const HttpReply reply =
      http_with_retries(endpoint, stats, [&](httplib::Client& client) {
        return client.Post("/v1/classify", body, "application/json");
      });
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(reply.body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("remote_classify: bad JSON in response: ") + e.what());
  }
  return parse_scores(j, endpoint);
}

RemoteOracle::RemoteOracle(OracleEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  const HttpReply reply = http_with_retries(
      endpoint_, &stats_, [](httplib::Client& client) { return client.Get("/v1/meta"); });
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(reply.body);
    input_dim_ = j.at("input_dim").get<std::size_t>();
    num_classes_ = j.at("num_classes").get<int>();
    if (j.contains("data_range")) {
      lo_ = j.at("data_range").at(0).get<double>();
      hi_ = j.at("data_range").at(1).get<double>();
    }
    if (endpoint_.category_order.empty() && j.contains("labels")) {
      endpoint_.category_order = j.at("labels").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("remote oracle: bad /v1/meta response: ") + e.what());
  }
  if (input_dim_ == 0 || num_classes_ < 2) {
    throw ProtocolError("remote oracle: /v1/meta reports unusable dimensions");
  }
}

ProbVector RemoteOracle::query_probs(const Vec& x) {
  if (x.size() != input_dim_) throw ArgumentError("remote oracle: input length mismatch");
  return remote_classify(endpoint_, x, &stats_);
}

}  // namespace gem
