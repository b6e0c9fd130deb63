#include "gem/server.hpp"

#include <charconv>
#include <chrono>
#include <iostream>

#include "httplib.h"
#include "json.hpp"

namespace gem {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string probs_json(const ProbVector& probs, const std::vector<std::string>& labels,
                       bool named_scores) {
  std::string body;
  if (named_scores) {
    body = "{\"scores\": {";
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (i > 0) body += ", ";
      body += "\"" + labels[i] + "\": " + fmt_double(probs[i]);
    }
    body += "}}";
    return body;
  }
  body = "{\"probabilities\": [";
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (i > 0) body += ", ";
    body += fmt_double(probs[i]);
  }
  body += "], \"labels\": [";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) body += ", ";
    body += "\"" + labels[i] + "\"";
  }
  body += "]}";
  return body;
}

}  // namespace

MockServer::MockServer(const MlpModel& model, MockServerOptions options)
    : model_(&model),
      options_(std::move(options)),
      ledger_(std::make_shared<QueryLedger>()),
      server_(std::make_unique<httplib::Server>()) {
  if (options_.labels.empty()) {
    for (int c = 0; c < model_->num_classes; ++c) {
      options_.labels.push_back("class" + std::to_string(c));
    }
  }
  if (options_.labels.size() != static_cast<std::size_t>(model_->num_classes)) {
    throw ArgumentError("serve_mock: label count must match num_classes");
  }
  fail_remaining_ = options_.fail_first_n;
}

MockServer::~MockServer() { stop(); }

std::string MockServer::base_url() const {
  return "http://" + options_.host + ":" + std::to_string(port_);
}

void MockServer::start() {
  auto authorized = [this](const httplib::Request& req) {
    if (options_.auth_token.empty()) return true;
    return req.get_header_value("Authorization") == "Bearer " + options_.auth_token;
  };

  server_->Get("/v1/meta", [this, authorized](const httplib::Request& req,
                                              httplib::Response& res) {
    if (!authorized(req)) {
      res.status = 401;
      res.set_content("{\"error\": \"unauthorized\"}", "application/json");
      return;
    }
    std::string body = "{\"input_dim\": " + std::to_string(model_->input_dim) +
                       ", \"num_classes\": " + std::to_string(model_->num_classes) +
                       ", \"labels\": [";
    for (std::size_t i = 0; i < options_.labels.size(); ++i) {
      if (i > 0) body += ", ";
      body += "\"" + options_.labels[i] + "\"";
    }
    body += "], \"data_range\": [" + fmt_double(model_->lo) + ", " + fmt_double(model_->hi) +
            "]}";
    res.set_content(body, "application/json");
  });

  server_->Post("/v1/classify", [this, authorized](const httplib::Request& req,
                                                   httplib::Response& res) {
    if (!authorized(req)) {
      res.status = 401;
      res.set_content("{\"error\": \"unauthorized\"}", "application/json");
      return;
    }
    int remaining = fail_remaining_.load();
    while (remaining > 0 &&
           !fail_remaining_.compare_exchange_weak(remaining, remaining - 1)) {
    }
    if (remaining > 0) {
      res.status = 503;
      res.set_content("{\"error\": \"server overloaded\"}", "application/json");
      return;
    }

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      res.status = 400;
      res.set_content("{\"error\": \"malformed JSON body\"}", "application/json");
      return;
    }
    if (!j.contains("features") || !j.at("features").is_array()) {
      res.status = 400;
      res.set_content("{\"error\": \"missing 'features' array\"}", "application/json");
      return;
    }
    const auto& feats = j.at("features");
    if (feats.size() != model_->input_dim) {
      res.status = 400;
      res.set_content("{\"error\": \"expected " + std::to_string(model_->input_dim) +
                          " features, got " + std::to_string(feats.size()) + "\"}",
                      "application/json");
      return;
    }
    Vec x(model_->input_dim);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!feats.at(i).is_number()) {
        res.status = 400;
        res.set_content("{\"error\": \"non-numeric feature\"}", "application/json");
        return;
      }
      x[i] = feats.at(i).get<double>();
    }

    const ProbVector probs = model_->forward(x).probs;
    ledger_->add("classify");
    if (options_.log_queries) {
      const auto now = std::chrono::system_clock::now().time_since_epoch();
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
      std::clog << "[mock-server] ts=" << ms << " queries=" << ledger_->total() << "\n";
    }
    res.set_content(probs_json(probs, options_.labels, options_.named_scores),
                    "application/json");
  });

  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
    if (port_ < 0) throw TransportError("serve_mock: failed to bind to any port");
  } else {
    if (!server_->bind_to_port(options_.host, options_.port)) {
      throw TransportError("serve_mock: failed to bind to port " +
                           std::to_string(options_.port));
    }
    port_ = options_.port;
  }

  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void MockServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::unique_ptr<MockServer> serve_mock(const MlpModel& model, MockServerOptions options) {
  auto server = std::make_unique<MockServer>(model, std::move(options));
  server->start();
  return server;
}

}  // namespace gem
