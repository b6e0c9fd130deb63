#ifndef GEM_SERVER_HPP
#define GEM_SERVER_HPP

#include <atomic>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "gem/model.hpp"
#include "gem/oracle.hpp"

namespace httplib {
class Server;
}

namespace gem {

struct MockServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::string auth_token;
  // Fault injection: answer the first n classify requests with 503.
  int fail_first_n = 0;
  // Respond with {"scores": {label: p}} instead of the probabilities array.
  bool named_scores = false;
  std::vector<std::string> labels;  // defaults to "class0", "class1", ...
  bool log_queries = true;
};

/// Mock gem-infer-v1 inference server wrapping an immutable model.
/// POST /v1/classify and GET /v1/meta; one log line per answered query.
class MockServer {
 public:
  MockServer(const MlpModel& model, MockServerOptions options);
  ~MockServer();

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds and serves on a background thread; throws on bind failure.
  void start();
  void stop();

  int port() const { return port_; }
  std::string base_url() const;
  const std::shared_ptr<QueryLedger>& ledger() const { return ledger_; }

 private:
  const MlpModel* model_;
  MockServerOptions options_;
  std::shared_ptr<QueryLedger> ledger_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::atomic<int> fail_remaining_{0};
  int port_ = 0;
};

/// Convenience wrapper matching the "serve until shut down" contract.
std::unique_ptr<MockServer> serve_mock(const MlpModel& model, MockServerOptions options = {});

}  // namespace gem

#endif  // GEM_SERVER_HPP
