#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "elkg/sparql.hpp"

namespace elkg::sparql {

struct RetryPolicy {
  int max_attempts = 4;  // first try included
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{8000};

  /// Delay before attempt `retry` (1-based count of retries so far).
  std::chrono::milliseconds backoff(int retry) const;
};

struct ClientOptions {
  RetryPolicy retry;
  /// Minimum spacing between requests to the same endpoint.
  std::chrono::milliseconds pacing{1000};
  std::chrono::seconds timeout{30};
  std::string user_agent = "elkg/1.0";
  bool cache = true;
  /// Injected for tests; defaults to std::this_thread::sleep_for.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// SPARQL 1.1 Protocol client for one endpoint. Queries POST the form
/// parameter `query`, updates `update`. Retries connection failures, 408,
/// 429, 5xx and malformed result documents with exponential backoff; other
/// statuses fail at once. SELECT results are cached by query text.
///
/// Requests are serialized per client to honour the pacing interval; the
/// cache admits concurrent readers.
class SparqlClient {
 public:
  /// `url` like http://host:port/path or https://host/path.
  explicit SparqlClient(std::string url, ClientOptions options = {});
  ~SparqlClient();
  SparqlClient(const SparqlClient&) = delete;
  SparqlClient& operator=(const SparqlClient&) = delete;

  const std::string& url() const noexcept { return url_; }

  /// Throws TransientError once the retry budget is spent.
  Results select(const std::string& query);
  void update(const std::string& update);

  struct Stats {
    std::size_t requests = 0;  // HTTP requests sent
    std::size_t retries = 0;
    std::size_t cache_hits = 0;
  };
  Stats stats() const;
  /// One line per retry: "attempt=N status=S reason=...".
  std::vector<std::string> retry_log() const;
  void clear_cache();

 private:
  std::string post(const std::string& param, const std::string& body, bool expect_json);

  struct Http;
  std::string url_;
  ClientOptions options_;
  std::unique_ptr<Http> http_;

  std::mutex request_mutex_;
  std::chrono::steady_clock::time_point last_request_{};
  bool has_last_ = false;

  mutable std::shared_mutex cache_mutex_;
  std::map<std::string, Results> cache_;

  mutable std::mutex stats_mutex_;
  Stats stats_;
  std::vector<std::string> retry_log_;
};

}  // namespace elkg::sparql
