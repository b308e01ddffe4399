#include "elkg/sparql_client.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <httplib.h>

#include "elkg/error.hpp"

namespace elkg::sparql {

std::chrono::milliseconds RetryPolicy::backoff(int retry) const {
  const double ms = static_cast<double>(initial_backoff.count()) *
                    std::pow(multiplier, std::max(0, retry - 1));
  return std::min(max_backoff, std::chrono::milliseconds(static_cast<long long>(ms)));
}

struct SparqlClient::Http {
  std::unique_ptr<httplib::Client> client;
  std::string path;
};

SparqlClient::SparqlClient(std::string url, ClientOptions options)
    : url_(std::move(url)), options_(std::move(options)), http_(std::make_unique<Http>()) {
  const std::size_t scheme_end = url_.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL lacks a scheme: " + url_);
  const std::string scheme = url_.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw ConfigError("unsupported endpoint scheme: " + url_);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ConfigError("built without HTTPS support: " + url_);
#endif
  const std::size_t path_start = url_.find('/', scheme_end + 3);
  const std::string origin = url_.substr(0, path_start);
  http_->path = path_start == std::string::npos ? "/" : url_.substr(path_start);
  http_->client = std::make_unique<httplib::Client>(origin);
  if (!http_->client->is_valid()) throw ConfigError("invalid endpoint URL: " + url_);
  http_->client->set_connection_timeout(options_.timeout);
  http_->client->set_read_timeout(options_.timeout);
  http_->client->set_write_timeout(options_.timeout);
  http_->client->set_follow_location(true);
  http_->client->set_keep_alive(true);
  if (!options_.sleep) {
    options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

SparqlClient::~SparqlClient() = default;

std::string SparqlClient::post(const std::string& param, const std::string& body, bool expect_json) {
  std::lock_guard lock(request_mutex_);
  int status = 0;
  std::string reason;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    if (attempt > 1) {
      {
        std::lock_guard s(stats_mutex_);
        ++stats_.retries;
        retry_log_.push_back("attempt=" + std::to_string(attempt) + " status=" +
                             std::to_string(status) + " reason=" + reason);
      }
      options_.sleep(options_.retry.backoff(attempt - 1));
    }
    if (has_last_ && options_.pacing.count() > 0) {
      const auto due = last_request_ + options_.pacing;
      const auto now = std::chrono::steady_clock::now();
      if (now < due) {
        options_.sleep(std::chrono::duration_cast<std::chrono::milliseconds>(due - now));
      }
    }
    httplib::Headers headers{{"User-Agent", options_.user_agent}};
    if (expect_json) headers.emplace("Accept", "application/sparql-results+json");
    httplib::Params params{{param, body}};
    auto res = http_->client->Post(http_->path, headers, params);
    last_request_ = std::chrono::steady_clock::now();
    has_last_ = true;
    {
      std::lock_guard s(stats_mutex_);
      ++stats_.requests;
    }
    if (!res) {
      status = 0;
      reason = httplib::to_string(res.error());
      continue;
    }
    status = res->status;
    if (status >= 200 && status < 300) {
      if (!expect_json) return res->body;
      if (nlohmann::json::accept(res->body)) return res->body;
      reason = "malformed results document";
      continue;
    }
    reason = "http";
    const bool retryable = status == 408 || status == 429 || status >= 500;
    if (!retryable) {
      throw TransientError(url_ + ": HTTP " + std::to_string(status) + ": " +
                               res->body.substr(0, 200),
                           status);
    }
  }
  throw TransientError(url_ + ": giving up after " + std::to_string(options_.retry.max_attempts) +
                           " attempts (last status " + std::to_string(status) + ", " + reason + ")",
                       status);
}

Results SparqlClient::select(const std::string& query) {
  if (options_.cache) {
    std::shared_lock lock(cache_mutex_);
    if (auto it = cache_.find(query); it != cache_.end()) {
      std::lock_guard s(stats_mutex_);
      ++stats_.cache_hits;
      return it->second;
    }
  }
  const std::string body = post("query", query, true);
  Results r = results_from_json(nlohmann::json::parse(body));
  if (options_.cache) {
    std::unique_lock lock(cache_mutex_);
    cache_.emplace(query, r);
  }
  return r;
}

void SparqlClient::update(const std::string& update) { post("update", update, false); }

SparqlClient::Stats SparqlClient::stats() const {
  std::lock_guard s(stats_mutex_);
  return stats_;
}

std::vector<std::string> SparqlClient::retry_log() const {
  std::lock_guard s(stats_mutex_);
  return retry_log_;
}

void SparqlClient::clear_cache() {
  std::unique_lock lock(cache_mutex_);
  cache_.clear();
}

}  // namespace elkg::sparql
