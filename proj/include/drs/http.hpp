#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

// Minimal blocking HTTP client used by the remote extractor and the remote
// chat-completion backend, plus the shared retry backoff schedule.
namespace drs::http {

enum class Transport { ok, timeout, connection_failed, other };

struct Result {
  Transport transport = Transport::ok;
  std::string transport_message;  // set when transport != ok
  int status = 0;
  std::string body;
};

using Headers = std::vector<std::pair<std::string, std::string>>;

// POST `body` (application/json) to an absolute http:// or https:// URL.
// Never throws for network problems; they are reported through `transport`.
// Throws drs::UsageError for an unparseable URL.
Result post_json(const std::string& url, const std::string& body, const Headers& headers,
                 std::chrono::milliseconds timeout);

// Joins a base URL and a path without doubling the slash.
std::string join_url(std::string_view base, std::string_view path);

// Exponential backoff with full jitter: before retry k (0-based) the caller
// sleeps a uniform draw from [0, base * factor^k].
struct Backoff {
  std::chrono::milliseconds base{500};
  double factor = 2.0;

  std::chrono::milliseconds ceiling(int retry_index) const;
  std::chrono::milliseconds delay(int retry_index, double unit_draw) const;
};

// Injectable side effects of a retry loop, so tests can run without sleeping.
struct RetryHooks {
  std::function<void(std::chrono::milliseconds)> sleep;
  std::function<double()> unit_draw;  // uniform in [0, 1)

  static RetryHooks system();
};

}  // namespace drs::http
