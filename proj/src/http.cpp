#include "drs/http.hpp"

#include <cmath>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <httplib.h>

#include "drs/error.hpp"

namespace drs::http {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // begins with '/'
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw UsageError(fmt::format("URL \"{}\" lacks a scheme", url));
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw UsageError(fmt::format("URL \"{}\": unsupported scheme \"{}\"", url, scheme));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, "/"};
  }
  return {url.substr(0, path_start), url.substr(path_start)};
}

Transport classify(httplib::Error error) {
  switch (error) {
    case httplib::Error::ConnectionTimeout:
    case httplib::Error::Read:
    case httplib::Error::Write:
      return Transport::timeout;
    case httplib::Error::Connection:
    case httplib::Error::BindIPAddress:
    case httplib::Error::ProxyConnection:
      return Transport::connection_failed;
    default:
      return Transport::other;
  }
}

}  // namespace

Result post_json(const std::string& url, const std::string& body, const Headers& headers,
                 std::chrono::milliseconds timeout) {
  const auto target = split_url(url);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (target.origin.starts_with("https://")) {
    return {Transport::other, "built without TLS support", 0, {}};
  }
#endif
  httplib::Client client(target.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers request_headers;
  for (const auto& [name, value] : headers) {
    request_headers.emplace(name, value);
  }

  auto response = client.Post(target.path, request_headers, body, "application/json");
  if (!response) {
    const auto error = response.error();
    return {classify(error), httplib::to_string(error), 0, {}};
  }
  return {Transport::ok, {}, response->status, response->body};
}

std::string join_url(std::string_view base, std::string_view path) {
  std::string out(base);
  while (!out.empty() && out.back() == '/') {
    out.pop_back();
  }
  if (!path.starts_with('/')) {
    out += '/';
  }
  out += path;
  return out;
}

std::chrono::milliseconds Backoff::ceiling(int retry_index) const {
  const double ms = static_cast<double>(base.count()) * std::pow(factor, retry_index);
  return std::chrono::milliseconds(static_cast<std::int64_t>(ms));
}

std::chrono::milliseconds Backoff::delay(int retry_index, double unit_draw) const {
  const auto cap = ceiling(retry_index);
  const double u = std::clamp(unit_draw, 0.0, 1.0);
  return std::chrono::milliseconds(
      static_cast<std::int64_t>(std::floor(static_cast<double>(cap.count()) * u)));
}

RetryHooks RetryHooks::system() {
  return {[](std::chrono::milliseconds d) {
            if (d.count() > 0) {
              std::this_thread::sleep_for(d);
            }
          },
          [] {
            thread_local std::mt19937_64 rng(std::random_device{}());
            return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
          }};
}

}  // namespace drs::http
