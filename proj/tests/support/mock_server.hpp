#pragma once

#include <chrono>
#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace drs::testing {

struct ScriptedResponse {
  int status = 200;
  std::string body;
  std::chrono::milliseconds delay{0};
};

struct RecordedRequest {
  std::string path;
  std::string body;
  std::string authorization;
};

// Local HTTP server answering POSTs from a script, one entry per request.
// Once the script runs out, the last entry repeats.
class MockServer {
 public:
  explicit MockServer(std::vector<ScriptedResponse> script) : script_(script.begin(), script.end()) {
    server_.Post(".*", [this](const httplib::Request& req, httplib::Response& res) {
      ScriptedResponse next;
      {
        std::lock_guard lock(mutex_);
        requests_.push_back({req.path, req.body, req.get_header_value("Authorization")});
        next = script_.front();
        if (script_.size() > 1) {
          script_.pop_front();
        }
      }
      if (next.delay.count() > 0) {
        std::this_thread::sleep_for(next.delay);
      }
      res.status = next.status;
      res.set_content(next.body, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~MockServer() {
    server_.stop();
    thread_.join();
  }

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::vector<RecordedRequest> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

 private:
  httplib::Server server_;
  mutable std::mutex mutex_;
  std::deque<ScriptedResponse> script_;
  std::vector<RecordedRequest> requests_;
  int port_ = 0;
  std::thread thread_;
};

// A port that refuses connections: bound, then released.
inline int closed_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  socklen_t len = sizeof(addr);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

inline std::string chat_body(const std::string& content) {
  nlohmann::json j;
  j["id"] = "chatcmpl-test";
  j["choices"] = nlohmann::json::array({{{"index", 0},
                                         {"message", {{"role", "assistant"}, {"content", content}}},
                                         {"finish_reason", "stop"}}});
  return j.dump();
}

}  // namespace drs::testing
