#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "drs/http.hpp"
#include "drs/model.hpp"
#include "drs/prompt.hpp"

namespace drs::llm {

enum class BackendKind { offline, remote };

}  // namespace drs::llm

template <>
struct drs::EnumLabels<drs::llm::BackendKind> {
  static constexpr std::array<std::string_view, 2> names{"offline", "remote"};
};

namespace drs::llm {

inline constexpr std::string_view kDefaultApiKeyEnv = "DRS_LLM_API_KEY";

struct LlmBackendConfig {
  BackendKind kind = BackendKind::offline;
  std::optional<std::string> base_url;
  std::optional<std::string> model_name;
  std::string api_key_env_var = std::string(kDefaultApiKeyEnv);
  int timeout_ms = 60000;
  int max_retries = 3;
};

std::vector<FieldIssue> check(const LlmBackendConfig& config);

struct CompletionResult {
  std::string text;
  BackendKind backend_kind = BackendKind::offline;
  int attempts = 1;

  bool operator==(const CompletionResult&) const = default;
};

class LlmError : public Error {
 public:
  enum class Kind {
    missing_api_key,
    timeout,
    transport,
    non_retryable_status,
    retries_exhausted,
    protocol,
    unrecognized_payload,
  };

  LlmError(Kind kind, const std::string& message, int attempts = 0,
           std::optional<int> status = std::nullopt)
      : Error(message), kind_(kind), attempts_(attempts), status_(status) {}

  Kind kind() const noexcept { return kind_; }
  int attempts() const noexcept { return attempts_; }
  std::optional<int> status() const noexcept { return status_; }

 private:
  Kind kind_;
  int attempts_;
  std::optional<int> status_;
};

std::string_view to_string(LlmError::Kind kind);

// Side effects of the remote backend, replaceable in tests.
struct CompletionHooks {
  http::RetryHooks retry = http::RetryHooks::system();
  http::Backoff backoff{};
  std::function<std::optional<std::string>(const std::string&)> getenv;  // std::getenv when empty
};

// Offline: offline_summarize(bundle.user_message), one attempt.
// Remote: POST {base_url}/v1/chat/completions. 429/500/502/503 and transport
// timeouts are retried up to max_retries times with exponential backoff
// (base 500 ms, factor 2, full jitter); other failures are immediate.
CompletionResult complete(const LlmBackendConfig& config, const prompt::PromptBundle& bundle,
                          const CompletionHooks& hooks = {});

// Deterministic template report built from a user message produced by the
// prompt module. Throws LlmError(unrecognized_payload) for anything else.
std::string offline_summarize(std::string_view user_message);

// Caps concurrent remote chat-completion requests across the process.
class RequestLimiter {
 public:
  explicit RequestLimiter(int limit) : limit_(limit) {}

  void acquire();
  void release();
  void set_limit(int limit);
  int limit() const;

  class Slot {
   public:
    explicit Slot(RequestLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
    ~Slot() { limiter_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    RequestLimiter& limiter_;
  };

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int limit_;
  int in_use_ = 0;
};

// Process-wide limiter for remote completions (default 2).
RequestLimiter& remote_limiter();

}  // namespace drs::llm
