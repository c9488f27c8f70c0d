#include "drs/llm.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "drs/log.hpp"

namespace drs::llm {
namespace {

using Json = nlohmann::ordered_json;

bool retryable_status(int status) {
  return status == 429 || status == 500 || status == 502 || status == 503;
}

std::string extract_content(const std::string& body, int attempts) {
  Json payload;
  try {
    payload = Json::parse(body);
  } catch (const Json::parse_error&) {
    throw LlmError(LlmError::Kind::protocol, "chat completion response is not valid JSON",
                   attempts, 200);
  }
  const Json* content = nullptr;
  if (payload.is_object() && payload.contains("choices") && payload["choices"].is_array() &&
      !payload["choices"].empty()) {
    const auto& choice = payload["choices"][0];
    if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
        choice["message"].contains("content")) {
      content = &choice["message"]["content"];
    }
  }
  if (content == nullptr || !content->is_string()) {
    throw LlmError(LlmError::Kind::protocol,
                   "chat completion response lacks a text choices[0].message.content", attempts,
                   200);
  }
  auto text = content->get<std::string>();
  if (text.empty()) {
    throw LlmError(LlmError::Kind::protocol, "chat completion returned empty content", attempts,
                   200);
  }
  return text;
}

CompletionResult complete_remote(const LlmBackendConfig& config,
                                 const prompt::PromptBundle& bundle,
                                 const CompletionHooks& hooks) {
  const auto key = hooks.getenv ? hooks.getenv(config.api_key_env_var) : [&] {
    const char* value = std::getenv(config.api_key_env_var.c_str());
    return value ? std::optional<std::string>(value) : std::nullopt;
  }();
  if (!key || key->empty()) {
    throw LlmError(LlmError::Kind::missing_api_key,
                   fmt::format("environment variable {} holds no API key",
                               config.api_key_env_var));
  }

  Json request;
  request["model"] = *config.model_name;
  request["messages"] = Json::array({
      Json{{"role", "system"}, {"content", bundle.system_message}},
      Json{{"role", "user"}, {"content", bundle.user_message}},
  });
  request["temperature"] = bundle.temperature;
  request["max_tokens"] = bundle.max_output_tokens;
  const auto body = request.dump();
  const auto url = http::join_url(*config.base_url, "/v1/chat/completions");
  const http::Headers headers{{"Authorization", "Bearer " + *key}};

  RequestLimiter::Slot slot(remote_limiter());
  bool last_was_timeout = false;
  std::string last_problem;
  int attempts = 0;
  for (int retry = 0; retry <= config.max_retries; ++retry) {
    if (retry > 0) {
      const auto delay = hooks.backoff.delay(retry - 1, hooks.retry.unit_draw());
      log::debug("chat completion retry {} after {} ms", retry, delay.count());
      hooks.retry.sleep(delay);
    }
    ++attempts;
    const auto result =
        http::post_json(url, body, headers, std::chrono::milliseconds(config.timeout_ms));
    if (result.transport == http::Transport::timeout) {
      last_was_timeout = true;
      last_problem = result.transport_message;
      log::debug("chat completion attempt {} timed out", attempts);
      continue;
    }
    if (result.transport != http::Transport::ok) {
      throw LlmError(LlmError::Kind::transport,
                     fmt::format("chat completion request failed: {}", result.transport_message),
                     attempts);
    }
    log::debug("chat completion attempt {} returned HTTP {}", attempts, result.status);
    if (result.status >= 200 && result.status < 300) {
      return {extract_content(result.body, attempts), BackendKind::remote, attempts};
    }
    if (retryable_status(result.status)) {
      last_was_timeout = false;
      last_problem = fmt::format("HTTP {}", result.status);
      continue;
    }
    throw LlmError(LlmError::Kind::non_retryable_status,
                   fmt::format("chat completion rejected with HTTP {}", result.status), attempts,
                   result.status);
  }
  if (last_was_timeout) {
    throw LlmError(LlmError::Kind::timeout,
                   fmt::format("chat completion timed out after {} attempt(s): {}", attempts,
                               last_problem),
                   attempts);
  }
  throw LlmError(LlmError::Kind::retries_exhausted,
                 fmt::format("chat completion failed after {} attempt(s): last {}", attempts,
                             last_problem),
                 attempts);
}

}  // namespace

std::string_view to_string(LlmError::Kind kind) {
  switch (kind) {
    case LlmError::Kind::missing_api_key: return "missing_api_key";
    case LlmError::Kind::timeout: return "timeout";
    case LlmError::Kind::transport: return "transport";
    case LlmError::Kind::non_retryable_status: return "non_retryable_status";
    case LlmError::Kind::retries_exhausted: return "retries_exhausted";
    case LlmError::Kind::protocol: return "protocol";
    case LlmError::Kind::unrecognized_payload: return "unrecognized_payload";
  }
  return "unknown";
}

std::vector<FieldIssue> check(const LlmBackendConfig& config) {
  std::vector<FieldIssue> issues;
  if (config.kind == BackendKind::remote) {
    if (!config.base_url || config.base_url->empty()) {
      issues.push_back({"base_url", "required for the remote backend"});
    }
    if (!config.model_name || config.model_name->empty()) {
      issues.push_back({"model_name", "required for the remote backend"});
    }
  }
  if (config.api_key_env_var.empty()) {
    issues.push_back({"api_key_env_var", "must be non-empty"});
  }
  if (config.timeout_ms <= 0) {
    issues.push_back({"timeout_ms", "must be positive"});
  }
  if (config.max_retries < 0) {
    issues.push_back({"max_retries", "must be non-negative"});
  }
  return issues;
}

CompletionResult complete(const LlmBackendConfig& config, const prompt::PromptBundle& bundle,
                          const CompletionHooks& hooks) {
  require_valid(config);
  require_valid(bundle);
  if (config.kind == BackendKind::offline) {
    return {offline_summarize(bundle.user_message), BackendKind::offline, 1};
  }
  return complete_remote(config, bundle, hooks);
}

void RequestLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return in_use_ < limit_; });
  ++in_use_;
}

void RequestLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --in_use_;
  }
  cv_.notify_one();
}

void RequestLimiter::set_limit(int limit) {
  {
    std::lock_guard lock(mutex_);
    limit_ = std::max(1, limit);
  }
  cv_.notify_all();
}

int RequestLimiter::limit() const {
  std::lock_guard lock(mutex_);
  return limit_;
}

RequestLimiter& remote_limiter() {
  static RequestLimiter limiter(2);
  return limiter;
}

}  // namespace drs::llm
