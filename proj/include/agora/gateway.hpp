#pragma once

#include <algorithm>
#include <cmath>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "agora/error.hpp"

namespace agora {

enum class Role { System, User, Assistant };

constexpr std::string_view to_string(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "?";
}

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

// Sampling defaults are the reference experiment parameters.
struct SamplingParams {
  double temperature = 1.0;
  double top_p = 1.0;
  double presence_penalty = 0.0;
  double frequency_penalty = 0.0;
  int max_tokens = 1024;

  friend bool operator==(const SamplingParams&, const SamplingParams&) = default;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  SamplingParams sampling;
  std::string model_name;

  static ChatRequest make(std::string model, std::string system_prompt, std::string user_prompt,
                          SamplingParams sampling = {}) {
    ChatRequest r;
    r.model_name = std::move(model);
    r.sampling = sampling;
    if (!system_prompt.empty()) r.messages.push_back({Role::System, std::move(system_prompt)});
    if (!user_prompt.empty()) r.messages.push_back({Role::User, std::move(user_prompt)});
    return r;
  }

  // Content of the first message with the given role, or "".
  const std::string& content(Role role) const {
    static const std::string empty;
    for (const auto& m : messages)
      if (m.role == role) return m.content;
    return empty;
  }
};

inline void validate(const ChatRequest& req) {
  if (req.messages.empty()) throw PreconditionViolation("chat request has no messages");
  for (std::size_t i = 1; i < req.messages.size(); ++i) {
    if (req.messages[i].role == Role::System)
      throw PreconditionViolation("system message must come first");
  }
}

// OpenAI-compatible request body. Key set is fixed.
inline nlohmann::json to_wire_json(const ChatRequest& req) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : req.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  return {
      {"model", req.model_name},
      {"messages", std::move(messages)},
      {"temperature", req.sampling.temperature},
      {"top_p", req.sampling.top_p},
      {"presence_penalty", req.sampling.presence_penalty},
      {"frequency_penalty", req.sampling.frequency_penalty},
      {"max_tokens", req.sampling.max_tokens},
  };
}

struct ChatResponse {
  std::string text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  std::int64_t latency_ms = 0;
};

// Transport behind the gateway. Implementations throw TransientFailure for
// anything worth retrying and a non-transient agora::Error otherwise.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse send(const ChatRequest& req) = 0;
};

// Counting limiter on outstanding calls. Records the peak for diagnostics.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw PreconditionViolation("max_in_flight must be >= 1");
  }

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < capacity_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      --in_flight_;
    }
    cv_.notify_one();
  }

  int capacity() const { return capacity_; }
  int peak() const {
    std::lock_guard lock(mu_);
    return peak_;
  }

 private:
  const int capacity_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int in_flight_ = 0;
  int peak_ = 0;
};

struct GatewayOptions {
  int max_in_flight = 1;
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{1000};
  std::chrono::milliseconds backoff_cap{30000};
  double jitter = 0.2;
  std::uint64_t jitter_seed = 0x5eed;
};

struct GatewayStats {
  std::atomic<std::int64_t> calls{0};
  std::atomic<std::int64_t> attempts{0};
  std::atomic<std::int64_t> failures{0};
};

// Single chokepoint for completion calls: bounded concurrency plus retries
// with exponential backoff. Copies made through with_backend() share the
// limiter and statistics, so the cap holds across all of them.
class Gateway {
 public:
  Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options)
      : backend_(std::move(backend)),
        shared_(std::make_shared<Shared>(options)) {}

  Gateway with_backend(std::shared_ptr<ChatBackend> backend) const {
    Gateway g = *this;
    g.backend_ = std::move(backend);
    return g;
  }

  ChatResponse complete(const ChatRequest& req) const {
    validate(req);
    shared_->stats.calls.fetch_add(1);
    const auto& opt = shared_->options;
    for (int attempt = 0;; ++attempt) {
      shared_->stats.attempts.fetch_add(1);
      try {
        shared_->limiter.acquire();
        struct Release {
          InFlightLimiter& l;
          ~Release() { l.release(); }
        } guard{shared_->limiter};
        return backend_->send(req);
      } catch (const TransientFailure& e) {
        if (attempt >= opt.max_retries) {
          shared_->stats.failures.fetch_add(1);
          throw EndpointUnreachable("giving up after " + std::to_string(attempt + 1) + " attempts: " + e.what());
        }
      } catch (...) {
        shared_->stats.failures.fetch_add(1);
        throw;
      }
      std::this_thread::sleep_for(backoff_delay(attempt));
    }
  }

  // Delay before retry number `attempt + 1`: base * 2^attempt, capped, with
  // uniform jitter of +-options.jitter.
  std::chrono::milliseconds backoff_delay(int attempt) const {
    const auto& opt = shared_->options;
    const double raw = static_cast<double>(opt.backoff_base.count()) * std::pow(2.0, attempt);
    const double capped = std::min(raw, static_cast<double>(opt.backoff_cap.count()));
    double factor;
    {
      std::lock_guard lock(shared_->rng_mu);
      factor = std::uniform_real_distribution<double>(1.0 - opt.jitter, 1.0 + opt.jitter)(shared_->rng);
    }
    return std::chrono::milliseconds(static_cast<std::int64_t>(capped * factor));
  }

  const GatewayOptions& options() const { return shared_->options; }
  const GatewayStats& stats() const { return shared_->stats; }
  const InFlightLimiter& limiter() const { return shared_->limiter; }

 private:
  struct Shared {
    explicit Shared(const GatewayOptions& o) : options(o), limiter(o.max_in_flight), rng(o.jitter_seed) {}
    GatewayOptions options;
    InFlightLimiter limiter;
    GatewayStats stats;
    std::mutex rng_mu;
    std::mt19937_64 rng;
  };

  std::shared_ptr<ChatBackend> backend_;
  std::shared_ptr<Shared> shared_;
};

}  // namespace agora
