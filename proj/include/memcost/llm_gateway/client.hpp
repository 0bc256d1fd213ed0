#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "memcost/core/error.hpp"
#include "memcost/core/hash.hpp"
#include "memcost/core/pricing.hpp"
#include "memcost/llm_gateway/config.hpp"
#include "memcost/llm_gateway/ledger.hpp"

namespace memcost::llm_gateway {

struct ChatMessage {
  std::string role;  // "system", "user" or "assistant"
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  RoleParams role_params;
  double timeout_s = 120.0;
};

struct ChatReply {
  std::string text;
  UsageRecord usage;
};

struct EmbeddingRequest {
  std::string model;
  std::vector<std::string> inputs;
  double timeout_s = 120.0;
};

struct EmbeddingReply {
  std::vector<std::vector<float>> vectors;
  UsageRecord usage;
};

/// Raised by a transport for a failed call. status is the HTTP status, or 0
/// for timeouts and connection failures.
class TransportFailure : public std::runtime_error {
 public:
  TransportFailure(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// 429, 500, 502, 503 and timeouts (status 0) are retried; anything else is not.
inline bool is_transient(int status) {
  return status == 0 || status == 429 || status == 500 || status == 502 || status == 503;
}

class BackendError : public Error {
 public:
  BackendError(const std::string& message, int attempts, std::vector<std::string> attempt_log)
      : Error(ErrorKind::backend, message + " after " + std::to_string(attempts) + " attempt(s)"),
        attempts_(attempts),
        attempt_log_(std::move(attempt_log)) {}

  int attempts() const { return attempts_; }
  const std::vector<std::string>& attempt_log() const { return attempt_log_; }

 private:
  int attempts_;
  std::vector<std::string> attempt_log_;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ChatReply send(const ChatRequest& request) = 0;
};

class EmbeddingTransport {
 public:
  virtual ~EmbeddingTransport() = default;
  virtual EmbeddingReply send(const EmbeddingRequest& request) = 0;
};

using Sleeper = std::function<void(std::chrono::duration<double>)>;

inline void real_sleep(std::chrono::duration<double> d) { std::this_thread::sleep_for(d); }

/// Bounds the number of in-flight requests across every client sharing it.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(std::ptrdiff_t limit = 4) : sem_(limit < 1 ? 1 : limit) {}

  template <typename Fn>
  auto run(Fn&& fn) {
    sem_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{sem_};
    return fn();
  }

 private:
  std::counting_semaphore<> sem_;
};

/// Shared plumbing of chat and embedding clients: retries with exponential
/// backoff and jitter, and one ledger entry per attempt.
class RetryingCaller {
 public:
  RetryingCaller(ModelRole role, BackendConfig cfg, RoleRates rates, std::shared_ptr<RunLedger> ledger,
                 std::shared_ptr<ConcurrencyLimiter> limiter, Sleeper sleeper)
      : role_(role),
        cfg_(std::move(cfg)),
        rates_(rates),
        ledger_(ledger ? std::move(ledger) : std::make_shared<RunLedger>()),
        limiter_(limiter ? std::move(limiter) : std::make_shared<ConcurrencyLimiter>()),
        sleeper_(sleeper ? std::move(sleeper) : Sleeper(real_sleep)),
        jitter_(std::make_shared<Jitter>(fnv1a64(cfg_.model_name))) {}

  const BackendConfig& config() const { return cfg_; }
  ModelRole role() const { return role_; }
  const RoleRates& rates() const { return rates_; }
  RunLedger& ledger() const { return *ledger_; }
  std::shared_ptr<RunLedger> ledger_ptr() const { return ledger_; }

  /// Calls `attempt()` until it returns or fails non-transiently. Returns the
  /// reply and the number of attempts used.
  template <typename Reply, typename Fn>
  std::pair<Reply, int> call(Fn&& attempt) const {
    std::vector<std::string> log;
    const int max_attempts = std::max(1, cfg_.retry.max_attempts);
    for (int n = 1;; ++n) {
      try {
        Reply reply = limiter_->run(attempt);
        ledger_->record({role_, cfg_.model_name, true, reply.usage, usage_cost(reply.usage, rates_)});
        return {std::move(reply), n};
      } catch (const TransportFailure& f) {
        ledger_->record({role_, cfg_.model_name, false, {}, {}});
        log.push_back("attempt " + std::to_string(n) + ": status " + std::to_string(f.status()) + ": " + f.what());
        if (!is_transient(f.status())) {
          throw BackendError(std::string(to_string(role_)) + " call failed with non-transient status " +
                                 std::to_string(f.status()),
                             n, std::move(log));
        }
        if (n >= max_attempts) {
          throw BackendError(std::string(to_string(role_)) + " call failed", n, std::move(log));
        }
        sleeper_(backoff(n));
      }
    }
  }

 private:
  std::chrono::duration<double> backoff(int attempt) const {
    std::uint64_t bits;
    {
      std::lock_guard lock(jitter_->mutex);
      bits = splitmix64(jitter_->state);
    }
    const double jitter = 0.5 + static_cast<double>(bits >> 11) * 0x1.0p-53;  // [0.5, 1.5)
    return std::chrono::duration<double>(cfg_.retry.backoff_base_s * std::ldexp(1.0, attempt - 1) * jitter);
  }

  ModelRole role_;
  BackendConfig cfg_;
  RoleRates rates_;
  std::shared_ptr<RunLedger> ledger_;
  std::shared_ptr<ConcurrencyLimiter> limiter_;
  Sleeper sleeper_;
  struct Jitter {
    explicit Jitter(std::uint64_t s) : state(s) {}
    std::mutex mutex;
    std::uint64_t state;
  };
  std::shared_ptr<Jitter> jitter_;
};

struct ChatExchange {
  std::vector<ChatMessage> request;
  std::string response;
  UsageRecord usage;
  int attempts = 1;
};

class ChatClient {
 public:
  ChatClient(ModelRole role, BackendConfig cfg, std::shared_ptr<ChatTransport> transport, RoleRates rates,
             std::shared_ptr<RunLedger> ledger = nullptr, std::shared_ptr<ConcurrencyLimiter> limiter = nullptr,
             Sleeper sleeper = nullptr)
      : caller_(role, std::move(cfg), rates, std::move(ledger), std::move(limiter), std::move(sleeper)),
        transport_(std::move(transport)) {
    if (!transport_) throw ConfigError("chat client needs a transport");
  }

  ChatExchange complete(std::vector<ChatMessage> messages) const {
    if (messages.empty()) throw InvalidInput("complete: no messages");
    ChatRequest req{caller_.config().model_name, messages, caller_.config().role_params, caller_.config().timeout_s};
    auto [reply, attempts] = caller_.call<ChatReply>([&] { return transport_->send(req); });
    return {std::move(messages), std::move(reply.text), reply.usage, attempts};
  }

  const BackendConfig& config() const { return caller_.config(); }
  ModelRole role() const { return caller_.role(); }
  const RoleRates& rates() const { return caller_.rates(); }
  RunLedger& ledger() const { return caller_.ledger(); }

 private:
  RetryingCaller caller_;
  std::shared_ptr<ChatTransport> transport_;
};

struct EmbeddingResult {
  std::vector<std::vector<float>> vectors;
  UsageRecord usage;
  int attempts = 1;
};

class EmbeddingClient {
 public:
  EmbeddingClient(BackendConfig cfg, std::shared_ptr<EmbeddingTransport> transport, RoleRates rates,
                  std::shared_ptr<RunLedger> ledger = nullptr, std::shared_ptr<ConcurrencyLimiter> limiter = nullptr,
                  Sleeper sleeper = nullptr)
      : caller_(ModelRole::embedder, std::move(cfg), rates, std::move(ledger), std::move(limiter),
                std::move(sleeper)),
        transport_(std::move(transport)) {
    if (!transport_) throw ConfigError("embedding client needs a transport");
  }

  EmbeddingResult embed(const std::vector<std::string>& texts) const {
    if (texts.empty()) throw InvalidInput("embed: no input texts");
    EmbeddingRequest req{caller_.config().model_name, texts, caller_.config().timeout_s};
    auto [reply, attempts] = caller_.call<EmbeddingReply>([&] { return transport_->send(req); });
    if (reply.vectors.size() != texts.size()) {
      throw BackendError("embedder returned " + std::to_string(reply.vectors.size()) + " vectors for " +
                             std::to_string(texts.size()) + " inputs",
                         attempts, {});
    }
    return {std::move(reply.vectors), reply.usage, attempts};
  }

  std::size_t dimension() const { return caller_.config().dimension; }
  const BackendConfig& config() const { return caller_.config(); }
  const RoleRates& rates() const { return caller_.rates(); }

 private:
  RetryingCaller caller_;
  std::shared_ptr<EmbeddingTransport> transport_;
};

}  // namespace memcost::llm_gateway
