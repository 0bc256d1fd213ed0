#pragma once

#include <memory>

#include "memcost/core/error.hpp"
#include "memcost/core/pricing.hpp"
#include "memcost/llm_gateway/client.hpp"
#include "memcost/llm_gateway/config.hpp"
#include "memcost/llm_gateway/ledger.hpp"
#include "memcost/llm_gateway/mock.hpp"
#include "memcost/llm_gateway/openai_http.hpp"

namespace memcost::llm_gateway {

/// Shared ledger + concurrency limit; builds role clients over either the
/// offline mock or the HTTP transport.
class Gateway {
 public:
  explicit Gateway(std::ptrdiff_t concurrency = 4, Sleeper sleeper = nullptr)
      : ledger_(std::make_shared<RunLedger>()),
        limiter_(std::make_shared<ConcurrencyLimiter>(concurrency)),
        sleeper_(std::move(sleeper)) {}

  ChatClient chat(ModelRole role, const BackendConfig& cfg, const RoleRates& rates) const {
    if (role == ModelRole::embedder) throw ConfigError("the embedder role has no chat client");
    std::shared_ptr<ChatTransport> t;
    if (cfg.kind == BackendKind::mock) {
      t = MockChatTransport::from_config(cfg);
    } else {
      t = std::make_shared<OpenAiChatTransport>(cfg);
    }
    return chat(role, cfg, rates, std::move(t));
  }

  ChatClient chat(ModelRole role, const BackendConfig& cfg, const RoleRates& rates,
                  std::shared_ptr<ChatTransport> transport) const {
    return ChatClient(role, cfg, std::move(transport), rates, ledger_, limiter_, sleeper_);
  }

  EmbeddingClient embedder(const BackendConfig& cfg, const RoleRates& rates) const {
    std::shared_ptr<EmbeddingTransport> t;
    if (cfg.kind == BackendKind::mock) {
      t = MockEmbeddingTransport::from_config(cfg);
    } else {
      t = std::make_shared<OpenAiEmbeddingTransport>(cfg);
    }
    return embedder(cfg, rates, std::move(t));
  }

  EmbeddingClient embedder(const BackendConfig& cfg, const RoleRates& rates,
                           std::shared_ptr<EmbeddingTransport> transport) const {
    return EmbeddingClient(cfg, std::move(transport), rates, ledger_, limiter_, sleeper_);
  }

  RunLedger& ledger() const { return *ledger_; }
  std::shared_ptr<RunLedger> ledger_ptr() const { return ledger_; }

 private:
  std::shared_ptr<RunLedger> ledger_;
  std::shared_ptr<ConcurrencyLimiter> limiter_;
  Sleeper sleeper_;
};

}  // namespace memcost::llm_gateway
