#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "memcost/core/dialogue.hpp"
#include "memcost/core/pricing.hpp"
#include "memcost/core/time.hpp"
#include "memcost/llm_gateway/client.hpp"
#include "memcost/llm_gateway/config.hpp"
#include "memcost/llm_gateway/ledger.hpp"
#include "memcost/llm_gateway/mock.hpp"

namespace testsupport {

using namespace memcost;

inline Timestamp ts(const char* text) { return parse_timestamp(text); }

inline Message msg(Role role, std::string content, const char* when = "2023-05-08T13:56:00",
                   std::string speaker = "") {
  if (speaker.empty()) speaker = role == Role::user ? "Alice" : "Assistant";
  return {role, std::move(content), ts(when), std::move(speaker)};
}

/// One conversation; each inner vector is a session, sessions an hour apart.
inline Conversation conversation(const std::string& user, const std::vector<std::vector<std::string>>& sessions) {
  Conversation c;
  c.user_id = user;
  auto t = ts("2023-05-08T09:00:00");
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    Session sess;
    sess.id = "s" + std::to_string(s + 1);
    sess.timestamp = t;
    for (std::size_t i = 0; i < sessions[s].size(); ++i) {
      Message m;
      m.role = i % 2 == 0 ? Role::user : Role::assistant;
      m.speaker = m.role == Role::user ? "Alice" : "Assistant";
      m.content = sessions[s][i];
      m.timestamp = t;
      t += std::chrono::minutes(1);
      sess.messages.push_back(std::move(m));
    }
    t += std::chrono::hours(1);
    c.sessions.push_back(std::move(sess));
  }
  return c;
}

inline void no_sleep(std::chrono::duration<double>) {}

/// Counts backoff requests instead of sleeping.
struct SleepRecorder {
  std::shared_ptr<std::vector<double>> waits = std::make_shared<std::vector<double>>();
  llm_gateway::Sleeper sleeper() const {
    auto w = waits;
    return [w](std::chrono::duration<double> d) { w->push_back(d.count()); };
  }
};

inline llm_gateway::BackendConfig mock_backend(ModelRole role, int max_attempts = 4) {
  auto c = llm_gateway::default_backend(role);
  c.retry.max_attempts = max_attempts;
  c.retry.backoff_base_s = 0.0;
  return c;
}

inline llm_gateway::ChatClient chat_client(ModelRole role, std::shared_ptr<llm_gateway::ChatTransport> t,
                                           std::shared_ptr<llm_gateway::RunLedger> ledger = nullptr,
                                           int max_attempts = 4) {
  return llm_gateway::ChatClient(role, mock_backend(role, max_attempts), std::move(t),
                                 PricingSchedule::openai_defaults().at(role), std::move(ledger), nullptr, no_sleep);
}

inline llm_gateway::EmbeddingClient embedding_client(std::size_t dim = 1536,
                                                     std::shared_ptr<llm_gateway::RunLedger> ledger = nullptr) {
  auto cfg = mock_backend(ModelRole::embedder);
  cfg.dimension = dim;
  return llm_gateway::EmbeddingClient(cfg, std::make_shared<llm_gateway::MockEmbeddingTransport>(dim),
                                      PricingSchedule::openai_defaults().at(ModelRole::embedder), std::move(ledger),
                                      nullptr, no_sleep);
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("memcost-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::vector<float> random_unit_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> nd(0.0f, 1.0f);
  std::vector<float> v(dim);
  double n = 0;
  for (auto& x : v) {
    x = nd(rng);
    n += static_cast<double>(x) * x;
  }
  const float inv = static_cast<float>(1.0 / std::sqrt(n));
  for (auto& x : v) x *= inv;
  return v;
}

}  // namespace testsupport
