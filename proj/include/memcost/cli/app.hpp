#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "memcost/cli/run_config.hpp"
#include "memcost/core/dataset.hpp"
#include "memcost/core/error.hpp"
#include "memcost/core/stats.hpp"
#include "memcost/cost_model/cost_model.hpp"
#include "memcost/cost_model/heatmap.hpp"
#include "memcost/eval_harness/harness.hpp"
#include "memcost/llm_gateway/factory.hpp"
#include "memcost/memory_engine/ingest.hpp"
#include "memcost/memory_engine/memory_store.hpp"

namespace memcost::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

namespace detail {

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw InvalidInput(std::string(what) + " path is required");
  if (!std::filesystem::exists(path)) throw IoError(std::string(what) + " '" + path + "' not found");
}

inline std::string pct(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1) << v << "%";
  return os.str();
}

inline memory_engine::MemoryStore open_store(const RunConfig& cfg, std::size_t dimension) {
  if (memory_engine::MemoryStore::exists(cfg.index_path)) {
    auto store = memory_engine::MemoryStore::load(cfg.index_path);
    if (store.dimension() != dimension) {
      throw ConfigError("index '" + cfg.index_path + "' holds " + std::to_string(store.dimension()) +
                        "-d vectors but the embedder produces " + std::to_string(dimension));
    }
    return store;
  }
  return memory_engine::MemoryStore(dimension, cfg.hnsw);
}

struct Runtime {
  explicit Runtime(RunConfig c) : cfg(std::move(c)), gateway(static_cast<std::ptrdiff_t>(cfg.concurrency)) {}

  llm_gateway::ChatClient chat(ModelRole role) const {
    return gateway.chat(role, cfg.backend(role), cfg.pricing.at(role));
  }
  llm_gateway::EmbeddingClient embedder() const {
    return gateway.embedder(cfg.backend(ModelRole::embedder), cfg.pricing.at(ModelRole::embedder));
  }
  memory_engine::IngestOptions ingest_options() const {
    memory_engine::IngestOptions o;
    o.batch_size = cfg.batch_size;
    o.max_chars = cfg.max_chars;
    o.workers = cfg.concurrency;
    o.tokenizer = cfg.tokenizer;
    return o;
  }

  RunConfig cfg;
  llm_gateway::Gateway gateway;
};

struct IngestOutcome {
  std::vector<memory_engine::WriteReceipt> receipts;
  Money write_cost;
  bool partial = false;
};

inline IngestOutcome ingest_dataset(const Dataset& ds, const Runtime& rt, memory_engine::MemoryStore& store) {
  IngestOutcome out;
  const auto extractor = rt.chat(ModelRole::extractor);
  const auto embedder = rt.embedder();
  for (const auto& conv : ds.conversations) {
    auto r = memory_engine::ingest_conversation(conv, extractor, embedder, store, rt.ingest_options());
    out.write_cost += r.write_cost;
    out.partial = out.partial || r.partial;
    out.receipts.push_back(std::move(r));
  }
  store.save(rt.cfg.index_path);
  return out;
}

}  // namespace detail

/// Entry point of the `memcost` tool. Returns 0 on success, 1 on a usage
/// error and 2 on a runtime error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr,
               const EnvLookup& env = process_env) {
  CLI::App app{"memcost: memory-system vs long-context cost and accuracy toolkit", "memcost"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  std::string config_path;
  app.add_option("-c,--config", config_path, "Run config JSON (needed by ingest, query, eval)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Write phase: extract and index facts from a dataset");
  std::string ingest_dataset_path;
  ingest->add_option("dataset", ingest_dataset_path, "Normalized dataset JSON");

  // query
  auto* query = app.add_subcommand("query", "Answer one question from a user's memory");
  std::string query_user, query_text;
  std::size_t query_top_k = 0;
  query->add_option("user_id", query_user, "User id")->required();
  query->add_option("question", query_text, "Question text")->required();
  query->add_option("-k,--top-k", query_top_k, "Facts to retrieve (default from config)");

  // eval
  auto* eval = app.add_subcommand("eval", "Answer and judge every question of a dataset");
  std::string eval_mode, eval_dataset_path, eval_out, eval_summary;
  bool eval_dry_run = false;
  eval->add_option("--mode", eval_mode, "memory or lc")->required()->check(CLI::IsMember({"memory", "lc"}));
  eval->add_option("dataset", eval_dataset_path, "Normalized dataset JSON");
  eval->add_option("-o,--out", eval_out, "Write results JSONL here instead of stdout");
  eval->add_option("--summary", eval_summary, "Write the summary JSON here instead of stdout");
  eval->add_flag("--dry-run", eval_dry_run, "Retrieve and build prompts only; report projected costs");

  // stats
  auto* stats = app.add_subcommand("stats", "Token statistics of a dataset");
  std::string stats_dataset_path;
  stats->add_option("dataset", stats_dataset_path, "Normalized dataset JSON")->required();

  // cost
  auto* cost = app.add_subcommand("cost", "Cumulative cost per user at one context length");
  std::int64_t cost_l = 0;
  std::vector<std::int64_t> cost_turns{1, 5, 10, 15, 20};
  std::string cost_format = "table";
  cost->add_option("--L", cost_l, "Context length in tokens")->required()->check(CLI::NonNegativeNumber);
  cost->add_option("--turns", cost_turns, "Comma-separated turn counts")->delimiter(',');
  cost->add_option("--format", cost_format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

  // breakeven
  auto* be = app.add_subcommand("breakeven", "Break-even turn count per context length");
  std::vector<std::int64_t> be_l;
  std::string be_format = "table";
  std::int64_t be_n_max = cost_model::kDefaultBreakEvenHorizon;
  be->add_option("--L", be_l, "Comma-separated context lengths")->required()->delimiter(',');
  be->add_option("--n-max", be_n_max, "Largest turn count searched")->check(CLI::PositiveNumber);
  be->add_option("--format", be_format, "table or csv")->check(CLI::IsMember({"table", "csv"}));

  // heatmap
  auto* hm = app.add_subcommand("heatmap", "Cost-difference grid over context length and turns");
  std::string hm_l, hm_n, hm_csv, hm_pgm, hm_boundary;
  hm->add_option("--L", hm_l, "Context lengths min:max:steps (default 10000:500000:50)");
  hm->add_option("--N", hm_n, "Turn counts min:max:steps (default 1:50:50)");
  hm->add_option("--csv", hm_csv, "Write the grid CSV here (default: stdout)");
  hm->add_option("--pgm", hm_pgm, "Write a PGM image here");
  hm->add_option("--boundary", hm_boundary, "Write the break-even boundary CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto load_runtime = [&]() {
    if (config_path.empty()) {
      if (auto v = env("MEMCOST_CONFIG")) config_path = *v;
    }
    if (config_path.empty()) throw ConfigError("this command needs --config (or MEMCOST_CONFIG)");
    return detail::Runtime(load_config(config_path, env));
  };
  auto cost_params = [&]() {
    if (config_path.empty()) {
      if (auto v = env("MEMCOST_CONFIG")) config_path = *v;
    }
    if (!config_path.empty()) {
      auto cfg = load_config(config_path, env);
      if (cfg.cost_model) return *cfg.cost_model;
    }
    return cost_model::CostParams{};
  };

  try {
    if (*ingest) {
      detail::Runtime rt = load_runtime();
      const std::string path = ingest_dataset_path.empty() ? rt.cfg.dataset_path : ingest_dataset_path;
      detail::require_file(path, "dataset");
      const Dataset ds = load_dataset(path);
      auto store = detail::open_store(rt.cfg, rt.cfg.backend(ModelRole::embedder).dimension);
      auto res = detail::ingest_dataset(ds, rt, store);
      for (const auto& r : res.receipts) out << memory_engine::to_json(r).dump() << "\n";
      out << "write_cost=" << res.write_cost.to_usd(6) << " records=" << store.record_count() << "\n";
      if (res.partial) err << "warning: some segments failed; re-run ingest to retry them\n";
      out << rt.gateway.ledger().summary_line() << "\n";
      return kExitOk;
    }

    if (*query) {
      detail::Runtime rt = load_runtime();
      if (!memory_engine::MemoryStore::exists(rt.cfg.index_path)) {
        throw IoError("no memory store at '" + rt.cfg.index_path + "'; run ingest first");
      }
      const auto store = detail::open_store(rt.cfg, rt.cfg.backend(ModelRole::embedder).dimension);
      const auto embedder = rt.embedder();
      const auto reader = rt.chat(ModelRole::reader);
      Question q{"query", query_user, query_text, "-", std::nullopt};
      const auto t = eval_harness::answer_with_memory(q, query_user, store, embedder, reader,
                                                      {query_top_k ? query_top_k : rt.cfg.top_k});
      out << "answer: " << t.answer_text << "\n";
      out << "retrieved: " << t.retrieved.size() << " facts, " << t.retrieved_token_count.value() << " tokens"
          << (t.empty_context ? " (empty store)" : "") << "\n";
      for (std::size_t i = 0; i < t.retrieved.size(); ++i) {
        out << "  " << (i + 1) << ". [" << std::fixed << std::setprecision(4) << t.retrieved[i].similarity << "] "
            << t.retrieved[i].text << "\n";
      }
      out << "read_cost=" << t.read_cost.to_usd(6) << "\n";
      out << rt.gateway.ledger().summary_line() << "\n";
      return kExitOk;
    }

    if (*eval) {
      detail::Runtime rt = load_runtime();
      const std::string path = eval_dataset_path.empty() ? rt.cfg.dataset_path : eval_dataset_path;
      detail::require_file(path, "dataset");
      const Dataset ds = load_dataset(path);
      const auto mode = eval_harness::mode_from_string(eval_mode);
      eval_harness::EvalOptions opts{mode, rt.cfg.top_k, rt.cfg.concurrency};

      auto emit = [&](const std::string& target, const std::string& text) {
        if (target.empty()) {
          out << text;
        } else {
          write_text_file(target, text);
        }
      };

      std::optional<memory_engine::MemoryStore> store;
      std::optional<llm_gateway::EmbeddingClient> embedder;
      if (mode == eval_harness::Mode::memory) {
        store.emplace(detail::open_store(rt.cfg, rt.cfg.backend(ModelRole::embedder).dimension));
        embedder.emplace(rt.embedder());
      }

      if (eval_dry_run) {
        eval_harness::EvalBackends b;
        if (store) b.store = &*store;
        if (embedder) b.embedder = &*embedder;
        const auto rep = eval_harness::dry_run_eval(ds, b, opts, rt.cfg.cost_model.value_or(cost_model::CostParams{}),
                                                    rt.cfg.tokenizer);
        emit(eval_out, eval_harness::dry_run_jsonl(rep, rt.cfg.tokenizer));
        emit(eval_summary, eval_harness::dry_run_summary(rep).dump(2) + "\n");
        out << rt.gateway.ledger().summary_line() << "\n";
        return kExitOk;
      }

      std::optional<Money> write_cost;
      std::optional<llm_gateway::ChatClient> reader, lc;
      if (mode == eval_harness::Mode::memory) {
        auto ing = detail::ingest_dataset(ds, rt, *store);
        if (ing.partial) err << "warning: ingest left failed segments; answers use the facts that were stored\n";
        write_cost = ing.write_cost;
        reader.emplace(rt.chat(ModelRole::reader));
      } else {
        lc.emplace(rt.chat(ModelRole::long_context));
      }
      const auto judge = rt.chat(ModelRole::judge);
      eval_harness::EvalBackends b;
      if (store) b.store = &*store;
      if (embedder) b.embedder = &*embedder;
      if (reader) b.reader = &*reader;
      if (lc) b.long_context = &*lc;
      b.judge = &judge;
      const auto rep = eval_harness::run_eval(ds, b, opts);
      emit(eval_out, eval_harness::results_jsonl(rep));
      emit(eval_summary, eval_harness::summary_json(rep, rt.gateway.ledger().totals(), write_cost).dump(2) + "\n");
      out << rt.gateway.ledger().summary_line() << "\n";
      return kExitOk;
    }

    if (*stats) {
      detail::require_file(stats_dataset_path, "dataset");
      std::string tokenizer(kApproxTokenizer);
      if (!config_path.empty()) tokenizer = load_config(config_path, env).tokenizer;
      const Dataset ds = load_dataset(stats_dataset_path);
      auto line = [&](const char* label, const StatsSummary& s) {
        out << std::left << std::setw(24) << label << " n=" << s.n << " min=" << s.min << " max=" << s.max
            << " median=" << s.median << " mean=" << s.mean_string() << "\n";
      };
      out << "tokenizer: " << tokenizer << "\n";
      if (!ds.conversations.empty()) {
        line("tokens per conversation", dataset_stats(std::span<const Conversation>(ds.conversations), tokenizer));
      }
      if (!ds.questions.empty()) {
        line("tokens per question", dataset_stats(std::span<const Question>(ds.questions), tokenizer));
      }
      std::size_t messages = 0;
      for (const auto& c : ds.conversations) messages += c.message_count();
      out << "conversations=" << ds.conversations.size() << " messages=" << messages
          << " questions=" << ds.questions.size() << "\n";
      return kExitOk;
    }

    if (*cost) {
      const auto p = cost_params().with_context(cost_l);
      const auto t = cost_model::turn_costs(p);
      const auto curve = cost_model::cost_curve(p, cost_turns);
      if (cost_format == "csv") {
        out << "N,long_context_usd,memory_usd,savings_pct\n";
        for (const auto& pt : curve) {
          out << pt.n << "," << pt.c_lc.to_string(6) << "," << pt.c_mem.to_string(6) << ","
              << std::fixed << std::setprecision(2) << cost_model::savings_pct(t, pt.n) << "\n";
        }
        return kExitOk;
      }
      out << "Cumulative cost per user at L = " << cost_l << " tokens\n";
      out << std::left << std::setw(8) << "N" << std::setw(16) << "Long-Context" << std::setw(12) << "Memory"
          << "Savings\n";
      for (const auto& pt : curve) {
        out << std::left << std::setw(8) << pt.n << std::setw(16) << pt.c_lc.to_usd(4) << std::setw(12)
            << pt.c_mem.to_usd(4) << detail::pct(cost_model::savings_pct(t, pt.n)) << "\n";
      }
      return kExitOk;
    }

    if (*be) {
      const auto rows = cost_model::sensitivity_table(be_l, cost_params(), be_n_max);
      auto nbe = [](const cost_model::SensitivityRow& r) {
        return r.n_be.n_be ? std::to_string(*r.n_be.n_be) : std::string("none");
      };
      if (be_format == "csv") {
        out << "L,write_usd,lc_turn1_usd,lc_turn_n_usd,n_be\n";
        for (const auto& r : rows) {
          out << r.context_tokens << "," << r.write_cost.to_string(6) << "," << r.lc_turn1.to_string(6) << ","
              << r.lc_turn_n.to_string(6) << "," << (r.n_be.n_be ? std::to_string(*r.n_be.n_be) : "") << "\n";
        }
        return kExitOk;
      }
      out << std::left << std::setw(10) << "L" << std::setw(12) << "Write Cost" << std::setw(12) << "LC Turn 1"
          << std::setw(12) << "LC Turn N" << "Break-even N\n";
      for (const auto& r : rows) {
        out << std::left << std::setw(10) << r.context_tokens << std::setw(12) << r.write_cost.to_usd(4)
            << std::setw(12) << r.lc_turn1.to_usd(4) << std::setw(12) << r.lc_turn_n.to_usd(4) << nbe(r) << "\n";
      }
      return kExitOk;
    }

    if (*hm) {
      const auto grid = cost_model::heatmap_grid(
          hm_l.empty() ? cost_model::kDefaultContextGrid : cost_model::GridRange::parse(hm_l),
          hm_n.empty() ? cost_model::kDefaultTurnGrid : cost_model::GridRange::parse(hm_n), cost_params());
      auto to_file = [](const std::string& path, auto&& writer, bool binary) {
        std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
        if (!f) throw IoError("cannot write '" + path + "'");
        writer(f);
        if (!f) throw IoError("failed writing '" + path + "'");
      };
      if (hm_csv.empty() && hm_pgm.empty() && hm_boundary.empty()) {
        cost_model::write_heatmap_csv(out, grid);
        return kExitOk;
      }
      if (!hm_csv.empty()) to_file(hm_csv, [&](std::ostream& o) { cost_model::write_heatmap_csv(o, grid); }, false);
      if (!hm_pgm.empty()) to_file(hm_pgm, [&](std::ostream& o) { cost_model::write_heatmap_pgm(o, grid); }, true);
      if (!hm_boundary.empty()) {
        to_file(hm_boundary, [&](std::ostream& o) { cost_model::write_boundary_csv(o, grid); }, false);
      }
      out << "heatmap " << grid.context_lengths.size() << "x" << grid.turns.size() << " written\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace memcost::cli
