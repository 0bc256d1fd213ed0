#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "memcost/cli/app.hpp"
#include "memcost/cli/run_config.hpp"
#include "support.hpp"

using namespace memcost;
using namespace memcost::cli;

namespace {

const std::string kSamples = MEMCOST_SAMPLES_DIR;

struct Env {
  std::map<std::string, std::string> vars;
  EnvLookup lookup() const {
    return [v = vars](const std::string& k) -> std::optional<std::string> {
      auto it = v.find(k);
      if (it == v.end()) return std::nullopt;
      return it->second;
    };
  }
};

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args, const Env& env = {}) {
  std::vector<const char*> argv{"memcost"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err, env.lookup());
  return {code, out.str(), err.str()};
}

nlohmann::json minimal_mock() {
  return nlohmann::json::parse(R"({
    "backends": {"reader": {"kind": "mock"}, "embedder": {"kind": "mock", "dimension": 32}},
    "pricing": "openai_defaults"
  })");
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

// ---- config

TEST(Config, MinimalMockConfig) {
  const auto c = config_from_json(minimal_mock(), Env{}.lookup());
  EXPECT_EQ(c.backend(ModelRole::embedder).dimension, 32u);
  EXPECT_EQ(c.top_k, 20u);
  EXPECT_EQ(c.index_path, "memcost-index");
  EXPECT_THROW(c.backend(ModelRole::judge), ConfigError);
  EXPECT_FALSE(c.cost_model.has_value());
}

TEST(Config, MissingPricingIsConfigError) {
  auto j = minimal_mock();
  j.erase("pricing");
  try {
    config_from_json(j, Env{}.lookup());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("pricing"), std::string::npos);
  }
}

TEST(Config, RoundTrip) {
  auto j = minimal_mock();
  j["cost_model"] = {{"write", "0.5"}, {"read_per_turn", "0.002"}};
  j["hnsw"] = {{"m", 8}, {"ef_search", 40}};
  j["pricing"] = {{"reader", {{"input", "0.25"}, {"output", 2}}}, {"embedder", {{"input", "0.02"}, {"output", "0"}}}};
  const auto c = config_from_json(j, Env{}.lookup());
  EXPECT_EQ(c.pricing.at(ModelRole::reader).cached_input, Rate::usd_per_million("0.025"));
  EXPECT_EQ(config_from_json(to_json(c), Env{}.lookup()), c);
}

TEST(Config, EnvironmentOverrides) {
  Env env;
  env.vars = {{"MEMCOST_INDEX_PATH", "/tmp/x"},
              {"MEMCOST_TOP_K", "7"},
              {"MEMCOST_READER_MODEL", "other/model"},
              {"MEMCOST_EMBEDDER_BASE_URL", "http://localhost:1/v1"}};
  const auto c = config_from_json(minimal_mock(), env.lookup());
  EXPECT_EQ(c.index_path, "/tmp/x");
  EXPECT_EQ(c.top_k, 7u);
  EXPECT_EQ(c.backend(ModelRole::reader).model_name, "other/model");
  EXPECT_EQ(c.backend(ModelRole::embedder).base_url, "http://localhost:1/v1");
  env.vars = {{"MEMCOST_TOP_K", "zero"}};
  EXPECT_THROW(config_from_json(minimal_mock(), env.lookup()), ConfigError);
}

TEST(Config, MalformedFieldsAreNamed) {
  auto expect_field = [](nlohmann::json j, const std::string& field) {
    try {
      config_from_json(j, Env{}.lookup());
      ADD_FAILURE() << "accepted " << j.dump();
    } catch (const ConfigError& e) {
      EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
    }
  };
  auto j = minimal_mock();
  j["top_k"] = 0;
  expect_field(j, "top_k");
  j = minimal_mock();
  j["backends"]["oracle"] = nlohmann::json::object();
  expect_field(j, "backends.oracle");
  j = minimal_mock();
  j["pricing"] = {{"reader", {{"input", "cheap"}, {"output", "1"}}}};
  expect_field(j, "pricing.reader.input");
  j = minimal_mock();
  j["pricing"] = {{"reader", {{"input", "1"}, {"output", "1"}}}};
  expect_field(j, "embedder");  // configured but unpriced
  j = minimal_mock();
  j["tokenizer"] = "nonexistent";
  expect_field(j, "nonexistent");
  j = minimal_mock();
  j["backends"]["reader"]["api_key"] = "sk-x";
  expect_field(j, "backends.reader.api_key");
}

TEST(Config, LoadFromFile) {
  testsupport::TempDir dir;
  EXPECT_THROW(load_config(dir / "missing.json", Env{}.lookup()), Error);
  std::ofstream(dir / "bad.json") << "{ not json";
  EXPECT_THROW(load_config(dir / "bad.json", Env{}.lookup()), ConfigError);
  const auto c = load_config(kSamples + "/mock_config.json", Env{}.lookup());
  EXPECT_EQ(c.backends.size(), 5u);
  EXPECT_EQ(load_config(kSamples + "/openrouter_config.json", Env{}.lookup()).backend(ModelRole::judge).kind,
            llm_gateway::BackendKind::openai);
}

// ---- analysis commands

TEST(Cli, NoArgumentsIsUsageError) {
  const auto r = invoke({});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(invoke({"cost"}).code, kExitUsage);           // --L required
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(invoke({"cost", "--L", "-5"}).code, kExitUsage);
  EXPECT_EQ(invoke({"--help"}).code, kExitOk);
}

TEST(Cli, CostTable) {
  const auto r = invoke({"cost", "--L", "101601"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 7u);
  EXPECT_NE(ls[2].find("$0.0264"), std::string::npos) << ls[2];  // N=1 long-context
  EXPECT_NE(ls[6].find("$0.0947"), std::string::npos) << ls[6];
  EXPECT_NE(ls[6].find("26.4%"), std::string::npos) << ls[6];
}

TEST(Cli, CostCsvCustomTurns) {
  const auto r = invoke({"cost", "--L", "0", "--turns", "1,2", "--format", "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(lines(r.out).front(), "N,long_context_usd,memory_usd,savings_pct");
  EXPECT_EQ(lines(r.out).size(), 3u);
}

TEST(Cli, BreakevenTable) {
  const auto r = invoke({"breakeven", "--L", "30000,100000,200000,500000"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ls = lines(r.out);
  ASSERT_EQ(ls.size(), 5u);
  EXPECT_NE(ls[1].find("13"), std::string::npos);
  EXPECT_EQ(ls[2].substr(ls[2].size() - 2), "10");
  EXPECT_EQ(ls[4].substr(ls[4].size() - 1), "9");
  const auto none = invoke({"breakeven", "--L", "0"});
  EXPECT_NE(none.out.find("none"), std::string::npos);
  const auto csv = invoke({"breakeven", "--L", "100000", "--format", "csv"});
  EXPECT_EQ(lines(csv.out)[1], "100000,0.042950,0.026050,0.003550,10");
}

TEST(Cli, CostModelOverridesFromConfig) {
  testsupport::TempDir dir;
  auto j = minimal_mock();
  j["cost_model"] = {{"read_per_turn", "0.01"}};
  std::ofstream(dir / "c.json") << j.dump();
  const auto r = invoke({"-c", (dir / "c.json").string(), "breakeven", "--L", "100000", "--format", "csv"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(lines(r.out)[1], "100000,0.042950,0.026050,0.003550,");  // read now costs more than LC turns
}

TEST(Cli, HeatmapFiles) {
  testsupport::TempDir dir;
  const auto csv = (dir / "h.csv").string(), pgm = (dir / "h.pgm").string(), b = (dir / "b.csv").string();
  const auto r = invoke({"heatmap", "--L", "10000:500000:5", "--N", "1:20:20", "--csv", csv, "--pgm", pgm, "--boundary", b});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(lines(read_text_file(csv)).size(), 101u);
  EXPECT_EQ(read_text_file(pgm).rfind("P5\n20 5\n255\n", 0), 0u);
  EXPECT_EQ(lines(read_text_file(b)).size(), 6u);
  EXPECT_EQ(invoke({"heatmap", "--L", "5:1:2", "--N", "1:2:2"}).code, kExitRuntime);
  EXPECT_EQ(lines(invoke({"heatmap", "--L", "0:100:2", "--N", "1:2:2"}).out).size(), 5u);
}

TEST(Cli, Stats) {
  const auto r = invoke({"stats", kSamples + "/dataset.json"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("conversations=2 messages=11 questions=5"), std::string::npos) << r.out;
  EXPECT_EQ(invoke({"stats", "/nonexistent/file.json"}).code, kExitRuntime);
}

// ---- end to end on the mock backends

namespace {

struct Workspace {
  testsupport::TempDir dir;
  Env env;
  Workspace() {
    env.vars["MEMCOST_INDEX_PATH"] = (dir / "index").string();
    env.vars["MEMCOST_CONFIG"] = kSamples + "/mock_config.json";
  }
  std::string dataset() const { return kSamples + "/dataset.json"; }
};

}  // namespace

TEST(CliEndToEnd, IngestQueryEval) {
  Workspace ws;
  const auto ing = invoke({"ingest", ws.dataset()}, ws.env);
  ASSERT_EQ(ing.code, kExitOk) << ing.err;
  EXPECT_NE(ing.out.find("records=6"), std::string::npos) << ing.out;
  EXPECT_NE(ing.out.find("ledger: exchanges=4 failed=0"), std::string::npos) << ing.out;

  // Same content again: no backend calls.
  const auto again = invoke({"ingest", ws.dataset()}, ws.env);
  EXPECT_NE(again.out.find("ledger: exchanges=0"), std::string::npos) << again.out;

  const auto q = invoke({"query", "caroline", "What does Caroline want to study?"}, ws.env);
  ASSERT_EQ(q.code, kExitOk) << q.err;
  EXPECT_NE(q.out.find("answer: Caroline: I want to study counseling"), std::string::npos) << q.out;
  EXPECT_NE(q.out.find("retrieved: 4 facts"), std::string::npos);

  const auto results = (ws.dir / "r.jsonl").string(), summary = (ws.dir / "s.json").string();
  const auto ev = invoke({"eval", "--mode", "memory", ws.dataset(), "-o", results, "--summary", summary}, ws.env);
  ASSERT_EQ(ev.code, kExitOk) << ev.err;
  EXPECT_EQ(lines(read_text_file(results)).size(), 5u);
  const auto s = nlohmann::json::parse(read_text_file(summary));
  EXPECT_EQ(s.at("accuracy_pct"), "100.00");
  EXPECT_EQ(s.at("questions"), 5);
  EXPECT_EQ(s.at("ledger").at("exchanges"), 5 + 5 + 15);  // embed + read per question, 3 judge votes

  const auto lc = invoke({"eval", "--mode", "lc", ws.dataset(), "-o", results, "--summary", summary}, ws.env);
  ASSERT_EQ(lc.code, kExitOk) << lc.err;
  EXPECT_EQ(nlohmann::json::parse(read_text_file(summary)).at("mode"), "long_context");
}

TEST(CliEndToEnd, DryRunMakesNoCalls) {
  Workspace ws;
  const auto r = invoke({"eval", "--mode", "lc", "--dry-run", ws.dataset()}, ws.env);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("\"dry_run\":true"), std::string::npos);
  EXPECT_NE(r.out.find("ledger: exchanges=0"), std::string::npos) << r.out;
}

TEST(CliEndToEnd, RuntimeErrors) {
  Workspace ws;
  EXPECT_EQ(invoke({"query", "caroline", "anything"}, ws.env).code, kExitRuntime);  // no store yet
  Env no_config;
  const auto r = invoke({"ingest", ws.dataset()}, no_config);
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("--config"), std::string::npos);
  EXPECT_EQ(invoke({"eval", "--mode", "rag", ws.dataset()}, ws.env).code, kExitUsage);
  EXPECT_EQ(invoke({"ingest", "/nonexistent.json"}, ws.env).code, kExitRuntime);
}

TEST(CliEndToEnd, StoreDimensionMismatch) {
  Workspace ws;
  ASSERT_EQ(invoke({"ingest", ws.dataset()}, ws.env).code, kExitOk);
  auto j = nlohmann::json::parse(read_text_file(kSamples + "/mock_config.json"));
  j["backends"]["embedder"]["dimension"] = 64;
  std::ofstream(ws.dir / "c64.json") << j.dump();
  const auto r = invoke({"-c", (ws.dir / "c64.json").string(), "ingest", ws.dataset()}, ws.env);
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("1536"), std::string::npos) << r.err;
}
