#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "imgrid/errors.hpp"
#include "imgrid/gridworld.hpp"
#include "imgrid/llm_reward.hpp"

using namespace imgrid;
using namespace imgrid::llm;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "imgrid_llm_tests";
  fs::create_directories(dir);
  fs::path p = dir / name;
  fs::remove(p);
  return p;
}

struct ScriptedClient : LlmClient {
  std::vector<std::string> responses;
  std::size_t next = 0;
  long calls = 0;
  std::string complete(const std::string&) override {
    ++calls;
    if (next >= responses.size()) throw RewardError("script exhausted");
    return responses[next++];
  }
};

struct FailingClient : LlmClient {
  long calls = 0;
  std::string complete(const std::string&) override {
    ++calls;
    throw RewardError("transport down");
  }
};

LlmRewardConfig fast_cfg() {
  LlmRewardConfig cfg;
  cfg.max_retries = 2;
  cfg.backoff_ms = 0;  // keep tests instant
  return cfg;
}

}  // namespace

TEST_SUITE("llm_reward") {

TEST_CASE("prompt text is deterministic and carries all four parts") {
  const std::vector<std::string> objects = {"key", "door(locked)", "wall"};
  const std::string a = build_prompt(objects, false, kDefaultMission);
  const std::string b = build_prompt(objects, false, kDefaultMission);
  CHECK(a == b);
  CHECK(a.find("An agent is observing a grid environment") != std::string::npos);
  CHECK(a.find("The agent's goal is: \"" + std::string(kDefaultMission) + "\".") !=
        std::string::npos);
  CHECK(a.find("sees: key, door(locked), wall. ") != std::string::npos);
  CHECK(a.find("The agent is not carrying anything.") != std::string::npos);
  CHECK(a.find("On a scale of 0 to 10") != std::string::npos);
  CHECK(a.find("Answer with a single integer") != std::string::npos);

  const std::string carrying = build_prompt(objects, true, kDefaultMission);
  CHECK(carrying != a);
  CHECK(carrying.find("The agent is carrying a key.") != std::string::npos);
  CHECK(carrying.find("not carrying") == std::string::npos);
}

TEST_CASE("empty surroundings and missing mission") {
  const std::string p = build_prompt({}, false, kDefaultMission);
  CHECK(p.find("sees: no objects. ") != std::string::npos);
  CHECK_THROWS_AS(build_prompt({"key"}, false, ""), UsageError);
}

TEST_CASE("observations with the same summary produce the same prompt") {
  using namespace imgrid::grid;
  Observation a, b;
  a.at(0, 0) = {kObjectKey, kColorYellow, 0};
  b.at(5, 3) = {kObjectKey, kColorYellow, 0};  // same content, different cell
  b.at(6, 2) = {kObjectKey, kColorYellow, 0};  // and duplicated
  const VisibleObjects va = visible_objects(a);
  const VisibleObjects vb = visible_objects(b);
  CHECK(build_prompt(va.objects, va.carrying_key, kDefaultMission) ==
        build_prompt(vb.objects, vb.carrying_key, kDefaultMission));
}

TEST_CASE("score parsing accepts the first standalone integer in range") {
  CHECK(parse_score("8") == 8);
  CHECK(parse_score("10") == 10);
  CHECK(parse_score(" 0 ") == 0);
  CHECK(parse_score("I would rate this state 7 out of 10.") == 7);
  CHECK(parse_score("about a 3, maybe a 4") == 3);
  CHECK(parse_score("Score: 9/10") == 9);
  CHECK(parse_score("-3") == 3);       // sign is not part of the token
  CHECK(parse_score("10 out of 10") == 10);
  CHECK(parse_score("a 10!") == 10);   // maximal run: 10 beats its leading 1
}

TEST_CASE("score parsing rejects junk") {
  CHECK_THROWS_AS(parse_score("no numbers here"), ScoreParseError);
  CHECK_THROWS_AS(parse_score(""), ScoreParseError);
  CHECK_THROWS_AS(parse_score("state7"), ScoreParseError);   // glued to a word
  CHECK_THROWS_AS(parse_score("42abc"), ScoreParseError);    // trailing letters
  CHECK_THROWS_AS(parse_score("100"), ScoreParseError);      // out of range run
  CHECK_THROWS_AS(parse_score("99"), ScoreParseError);       // in-format, out of range
  CHECK_THROWS_AS(parse_score("1234567890"), ScoreParseError);
  // ScoreParseError is a RewardError, so retry logic treats both alike.
  CHECK_THROWS_AS(parse_score("nope"), RewardError);
}

TEST_CASE("mock client applies the rule table in priority order") {
  HeuristicMockClient mock;
  auto score = [&](const std::vector<std::string>& objs, bool carrying) {
    return parse_score(mock.complete(build_prompt(objs, carrying, kDefaultMission)));
  };

  CHECK(score({"goal"}, false) == 10);
  CHECK(score({"door(locked)", "goal", "wall"}, true) == 10);  // goal trumps all
  CHECK(score({"door(locked)"}, true) == 9);
  CHECK(score({"door(closed)"}, true) == 9);
  CHECK(score({"key", "wall"}, false) == 8);
  CHECK(score({"door(open)"}, false) == 8);
  CHECK(score({"door(open)"}, true) == 8);  // open-door rule outranks plain carrying
  CHECK(score({"key"}, true) == 5);         // key in view but already carrying
  CHECK(score({"wall"}, true) == 5);
  CHECK(score({"wall"}, false) == 2);
  CHECK(score({}, false) == 2);

  // Progress ordering the training signal relies on.
  CHECK(score({"goal"}, true) > score({"door(locked)"}, true));
  CHECK(score({"door(locked)"}, true) > score({"wall"}, true));
  CHECK(score({"key"}, false) > score({"wall"}, false));

  // Determinism.
  const std::string p = build_prompt({"key"}, false, kDefaultMission);
  CHECK(mock.complete(p) == mock.complete(p));
}

TEST_CASE("counting client delegates and counts") {
  HeuristicMockClient mock;
  CountingClient counting(mock);
  const std::string p = build_prompt({"goal"}, false, kDefaultMission);
  CHECK(counting.complete(p) == "10");
  CHECK(counting.complete(p) == "10");
  CHECK(counting.calls() == 2);
}

TEST_CASE("cache round-trips records and appends on put") {
  const fs::path path = temp_file("cache_roundtrip.jsonl");
  {
    PromptCache cache = PromptCache::load(path);
    CHECK(cache.size() == 0);
    cache.put({"prompt one", "raw 7", 7, 1234});
    cache.put({"prompt two", "raw 3", 3, 1235});
    CHECK(cache.size() == 2);
  }
  {
    const PromptCache cache = PromptCache::load(path);
    REQUIRE(cache.size() == 2);
    const PromptRecord* rec = cache.find("prompt one");
    REQUIRE(rec != nullptr);
    CHECK(rec->raw_response == "raw 7");
    CHECK(rec->score == 7);
    CHECK(rec->ts == 1234);
    CHECK(cache.find("prompt three") == nullptr);
  }
}

TEST_CASE("corrupt cache lines are skipped, not fatal") {
  const fs::path path = temp_file("cache_corrupt.jsonl");
  {
    PromptCache cache = PromptCache::load(path);
    cache.put({"good a", "8", 8, 1});
    cache.put({"good b", "2", 2, 2});
  }
  std::ofstream(path, std::ios::app)
      << "{\"prompt\": \"broken\"\n"                                   // truncated json
      << "{\"prompt\": \"bad score\", \"response\": \"x\", \"score\": 99, \"ts\": 3}\n"
      << "not json at all\n";
  {
    PromptCache cache = PromptCache::load(path);
    CHECK(cache.size() == 2);
    CHECK(cache.find("good a") != nullptr);
    CHECK(cache.find("good b") != nullptr);
    cache.put({"good c", "5", 5, 4});
  }
  const PromptCache reloaded = PromptCache::load(path);
  CHECK(reloaded.size() == 3);
}

TEST_CASE("save rewrites the file to one line per entry") {
  const fs::path path = temp_file("cache_save.jsonl");
  PromptCache cache = PromptCache::load(path);
  cache.put({"p", "5", 5, 1});
  cache.put({"p", "6", 6, 2});  // same prompt appended twice
  cache.put({"q", "3", 3, 3});
  cache.save();

  std::ifstream in(path);
  int lines = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 2);  // deduplicated on rewrite

  const PromptCache reloaded = PromptCache::load(path);
  REQUIRE(reloaded.find("p") != nullptr);
  CHECK(reloaded.find("p")->score == 6);  // last write wins
}

TEST_CASE("score_state caches, replays, and never re-queries a hit") {
  const fs::path path = temp_file("cache_scoring.jsonl");
  PromptCache cache = PromptCache::load(path);
  HeuristicMockClient mock;
  CountingClient counting(mock);
  const LlmRewardConfig cfg = fast_cfg();

  const double r1 = score_state(cache, counting, cfg, {"goal"}, false, kDefaultMission);
  CHECK(r1 == 1.0);
  CHECK(counting.calls() == 1);
  const double r2 = score_state(cache, counting, cfg, {"goal"}, false, kDefaultMission);
  CHECK(r2 == 1.0);
  CHECK(counting.calls() == 1);  // served from the cache

  // Distinct states query once each, repeats are free.
  std::set<std::string> distinct;
  std::vector<std::pair<std::vector<std::string>, bool>> states = {
      {{"key"}, false}, {{"key"}, false}, {{"wall"}, true},
      {{"door(locked)"}, true}, {{"wall"}, true}, {{"goal"}, false},
  };
  for (const auto& [objs, carrying] : states) {
    distinct.insert(build_prompt(objs, carrying, kDefaultMission));
    const double r = score_state(cache, counting, cfg, objs, carrying, kDefaultMission);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
  CHECK(counting.calls() == static_cast<long>(distinct.size()));

  // A cold process with the same cache file makes zero calls.
  PromptCache warm = PromptCache::load(path);
  FailingClient failing;
  for (const auto& [objs, carrying] : states)
    CHECK_NOTHROW(score_state(warm, failing, cfg, objs, carrying, kDefaultMission));
  CHECK(failing.calls == 0);
}

TEST_CASE("score_state retries transport and parse failures alike") {
  const LlmRewardConfig cfg = fast_cfg();  // max_retries = 2 -> 3 attempts

  SUBCASE("a later attempt can succeed") {
    PromptCache cache;  // unbound, in-memory
    ScriptedClient client;
    client.responses = {"total gibberish", "9"};
    const double r = score_state(cache, client, cfg, {"key"}, false, kDefaultMission);
    CHECK(r == 0.9);
    CHECK(client.calls == 2);
    CHECK(cache.size() == 1);
  }

  SUBCASE("exhausted retries abort without a fallback") {
    PromptCache cache;
    FailingClient client;
    CHECK_THROWS_AS(
        score_state(cache, client, cfg, {"key"}, false, kDefaultMission),
        RewardError);
    CHECK(client.calls == 3);  // 1 + max_retries attempts
    CHECK(cache.size() == 0);
  }

  SUBCASE("exhausted retries fall back when configured, uncached") {
    PromptCache cache;
    FailingClient client;
    LlmRewardConfig with_fallback = cfg;
    with_fallback.fallback_score = 4;
    const double r = score_state(cache, client, with_fallback, {"key"}, false,
                                 kDefaultMission);
    CHECK(r == 0.4);
    CHECK(client.calls == 3);
    CHECK(cache.size() == 0);  // fallback values are never persisted

    // The next query tries the client again instead of trusting the fallback.
    score_state(cache, client, with_fallback, {"key"}, false, kDefaultMission);
    CHECK(client.calls == 6);
  }
}

TEST_CASE("reward config validation") {
  LlmRewardConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  LlmRewardConfig bad = cfg;
  bad.max_retries = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.timeout_s = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.backoff_ms = -5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.fallback_score = 11;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("http client speaks the chat-completions protocol") {
  httplib::Server srv;
  std::string seen_auth, seen_model, seen_content;
  double seen_temperature = -1.0;
  srv.Post("/v1/chat/completions",
           [&](const httplib::Request& req, httplib::Response& res) {
             const nlohmann::json body = nlohmann::json::parse(req.body);
             seen_model = body.at("model").get<std::string>();
             seen_temperature = body.at("temperature").get<double>();
             seen_content =
                 body.at("messages").at(0).at("content").get<std::string>();
             seen_auth = req.get_header_value("Authorization");
             const nlohmann::json reply = {
                 {"choices",
                  nlohmann::json::array(
                      {{{"message", {{"role", "assistant"}, {"content", "7"}}}}})}};
             res.set_content(reply.dump(), "application/json");
           });
  const int port = srv.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  setenv("IMGRID_TEST_LLM_KEY", "sekrit", 1);
  LlmRewardConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.api_key_env = "IMGRID_TEST_LLM_KEY";
  cfg.timeout_s = 5.0;
  cfg.max_retries = 0;
  cfg.backoff_ms = 0;

  HttpChatClient client(cfg);
  CHECK_NOTHROW(client.check_reachable());
  const std::string prompt = build_prompt({"key"}, false, kDefaultMission);
  CHECK(client.complete(prompt) == "7");
  CHECK(seen_model == "llama-3.2");
  CHECK(seen_temperature == 0.0);
  CHECK(seen_content == prompt);
  CHECK(seen_auth == "Bearer sekrit");

  // End to end through the cached scorer.
  PromptCache cache;
  const double r = score_state(cache, client, cfg, {"key"}, false, kDefaultMission);
  CHECK(r == 0.7);

  srv.stop();
  server_thread.join();
  unsetenv("IMGRID_TEST_LLM_KEY");
}

TEST_CASE("http client surfaces server errors and bad payloads") {
  httplib::Server srv;
  int mode = 0;
  srv.Post("/v1/chat/completions",
           [&](const httplib::Request&, httplib::Response& res) {
             if (mode == 0) {
               res.status = 500;
               res.set_content("overloaded", "text/plain");
             } else {
               res.set_content("{\"unexpected\": true}", "application/json");
             }
           });
  const int port = srv.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  LlmRewardConfig cfg;
  cfg.endpoint = "http://127.0.0.1:" + std::to_string(port);
  cfg.timeout_s = 5.0;
  HttpChatClient client(cfg);

  mode = 0;
  CHECK_THROWS_AS(client.complete("p"), RewardError);
  mode = 1;
  CHECK_THROWS_AS(client.complete("p"), RewardError);

  srv.stop();
  server_thread.join();
}

TEST_CASE("unreachable endpoints fail fast and loudly") {
  LlmRewardConfig cfg;
  cfg.endpoint = "http://127.0.0.1:9";  // discard port, nothing listens
  cfg.timeout_s = 0.2;
  HttpChatClient client(cfg);
  CHECK_THROWS_AS(client.check_reachable(), RewardError);
  CHECK_THROWS_AS(client.complete("p"), RewardError);

  LlmRewardConfig empty;
  empty.endpoint = "";
  unsetenv("LLM_API_BASE");
  CHECK_THROWS_AS(HttpChatClient{empty}, ConfigError);
}

TEST_CASE("LLM_API_BASE overrides the configured endpoint") {
  setenv("LLM_API_BASE", "http://10.1.2.3:8000/serve/", 1);
  LlmRewardConfig cfg;
  cfg.endpoint = "http://other:1234";
  const HttpChatClient client(cfg);
  CHECK(client.base_url() == "http://10.1.2.3:8000/serve");  // trailing '/' trimmed
  unsetenv("LLM_API_BASE");
}

}  // TEST_SUITE
