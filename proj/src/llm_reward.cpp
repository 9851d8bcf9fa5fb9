#include "imgrid/llm_reward.hpp"

#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "imgrid/errors.hpp"

namespace imgrid::llm {

using nlohmann::json;

// ---------------------------------------------------------------------------
// PromptCache

PromptCache PromptCache::load(const std::filesystem::path& path) {
  PromptCache cache;
  cache.path_ = path;
  std::ifstream in(path);
  if (!in.is_open()) return cache;  // missing file: empty cache

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      PromptRecord rec;
      rec.prompt = j.at("prompt").get<std::string>();
      rec.raw_response = j.at("response").get<std::string>();
      rec.score = j.at("score").get<int>();
      rec.ts = j.at("ts").get<std::int64_t>();
      if (rec.score < 0 || rec.score > 10)
        throw ConfigError("score out of range");
      cache.entries_[rec.prompt] = std::move(rec);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "warning: %s:%d: skipping corrupt cache line (%s)\n",
                   path.string().c_str(), lineno, e.what());
    }
  }
  return cache;
}

const PromptRecord* PromptCache::find(const std::string& prompt) const {
  auto it = entries_.find(prompt);
  return it == entries_.end() ? nullptr : &it->second;
}

namespace {

json record_to_json(const PromptRecord& rec) {
  return json{{"prompt", rec.prompt},
              {"response", rec.raw_response},
              {"score", rec.score},
              {"ts", rec.ts}};
}

}  // namespace

void PromptCache::put(PromptRecord rec) {
  const json j = record_to_json(rec);
  entries_[rec.prompt] = std::move(rec);
  if (path_.empty()) return;  // unbound cache: in-memory only
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app);
  if (!out.is_open())
    throw ConfigError("cannot append to cache file: " + path_.string());
  out << j.dump() << '\n';
}

void PromptCache::save() const {
  if (path_.empty()) throw ConfigError("cache has no backing path");
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::trunc);
  if (!out.is_open())
    throw ConfigError("cannot write cache file: " + path_.string());
  for (const auto& [prompt, rec] : entries_) out << record_to_json(rec).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Prompt template (version kPromptTemplateVersion)

std::string build_prompt(const std::vector<std::string>& objects, bool carrying,
                         const std::string& mission) {
  if (mission.empty()) throw UsageError("build_prompt: mission must be non-empty");
  std::string seen;
  if (objects.empty()) {
    seen = "no objects";
  } else {
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (i > 0) seen += ", ";
      seen += objects[i];
    }
  }
  std::string prompt;
  prompt += "An agent is observing a grid environment that it is inside.\n";
  prompt += "The agent's goal is: \"" + mission + "\".\n";
  prompt += "In the new state the agent sees: " + seen + ". ";
  prompt += carrying ? "The agent is carrying a key.\n"
                     : "The agent is not carrying anything.\n";
  prompt +=
      "On a scale of 0 to 10, how much does this new state help the agent "
      "achieve its goal? Answer with a single integer.";
  return prompt;
}

int parse_score(const std::string& response) {
  const auto is_digit = [](char c) { return c >= '0' && c <= '9'; };
  const auto is_word = [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
  };
  std::size_t i = 0;
  while (i < response.size()) {
    if (!is_digit(response[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < response.size() && is_digit(response[j])) ++j;
    const bool standalone = (i == 0 || !is_word(response[i - 1])) &&
                            (j == response.size() || !is_word(response[j]));
    // Maximal digit runs longer than 2 cannot encode 0..10.
    if (standalone && j - i <= 2) {
      const int value = std::stoi(response.substr(i, j - i));
      if (value >= 0 && value <= 10) return value;
    }
    i = j;
  }
  throw ScoreParseError("no integer in [0, 10] found in response: \"" +
                        response + "\"");
}

// ---------------------------------------------------------------------------
// Mock client

namespace {

bool prompt_lists(const std::string& prompt, const std::string& object) {
  const std::string marker = "sees: ";
  const std::size_t start = prompt.find(marker);
  if (start == std::string::npos) return false;
  const std::size_t list_begin = start + marker.size();
  const std::size_t list_end = prompt.find(". ", list_begin);
  const std::string list = prompt.substr(
      list_begin, list_end == std::string::npos ? std::string::npos
                                                : list_end - list_begin);
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    if (item == object) return true;
  }
  return false;
}

}  // namespace

std::string HeuristicMockClient::complete(const std::string& prompt) {
  const bool carrying = prompt.find("The agent is carrying a key.") != std::string::npos;
  if (prompt_lists(prompt, "goal")) return "10";
  if (carrying && (prompt_lists(prompt, "door(locked)") ||
                   prompt_lists(prompt, "door(closed)")))
    return "9";
  if (prompt_lists(prompt, "key") && !carrying) return "8";
  if (prompt_lists(prompt, "door(open)")) return "8";
  if (carrying) return "5";
  return "2";
}

// ---------------------------------------------------------------------------
// HTTP client

void LlmRewardConfig::validate() const {
  if (max_retries < 0) throw ConfigError("llm config: max_retries must be >= 0");
  if (timeout_s <= 0) throw ConfigError("llm config: timeout_s must be > 0");
  if (backoff_ms < 0) throw ConfigError("llm config: backoff_ms must be >= 0");
  if (fallback_score && (*fallback_score < 0 || *fallback_score > 10))
    throw ConfigError("llm config: fallback_score must be in [0, 10]");
}

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

// Splits "scheme://host:port/prefix" into the client base and the path
// prefix httplib needs separately.
void split_endpoint(const std::string& url, std::string& host_part,
                    std::string& path_prefix) {
  const std::size_t scheme = url.find("://");
  const std::size_t path_start =
      url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    host_part = url;
    path_prefix.clear();
  } else {
    host_part = url.substr(0, path_start);
    path_prefix = url.substr(path_start);
  }
  while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
}

httplib::Client make_client(const std::string& host_part, double timeout_s) {
  httplib::Client cli(host_part);
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec =
      static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
  return cli;
}

}  // namespace

HttpChatClient::HttpChatClient(const LlmRewardConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const std::string env_base = env_or_empty("LLM_API_BASE");
  base_url_ = env_base.empty() ? cfg_.endpoint : env_base;
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
  if (base_url_.empty())
    throw ConfigError(
        "llm endpoint missing: set LLM_API_BASE or the endpoint config field");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (base_url_.rfind("https://", 0) == 0)
    throw ConfigError("this build lacks TLS support; use an http:// endpoint");
#endif
  api_key_ = env_or_empty(cfg_.api_key_env.c_str());
}

std::string HttpChatClient::complete(const std::string& prompt) {
  std::string host_part, path_prefix;
  split_endpoint(base_url_, host_part, path_prefix);
  httplib::Client cli = make_client(host_part, cfg_.timeout_s);

  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const json body = {{"model", cfg_.model},
                     {"messages", json::array({json{{"role", "user"},
                                                    {"content", prompt}}})},
                     {"temperature", 0},
                     {"max_tokens", 16}};
  const httplib::Result res = cli.Post(path_prefix + "/v1/chat/completions",
                                       headers, body.dump(),
                                       "application/json");
  if (!res)
    throw RewardError("llm request failed: " + httplib::to_string(res.error()) +
                      " (" + base_url_ + ")");
  if (res->status < 200 || res->status >= 300)
    throw RewardError("llm request returned HTTP " + std::to_string(res->status) +
                      ": " + res->body.substr(0, 200));
  try {
    const json j = json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    throw RewardError(std::string("malformed llm response: ") + e.what());
  }
}

void HttpChatClient::check_reachable() {
  std::string host_part, path_prefix;
  split_endpoint(base_url_, host_part, path_prefix);
  httplib::Client cli = make_client(host_part, cfg_.timeout_s);
  const httplib::Result res = cli.Get(path_prefix.empty() ? "/" : path_prefix);
  if (!res)
    throw RewardError("llm endpoint unreachable: " + base_url_ + " (" +
                      httplib::to_string(res.error()) + ")");
}

// ---------------------------------------------------------------------------
// Cached scoring

double score_state(PromptCache& cache, LlmClient& client,
                   const LlmRewardConfig& cfg,
                   const std::vector<std::string>& objects, bool carrying,
                   const std::string& mission) {
  const std::string prompt = build_prompt(objects, carrying, mission);
  if (const PromptRecord* hit = cache.find(prompt)) return hit->score / 10.0;

  cfg.validate();
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      const long delay = static_cast<long>(cfg.backoff_ms) << (attempt - 1);
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    try {
      const std::string raw = client.complete(prompt);
      const int score = parse_score(raw);
      PromptRecord rec;
      rec.prompt = prompt;
      rec.raw_response = raw;
      rec.score = score;
      rec.ts = std::chrono::duration_cast<std::chrono::seconds>(
                   std::chrono::system_clock::now().time_since_epoch())
                   .count();
      cache.put(std::move(rec));
      return score / 10.0;
    } catch (const RewardError& e) {
      last_error = e.what();
    }
  }
  if (cfg.fallback_score) {
    std::fprintf(stderr,
                 "warning: llm scoring failed (%s); using fallback score %d\n",
                 last_error.c_str(), *cfg.fallback_score);
    return *cfg.fallback_score / 10.0;
  }
  throw RewardError("llm scoring failed after " +
                    std::to_string(cfg.max_retries + 1) + " attempts: " +
                    last_error);
}

}  // namespace imgrid::llm
