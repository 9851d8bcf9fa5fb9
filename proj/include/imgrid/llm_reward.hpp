#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "imgrid/gridworld.hpp"

namespace imgrid::llm {

/// Bumped whenever build_prompt's wording changes; recorded in run manifests
/// so cached scores are never silently mixed across prompt revisions.
inline constexpr int kPromptTemplateVersion = 1;

/// The DoorKey environment's stock mission text.
inline constexpr const char* kDefaultMission =
    "use the key to open the door and then get to the goal";

struct PromptRecord {
  std::string prompt;
  std::string raw_response;
  int score = 0;  // parsed, 0..10
  std::int64_t ts = 0;
};

/// Persistent prompt -> score store, one JSON object per line (append
/// friendly). Corrupt lines are skipped with a warning on load.
class PromptCache {
 public:
  PromptCache() = default;

  /// Missing file loads as an empty cache bound to the path.
  static PromptCache load(const std::filesystem::path& path);

  const PromptRecord* find(const std::string& prompt) const;

  /// Inserts (or replaces) and appends one line to the backing file.
  void put(PromptRecord rec);

  /// Rewrites the whole backing file from the in-memory map.
  void save() const;

  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, PromptRecord>& entries() const { return entries_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::map<std::string, PromptRecord> entries_;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Deterministic stand-in: scores the prompt's object list and carrying flag
/// with a fixed rule table, highest goal progress first.
class HeuristicMockClient : public LlmClient {
 public:
  std::string complete(const std::string& prompt) override;
};

/// Counts delegated calls; test and manifest instrumentation.
class CountingClient : public LlmClient {
 public:
  explicit CountingClient(LlmClient& inner) : inner_(&inner) {}
  std::string complete(const std::string& prompt) override {
    ++calls_;
    return inner_->complete(prompt);
  }
  long calls() const { return calls_; }

 private:
  LlmClient* inner_;
  long calls_ = 0;
};

struct LlmRewardConfig {
  std::string endpoint;  // overridden by LLM_API_BASE when set
  std::string model = "llama-3.2";
  std::string api_key_env = "LLM_API_KEY";
  double timeout_s = 30.0;
  int max_retries = 3;
  int backoff_ms = 1000;  // first retry delay; doubles per retry
  std::optional<int> fallback_score;  // 0..10; absent = abort on failure

  void validate() const;  // throws ConfigError
};

/// OpenAI-compatible chat-completions client (POST /v1/chat/completions,
/// temperature 0, bearer token from the configured environment variable).
class HttpChatClient : public LlmClient {
 public:
  explicit HttpChatClient(const LlmRewardConfig& cfg);
  std::string complete(const std::string& prompt) override;

  /// Cheap reachability probe (TCP + HTTP round trip, any status counts).
  /// Throws RewardError when the endpoint cannot be reached.
  void check_reachable();

  const std::string& base_url() const { return base_url_; }

 private:
  LlmRewardConfig cfg_;
  std::string base_url_;
  std::string api_key_;
};

/// Canonical four-part prompt: context, mission, visible objects + carrying
/// status, 0-to-10 question. Pure function; identical inputs yield
/// byte-identical text.
std::string build_prompt(const std::vector<std::string>& objects, bool carrying,
                         const std::string& mission);

/// First standalone integer token in [0, 10], scanning left to right with
/// longest-token-first tokenization ("10" wins over its leading "1").
/// Throws ScoreParseError when no such token exists.
int parse_score(const std::string& response);

/// Cached scoring: builds the canonical prompt, returns the cached score/10
/// on a hit, otherwise queries the client with exponential-backoff retries,
/// parses, persists, and returns score/10. Exhausted retries use
/// fallback_score when configured and abort with RewardError otherwise.
double score_state(PromptCache& cache, LlmClient& client,
                   const LlmRewardConfig& cfg,
                   const std::vector<std::string>& objects, bool carrying,
                   const std::string& mission);

/// Everything score_state needs, bundled for the training loop.
struct StateScorer {
  PromptCache cache;
  std::unique_ptr<LlmClient> client;
  LlmRewardConfig cfg;
  std::string mission = kDefaultMission;

  double score(const grid::VisibleObjects& seen) {
    return score_state(cache, *client, cfg, seen.objects, seen.carrying_key,
                       mission);
  }
};

}  // namespace imgrid::llm
