#include "imgrid/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

#include "imgrid/errors.hpp"
#include "imgrid/checkpoint.hpp"

namespace imgrid::runner {

using nlohmann::json;

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Baseline: return "baseline";
    case Strategy::Vae: return "vae";
    case Strategy::Llm: return "llm";
    case Strategy::LlmVae: return "llm_vae";
  }
  throw UsageError("strategy_name: invalid strategy");
}

Strategy strategy_from_name(const std::string& name) {
  if (name == "baseline") return Strategy::Baseline;
  if (name == "vae") return Strategy::Vae;
  if (name == "llm") return Strategy::Llm;
  if (name == "llm_vae") return Strategy::LlmVae;
  throw ConfigError("unknown strategy \"" + name +
                    "\" (expected baseline, vae, llm, or llm_vae)");
}

namespace {

void require_known_keys(const json& j, const std::set<std::string>& allowed,
                        const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.contains(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

template <typename T>
void maybe_get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  require_known_keys(j,
                     {"schema_version", "strategy", "env_size", "episodes",
                      "seeds", "training", "llm", "output_dir", "cache_dir",
                      "save_checkpoints"},
                     "run config");
  if (!j.contains("schema_version"))
    throw ConfigError("run config: missing schema_version");
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw ConfigError("run config: unsupported schema_version (expected " +
                      std::to_string(kSchemaVersion) + ")");

  RunConfig cfg;
  if (j.contains("strategy"))
    cfg.strategy = strategy_from_name(j.at("strategy").get<std::string>());
  maybe_get(j, "env_size", cfg.env_size);
  maybe_get(j, "episodes", cfg.episodes);
  if (j.contains("seeds"))
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("output_dir"))
    cfg.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("cache_dir"))
    cfg.cache_dir = j.at("cache_dir").get<std::string>();
  maybe_get(j, "save_checkpoints", cfg.save_checkpoints);

  if (j.contains("training")) {
    const json& t = j.at("training");
    require_known_keys(t,
                       {"beta_vae", "beta_llm", "gamma", "n_steps",
                        "entropy_coef", "value_coef", "actor_lr", "critic_lr",
                        "vae_lr", "hidden_width", "latent_dim", "vae_epochs",
                        "layout_per_episode", "vae_norm_fixed_scale"},
                       "training config");
    maybe_get(t, "beta_vae", cfg.training.beta_vae);
    maybe_get(t, "beta_llm", cfg.training.beta_llm);
    maybe_get(t, "gamma", cfg.training.gamma);
    maybe_get(t, "n_steps", cfg.training.n_steps);
    maybe_get(t, "entropy_coef", cfg.training.entropy_coef);
    maybe_get(t, "value_coef", cfg.training.value_coef);
    maybe_get(t, "actor_lr", cfg.training.actor_lr);
    maybe_get(t, "critic_lr", cfg.training.critic_lr);
    maybe_get(t, "vae_lr", cfg.training.vae_lr);
    maybe_get(t, "hidden_width", cfg.training.hidden_width);
    maybe_get(t, "latent_dim", cfg.training.latent_dim);
    maybe_get(t, "vae_epochs", cfg.training.vae_epochs);
    maybe_get(t, "layout_per_episode", cfg.training.layout_per_episode);
    maybe_get(t, "vae_norm_fixed_scale", cfg.training.vae_norm_fixed_scale);
  }

  if (j.contains("llm")) {
    const json& l = j.at("llm");
    require_known_keys(l,
                       {"mock", "endpoint", "model", "api_key_env",
                        "timeout_s", "max_retries", "backoff_ms",
                        "fallback_score"},
                       "llm config");
    maybe_get(l, "mock", cfg.mock_llm);
    maybe_get(l, "endpoint", cfg.llm.endpoint);
    maybe_get(l, "model", cfg.llm.model);
    maybe_get(l, "api_key_env", cfg.llm.api_key_env);
    maybe_get(l, "timeout_s", cfg.llm.timeout_s);
    maybe_get(l, "max_retries", cfg.llm.max_retries);
    maybe_get(l, "backoff_ms", cfg.llm.backoff_ms);
    if (l.contains("fallback_score"))
      cfg.llm.fallback_score = l.at("fallback_score").get<int>();
  }
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open())
    throw ConfigError("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json t{{"beta_vae", training.beta_vae},
         {"beta_llm", training.beta_llm},
         {"gamma", training.gamma},
         {"n_steps", training.n_steps},
         {"entropy_coef", training.entropy_coef},
         {"value_coef", training.value_coef},
         {"actor_lr", training.actor_lr},
         {"critic_lr", training.critic_lr},
         {"vae_lr", training.vae_lr},
         {"hidden_width", training.hidden_width},
         {"latent_dim", training.latent_dim},
         {"vae_epochs", training.vae_epochs},
         {"layout_per_episode", training.layout_per_episode},
         {"vae_norm_fixed_scale", training.vae_norm_fixed_scale}};
  json l{{"mock", mock_llm},
         {"endpoint", llm.endpoint},
         {"model", llm.model},
         {"api_key_env", llm.api_key_env},
         {"timeout_s", llm.timeout_s},
         {"max_retries", llm.max_retries},
         {"backoff_ms", llm.backoff_ms}};
  if (llm.fallback_score) l["fallback_score"] = *llm.fallback_score;
  return json{{"schema_version", kSchemaVersion},
              {"strategy", strategy_name(strategy)},
              {"env_size", env_size},
              {"episodes", episodes},
              {"seeds", seeds},
              {"training", t},
              {"llm", l},
              {"output_dir", output_dir.string()},
              {"cache_dir", cache_dir.string()},
              {"save_checkpoints", save_checkpoints}};
}

void RunConfig::resolve() {
  switch (strategy) {
    case Strategy::Baseline:
      training.beta_vae = 0.0;
      training.beta_llm = 0.0;
      break;
    case Strategy::Vae:
      training.beta_llm = 0.0;
      break;
    case Strategy::Llm:
      training.beta_vae = 0.0;
      break;
    case Strategy::LlmVae:
      break;
  }
  if (env_size < 5) throw ConfigError("run config: env_size must be >= 5");
  if (episodes < 1) throw ConfigError("run config: episodes must be >= 1");
  if (seeds.empty()) throw ConfigError("run config: at least one seed required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("run config: duplicate seeds would share output paths");
  if (cache_dir.empty()) cache_dir = output_dir / "cache";
  training.episodes = episodes;
  training.validate();
  if (training.beta_llm > 0.0) llm.validate();
}

RunPaths run_paths(const RunConfig& cfg, std::uint64_t seed) {
  const std::string stem =
      strategy_name(cfg.strategy) + "_seed" + std::to_string(seed);
  RunPaths p;
  p.csv = cfg.output_dir / (stem + ".csv");
  p.cache = (cfg.cache_dir.empty() ? cfg.output_dir / "cache" : cfg.cache_dir) /
            (stem + "_cache.jsonl");
  p.checkpoint = cfg.output_dir / (stem + "_checkpoint.json");
  return p;
}

std::filesystem::path manifest_path(const RunConfig& cfg) {
  return cfg.output_dir / (strategy_name(cfg.strategy) + "_manifest.json");
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

namespace {

void write_episode_row(std::ofstream& out, const agent::EpisodeLog& log) {
  out << log.episode << ',' << format_double(log.extrinsic_return) << ','
      << format_double(log.vae_reward_sum) << ','
      << format_double(log.llm_reward_sum) << ',' << log.steps << ','
      << (log.success ? 1 : 0) << '\n';
  out.flush();  // crash-safe: every episode lands on disk
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

}  // namespace

std::vector<agent::EpisodeLog> read_episode_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open()) throw ConfigError("cannot open csv: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kEpisodeCsvHeader)
    throw ConfigError("unexpected csv header in " + path.string());
  std::vector<agent::EpisodeLog> logs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_row(line);
    if (f.size() != 6)
      throw ConfigError("malformed row at " + path.string() + ":" +
                        std::to_string(lineno));
    try {
      agent::EpisodeLog log;
      log.episode = std::stoi(f[0]);
      log.extrinsic_return = std::stod(f[1]);
      log.vae_reward_sum = std::stod(f[2]);
      log.llm_reward_sum = std::stod(f[3]);
      log.steps = std::stoi(f[4]);
      log.success = std::stoi(f[5]) != 0;
      logs.push_back(log);
    } catch (const std::exception&) {
      throw ConfigError("malformed row at " + path.string() + ":" +
                        std::to_string(lineno));
    }
  }
  return logs;
}

// ---------------------------------------------------------------------------
// Single-seed training

SeedRunResult run_single_seed(const RunConfig& cfg, std::uint64_t seed) {
  agent::TrainingConfig tcfg = cfg.training;
  tcfg.seed = seed;
  tcfg.episodes = cfg.episodes;

  const RunPaths paths = run_paths(cfg, seed);
  std::filesystem::create_directories(cfg.output_dir);

  const std::uint64_t layout_base = derive_seed(seed, agent::kStreamLayout);
  const int env_size = cfg.env_size;
  const bool per_episode = tcfg.layout_per_episode;
  agent::EnvFactory make_env = [layout_base, env_size, per_episode](int episode) {
    const std::uint64_t layout_seed =
        per_episode
            ? derive_seed(layout_base, static_cast<std::uint64_t>(episode) + 1)
            : layout_base;
    return grid::GridWorld::doorkey(env_size, layout_seed);
  };

  agent::ActorCritic ac = agent::ActorCritic::create(
      grid::Observation::kFlatDim, grid::kNumActions, tcfg.hidden_width, seed);
  nn::AdamState actor_opt = nn::AdamState::create(ac.actor, tcfg.actor_lr);
  nn::AdamState critic_opt = nn::AdamState::create(ac.critic, tcfg.critic_lr);

  agent::IntrinsicHooks hooks;
  std::optional<vae::VaeModel> vae_model;
  vae::KlNormalizer normalizer;
  std::optional<nn::AdamState> enc_opt, dec_opt;
  if (tcfg.beta_vae > 0.0) {
    RandomEngine vae_init(derive_seed(seed, agent::kStreamVaeInit));
    vae_model = vae::VaeModel::create(grid::Observation::kFlatDim,
                                      tcfg.latent_dim, tcfg.hidden_width,
                                      vae_init);
    normalizer.fixed_scale = tcfg.vae_norm_fixed_scale;
    enc_opt = nn::AdamState::create(vae_model->encoder, tcfg.vae_lr);
    dec_opt = nn::AdamState::create(vae_model->decoder, tcfg.vae_lr);
    hooks.vae_model = &*vae_model;
    hooks.normalizer = &normalizer;
    hooks.vae_encoder_opt = &*enc_opt;
    hooks.vae_decoder_opt = &*dec_opt;
  }

  std::unique_ptr<llm::LlmClient> raw_client;
  llm::CountingClient* counter = nullptr;
  std::optional<llm::StateScorer> scorer;
  if (tcfg.beta_llm > 0.0) {
    if (cfg.mock_llm) {
      raw_client = std::make_unique<llm::HeuristicMockClient>();
    } else {
      auto http = std::make_unique<llm::HttpChatClient>(cfg.llm);
      http->check_reachable();  // fail fast before episode 1
      raw_client = std::move(http);
    }
    auto counting = std::make_unique<llm::CountingClient>(*raw_client);
    counter = counting.get();
    scorer.emplace();
    scorer->cache = llm::PromptCache::load(paths.cache);
    scorer->client = std::move(counting);
    scorer->cfg = cfg.llm;
    llm::StateScorer& scorer_ref = *scorer;
    hooks.llm_score = [&scorer_ref](const grid::VisibleObjects& seen) {
      return scorer_ref.score(seen);
    };
  }

  std::ofstream csv(paths.csv, std::ios::trunc);
  if (!csv.is_open())
    throw ConfigError("cannot write csv: " + paths.csv.string());
  csv << kEpisodeCsvHeader << '\n';
  csv.flush();

  const std::string tag = strategy_name(cfg.strategy) + " seed " +
                          std::to_string(seed);
  agent::EpisodeCallback on_episode = [&](const agent::EpisodeLog& log) {
    write_episode_row(csv, log);
    if ((log.episode + 1) % 500 == 0)
      std::fprintf(stderr, "[%s] episode %d/%d\n", tag.c_str(),
                   log.episode + 1, cfg.episodes);
  };

  const agent::TrainResult result =
      agent::train(make_env, ac, actor_opt, critic_opt, hooks, tcfg, on_episode);

  if (cfg.save_checkpoints) {
    nn::Checkpoint ckpt;
    ckpt.nets["actor"] = ac.actor;
    ckpt.nets["critic"] = ac.critic;
    if (vae_model) {
      ckpt.nets["vae_encoder"] = vae_model->encoder;
      ckpt.nets["vae_decoder"] = vae_model->decoder;
      ckpt.meta["latent_dim"] = static_cast<double>(vae_model->latent_dim);
    }
    nn::save_checkpoint(ckpt, paths.checkpoint);
  }

  SeedRunResult res;
  res.csv = paths.csv;
  res.llm_calls = counter ? counter->calls() : 0;
  res.cache_entries = scorer ? scorer->cache.size() : 0;
  res.stats = result.stats;
  return res;
}

// ---------------------------------------------------------------------------
// Multi-seed orchestration

namespace {

void write_manifest(const std::filesystem::path& path, const json& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.is_open())
    throw ConfigError("cannot write manifest: " + path.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace

RunOutput run(RunConfig cfg) {
  cfg.resolve();
  std::filesystem::create_directories(cfg.output_dir);
  std::filesystem::create_directories(cfg.cache_dir);

  json manifest{{"schema_version", RunConfig::kSchemaVersion},
                {"status", "incomplete"},
                {"prompt_template_version", llm::kPromptTemplateVersion},
                {"config", cfg.to_json()}};
  const std::filesystem::path mpath = manifest_path(cfg);
  write_manifest(mpath, manifest);

  std::vector<SeedRunResult> results(cfg.seeds.size());
  std::vector<std::exception_ptr> errors(cfg.seeds.size());
  std::vector<std::thread> workers;
  workers.reserve(cfg.seeds.size());
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    workers.emplace_back([&cfg, &results, &errors, i] {
      try {
        results[i] = run_single_seed(cfg, cfg.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (std::thread& w : workers) w.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);  // manifest stays incomplete

  json result_entries = json::array();
  for (std::size_t i = 0; i < results.size(); ++i) {
    result_entries.push_back(
        json{{"seed", cfg.seeds[i]},
             {"csv", results[i].csv.string()},
             {"llm_calls", results[i].llm_calls},
             {"cache_entries", results[i].cache_entries},
             {"env_steps", results[i].stats.env_steps},
             {"segment_updates", results[i].stats.segment_updates}});
  }
  manifest["status"] = "complete";
  manifest["results"] = std::move(result_entries);
  write_manifest(mpath, manifest);

  return RunOutput{std::move(results), mpath};
}

// ---------------------------------------------------------------------------
// Aggregation

std::vector<double> moving_average(std::span<const double> values, int window) {
  if (window < 1) throw UsageError("moving_average: window must be >= 1");
  if (window == 1) return {values.begin(), values.end()};
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i + 1 >= static_cast<std::size_t>(window)
                               ? i + 1 - static_cast<std::size_t>(window)
                               : 0;
    double sum = 0.0;
    for (std::size_t k = lo; k <= i; ++k) sum += values[k];
    out[i] = sum / static_cast<double>(i - lo + 1);
  }
  return out;
}

AggregateCurve aggregate(const std::vector<std::filesystem::path>& csvs,
                         int window) {
  if (csvs.empty()) throw UsageError("aggregate: no input files");
  std::vector<std::vector<double>> smoothed;
  std::size_t episodes = 0;
  for (const std::filesystem::path& p : csvs) {
    const std::vector<agent::EpisodeLog> logs = read_episode_csv(p);
    std::vector<double> returns;
    returns.reserve(logs.size());
    for (const agent::EpisodeLog& log : logs)
      returns.push_back(log.extrinsic_return);
    if (smoothed.empty()) {
      episodes = returns.size();
    } else if (returns.size() != episodes) {
      throw UsageError("aggregate: " + p.string() + " has " +
                       std::to_string(returns.size()) +
                       " episodes, expected " + std::to_string(episodes));
    }
    smoothed.push_back(moving_average(returns, window));
  }

  const double runs = static_cast<double>(smoothed.size());
  AggregateCurve curve;
  curve.mean.resize(episodes);
  curve.std_dev.resize(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    double sum = 0.0;
    for (const std::vector<double>& run : smoothed) sum += run[i];
    const double mean = sum / runs;
    double var = 0.0;
    for (const std::vector<double>& run : smoothed) {
      const double d = run[i] - mean;
      var += d * d;
    }
    curve.mean[i] = mean;
    curve.std_dev[i] = std::sqrt(var / runs);  // population std
  }
  return curve;
}

void write_aggregate_csv(const AggregateCurve& curve,
                         const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out.is_open())
    throw ConfigError("cannot write aggregate csv: " + path.string());
  out << "episode,mean,std\n";
  for (std::size_t i = 0; i < curve.mean.size(); ++i)
    out << i << ',' << format_double(curve.mean[i]) << ','
        << format_double(curve.std_dev[i]) << '\n';
}

AggregateCurve read_aggregate_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.is_open())
    throw ConfigError("cannot open aggregate csv: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "episode,mean,std")
    throw ConfigError("unexpected aggregate csv header in " + path.string());
  AggregateCurve curve;
  curve.name = path.stem().string();
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_row(line);
    if (f.size() != 3)
      throw ConfigError("malformed row at " + path.string() + ":" +
                        std::to_string(lineno));
    try {
      curve.mean.push_back(std::stod(f[1]));
      curve.std_dev.push_back(std::stod(f[2]));
    } catch (const std::exception&) {
      throw ConfigError("malformed row at " + path.string() + ":" +
                        std::to_string(lineno));
    }
  }
  return curve;
}

}  // namespace imgrid::runner
