#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "imgrid/agent.hpp"
#include "imgrid/llm_reward.hpp"

namespace imgrid::runner {

enum class Strategy { Baseline, Vae, Llm, LlmVae };

std::string strategy_name(Strategy s);
Strategy strategy_from_name(const std::string& name);

/// Experiment description, loadable from JSON (see README for the schema).
/// The strategy forces the betas: baseline zeroes both, vae zeroes beta_llm,
/// llm zeroes beta_vae.
struct RunConfig {
  static constexpr int kSchemaVersion = 1;

  Strategy strategy = Strategy::Baseline;
  int env_size = 8;
  int episodes = 1;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  agent::TrainingConfig training;
  bool mock_llm = true;
  llm::LlmRewardConfig llm;
  std::filesystem::path output_dir = "out";
  std::filesystem::path cache_dir;  // empty: output_dir / "cache"
  bool save_checkpoints = false;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);

  /// Fully resolved config (every knob explicit); the manifest payload.
  nlohmann::json to_json() const;

  /// Applies the strategy's beta forcing and validates; call before use.
  void resolve();
};

/// Per-(strategy, seed) artifact locations inside the output/cache dirs.
struct RunPaths {
  std::filesystem::path csv;
  std::filesystem::path cache;
  std::filesystem::path checkpoint;
};

RunPaths run_paths(const RunConfig& cfg, std::uint64_t seed);
std::filesystem::path manifest_path(const RunConfig& cfg);

struct SeedRunResult {
  std::filesystem::path csv;
  long llm_calls = 0;             // client invocations during this run
  std::size_t cache_entries = 0;  // distinct prompts cached after this run
  agent::TrainStats stats;
};

/// Trains one seed of the configured strategy, streaming episode rows to its
/// CSV (flushed per episode). cfg must already be resolved.
SeedRunResult run_single_seed(const RunConfig& cfg, std::uint64_t seed);

struct RunOutput {
  std::vector<SeedRunResult> seeds;
  std::filesystem::path manifest;
};

/// Runs every seed (parallel workers, one per seed), writing the manifest
/// before (status incomplete) and after (status complete) the grid.
RunOutput run(RunConfig cfg);

// --- CSV -------------------------------------------------------------------

inline constexpr const char* kEpisodeCsvHeader =
    "episode,extrinsic_return,vae_reward_sum,llm_reward_sum,steps,success";

std::string format_double(double v);  // %.17g, round-trip exact

std::vector<agent::EpisodeLog> read_episode_csv(const std::filesystem::path& path);

// --- Aggregation -------------------------------------------------------------

/// Trailing moving average; the first window-1 entries average the available
/// prefix.
std::vector<double> moving_average(std::span<const double> values, int window);

struct AggregateCurve {
  std::string name;
  std::vector<double> mean;
  std::vector<double> std_dev;
};

/// Smooths each run's extrinsic_return column with the trailing window, then
/// reduces across runs to per-episode mean and population std. All inputs
/// must share an episode count; a mismatch names the offending file.
AggregateCurve aggregate(const std::vector<std::filesystem::path>& csvs,
                         int window);

void write_aggregate_csv(const AggregateCurve& curve,
                         const std::filesystem::path& path);
AggregateCurve read_aggregate_csv(const std::filesystem::path& path);

// --- Plot --------------------------------------------------------------------

/// Self-contained 800x500 SVG: per curve one mean polyline plus a translucent
/// mean+-std band, with axes, ticks, and a legend. Byte-deterministic.
void write_svg_chart(const std::vector<AggregateCurve>& curves,
                     const std::filesystem::path& path);

// --- CLI ---------------------------------------------------------------------

/// Subcommands: run, aggregate, plot, solve. Returns 0 on success, 1 on
/// runtime failure, 2 on usage errors.
int cli_main(int argc, char** argv);

}  // namespace imgrid::runner
