#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imgrid/errors.hpp"
#include "imgrid/planner.hpp"
#include "imgrid/runner.hpp"

namespace imgrid::runner {

int cli_main(int argc, char** argv) {
  CLI::App app{"DoorKey gridworld trainer with VAE and LLM intrinsic rewards"};
  app.require_subcommand(1);

  std::string run_config_path;
  CLI::App* run_cmd = app.add_subcommand(
      "run", "Train a strategy x seed grid from a JSON config");
  run_cmd->add_option("--config", run_config_path, "run config JSON path")
      ->required();

  std::vector<std::string> agg_inputs;
  int window = 100;
  std::string agg_out;
  CLI::App* agg_cmd = app.add_subcommand(
      "aggregate", "Smooth per-seed CSVs and emit a mean/std curve");
  agg_cmd->add_option("--inputs", agg_inputs, "episode CSV files")->required();
  agg_cmd->add_option("--window", window, "trailing moving-average window");
  agg_cmd->add_option("--out", agg_out, "output aggregate CSV path")->required();

  std::vector<std::string> plot_inputs;
  std::string plot_out;
  CLI::App* plot_cmd = app.add_subcommand(
      "plot", "Render aggregate CSVs as an SVG learning-curve chart");
  plot_cmd->add_option("--inputs", plot_inputs, "aggregate CSV files")
      ->required();
  plot_cmd->add_option("--out", plot_out, "output SVG path")->required();

  std::uint64_t solve_seed = 0;
  int solve_size = 8;
  CLI::App* solve_cmd = app.add_subcommand(
      "solve", "BFS-check that a seeded layout is solvable");
  solve_cmd->add_option("--seed", solve_seed, "layout seed")->required();
  solve_cmd->add_option("--size", solve_size, "grid size");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);  // --help and friends
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (run_cmd->parsed()) {
      RunConfig cfg = RunConfig::load(run_config_path);
      const RunOutput out = run(std::move(cfg));
      for (const SeedRunResult& r : out.seeds)
        std::cout << r.csv.string() << "\n";
      std::cout << out.manifest.string() << "\n";
    } else if (agg_cmd->parsed()) {
      const std::vector<std::filesystem::path> paths(agg_inputs.begin(),
                                                     agg_inputs.end());
      AggregateCurve curve = aggregate(paths, window);
      curve.name = std::filesystem::path(agg_out).stem().string();
      write_aggregate_csv(curve, agg_out);
      std::cout << agg_out << "\n";
    } else if (plot_cmd->parsed()) {
      std::vector<AggregateCurve> curves;
      curves.reserve(plot_inputs.size());
      for (const std::string& p : plot_inputs)
        curves.push_back(read_aggregate_csv(p));
      write_svg_chart(curves, plot_out);
      std::cout << plot_out << "\n";
    } else if (solve_cmd->parsed()) {
      const grid::GridWorld world =
          grid::GridWorld::doorkey(solve_size, solve_seed);
      std::cout << world.render();
      const std::optional<std::vector<grid::Action>> plan =
          grid::find_goal_plan(world);
      if (!plan) {
        std::cout << "unsolvable\n";
        return 1;
      }
      std::cout << "solvable in " << plan->size() << " actions\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace imgrid::runner
