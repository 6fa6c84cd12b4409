// Command-line front end: scenario runs, Monte Carlo batches, calibration
// helpers, and plot-data emission.
//
// Exit codes: 0 nominal, 1 I/O or internal error, 2 validation/parse failure,
// 3 run completed but at least one berry hit NonConvergence.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "berrysim/errors.hpp"
#include "berrysim/harness.hpp"
#include "berrysim/scenario.hpp"

namespace {

int run_simulate(const std::string& scenario_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
  const berrysim::Scenario scenario = berrysim::load_scenario(scenario_path);
  const berrysim::RunResult result = berrysim::run(scenario, seed);
  berrysim::write_artifacts(result, scenario, out_dir);
  const auto& agg = result.aggregates;
  std::cout << "berries " << agg.total_berries << "  pulls " << agg.pull_attempts
            << "  detached " << agg.successes << "  skipped " << agg.skipped
            << "  nonconverged " << agg.nonconverged << "\n";
  if (agg.efficiency) std::cout << "efficiency " << *agg.efficiency << "\n";
  std::cout << "artifacts written to " << out_dir << "\n";
  return result.exit_code();
}

int run_montecarlo(const std::string& scenario_path, int trials,
                   std::optional<std::uint64_t> seed, const std::string& out_dir) {
  const berrysim::Scenario scenario = berrysim::load_scenario(scenario_path);
  const berrysim::MonteCarloResult mc = berrysim::monte_carlo(scenario, trials, seed);
  berrysim::write_monte_carlo_artifacts(mc, scenario, out_dir);
  std::cout << "trials " << mc.trials.size() << "  pooled pulls "
            << mc.pooled.pull_attempts << "  detached " << mc.pooled.successes << "\n";
  if (mc.pooled.efficiency) {
    std::cout << "efficiency " << *mc.pooled.efficiency;
    if (mc.efficiency_ci)
      std::cout << "  (95% CI " << mc.efficiency_ci->lo << " .. " << mc.efficiency_ci->hi
                << ")";
    std::cout << "\n";
  }
  std::cout << "artifacts written to " << out_dir << "\n";
  return mc.nonconvergence ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic harvesting-gripper simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir = "berrysim_out";
  std::uint64_t seed = 0;
  bool seed_set = false;

  auto* simulate = app.add_subcommand("simulate", "Run one scenario end to end");
  simulate->add_option("scenario", scenario_path, "Scenario JSON file or preset name")
      ->required();
  simulate->add_option("--seed", seed, "Override the scenario master seed")
      ->each([&](const std::string&) { seed_set = true; });
  simulate->add_option("--out", out_dir, "Output directory (default berrysim_out)");

  int trials = 1;
  auto* montecarlo = app.add_subcommand("montecarlo", "Run independent trial replicas");
  montecarlo->add_option("scenario", scenario_path, "Scenario JSON file or preset name")
      ->required();
  montecarlo->add_option("--trials", trials, "Number of trials")->required();
  montecarlo->add_option("--seed", seed, "Override the scenario master seed")
      ->each([&](const std::string&) { seed_set = true; });
  montecarlo->add_option("--out", out_dir, "Output directory (default berrysim_out)");

  std::string ripe_csv, unripe_csv, mode = "midpoint";
  auto* fit = app.add_subcommand("calibrate-threshold",
                                 "Fit a classification threshold from sample CSVs");
  fit->add_option("ripe_csv", ripe_csv, "One-column CSV of ripe reflectance samples")
      ->required();
  fit->add_option("unripe_csv", unripe_csv, "One-column CSV of unripe reflectance samples")
      ->required();
  fit->add_option("--mode", mode, "midpoint (default) or minerror")
      ->check(CLI::IsMember({"midpoint", "minerror"}));

  double target = 0.88, capacity = 4.0;
  std::string model_scenario;
  auto* slip = app.add_subcommand(
      "calibrate-slip", "Solve the slip probability for a target efficiency");
  slip->add_option("--target", target, "Target detachment efficiency")->required();
  slip->add_option("--capacity", capacity, "Gripper pull capacity in N (default 4.0)");
  slip->add_option("--scenario", model_scenario,
                   "Take the retention model from this scenario instead of defaults");

  std::string run_dir, plots_dir;
  auto* plots = app.add_subcommand("emit-plots", "Emit plot-ready CSVs from a run directory");
  plots->add_option("run_dir", run_dir, "Directory written by `simulate`")->required();
  plots->add_option("--out", plots_dir, "Plot output directory (default <run_dir>/plots)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      return run_simulate(scenario_path,
                          seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                          out_dir);
    }
    if (*montecarlo) {
      return run_montecarlo(scenario_path, trials,
                            seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                            out_dir);
    }
    if (*fit) {
      const std::vector<double> ripe = berrysim::read_sample_csv(ripe_csv);
      const std::vector<double> unripe = berrysim::read_sample_csv(unripe_csv);
      const auto m = mode == "minerror" ? berrysim::ThresholdMode::MinError
                                        : berrysim::ThresholdMode::MeanMidpoint;
      std::printf("%.10g\n", berrysim::fit_threshold(ripe, unripe, m));
      return 0;
    }
    if (*slip) {
      berrysim::RetentionModel model;
      berrysim::GraspParams params;
      params.pull_capacity_n = capacity;
      if (!model_scenario.empty()) {
        const berrysim::Scenario s = berrysim::load_scenario(model_scenario);
        model = s.retention;
        params = s.grasp;
        params.pull_capacity_n = capacity;
      }
      std::printf("%.10g\n", berrysim::calibrate_slip(target, model, params));
      return 0;
    }
    if (*plots) {
      berrysim::emit_plots(run_dir, plots_dir);
      std::cout << "plot CSVs written\n";
      return 0;
    }
  } catch (const berrysim::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const berrysim::NotSeparableError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const berrysim::InfeasibleTargetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
