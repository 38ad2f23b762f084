// rio: simulate datasets, run the radar-inertial pipeline, evaluate trajectories.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "rio/config.hpp"
#include "rio/io.hpp"
#include "rio/metrics.hpp"
#include "rio/pipeline.hpp"
#include "rio/sim.hpp"

namespace {

struct RunArgs {
  std::string dataset, config, prior_map, mode, out, events, timing;
};

struct SimulateArgs {
  std::string scenario, out, world_out, gt_out;
};

struct EvalArgs {
  std::string est, gt, align = "first";
  double max_dt = 0.01;
};

struct DefaultsArgs {
  std::string config_out, scenario_out;
};

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string s;
  for (const std::string& l : lines) s += l + '\n';
  rio::write_file(path, s);
}

int run(const RunArgs& a) {
  rio::PipelineConfig config = a.config.empty() ? rio::PipelineConfig{} : rio::load_config(a.config);
  if (!a.mode.empty()) config.mode = rio::parse_mode(a.mode);

  rio::Dataset dataset;
  try {
    dataset = rio::load_dataset(a.dataset);
  } catch (const rio::ParseError& e) {
    throw rio::Error(a.dataset + ": " + e.what());
  }

  std::optional<rio::PriorMap> prior;
  if (!a.prior_map.empty()) {
    std::vector<rio::Vec3> points;
    try {
      points = rio::load_points(a.prior_map);
    } catch (const rio::ParseError& e) {
      throw rio::Error(a.prior_map + ": " + e.what());
    }
    if (points.empty()) throw rio::Error(a.prior_map + ": prior map is empty");
    prior.emplace(points);
  }

  const rio::PipelineOutput out = rio::run_pipeline(dataset, config, prior ? &*prior : nullptr);
  std::ostringstream traj;
  rio::write_trajectory(traj, out.trajectory);
  rio::write_file(a.out, traj.str());
  if (!a.events.empty()) write_lines(a.events, out.events);
  const std::string timing = out.timing.format();
  if (!a.timing.empty()) rio::write_file(a.timing, timing);
  for (const std::string& e : out.events) {
    if (e.rfind("warn", 0) == 0) std::cerr << e << '\n';
  }
  std::cout << "mode " << rio::mode_name(config.mode) << ", " << out.trajectory.size() << " poses, local map "
            << out.final_map_size << " points\n"
            << timing;
  return 0;
}

int simulate(const SimulateArgs& a) {
  const rio::sim::Scenario scenario = rio::load_scenario(a.scenario);
  const rio::sim::SimulatedData data = rio::sim::simulate(scenario);
  const rio::Dataset dataset = rio::to_dataset(data);

  std::ostringstream log;
  rio::write_dataset(log, dataset);
  rio::write_file(a.out, log.str());
  if (!a.world_out.empty()) {
    std::ostringstream world;
    rio::write_points(world, data.world);
    rio::write_file(a.world_out, world.str());
  }
  if (!a.gt_out.empty()) {
    std::ostringstream gt;
    rio::write_trajectory(gt, dataset.ground_truth);
    rio::write_file(a.gt_out, gt.str());
  }
  std::printf("%zu imu samples, %zu scans, %zu world points, path length %.3f m\n", dataset.imu.size(),
              dataset.radar.size(), data.world.size(), data.path_length);
  return 0;
}

int eval(const EvalArgs& a) {
  const auto est = rio::load_trajectory(a.est);
  const auto gt = rio::load_trajectory(a.gt);
  const rio::ApeResult ape = rio::ape_rmse(est, gt, rio::parse_alignment(a.align), a.max_dt);
  std::printf("pairs %zu\nape_translation_rmse_m %.6f\nape_rotation_rmse_deg %.6f\nloop_closure_error_m %.6f\n",
              ape.pairs, ape.translation_rmse, ape.rotation_rmse_deg, rio::loop_closure_error(est));
  return 0;
}

int defaults(const DefaultsArgs& a) {
  if (!a.config_out.empty()) {
    std::ostringstream s;
    rio::write_config(s, rio::PipelineConfig{});
    rio::write_file(a.config_out, s.str());
  }
  if (!a.scenario_out.empty()) {
    std::ostringstream s;
    rio::write_scenario(s, rio::sim::Scenario{});
    rio::write_file(a.scenario_out, s.str());
  }
  if (a.config_out.empty() && a.scenario_out.empty()) rio::write_config(std::cout, rio::PipelineConfig{});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar-inertial odometry toolkit"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run_cmd = app.add_subcommand("run", "Run the estimator on a dataset log");
  run_cmd->add_option("--dataset", run_args.dataset, "Dataset log (.gz accepted)")->required();
  run_cmd->add_option("--config", run_args.config, "key = value configuration file");
  run_cmd->add_option("--prior-map", run_args.prior_map, "Point list used as prior map");
  run_cmd->add_option("--mode", run_args.mode, "Fusion mode, overrides the config")
      ->check(CLI::IsMember({"full", "doppler-only", "p2d-only", "p2p-only"}));
  run_cmd->add_option("--out", run_args.out, "Output trajectory (t px py pz qx qy qz qw)")->required();
  run_cmd->add_option("--events", run_args.events, "Event log output");
  run_cmd->add_option("--timing", run_args.timing, "Timing report output");

  SimulateArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic flight dataset");
  sim_cmd->add_option("--scenario", sim_args.scenario, "Scenario file")->required();
  sim_cmd->add_option("--out", sim_args.out, "Dataset log output (.gz compresses)")->required();
  sim_cmd->add_option("--world-out", sim_args.world_out, "World point list output, usable as prior map");
  sim_cmd->add_option("--gt-out", sim_args.gt_out, "Ground-truth trajectory output");

  EvalArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "APE RMSE and loop-closure error");
  eval_cmd->add_option("--est", eval_args.est, "Estimated trajectory")->required();
  eval_cmd->add_option("--gt", eval_args.gt, "Ground-truth trajectory")->required();
  eval_cmd->add_option("--align", eval_args.align, "Alignment")
      ->check(CLI::IsMember({"first", "none", "umeyama"}));
  eval_cmd->add_option("--max-dt", eval_args.max_dt, "Association window, s");

  DefaultsArgs def_args;
  CLI::App* def_cmd = app.add_subcommand("defaults", "Print or write default config and scenario files");
  def_cmd->add_option("--config-out", def_args.config_out);
  def_cmd->add_option("--scenario-out", def_args.scenario_out);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(run_args);
    if (*sim_cmd) return simulate(sim_args);
    if (*eval_cmd) return eval(eval_args);
    if (*def_cmd) return defaults(def_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
