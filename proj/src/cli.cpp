#include "rpt/cli.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

namespace rpt::cli {

namespace {

void echo_config(const RunConfig& config) {
  std::filesystem::create_directories(config.out_dir);
  atomic_write_file(config.out_dir + "/config_resolved.json",
                    config_to_json(config).dump(2) + "\n");
}

int run_train(RunConfig config) {
  echo_config(config);
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  tc.out_dir = config.out_dir;
  const TrainResult result = train(tc);
  std::cout << "train: " << result.metrics.size() << " iterations, final mean return "
            << format_g9(result.metrics.back().mean_return)
            << ", success rate "
            << format_g9(result.metrics.back().success_rate) << "\n";
  return 0;
}

struct EvalScenario {
  std::string name;
  PerturbationSpec spec;
};

std::vector<EvalScenario> eval_scenarios(const RunConfig& config,
                                         bool image_env) {
  const double level = config.eval.obs_level;
  const double p_clean = config.eval.p_clean;
  std::vector<EvalScenario> rows;
  rows.push_back({"clean", PerturbationSpec{}});
  if (image_env) {
    for (ObsChannel ch : {ObsChannel::kShift, ObsChannel::kRotation,
                          ObsChannel::kColor, ObsChannel::kOcclusion,
                          ObsChannel::kErasing})
      rows.push_back({channel_name(ch),
                      PerturbationSpec{ch, level, 0.0, p_clean}});
  } else {
    rows.push_back({"vector_ball",
                    PerturbationSpec{ObsChannel::kVectorBall, level, 0.0,
                                     p_clean}});
  }
  for (double sigma : {0.1, 0.2, 0.3}) {
    std::ostringstream name;
    name << "action_" << sigma;
    rows.push_back({name.str(),
                    PerturbationSpec{ObsChannel::kNone, 0.0, sigma, 0.0}});
  }
  const ObsChannel joint_ch =
      image_env ? ObsChannel::kRotation : ObsChannel::kVectorBall;
  rows.push_back({"joint_" + channel_name(joint_ch) + "_action_0.1",
                  PerturbationSpec{joint_ch, level, 0.1, p_clean}});
  return rows;
}

}  // namespace

std::string eval_grid_csv(const RunConfig& config, const PolicyParams& params) {
  std::unique_ptr<Env> env = make_env(config.train.env);
  if (params.input_dim() != env->obs_dim())
    throw ConfigError("eval.checkpoint: policy input dim " +
                      std::to_string(params.input_dim()) +
                      " does not match env observation dim " +
                      std::to_string(env->obs_dim()));
  const bool image_env = env->image_side() > 0;
  const num::RngStream rng(config.seed, {"eval"});
  std::ostringstream out;
  out << "scenario,success_rate,mean_return\n";
  for (const EvalScenario& sc : eval_scenarios(config, image_env)) {
    const EvalResult r = evaluate(params, *env, config.eval.episodes, sc.spec,
                                  rng.child(sc.name));
    out << sc.name << ',' << format_g9(r.success_rate) << ','
        << format_g9(r.mean_return) << '\n';
  }
  return out.str();
}

namespace {

int run_eval(RunConfig config) {
  if (config.eval.checkpoint.empty())
    throw ConfigError("eval.checkpoint: required for the eval subcommand");
  echo_config(config);
  const PolicyParams params = load_checkpoint(config.eval.checkpoint);
  const std::string csv = eval_grid_csv(config, params);
  atomic_write_file(config.out_dir + "/eval.csv", csv);
  std::cout << csv;
  return 0;
}

int run_verify_bounds(RunConfig config) {
  echo_config(config);
  std::vector<BoundScenario> suite = config.bound_scenarios.empty()
                                         ? default_bound_suite()
                                         : config.bound_scenarios;
  if (config.bound_rollouts_override > 0)
    for (BoundScenario& sc : suite) sc.rollouts = config.bound_rollouts_override;

  const num::RngStream rng(config.seed, {"bounds"});
  const std::vector<BoundReport> reports =
      verify(suite, rng, config.bound_threads);
  atomic_write_file(config.out_dir + "/bound_report.csv",
                    bound_report_csv(reports));

  bool all_ok = true;
  for (const BoundReport& r : reports) {
    std::cout << (r.satisfied ? "satisfied  " : "VIOLATED   ")
              << theorem_name(r.kind) << " " << r.scenario
              << " H=" << r.params.horizon << " gap="
              << format_g9(r.gap_mean) << "+-" << format_g9(r.gap_se)
              << " bound=" << format_g9(r.bound) << "\n";
    all_ok = all_ok && r.satisfied;
  }
  return all_ok ? 0 : 3;
}

int run_perturb_demo(RunConfig config) {
  echo_config(config);
  const int side = config.demo.image_side;
  const num::RngStream rng(config.seed, {"demo"});
  num::RngStream scene = rng.child("scene");
  const Vector position{{scene.uniform(0.2, 0.8), scene.uniform(0.2, 0.8)}};
  const Vector goal{{scene.uniform(0.2, 0.8), scene.uniform(0.2, 0.8)}};
  const Matrix base = render_image(position, goal, side);
  write_pgm(base, config.out_dir + "/clean.pgm");

  for (ObsChannel ch : {ObsChannel::kShift, ObsChannel::kRotation,
                        ObsChannel::kColor, ObsChannel::kOcclusion,
                        ObsChannel::kErasing}) {
    for (double level : config.demo.levels) {
      PerturbationSpec spec;
      spec.channel = ch;
      spec.obs_level = level;
      const long millis = std::lround(level * 1000.0);
      num::RngStream stream =
          rng.child(channel_name(ch)).child(static_cast<std::uint64_t>(millis));
      const Matrix img = perturb_observation(base, spec, stream);
      std::ostringstream name;
      name << channel_name(ch) << "_" << millis << ".pgm";
      write_pgm(img, config.out_dir + "/" + name.str());
    }
  }
  std::cout << "perturb-demo: wrote images to " << config.out_dir << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"robustness-regularized online RL post-training lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  std::string out_override;
  app.add_option("--config", config_path, "JSON config file (flat dotted keys)");
  app.add_option("--seed", seed_override, "override config seed")
      ->each([&](const std::string&) { seed_given = true; });
  app.add_option("--out", out_override, "override output directory");

  CLI::App* cmd_train = app.add_subcommand("train", "run the training loop");
  CLI::App* cmd_eval =
      app.add_subcommand("eval", "evaluate a checkpoint on the scenario grid");
  CLI::App* cmd_bounds =
      app.add_subcommand("verify-bounds", "certify the robustness bounds");
  CLI::App* cmd_demo =
      app.add_subcommand("perturb-demo", "write perturbation demo images");
  for (CLI::App* cmd : {cmd_train, cmd_eval, cmd_bounds, cmd_demo})
    cmd->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    RunConfig config = config_path.empty()
                           ? parse_config(nlohmann::json::object())
                           : load_config_file(config_path);
    if (seed_given) {
      config.seed = seed_override;
      config.train.seed = seed_override;
    }
    if (!out_override.empty()) config.out_dir = out_override;

    if (cmd_train->parsed()) return run_train(std::move(config));
    if (cmd_eval->parsed()) return run_eval(std::move(config));
    if (cmd_bounds->parsed()) return run_verify_bounds(std::move(config));
    if (cmd_demo->parsed()) return run_perturb_demo(std::move(config));
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalAbort& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rpt::cli
