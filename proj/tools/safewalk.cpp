// safewalk command-line driver.
#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "safewalk/harness/ablation.hpp"
#include "safewalk/harness/checkpoint.hpp"
#include "safewalk/harness/config.hpp"
#include "safewalk/harness/csv.hpp"
#include "safewalk/harness/evaluate.hpp"
#include "safewalk/harness/teleop.hpp"
#include "safewalk/tasks/controller.hpp"

namespace fs = std::filesystem;
using namespace safewalk;
using namespace safewalk::harness;

namespace {

constexpr int kUsageError = 2;

struct ConfigFlags {
  std::string path;
  std::vector<std::string> overrides;
  bool quick = false;
};

void add_config_flags(CLI::App* cmd, ConfigFlags& flags, bool path_required) {
  auto* opt = cmd->add_option("--config", flags.path, "INI experiment configuration");
  if (path_required) opt->required();
  opt->check(CLI::ExistingFile);
  cmd->add_option("--set", flags.overrides, "override one key, e.g. --set sac.batch_size=64 (repeatable)");
  cmd->add_flag("--quick", flags.quick, "divide the per-task budget by four");
}

ExperimentConfig resolve(const ConfigFlags& flags) {
  ExperimentConfig config = flags.path.empty() ? ExperimentConfig{} : load_config(flags.path);
  for (const auto& o : flags.overrides) apply_override(config, o);
  if (flags.quick) config.quick = true;
  config.validate();
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::string checkpoint_name(std::uint64_t seed) { return "checkpoint_seed" + std::to_string(seed) + ".bin"; }

int cmd_train(const ConfigFlags& flags, const std::string& out_dir) {
  const ExperimentConfig config = resolve(flags);
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "config.ini", to_ini(config));

  const auto& seeds = config.seeds;
  std::vector<std::vector<tasks::RunRecord>> records(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  const long n = static_cast<long>(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long k = 0; k < n; ++k) {
    try {
      tasks::TrainingSession session(config.session_for(seeds[k]));
      session.run();
      records[k] = session.records();
      save_checkpoint(make_checkpoint(config, session), (fs::path(out_dir) / checkpoint_name(seeds[k])).string());
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::ofstream curves(fs::path(out_dir) / "curves.csv");
  curves << kCurvesHeader << '\n';
  for (const auto& r : records) write_curves(curves, r, false);
  if (!curves) throw std::runtime_error("cannot write curves.csv");

  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const auto& r = records[k];
    std::printf("seed %llu: %zu episodes, falls %zu, out-of-workspace %zu, final return %.2f\n",
                static_cast<unsigned long long>(seeds[k]), r.size(), r.empty() ? 0 : r.back().falls,
                r.empty() ? 0 : r.back().out_of_workspace, final_return(r));
  }
  std::printf("wrote %s\n", out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& path, std::size_t episodes, std::uint64_t seed) {
  const Checkpoint ck = load_checkpoint(path);
  const EvaluationStats stats = evaluate_policy(ck, episodes, seed);
  std::printf("%-11s %8s %12s %6s %13s %11s %9s\n", "task", "episodes", "mean_return", "falls", "displacement",
              "yaw_change", "steps");
  for (const auto& t : stats.tasks) {
    std::printf("%-11s %8zu %12.3f %6zu %13.4f %11.4f %9.1f\n", t.task.c_str(), t.episodes, t.mean_return, t.falls,
                t.mean_displacement, t.mean_yaw_change, t.mean_steps);
  }
  return 0;
}

void print_summary(const AblationResult& result) {
  std::printf("%-22s %-18s %-16s %10s %10s %10s\n", "setting", "metric", "safety", "mean", "min", "max");
  for (const auto& row : result.summary) {
    std::printf("%-22s %-18s %-16s %10.3f %10.3f %10.3f\n", (row.workspace + "/" + row.scheduler).c_str(),
                row.metric.c_str(), row.safety.c_str(), row.mean, row.min, row.max);
  }
}

std::atomic<bool> g_interrupted{false};

int cmd_serve(const std::string& path, unsigned short port, const std::string& address, double pace) {
  const Checkpoint ck = load_checkpoint(path);
  tasks::ControllerSettings settings;
  settings.terrain = ck.config.session.terrain;
  settings.workspace = ck.config.session.workspace;
  settings.dynamics = ck.config.session.dynamics;
  settings.reward_scale = ck.config.session.reward_scale;
  settings.seed = ck.seed;
  TeleopOptions options;
  options.address = address;
  options.port = port;
  options.pace = pace;
  TeleopServer server(tasks::ComposedController(ck.config.session.tasks, ck.policies(), settings), options);
  server.start();
  std::printf("serving ws://%s:%u (tasks:", address.c_str(), server.port());
  for (const auto& name : ck.task_names) std::printf(" %s", name.c_str());
  std::printf(")\n");
  std::fflush(stdout);
  std::signal(SIGINT, [](int) { g_interrupted = true; });
  std::signal(SIGTERM, [](int) { g_interrupted = true; });
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"safewalk: multi-task safe locomotion learning on a planar walker"};
  app.require_subcommand(1);

  ConfigFlags train_flags, oob_flags, safety_flags;
  std::string out_dir;

  auto* train = app.add_subcommand("train", "train every configured seed and write curves and checkpoints");
  add_config_flags(train, train_flags, false);
  train->add_option("--out", out_dir, "output directory")->required();

  std::string checkpoint;
  std::size_t episodes = 10;
  std::uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "deterministic evaluation of a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--episodes", episodes, "episodes per task")->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_seed, "evaluation seed");

  auto* oob = app.add_subcommand("ablate-oob", "out-of-workspace ablation over workspace presets");
  add_config_flags(oob, oob_flags, false);
  oob->add_option("--out", out_dir, "output directory")->required();

  auto* safety = app.add_subcommand("ablate-safety", "safety-mode ablation");
  add_config_flags(safety, safety_flags, false);
  safety->add_option("--out", out_dir, "output directory")->required();

  unsigned short port = 8765;
  std::string address = "127.0.0.1";
  double pace = 1.0;
  auto* serve = app.add_subcommand("serve", "teleoperation websocket server");
  serve->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  serve->add_option("--port", port, "listen port (0 picks one)");
  serve->add_option("--address", address, "listen address");
  serve->add_option("--pace", pace, "multiplier on the 50 Hz wall pace; 0 runs unthrottled");

  ConfigFlags print_flags;
  auto* print = app.add_subcommand("config", "print the effective configuration with every key documented");
  add_config_flags(print, print_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (*train) return cmd_train(train_flags, out_dir);
    if (*eval) return cmd_eval(checkpoint, episodes, eval_seed);
    if (*oob) {
      const AblationResult r = run_ablation_oob(resolve(oob_flags), out_dir);
      print_summary(r);
      return 0;
    }
    if (*safety) {
      const AblationResult r = run_ablation_safety(resolve(safety_flags), out_dir);
      print_summary(r);
      return 0;
    }
    if (*serve) return cmd_serve(checkpoint, port, address, pace);
    if (*print) {
      std::cout << to_ini(resolve(print_flags));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
