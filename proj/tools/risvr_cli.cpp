// Command-line front-end: simulate / dataset / train / evaluate.
// Exit codes: 0 success, 1 validation or usage error, 2 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "risvr/config.hpp"
#include "risvr/dataset.hpp"
#include "risvr/policy.hpp"
#include "risvr/sim.hpp"
#include "risvr/train.hpp"

namespace fs = std::filesystem;
using namespace risvr;

namespace {

SimConfig load_config_checked(const std::string& path) {
  if (!fs::exists(path)) throw IoError("config file not found: " + path);
  return load_sim_config(path);
}

void apply_overrides(SimConfig& cfg, const std::optional<std::uint64_t>& seed,
                     const std::optional<std::string>& scheduler,
                     const std::optional<int>& horizon) {
  if (seed) cfg.seed = *seed;
  if (scheduler) cfg.scheduler = scheduler_from_name(*scheduler);
  if (horizon) cfg.horizon = *horizon;
  cfg.finalize();
}

int run_simulate(const std::string& config_path, const std::optional<std::uint64_t>& seed,
                 const std::optional<std::string>& scheduler, const std::optional<int>& horizon,
                 const std::string& model_path, const std::string& out_dir) {
  SimConfig cfg = load_config_checked(config_path);
  apply_overrides(cfg, seed, scheduler, horizon);

  PolicyParams params;
  const PolicyParams* params_ptr = nullptr;
  if (cfg.scheduler == SchedulerKind::policy) {
    if (model_path.empty())
      throw ValidationError("simulate: --model is required with the policy scheduler");
    if (!fs::exists(model_path)) throw IoError("model file not found: " + model_path);
    params = load_checkpoint(model_path).first;
    params_ptr = &params;
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);

  const MetricsTrace trace = run_episode(cfg, params_ptr);
  write_trace_csv((fs::path(out_dir) / "trace.csv").string(), trace);
  write_summary_json((fs::path(out_dir) / "summary.json").string(), trace);
  std::cout << "wrote " << (fs::path(out_dir) / "trace.csv").string() << " ("
            << trace.rows.size() << " slots), drift_violations=" << trace.drift_violations
            << "\n";
  return 0;
}

int run_dataset(const std::string& config_path, int episodes,
                const std::optional<std::uint64_t>& seed, const std::string& out_path) {
  SimConfig cfg = load_config_checked(config_path);
  apply_overrides(cfg, seed, std::nullopt, std::nullopt);
  if (episodes < 1) throw ValidationError("dataset: --episodes must be >= 1");

  const Dataset ds = generate_dataset(cfg, episodes);
  write_dataset(out_path, ds);
  std::cout << "wrote " << out_path << " (" << ds.step_count() << " records, "
            << ds.of(Split::train).size() << "/" << ds.of(Split::val).size() << "/"
            << ds.of(Split::test).size() << " train/val/test episodes)\n";
  return 0;
}

int run_train(const std::string& config_path, const std::string& data_path,
              const std::optional<std::string>& mode, const std::string& out_dir) {
  SimConfig cfg = load_config_checked(config_path);
  if (mode) {
    if (*mode == "clone")
      cfg.train.mode = TrainMode::clone;
    else if (*mode == "reinforce")
      cfg.train.mode = TrainMode::reinforce;
    else if (*mode == "clone_then_reinforce")
      cfg.train.mode = TrainMode::clone_then_reinforce;
    else
      throw ValidationError("train: unknown mode '" + *mode + "'");
  }

  Dataset ds;
  if (cfg.train.mode != TrainMode::reinforce) {
    if (data_path.empty()) throw ValidationError("train: --data is required for cloning");
    if (!fs::exists(data_path)) throw IoError("dataset file not found: " + data_path);
    ds = load_dataset(data_path);
  } else if (!data_path.empty()) {
    if (!fs::exists(data_path)) throw IoError("dataset file not found: " + data_path);
    ds = load_dataset(data_path);
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir);

  Rng rng = make_stream(cfg.seed, StreamPurpose::train);
  const TrainResult result = train(cfg.train, ds, &cfg, cfg.norms, rng);
  save_checkpoint((fs::path(out_dir) / "checkpoint.bin").string(), result.params, cfg.seed);
  write_train_report((fs::path(out_dir) / "report.csv").string(), result.report);
  std::cout << "best validation accuracy " << result.report.best_val_accuracy << " at epoch "
            << result.report.best_epoch << "; wrote checkpoint.bin and report.csv to "
            << out_dir << "\n";
  return 0;
}

int run_evaluate(const std::string& config_path, const std::string& model_path,
                 const std::string& data_path, const std::string& metric) {
  SimConfig cfg = load_config_checked(config_path);
  if (!fs::exists(model_path)) throw IoError("model file not found: " + model_path);
  const PolicyParams params = load_checkpoint(model_path).first;

  double value = 0.0;
  if (metric == "per_ris_accuracy" || metric == "exact_match") {
    if (data_path.empty()) throw ValidationError("evaluate: --data is required for " + metric);
    if (!fs::exists(data_path)) throw IoError("dataset file not found: " + data_path);
    const Dataset ds = load_dataset(data_path);
    const Split split = ds.of(Split::test).empty() ? Split::val : Split::test;
    const EvalMetric m =
        metric == "per_ris_accuracy" ? EvalMetric::per_ris_accuracy : EvalMetric::exact_match;
    value = evaluate_dataset(params, ds, split, m, cfg.norms);
  } else if (metric == "queue_gap" || metric == "rate_gap") {
    const GapReport rep = evaluate_gaps(params, cfg);
    value = metric == "queue_gap" ? rep.queue_gap : rep.rate_gap;
  } else {
    throw ValidationError("evaluate: unknown metric '" + metric + "'");
  }
  std::cout << metric << "=" << value << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"THz RIS VR network simulator and scheduler"};
  app.require_subcommand(1);

  std::string config_path, out_dir, out_path, model_path, data_path, metric;
  std::optional<std::string> scheduler, mode;
  std::optional<std::uint64_t> seed;
  std::optional<int> horizon;
  int episodes = 1;

  auto* sim = app.add_subcommand("simulate", "Run one seeded episode and write trace/summary");
  sim->add_option("--config", config_path, "Config file (JSON)")->required();
  sim->add_option("--seed", seed, "Override the config seed");
  sim->add_option("--scheduler", scheduler, "optimal|policy|random|nearest");
  sim->add_option("--horizon", horizon, "Override the slot horizon");
  sim->add_option("--model", model_path, "Policy checkpoint (required for policy scheduler)");
  sim->add_option("--out", out_dir, "Output directory")->required();

  auto* ds = app.add_subcommand("dataset", "Label episodes with the exact scheduler");
  ds->add_option("--config", config_path, "Config file (JSON)")->required();
  ds->add_option("--episodes", episodes, "Number of episodes")->required();
  ds->add_option("--seed", seed, "Override the config seed");
  ds->add_option("--out", out_path, "Output dataset file (JSONL)")->required();

  auto* tr = app.add_subcommand("train", "Train the recurrent policy");
  tr->add_option("--config", config_path, "Config file (JSON)")->required();
  tr->add_option("--data", data_path, "Labeled dataset (JSONL)");
  tr->add_option("--mode", mode, "clone|reinforce|clone_then_reinforce");
  tr->add_option("--out", out_dir, "Output directory")->required();

  auto* ev = app.add_subcommand("evaluate", "Evaluate a trained policy");
  ev->add_option("--config", config_path, "Config file (JSON)")->required();
  ev->add_option("--model", model_path, "Policy checkpoint")->required();
  ev->add_option("--data", data_path, "Labeled dataset (JSONL)");
  ev->add_option("--metric", metric, "per_ris_accuracy|exact_match|queue_gap|rate_gap")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 prints usage/help itself; fold every parse problem into the
    // validation exit code except an explicit --help.
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed())
      return run_simulate(config_path, seed, scheduler, horizon, model_path, out_dir);
    if (ds->parsed()) return run_dataset(config_path, episodes, seed, out_path);
    if (tr->parsed()) return run_train(config_path, data_path, mode, out_dir);
    if (ev->parsed()) return run_evaluate(config_path, model_path, data_path, metric);
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
