#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "risvr/dataset.hpp"
#include "risvr/policy.hpp"
#include "risvr/rng.hpp"

namespace risvr {

struct SimConfig;

enum class TrainMode { clone, reinforce, clone_then_reinforce };

/// One transition of a policy rollout, kept for the REINFORCE update.
struct TrajectoryStep {
  MdpState state;
  Association action;
  double reward = 0.0;
  double action_log_prob = 0.0;
};

struct TrainConfig {
  int max_epochs = 1000;
  int batch_size = 128;  // minimum slots per gradient step
  double split[3] = {0.8, 0.1, 0.1};
  double learning_rate = 1e-3;
  int hidden = 128;
  TrainMode mode = TrainMode::clone;
  int patience = 50;  // epochs without validation improvement before stopping
  double target_accuracy = 2.0;  // stop once validation reaches this; > 1 disables

  // reinforce-specific knobs
  int episodes_per_epoch = 8;
  int reinforce_epochs = 100;
  int reinforce_horizon = 200;

  void validate() const;  // throws std::invalid_argument
};

struct EpochRow {
  int epoch = 0;
  double loss = 0.0;          // mean cross-entropy (clone) or -mean reward (reinforce)
  double val_accuracy = 0.0;  // per-RIS accuracy on the validation split
};

struct TrainReport {
  std::vector<EpochRow> rows;
  double best_val_accuracy = 0.0;
  int best_epoch = -1;
  int skipped_updates = 0;  // non-finite gradients abort the update
};

struct TrainResult {
  PolicyParams params;
  TrainReport report;
};

/// Train the recurrent policy. clone fits the exact-scheduler labels by
/// per-head cross-entropy with mini-batch SGD and early stopping;
/// reinforce runs policy-gradient updates on simulator rollouts (sim
/// must be non-null); clone_then_reinforce chains the two.
TrainResult train(const TrainConfig& cfg, const Dataset& data, const SimConfig* sim,
                  const EncodeNorms& norms, Rng& rng);

enum class EvalMetric { per_ris_accuracy, exact_match, queue_gap, rate_gap };
enum class DecodeMode { greedy, sample };

/// Accuracy metrics against the recorded oracle labels of a dataset split.
double evaluate_dataset(const PolicyParams& params, const Dataset& data, Split split,
                        EvalMetric metric, const EncodeNorms& norms,
                        DecodeMode mode = DecodeMode::greedy, Rng* rng = nullptr);

/// Rollout metrics: greedy-decoded policy vs the exact scheduler on
/// identical seeds (common random numbers). Both sides run the same
/// `episodes` fresh episodes of cfg.horizon slots, matching the episodic
/// structure the policy is trained and deployed on; queue_gap =
/// (policy - oracle) / oracle on the time-averaged max queue, rate_gap =
/// (oracle - policy) / oracle on the mean served sum rate.
struct GapReport {
  double queue_gap = 0.0;
  double rate_gap = 0.0;
  double policy_mean_q = 0.0, oracle_mean_q = 0.0;
  double policy_rate = 0.0, oracle_rate = 0.0;
};
GapReport evaluate_gaps(const PolicyParams& params, const SimConfig& cfg, int episodes = 20);

/// report.csv rows: epoch,loss,val_accuracy.
void write_train_report(const std::string& path, const TrainReport& report);

}  // namespace risvr
