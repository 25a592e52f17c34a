#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "risvr/config.hpp"
#include "risvr/dataset.hpp"
#include "risvr/policy.hpp"
#include "risvr/scheduler.hpp"

namespace risvr {

struct TraceRow {
  int t = 0;
  double q_max = 0.0;
  double sum_rate_bps = 0.0;
  double z1 = 0.0;
  double z2 = 0.0;
  double evar_window = 0.0;
  int served_count = 0;
};

struct Summary {
  double mean_q = 0.0;
  double mean_q2 = 0.0;
  double mean_sum_rate_bps = 0.0;
  bool constraint_eps_ok = false;
  bool constraint_eta_ok = false;
  std::uint64_t seed = 0;
  std::string config_hash;
};

struct MetricsTrace {
  std::vector<TraceRow> rows;
  Summary summary;
  long drift_violations = 0;  // slots where the per-realization drift bound failed
};

/// Environment side of one episode: owns the world, the queues and the
/// per-purpose random substreams. Schedulers are driven from outside so
/// the same environment randomness is replayed under any of them
/// (common random numbers).
class SimEnv {
 public:
  SimEnv(const SimConfig& cfg, std::uint64_t episode_index = 0);

  /// Advance mobility and blockage, draw channel phases, compute rates
  /// and snapshot the scheduler observation.
  void begin_slot();

  const LinkGeometry& links() const { return links_; }
  const RateMatrix& rates() const { return rates_; }
  const MdpState& state() const { return state_; }
  const QueueState& queues() const { return queues_; }
  int slot() const { return slot_; }
  const SimConfig& config() const { return cfg_; }

  struct SlotResult {
    double reward = 0.0;
    double q_max = 0.0;
    double sum_rate_bps = 0.0;
    int served_count = 0;
    bool drift_ok = true;
  };

  /// Sample arrivals, evaluate the reward, update content and virtual
  /// queues and check the per-slot drift bound.
  SlotResult finish_slot(const Association& assoc);

 private:
  SimConfig cfg_;
  Rng mobility_rng_, blockage_rng_, phases_rng_, arrivals_rng_;
  std::vector<UserState> users_;
  LinkGeometry links_;
  std::vector<PhaseVector> psi_;
  RateMatrix rates_;
  MdpState state_;
  QueueState queues_;
  int slot_ = 0;
};

using SlotRecorder = std::function<void(int slot, const MdpState&, const Association&)>;

/// Run one full episode under the configured scheduler. policy is
/// required iff cfg.scheduler == policy. Deterministic in (cfg, seed,
/// episode_index).
MetricsTrace run_episode(const SimConfig& cfg, const PolicyParams* policy = nullptr,
                         std::uint64_t episode_index = 0, const SlotRecorder& recorder = {});

/// Roll the exact scheduler for `episodes` episodes and label every slot
/// with its decision; episodes are split 80/10/10 (cfg.train.split).
Dataset generate_dataset(const SimConfig& cfg, int episodes);

std::string trace_csv_string(const MetricsTrace& trace);
void write_trace_csv(const std::string& path, const MetricsTrace& trace);
std::string summary_json_string(const MetricsTrace& trace);
void write_summary_json(const std::string& path, const MetricsTrace& trace);

struct SchedulerComparison {
  SchedulerKind kind;
  Summary summary;
  double queue_gap = 0.0;  // (kind - optimal) / optimal on mean max queue
  double rate_gap = 0.0;   // (optimal - kind) / optimal on mean sum rate
};

/// Run each scheduler on identical seeds and report gaps vs optimal.
std::vector<SchedulerComparison> compare(const SimConfig& cfg,
                                         std::span<const SchedulerKind> kinds,
                                         const PolicyParams* policy = nullptr);

}  // namespace risvr
