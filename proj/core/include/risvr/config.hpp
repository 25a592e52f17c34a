#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "risvr/channel.hpp"
#include "risvr/geometry.hpp"
#include "risvr/queueing.hpp"
#include "risvr/train.hpp"

namespace risvr {

/// Bad parameter values or malformed config content. CLI exit code 1.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem failures, always carrying the offending path. CLI exit code 2.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SchedulerKind { optimal, policy, random, nearest };

const char* scheduler_name(SchedulerKind k);
SchedulerKind scheduler_from_name(const std::string& name);

struct MobilityConfig {
  double speed = 0.5;                          // meters per slot
  double turn_half_angle = 0.7853981633974483; // pi/4
  std::vector<Vec2> positions;                 // optional fixed initial placement
};

/// Everything one simulation run needs. Field defaults reproduce the
/// reference indoor scenario: 40 m room, 4 wall RIS, 3 users, Markov
/// blockage, unit Poisson load.
struct SimConfig {
  int b = 4;
  int u = 3;
  ChannelParams channel;
  RiskParams risk;
  std::vector<double> lambda = {1.0, 1.0, 1.0};  // per-user arrival rates
  Room room;    // ris positions filled by finalize()
  MobilityConfig mobility;
  BlockageModel blockage;
  int horizon = 1000;
  std::uint64_t seed = 1;
  SchedulerKind scheduler = SchedulerKind::optimal;
  TrainConfig train;
  EncodeNorms norms;

  /// Place RIS, broadcast arrival rates, and validate everything.
  void finalize();

  ArrivalConfig arrivals() const { return ArrivalConfig{lambda}; }
};

/// Parse a config document; unknown keys anywhere are errors. Missing
/// keys fall back to defaults. The returned config is finalized.
SimConfig parse_sim_config(const std::string& json_text);

/// Load from disk; throws IoError (path included) on filesystem trouble.
SimConfig load_sim_config(const std::string& path);

/// FNV-1a hash of the canonical serialized config, as 16 hex digits.
/// Stable across runs for identical resolved configs.
std::string config_hash(const SimConfig& cfg);

}  // namespace risvr
