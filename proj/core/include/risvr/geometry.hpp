#pragma once

#include <cstdint>
#include <vector>

#include "risvr/grid.hpp"
#include "risvr/rng.hpp"

namespace risvr {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// One RIS mounted on a room wall. Walls are numbered counterclockwise:
/// 0 = bottom (y=0), 1 = right (x=side), 2 = top (y=side), 3 = left (x=0).
struct RisSite {
  Vec2 pos;
  int wall = 0;
};

/// Square indoor floor plan with wall-mounted RIS.
struct Room {
  double side = 40.0;
  double min_link_distance = 1.0;  // floor applied to every RIS-user distance
  std::vector<RisSite> ris;

  void validate() const;  // throws std::invalid_argument
};

struct UserState {
  Vec2 pos;
  double heading = 0.0;  // radians in [-pi, pi)
  double speed = 0.5;    // meters per slot
};

enum class BlockageMode { markov, geometric };

/// Per-link LoS blockage process. markov: two-state chain per link.
/// geometric: self-blockage cone behind the user's heading plus body
/// blockage by other users crossing the segment.
struct BlockageModel {
  BlockageMode mode = BlockageMode::markov;
  double p_stay_los = 0.95;
  double p_stay_blocked = 0.8;
  double self_block_half_angle = 1.0471975511965976;  // pi/3
  double body_radius = 0.3;
  bool initial_blocked = false;  // start all links blocked instead of LoS

  void validate() const;  // throws std::invalid_argument
};

/// Per-slot link state: s.at(b,u) is the LoS indicator, d.at(b,u) the
/// RIS-user distance (never below Room::min_link_distance).
struct LinkGeometry {
  Grid<std::uint8_t> s;
  Grid<double> d;
};

/// Deterministically place count_b RIS on the room perimeter,
/// round-robin across the 4 walls; the k RIS sharing a wall sit at the
/// midpoints of k equal wall segments.
std::vector<RisSite> place_ris(double room_side, int count_b);

/// Uniform initial placement strictly inside the room, headings uniform.
std::vector<UserState> place_users(int count_u, const Room& room, double speed, Rng& rng);

/// Heading-perturbation random walk with specular wall reflection.
/// Each user turns by a uniform draw in [-turn_half_angle, +turn_half_angle]
/// and advances speed meters; reflections keep positions strictly inside.
std::vector<UserState> step_users(const std::vector<UserState>& users, const Room& room,
                                  Rng& rng, double turn_half_angle = 0.7853981633974483);

/// All-links state for slot 0 (LoS unless model.initial_blocked).
LinkGeometry initial_links(const std::vector<UserState>& users, const Room& room,
                           const BlockageModel& model);

/// Advance the blockage process one slot and recompute distances.
LinkGeometry update_blockage(const LinkGeometry& prev, const std::vector<UserState>& users,
                             const Room& room, const BlockageModel& model, Rng& rng);

/// Wrap an angle to [-pi, pi).
double normalize_angle(double a);

}  // namespace risvr
