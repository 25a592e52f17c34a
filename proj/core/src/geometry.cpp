#include "risvr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace risvr {

namespace {

constexpr double kPi = std::numbers::pi;

double dist(const Vec2& a, const Vec2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Distance from point p to segment [a, b].
double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = p.x - a.x, wy = p.y - a.y;
  const double vv = vx * vx + vy * vy;
  if (vv == 0.0) return dist(p, a);
  double t = (wx * vx + wy * vy) / vv;
  t = std::clamp(t, 0.0, 1.0);
  const Vec2 proj{a.x + t * vx, a.y + t * vy};
  return dist(p, proj);
}

bool in_back_cone(const UserState& u, const Vec2& ris, double half_angle) {
  const double dx = ris.x - u.pos.x, dy = ris.y - u.pos.y;
  const double n = std::hypot(dx, dy);
  if (n == 0.0) return false;
  // Angle between the RIS direction and the direction opposite the heading.
  const double bx = -std::cos(u.heading), by = -std::sin(u.heading);
  const double c = std::clamp((dx * bx + dy * by) / n, -1.0, 1.0);
  return std::acos(c) < half_angle;
}

Grid<double> compute_distances(const std::vector<UserState>& users, const Room& room) {
  const int b_count = static_cast<int>(room.ris.size());
  const int u_count = static_cast<int>(users.size());
  Grid<double> d(b_count, u_count);
  for (int b = 0; b < b_count; ++b)
    for (int u = 0; u < u_count; ++u)
      d.at(b, u) = std::max(dist(room.ris[b].pos, users[u].pos), room.min_link_distance);
  return d;
}

}  // namespace

double normalize_angle(double a) {
  double r = std::fmod(a + kPi, 2.0 * kPi);
  if (r < 0.0) r += 2.0 * kPi;
  return r - kPi;
}

void Room::validate() const {
  if (!(side > 0.0)) throw std::invalid_argument("Room: side must be > 0");
  if (!(min_link_distance > 0.0))
    throw std::invalid_argument("Room: min_link_distance must be > 0");
  for (const auto& r : ris) {
    const bool on_boundary = r.pos.x == 0.0 || r.pos.x == side || r.pos.y == 0.0 || r.pos.y == side;
    const bool in_range = r.pos.x >= 0.0 && r.pos.x <= side && r.pos.y >= 0.0 && r.pos.y <= side;
    if (!on_boundary || !in_range)
      throw std::invalid_argument("Room: RIS position must lie on the room boundary");
    if (r.wall < 0 || r.wall > 3) throw std::invalid_argument("Room: wall index out of range");
  }
}

void BlockageModel::validate() const {
  auto is_prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!is_prob(p_stay_los) || !is_prob(p_stay_blocked))
    throw std::invalid_argument("BlockageModel: stay probabilities must be in [0,1]");
  if (!(self_block_half_angle > 0.0 && self_block_half_angle < kPi))
    throw std::invalid_argument("BlockageModel: half-angle must be in (0, pi)");
  if (!(body_radius >= 0.0))
    throw std::invalid_argument("BlockageModel: body_radius must be >= 0");
}

std::vector<RisSite> place_ris(double room_side, int count_b) {
  if (!(room_side > 0.0)) throw std::invalid_argument("place_ris: room_side must be > 0");
  if (count_b < 1) throw std::invalid_argument("place_ris: count_b must be >= 1");

  std::vector<RisSite> out;
  out.reserve(count_b);
  // Round-robin over walls; the j-th RIS on a wall holding k of them sits
  // at fraction (2j+1)/(2k) along that wall.
  int per_wall[4] = {0, 0, 0, 0};
  for (int i = 0; i < count_b; ++i) per_wall[i % 4]++;
  for (int i = 0; i < count_b; ++i) {
    const int wall = i % 4;
    const int j = i / 4;
    const double frac = (2.0 * j + 1.0) / (2.0 * per_wall[wall]);
    const double t = frac * room_side;
    Vec2 p;
    switch (wall) {
      case 0: p = {t, 0.0}; break;
      case 1: p = {room_side, t}; break;
      case 2: p = {t, room_side}; break;
      default: p = {0.0, t}; break;
    }
    out.push_back({p, wall});
  }
  return out;
}

std::vector<UserState> place_users(int count_u, const Room& room, double speed, Rng& rng) {
  if (count_u < 1) throw std::invalid_argument("place_users: count_u must be >= 1");
  room.validate();
  std::vector<UserState> users(count_u);
  for (auto& u : users) {
    u.pos.x = rng.uniform(0.0, room.side);
    u.pos.y = rng.uniform(0.0, room.side);
    u.heading = rng.angle();
    u.speed = speed;
  }
  return users;
}

std::vector<UserState> step_users(const std::vector<UserState>& users, const Room& room,
                                  Rng& rng, double turn_half_angle) {
  std::vector<UserState> out;
  out.reserve(users.size());
  for (const auto& prev : users) {
    UserState u = prev;
    u.heading = normalize_angle(u.heading + rng.uniform(-turn_half_angle, turn_half_angle));
    double x = u.pos.x + u.speed * std::cos(u.heading);
    double y = u.pos.y + u.speed * std::sin(u.heading);
    // Specular reflection; a step can cross at most a few walls since
    // speeds are small relative to the room, but loop until inside.
    for (int guard = 0; guard < 64; ++guard) {
      if (x < 0.0) {
        x = -x;
        u.heading = normalize_angle(kPi - u.heading);
      } else if (x > room.side) {
        x = 2.0 * room.side - x;
        u.heading = normalize_angle(kPi - u.heading);
      } else if (y < 0.0) {
        y = -y;
        u.heading = normalize_angle(-u.heading);
      } else if (y > room.side) {
        y = 2.0 * room.side - y;
        u.heading = normalize_angle(-u.heading);
      } else {
        break;
      }
    }
    // Positions are strictly inside; nudge off a wall if a reflection
    // landed exactly on it.
    const double eps = 1e-9 * room.side;
    x = std::clamp(x, eps, room.side - eps);
    y = std::clamp(y, eps, room.side - eps);
    u.pos = {x, y};
    out.push_back(u);
  }
  return out;
}

LinkGeometry initial_links(const std::vector<UserState>& users, const Room& room,
                           const BlockageModel& model) {
  model.validate();
  const int b_count = static_cast<int>(room.ris.size());
  const int u_count = static_cast<int>(users.size());
  LinkGeometry g;
  g.s = Grid<std::uint8_t>(b_count, u_count, model.initial_blocked ? 0 : 1);
  g.d = compute_distances(users, room);
  return g;
}

LinkGeometry update_blockage(const LinkGeometry& prev, const std::vector<UserState>& users,
                             const Room& room, const BlockageModel& model, Rng& rng) {
  model.validate();
  const int b_count = static_cast<int>(room.ris.size());
  const int u_count = static_cast<int>(users.size());
  if (prev.s.rows() != b_count || prev.s.cols() != u_count)
    throw std::invalid_argument("update_blockage: link state dimensions do not match B x U");

  LinkGeometry g;
  g.s = Grid<std::uint8_t>(b_count, u_count);
  if (model.mode == BlockageMode::markov) {
    for (int b = 0; b < b_count; ++b) {
      for (int u = 0; u < u_count; ++u) {
        const double r = rng.uniform();
        if (prev.s.at(b, u)) {
          g.s.at(b, u) = r < model.p_stay_los ? 1 : 0;
        } else {
          g.s.at(b, u) = r < model.p_stay_blocked ? 0 : 1;
        }
      }
    }
  } else {
    for (int b = 0; b < b_count; ++b) {
      for (int u = 0; u < u_count; ++u) {
        bool blocked = in_back_cone(users[u], room.ris[b].pos, model.self_block_half_angle);
        if (!blocked && model.body_radius > 0.0) {
          for (int v = 0; v < u_count && !blocked; ++v) {
            if (v == u) continue;
            blocked = point_segment_distance(users[v].pos, room.ris[b].pos, users[u].pos) <
                      model.body_radius;
          }
        }
        g.s.at(b, u) = blocked ? 0 : 1;
      }
    }
  }
  g.d = compute_distances(users, room);
  return g;
}

}  // namespace risvr
