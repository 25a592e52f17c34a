#pragma once

#include <utility>
#include <vector>

#include "risvr/channel.hpp"
#include "risvr/geometry.hpp"
#include "risvr/grid.hpp"
#include "risvr/queueing.hpp"
#include "risvr/rng.hpp"

namespace risvr {

/// Binary RIS-to-user assignment for one slot: at most one user per RIS
/// and at most one RIS per user. Stored as the per-RIS served user
/// (-1 = idle); the column constraint is enforced on assignment.
class Association {
 public:
  Association() = default;
  Association(int b_count, int u_count);

  int b_count() const { return b_; }
  int u_count() const { return u_; }

  /// Assign RIS b to user u; throws if either side is already taken.
  void assign(int b, int u);

  int user_of(int b) const { return user_of_ris_.at(b); }
  bool serves(int b, int u) const { return user_of_ris_.at(b) == u; }
  bool user_served(int u) const;

  /// Selected (b, u) pairs in ascending RIS order.
  std::vector<std::pair<int, int>> pairs() const;
  int pair_count() const;

  bool operator==(const Association& o) const = default;

  void validate() const;  // throws std::invalid_argument
 private:
  int b_ = 0, u_ = 0;
  std::vector<int> user_of_ris_;
};

using WeightMatrix = Grid<double>;

/// Slot objective weights w_bu = (V + Q_u) R_bu: the action-dependent
/// part of the drift-plus-penalty expression (the Z1/Z2/arrival terms
/// are constants with respect to the assignment).
WeightMatrix build_weights(const RateMatrix& rates, const QueueState& queues,
                           const RiskParams& params);

/// Full per-slot objective
///   V sum x R - sum_u Q_u (A_u - served_u) - Z1 (Q_t - eps) - Z2 (Q_t^2 - eta),
/// with served_u the image rate user u receives under assoc.
double reward(const Association& assoc, const RateMatrix& rates, const QueueState& queues,
              std::span<const int> arrivals, const RiskParams& params);

enum class AssignMethod { brute, exact_matching };

/// Maximum-weight partial matching over the weight matrix. brute
/// enumerates all partial matchings (min(B,U) <= 6); exact_matching uses
/// a polynomial Hungarian engine. Both return the identical canonical
/// maximizer: only strictly positive weights are ever selected, pairs
/// are committed greedily in ascending (b, u) order among
/// optimum-preserving choices.
Association solve_assignment(const WeightMatrix& weights, AssignMethod method);

/// Objective value of the maximum-weight partial matching.
double assignment_value(const WeightMatrix& weights, AssignMethod method);

enum class BaselineKind { random, nearest };

/// Comparison baselines: random draws uniformly over all feasible
/// partial matchings (LoS ignored); nearest greedily gives each RIS its
/// closest unassigned LoS user.
Association baseline_assoc(BaselineKind kind, const LinkGeometry& geom, Rng& rng);

}  // namespace risvr
