#include "risvr/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace risvr {

namespace {

// ---------------------------------------------------------------------------
// Matching value engines. Both compute the maximum total weight of a
// partial matching on the submatrix formed by rows [first_row, B) and
// the columns with col_used[u] == 0. Edges with weight <= 0 never help a
// partial matching, so they are treated as non-edges by both engines;
// this is also what makes the two engines agree exactly.
// ---------------------------------------------------------------------------

double brute_value(const WeightMatrix& w, int first_row, std::vector<char>& col_used) {
  if (first_row >= w.rows()) return 0.0;
  // Skip this row entirely, or pair it with any free column.
  double best = brute_value(w, first_row + 1, col_used);
  for (int u = 0; u < w.cols(); ++u) {
    if (col_used[u] || !(w.at(first_row, u) > 0.0)) continue;
    col_used[u] = 1;
    best = std::max(best, w.at(first_row, u) + brute_value(w, first_row + 1, col_used));
    col_used[u] = 0;
  }
  return best;
}

// Jonker-Volgenant style shortest augmenting path assignment on a padded
// square matrix (minimization with potentials). Weights are negated and
// clamped so that "idle" is always representable by a zero-cost padding
// column; exact for integer weights since only additions and
// subtractions of inputs occur.
double hungarian_value(const WeightMatrix& w, int first_row, const std::vector<char>& col_used) {
  std::vector<int> rows, cols;
  for (int b = first_row; b < w.rows(); ++b) rows.push_back(b);
  for (int u = 0; u < w.cols(); ++u)
    if (!col_used[u]) cols.push_back(u);
  const int n = static_cast<int>(std::max(rows.size(), cols.size()));
  if (n == 0) return 0.0;

  // cost(i, j) = -max(w, 0); padding cells cost 0.
  auto cost = [&](int i, int j) -> double {
    if (i >= static_cast<int>(rows.size()) || j >= static_cast<int>(cols.size())) return 0.0;
    return -std::max(w.at(rows[i], cols[j]), 0.0);
  };

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u_pot(n + 1, 0.0), v_pot(n + 1, 0.0);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u_pot[i0] - v_pot[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u_pot[match[j]] += delta;
          v_pot[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  double total = 0.0;
  for (int j = 1; j <= n; ++j)
    if (match[j]) total += cost(match[j] - 1, j - 1);
  return -total;
}

double engine_value(const WeightMatrix& w, AssignMethod method, int first_row,
                    std::vector<char>& col_used) {
  if (method == AssignMethod::brute) return brute_value(w, first_row, col_used);
  return hungarian_value(w, first_row, col_used);
}

void check_finite(const WeightMatrix& w) {
  for (double v : w.data())
    if (!std::isfinite(v)) throw std::invalid_argument("solve_assignment: weights must be finite");
}

}  // namespace

Association::Association(int b_count, int u_count)
    : b_(b_count), u_(u_count), user_of_ris_(b_count, -1) {
  if (b_count < 1 || u_count < 1)
    throw std::invalid_argument("Association: dimensions must be >= 1");
}

void Association::assign(int b, int u) {
  if (b < 0 || b >= b_ || u < 0 || u >= u_)
    throw std::invalid_argument("Association: index out of range");
  if (user_of_ris_[b] != -1) throw std::invalid_argument("Association: RIS already assigned");
  for (int o : user_of_ris_)
    if (o == u) throw std::invalid_argument("Association: user already assigned");
  user_of_ris_[b] = u;
}

bool Association::user_served(int u) const {
  for (int o : user_of_ris_)
    if (o == u) return true;
  return false;
}

std::vector<std::pair<int, int>> Association::pairs() const {
  std::vector<std::pair<int, int>> p;
  for (int b = 0; b < b_; ++b)
    if (user_of_ris_[b] >= 0) p.emplace_back(b, user_of_ris_[b]);
  return p;
}

int Association::pair_count() const {
  int c = 0;
  for (int o : user_of_ris_) c += o >= 0;
  return c;
}

void Association::validate() const {
  if (b_ < 1 || u_ < 1) throw std::invalid_argument("Association: empty");
  std::vector<char> seen(u_, 0);
  for (int o : user_of_ris_) {
    if (o == -1) continue;
    if (o < 0 || o >= u_) throw std::invalid_argument("Association: user index out of range");
    if (seen[o]) throw std::invalid_argument("Association: user assigned to multiple RIS");
    seen[o] = 1;
  }
}

WeightMatrix build_weights(const RateMatrix& rates, const QueueState& queues,
                           const RiskParams& params) {
  const int b_count = rates.r_images.rows();
  const int u_count = rates.r_images.cols();
  if (static_cast<int>(queues.q.size()) != u_count)
    throw std::invalid_argument("build_weights: queue length must equal U");
  WeightMatrix w(b_count, u_count);
  for (int b = 0; b < b_count; ++b)
    for (int u = 0; u < u_count; ++u)
      w.at(b, u) = (params.v_tradeoff + queues.q[u]) * rates.r_images.at(b, u);
  return w;
}

double reward(const Association& assoc, const RateMatrix& rates, const QueueState& queues,
              std::span<const int> arrivals, const RiskParams& params) {
  assoc.validate();
  const int b_count = rates.r_images.rows();
  const int u_count = rates.r_images.cols();
  if (assoc.b_count() != b_count || assoc.u_count() != u_count)
    throw std::invalid_argument("reward: association shape mismatch");
  if (static_cast<int>(queues.q.size()) != u_count ||
      static_cast<int>(arrivals.size()) != u_count)
    throw std::invalid_argument("reward: queue/arrival shape mismatch");

  std::vector<double> served(u_count, 0.0);
  double sum_rate = 0.0;
  for (int b = 0; b < b_count; ++b) {
    const int u = assoc.user_of(b);
    if (u < 0) continue;
    served[u] += rates.r_images.at(b, u);
    sum_rate += rates.r_images.at(b, u);
  }
  const double q_max = queues.max_q();
  double r = params.v_tradeoff * sum_rate;
  for (int u = 0; u < u_count; ++u) r -= queues.q[u] * (arrivals[u] - served[u]);
  r -= queues.z1 * (q_max - params.epsilon);
  r -= queues.z2 * (q_max * q_max - params.eta);
  return r;
}

double assignment_value(const WeightMatrix& weights, AssignMethod method) {
  check_finite(weights);
  std::vector<char> col_used(weights.cols(), 0);
  return engine_value(weights, method, 0, col_used);
}

Association solve_assignment(const WeightMatrix& weights, AssignMethod method) {
  check_finite(weights);
  const int b_count = weights.rows();
  const int u_count = weights.cols();
  Association assoc(b_count, u_count);

  std::vector<char> col_used(u_count, 0);
  const double best = engine_value(weights, method, 0, col_used);
  const double tol = 1e-9 * std::max(1.0, std::abs(best));

  // Canonical reconstruction: commit pairs in ascending (b, u) order
  // whenever doing so still completes to the optimal value. Zero-weight
  // pairs are never committed, so an RIS with no useful link idles.
  double sum = 0.0;
  int row = 0;
  while (sum < best - tol) {
    bool took = false;
    for (int b = row; b < b_count && !took; ++b) {
      for (int u = 0; u < u_count && !took; ++u) {
        if (col_used[u] || !(weights.at(b, u) > 0.0)) continue;
        col_used[u] = 1;
        const double rest = engine_value(weights, method, b + 1, col_used);
        if (sum + weights.at(b, u) + rest >= best - tol) {
          assoc.assign(b, u);
          sum += weights.at(b, u);
          row = b + 1;
          took = true;
        } else {
          col_used[u] = 0;
        }
      }
    }
    if (!took) break;  // numerically exhausted; sum is within tol of best
  }
  return assoc;
}

Association baseline_assoc(BaselineKind kind, const LinkGeometry& geom, Rng& rng) {
  const int b_count = geom.s.rows();
  const int u_count = geom.s.cols();
  Association assoc(b_count, u_count);

  if (kind == BaselineKind::nearest) {
    for (int b = 0; b < b_count; ++b) {
      int best_u = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int u = 0; u < u_count; ++u) {
        if (!geom.s.at(b, u) || assoc.user_served(u)) continue;
        if (geom.d.at(b, u) < best_d) {
          best_d = geom.d.at(b, u);
          best_u = u;
        }
      }
      if (best_u >= 0) assoc.assign(b, best_u);
    }
    return assoc;
  }

  // Uniform draw over all partial matchings of the complete B x U
  // bipartite graph. match_count(r, c) counts matchings with r rows and
  // c columns still free: m(r, c) = m(r-1, c) + c m(r-1, c-1).
  const int max_rc = std::max(b_count, u_count);
  Grid<double> counts(b_count + 1, max_rc + 1, 0.0);
  for (int c = 0; c <= max_rc; ++c) counts.at(0, c) = 1.0;
  for (int r = 1; r <= b_count; ++r)
    for (int c = 0; c <= max_rc; ++c)
      counts.at(r, c) = counts.at(r - 1, c) + (c > 0 ? c * counts.at(r - 1, c - 1) : 0.0);

  int free_cols = u_count;
  for (int b = 0; b < b_count; ++b) {
    const int rows_left = b_count - b;
    const double total = counts.at(rows_left, free_cols);
    const double idle_share = counts.at(rows_left - 1, free_cols) / total;
    const double r = rng.uniform();
    if (r < idle_share || free_cols == 0) continue;
    const double per_col = counts.at(rows_left - 1, free_cols - 1) / total;
    int pick = static_cast<int>((r - idle_share) / per_col);
    pick = std::min(pick, free_cols - 1);
    // Map the pick onto the ascending list of unassigned users.
    for (int u = 0; u < u_count; ++u) {
      if (assoc.user_served(u)) continue;
      if (pick-- == 0) {
        assoc.assign(b, u);
        break;
      }
    }
    --free_cols;
  }
  return assoc;
}

}  // namespace risvr
