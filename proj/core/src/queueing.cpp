#include "risvr/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace risvr {

double QueueState::max_q() const {
  double m = 0.0;
  for (double v : q) m = std::max(m, v);
  return m;
}

double derive_eta(double epsilon, double gamma, double kappa) {
  return epsilon * epsilon + 2.0 * (gamma * (kappa + 1.0) - epsilon);
}

RiskParams::RiskParams(double gamma_, double kappa_, double epsilon_, double alpha_,
                       double v_tradeoff_)
    : gamma(gamma_), kappa(kappa_), epsilon(epsilon_), alpha(alpha_), v_tradeoff(v_tradeoff_),
      eta(derive_eta(epsilon_, gamma_, kappa_)) {
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("RiskParams: gamma must be in (0,1)");
  if (!(kappa > 0.0)) throw std::invalid_argument("RiskParams: kappa must be > 0");
  if (!(epsilon > 0.0)) throw std::invalid_argument("RiskParams: epsilon must be > 0");
  if (!(eta > 0.0))
    throw std::invalid_argument("RiskParams: derived eta is not positive; "
                                "the (gamma, kappa, epsilon) combination is infeasible");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("RiskParams: alpha must be in (0,1)");
  if (!(v_tradeoff >= 0.0)) throw std::invalid_argument("RiskParams: V must be >= 0");
}

void ArrivalConfig::validate() const {
  if (lambda.empty()) throw std::invalid_argument("ArrivalConfig: no users");
  for (double l : lambda)
    if (!(l >= 0.0) || !std::isfinite(l))
      throw std::invalid_argument("ArrivalConfig: rates must be finite and >= 0");
}

std::vector<int> sample_arrivals(const ArrivalConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<int> a(cfg.lambda.size());
  for (std::size_t u = 0; u < a.size(); ++u) a[u] = rng.poisson(cfg.lambda[u]);
  return a;
}

QueueUpdate update_queues(const QueueState& state, std::span<const double> served,
                          std::span<const int> arrivals, const RiskParams& params) {
  const std::size_t n = state.q.size();
  if (served.size() != n || arrivals.size() != n)
    throw std::invalid_argument("update_queues: served/arrivals size mismatch");
  for (std::size_t u = 0; u < n; ++u) {
    if (!(served[u] >= 0.0)) throw std::invalid_argument("update_queues: served must be >= 0");
    if (arrivals[u] < 0) throw std::invalid_argument("update_queues: arrivals must be >= 0");
  }

  QueueUpdate out;
  out.q_max = state.max_q();
  out.next.q.resize(n);
  for (std::size_t u = 0; u < n; ++u)
    out.next.q[u] = std::max(state.q[u] - served[u], 0.0) + arrivals[u];
  out.next.z1 = std::max(state.z1 + out.q_max - params.epsilon, 0.0);
  out.next.z2 = std::max(state.z2 + out.q_max * out.q_max - params.eta, 0.0);
  return out;
}

double evar_estimate(std::span<const double> samples, double gamma) {
  if (samples.empty()) throw std::invalid_argument("evar_estimate: empty sample set");
  if (!(gamma > 0.0 && gamma < 1.0))
    throw std::invalid_argument("evar_estimate: gamma must be in (0,1)");
  // log-mean-exp of -gamma q, shifted by the max exponent for stability.
  double m = -gamma * samples[0];
  for (double s : samples) m = std::max(m, -gamma * s);
  double acc = 0.0;
  for (double s : samples) acc += std::exp(-gamma * s - m);
  return (m + std::log(acc / static_cast<double>(samples.size()))) / gamma;
}

double var_estimate(std::span<const double> samples, double alpha) {
  if (samples.empty()) throw std::invalid_argument("var_estimate: empty sample set");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("var_estimate: alpha must be in (0,1)");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double idx = std::floor((sorted.size() - 1) * (1.0 - alpha));
  return sorted[static_cast<std::size_t>(idx)];
}

double lyapunov(const QueueState& state) {
  double acc = state.z1 * state.z1 + state.z2 * state.z2;
  for (double q : state.q) acc += q * q;
  return 0.5 * acc;
}

DriftReport drift_bound_check(const QueueState& before, const QueueState& after,
                              std::span<const double> served, std::span<const int> arrivals,
                              const RateMatrix& rates, const RiskParams& params) {
  const std::size_t n = before.q.size();
  if (after.q.size() != n || served.size() != n || arrivals.size() != n)
    throw std::invalid_argument("drift_bound_check: dimension mismatch");

  const double q_max = before.max_q();
  const double r_max = rates.max_image_rate();
  DriftReport rep;
  rep.upsilon = 0.5 * (static_cast<double>(n) * r_max * r_max +
                       params.epsilon * params.epsilon + params.eta * params.eta);
  rep.lhs = lyapunov(after) - lyapunov(before);
  double cross = 0.0;
  for (std::size_t u = 0; u < n; ++u) cross += before.q[u] * (arrivals[u] - served[u]);
  rep.rhs = rep.upsilon + cross + before.z1 * (q_max - params.epsilon) +
            before.z2 * (q_max * q_max - params.eta);
  rep.pass = rep.lhs <= rep.rhs + 1e-9 * std::max(1.0, std::abs(rep.rhs));
  return rep;
}

}  // namespace risvr
