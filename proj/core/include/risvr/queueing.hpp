#pragma once

#include <span>
#include <vector>

#include "risvr/channel.hpp"
#include "risvr/rng.hpp"

namespace risvr {

/// Per-user content queues plus the two virtual queues that enforce the
/// time-average constraints on the maximum queue and its square.
struct QueueState {
  std::vector<double> q;  // images, one entry per user
  double z1 = 0.0;        // images
  double z2 = 0.0;        // images^2

  double max_q() const;
};

/// eta = epsilon^2 + 2 [gamma (kappa + 1) - epsilon]. Callers must check
/// positivity; RiskParams construction rejects eta <= 0.
double derive_eta(double epsilon, double gamma, double kappa);

/// Risk and trade-off constants. Construct via the validating
/// constructor; eta is always the derived value.
struct RiskParams {
  RiskParams(double gamma_ = 0.05, double kappa_ = 50.0, double epsilon_ = 2.0,
             double alpha_ = 0.05, double v_tradeoff_ = 20.0);

  double gamma;
  double kappa;
  double epsilon;
  double alpha;        // VaR level, diagnostics only
  double v_tradeoff;   // drift-plus-penalty V
  double eta;          // derived
};

struct ArrivalConfig {
  std::vector<double> lambda;  // mean images per slot, one entry per user

  void validate() const;  // throws std::invalid_argument
};

/// Independent Poisson draws A_u ~ Poisson(lambda_u).
std::vector<int> sample_arrivals(const ArrivalConfig& cfg, Rng& rng);

struct QueueUpdate {
  QueueState next;
  double q_max;  // max_u Q_u of the pre-update state (the slot observation)
};

/// One-slot transition: Q' = max(Q - served, 0) + A per user, then the
/// virtual queues absorb the slot's observed maximum:
/// Z1' = max(Z1 + Q_t - epsilon, 0), Z2' = max(Z2 + Q_t^2 - eta, 0).
QueueUpdate update_queues(const QueueState& state, std::span<const double> served,
                          std::span<const int> arrivals, const RiskParams& params);

/// Entropic value-at-risk estimate log(mean(exp(-gamma q))) / gamma,
/// computed with max-shifted exponentials.
double evar_estimate(std::span<const double> samples, double gamma);

/// Empirical (1 - alpha) quantile, lower interpolation. Diagnostics only.
double var_estimate(std::span<const double> samples, double alpha);

/// Lyapunov function L = (Z1^2 + Z2^2 + sum_u Q_u^2) / 2.
double lyapunov(const QueueState& state);

struct DriftReport {
  double lhs = 0.0;      // L(after) - L(before)
  double rhs = 0.0;      // Upsilon + queue/virtual-queue cross terms
  double upsilon = 0.0;
  bool pass = false;
};

/// Per-realization drift bound for one recorded transition:
/// L' - L <= Upsilon + sum_u Q_u (A_u - served_u)
///           + Z1 (Q_t - eps) + Z2 (Q_t^2 - eta),
/// with Upsilon = (U max_{b,u} R^2 + eps^2 + eta^2) / 2 taken over the
/// slot's rate matrix.
DriftReport drift_bound_check(const QueueState& before, const QueueState& after,
                              std::span<const double> served, std::span<const int> arrivals,
                              const RateMatrix& rates, const RiskParams& params);

}  // namespace risvr
