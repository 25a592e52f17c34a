#include "risvr/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "policy_internal.hpp"
#include "risvr/config.hpp"
#include "risvr/sim.hpp"

namespace risvr {

using detail::StepCache;

namespace {

struct EncodedEpisode {
  const LabeledEpisode* src = nullptr;
  std::vector<std::vector<double>> features;
};

std::vector<EncodedEpisode> encode_episodes(const std::vector<const LabeledEpisode*>& eps,
                                            const EncodeNorms& norms) {
  std::vector<EncodedEpisode> out;
  out.reserve(eps.size());
  for (const LabeledEpisode* ep : eps) {
    EncodedEpisode enc;
    enc.src = ep;
    enc.features.reserve(ep->steps.size());
    for (const auto& step : ep->steps) enc.features.push_back(encode_state(step.state, norms));
    out.push_back(std::move(enc));
  }
  return out;
}

/// Forward an episode, seed per-head cross-entropy gradients against the
/// recorded labels, and return (gradient, summed loss).
std::pair<std::vector<double>, double> clone_episode_grad(const PolicyParams& params,
                                                          const EncodedEpisode& ep) {
  const PolicyDims& dims = params.dims();
  const int width = dims.head_width();
  LstmCarry carry;
  const std::size_t steps = ep.src->steps.size();
  std::vector<StepCache> caches(steps);
  std::vector<std::vector<double>> dlogits(steps);
  double loss = 0.0;

  std::vector<int> head(width);
  for (std::size_t t = 0; t < steps; ++t) {
    detail::forward_cached(params, ep.features[t], carry, caches[t]);
    dlogits[t].assign(dims.logit_dim(), 0.0);
    for (int b = 0; b < dims.b; ++b) {
      for (int k = 0; k < width; ++k) head[k] = b * width + k;
      const auto p = detail::subset_softmax(caches[t].logits, head);
      const int label = ep.src->steps[t].label[b];
      for (int k = 0; k < width; ++k) dlogits[t][head[k]] = p[k] - (k == label ? 1.0 : 0.0);
      loss -= std::log(std::max(p[label], 1e-300));
    }
  }
  return {detail::episode_backward(params, caches, dlogits), loss};
}

double per_ris_accuracy(const PolicyParams& params,
                        const std::vector<EncodedEpisode>& episodes) {
  long correct = 0, total = 0;
  for (const auto& ep : episodes) {
    LstmCarry carry;
    for (std::size_t t = 0; t < ep.features.size(); ++t) {
      const auto dists = policy_forward(params, ep.features[t], carry);
      const auto decoded = association_to_label(greedy_action(dists));
      const auto& label = ep.src->steps[t].label;
      for (std::size_t b = 0; b < label.size(); ++b) correct += decoded[b] == label[b];
      total += static_cast<long>(label.size());
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

/// Adam with a fixed learning rate. Plain SGD cannot escape the
/// class-prior plateau of this six-layer recurrent stack at the small
/// uniform init, so the first and second moment estimates do the
/// conditioning instead. Deterministic given the gradient sequence.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t size, double lr) : lr_(lr), m_(size, 0.0), v_(size, 0.0) {}

  /// Returns false (and applies nothing) on a non-finite gradient.
  bool step(PolicyParams& params, const std::vector<double>& grad_sum, double inv_count) {
    for (double g : grad_sum)
      if (!std::isfinite(g)) return false;
    ++t_;
    const double bc1 = 1.0 - std::pow(kBeta1, t_);
    const double bc2 = 1.0 - std::pow(kBeta2, t_);
    auto& theta = params.theta();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad_sum[i] * inv_count;
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g;
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g * g;
      theta[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + kEps);
    }
    return true;
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace

void write_train_report(const std::string& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open report file for writing: " + path);
  std::string body = "epoch,loss,val_accuracy\n";
  char buf[32];
  for (const auto& row : report.rows) {
    body += std::to_string(row.epoch);
    body += ',';
    auto r1 = std::to_chars(buf, buf + sizeof(buf), row.loss);
    body.append(buf, r1.ptr);
    body += ',';
    auto r2 = std::to_chars(buf, buf + sizeof(buf), row.val_accuracy);
    body.append(buf, r2.ptr);
    body += '\n';
  }
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed for report file: " + path);
}

namespace {

void run_clone_phase(const TrainConfig& cfg, const Dataset& data, const EncodeNorms& norms,
                     PolicyParams& params, TrainReport& report, Rng& rng, int epoch_offset) {
  auto train_eps = encode_episodes(data.of(Split::train), norms);
  auto val_eps = encode_episodes(data.of(Split::val), norms);
  if (train_eps.empty()) throw std::invalid_argument("train: empty training split");

  PolicyParams best = params;
  double best_acc = -1.0;
  int best_epoch = -1;

  std::vector<std::size_t> order(train_eps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  AdamOptimizer opt(params.size(), cfg.learning_rate);
  std::vector<double> batch_grad(params.size(), 0.0);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    // Fisher-Yates over episode order; batches stay episode-aligned so
    // the recurrent state threads correctly.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t epoch_slots = 0;
    std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
    std::size_t batch_slots = 0;
    for (std::size_t idx : order) {
      auto [grad, loss] = clone_episode_grad(params, train_eps[idx]);
      for (std::size_t i = 0; i < batch_grad.size(); ++i) batch_grad[i] += grad[i];
      batch_slots += train_eps[idx].features.size();
      epoch_loss += loss;
      epoch_slots += train_eps[idx].features.size();
      if (batch_slots >= static_cast<std::size_t>(cfg.batch_size)) {
        if (!opt.step(params, batch_grad, 1.0 / batch_slots)) ++report.skipped_updates;
        std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
        batch_slots = 0;
      }
    }
    if (batch_slots > 0) {
      if (!opt.step(params, batch_grad, 1.0 / batch_slots)) ++report.skipped_updates;
    }

    const double val_acc = val_eps.empty() ? 0.0 : per_ris_accuracy(params, val_eps);
    report.rows.push_back({epoch_offset + epoch,
                           epoch_slots ? epoch_loss / epoch_slots : 0.0, val_acc});
    if (val_acc > best_acc) {
      best_acc = val_acc;
      best_epoch = epoch;
      best = params;
    }
    if (best_acc >= cfg.target_accuracy) break;
    if (epoch - best_epoch >= cfg.patience) break;
  }

  if (best_epoch >= 0 && !val_eps.empty()) params = best;
  if (best_acc > report.best_val_accuracy) {
    report.best_val_accuracy = best_acc;
    report.best_epoch = epoch_offset + best_epoch;
  }
}

void run_reinforce_phase(const TrainConfig& cfg, const SimConfig& sim, const EncodeNorms& norms,
                         PolicyParams& params, TrainReport& report, Rng& rng, int epoch_offset) {
  const PolicyDims dims = params.dims();
  const int width = dims.head_width();
  double baseline = 0.0;
  long baseline_count = 0;
  AdamOptimizer opt(params.size(), cfg.learning_rate);

  SimConfig env_cfg = sim;
  env_cfg.horizon = cfg.reinforce_horizon;

  for (int epoch = 0; epoch < cfg.reinforce_epochs; ++epoch) {
    double epoch_reward = 0.0;
    long epoch_steps = 0;
    long correct = 0, total = 0;

    for (int e = 0; e < cfg.episodes_per_epoch; ++e) {
      const std::uint64_t episode_index =
          static_cast<std::uint64_t>(epoch) * cfg.episodes_per_epoch + e;
      SimEnv env(env_cfg, episode_index);
      LstmCarry carry;
      std::vector<StepCache> caches(env_cfg.horizon);
      std::vector<Association> actions(env_cfg.horizon);
      std::vector<double> rewards(env_cfg.horizon);

      for (int t = 0; t < env_cfg.horizon; ++t) {
        env.begin_slot();
        const auto features = encode_state(env.state(), norms);
        detail::forward_cached(params, features, carry, caches[t]);
        HeadDistributions dists;
        dists.probs = Grid<double>(dims.b, width);
        std::vector<int> head(width);
        for (int b = 0; b < dims.b; ++b) {
          for (int k = 0; k < width; ++k) head[k] = b * width + k;
          const auto p = detail::subset_softmax(caches[t].logits, head);
          for (int k = 0; k < width; ++k) dists.probs.at(b, k) = p[k];
        }
        auto [assoc, log_prob] = sample_action(dists, rng);
        (void)log_prob;

        // Oracle agreement of the sampled decisions, reported as the
        // epoch's validation-style accuracy.
        const auto oracle = solve_assignment(
            build_weights(env.rates(), env.queues(), env_cfg.risk), AssignMethod::exact_matching);
        const auto oracle_label = association_to_label(oracle);
        const auto sampled_label = association_to_label(assoc);
        for (int b = 0; b < dims.b; ++b) correct += sampled_label[b] == oracle_label[b];
        total += dims.b;

        const auto res = env.finish_slot(assoc);
        actions[t] = std::move(assoc);
        rewards[t] = res.reward;
        epoch_reward += res.reward;
        ++epoch_steps;
      }

      // REINFORCE with a running-mean reward baseline: seed the decoder
      // gradients with (R_t - baseline) * (indicator - masked softmax)
      // and ascend.
      std::vector<std::vector<double>> dlogits(env_cfg.horizon);
      for (int t = 0; t < env_cfg.horizon; ++t) {
        dlogits[t].assign(dims.logit_dim(), 0.0);
        const double w = rewards[t] - (baseline_count > 0 ? baseline : 0.0);
        const auto choices = detail::replay_masking(actions[t]);
        for (int b = 0; b < dims.b; ++b) {
          std::vector<int> subset;
          subset.reserve(choices[b].available.size());
          for (int opt : choices[b].available) subset.push_back(b * width + opt);
          const auto p = detail::subset_softmax(caches[t].logits, subset);
          for (std::size_t k = 0; k < subset.size(); ++k) {
            const bool chosen = choices[b].available[k] == choices[b].chosen;
            dlogits[t][subset[k]] = w * ((chosen ? 1.0 : 0.0) - p[k]);
          }
        }
      }
      const auto grad = detail::episode_backward(params, caches, dlogits);
      // Ascent on the policy value: hand Adam the negated gradient.
      if (!opt.step(params, grad, -1.0 / env_cfg.horizon)) ++report.skipped_updates;

      for (int t = 0; t < env_cfg.horizon; ++t) {
        ++baseline_count;
        baseline += (rewards[t] - baseline) / baseline_count;
      }
    }

    report.rows.push_back({epoch_offset + epoch,
                           epoch_steps ? -epoch_reward / epoch_steps : 0.0,
                           total ? static_cast<double>(correct) / total : 0.0});
  }
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& data, const SimConfig* sim,
                  const EncodeNorms& norms, Rng& rng) {
  cfg.validate();
  if (cfg.mode != TrainMode::reinforce && data.episodes.empty())
    throw std::invalid_argument("train: empty dataset");
  if (cfg.mode != TrainMode::clone && sim == nullptr)
    throw std::invalid_argument("train: reinforce modes need a simulator config");

  PolicyDims dims;
  if (cfg.mode == TrainMode::reinforce) {
    dims = {sim->b, sim->u, cfg.hidden};
  } else {
    dims = {data.b, data.u, cfg.hidden};
  }

  TrainResult res;
  res.params = PolicyParams::init(dims, rng);

  if (cfg.mode == TrainMode::clone || cfg.mode == TrainMode::clone_then_reinforce)
    run_clone_phase(cfg, data, norms, res.params, res.report, rng, 0);
  if (cfg.mode == TrainMode::reinforce || cfg.mode == TrainMode::clone_then_reinforce) {
    const int offset = static_cast<int>(res.report.rows.size());
    run_reinforce_phase(cfg, *sim, norms, res.params, res.report, rng, offset);
  }
  return res;
}

double evaluate_dataset(const PolicyParams& params, const Dataset& data, Split split,
                        EvalMetric metric, const EncodeNorms& norms, DecodeMode mode, Rng* rng) {
  if (metric != EvalMetric::per_ris_accuracy && metric != EvalMetric::exact_match)
    throw std::invalid_argument("evaluate_dataset: rollout metrics need a simulator config");
  const auto episodes = data.of(split);
  if (episodes.empty()) throw std::invalid_argument("evaluate_dataset: empty split");
  if (mode == DecodeMode::sample && rng == nullptr)
    throw std::invalid_argument("evaluate_dataset: sampling needs an rng");

  long correct = 0, total = 0;
  for (const LabeledEpisode* ep : episodes) {
    LstmCarry carry;
    for (const auto& step : ep->steps) {
      const auto features = encode_state(step.state, norms);
      const auto dists = policy_forward(params, features, carry);
      const Association decoded =
          mode == DecodeMode::greedy ? greedy_action(dists) : sample_action(dists, *rng).first;
      const auto decoded_label = association_to_label(decoded);
      if (metric == EvalMetric::per_ris_accuracy) {
        for (std::size_t b = 0; b < step.label.size(); ++b)
          correct += decoded_label[b] == step.label[b];
        total += static_cast<long>(step.label.size());
      } else {
        correct += decoded_label == step.label;
        ++total;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

GapReport evaluate_gaps(const PolicyParams& params, const SimConfig& cfg, int episodes) {
  if (episodes < 1) throw std::invalid_argument("evaluate_gaps: episodes must be >= 1");
  SimConfig pol_cfg = cfg;
  pol_cfg.scheduler = SchedulerKind::policy;
  SimConfig opt_cfg = cfg;
  opt_cfg.scheduler = SchedulerKind::optimal;

  GapReport rep;
  for (int e = 0; e < episodes; ++e) {
    const MetricsTrace pol = run_episode(pol_cfg, &params, static_cast<std::uint64_t>(e));
    const MetricsTrace opt = run_episode(opt_cfg, nullptr, static_cast<std::uint64_t>(e));
    rep.policy_mean_q += pol.summary.mean_q;
    rep.oracle_mean_q += opt.summary.mean_q;
    rep.policy_rate += pol.summary.mean_sum_rate_bps;
    rep.oracle_rate += opt.summary.mean_sum_rate_bps;
  }
  rep.policy_mean_q /= episodes;
  rep.oracle_mean_q /= episodes;
  rep.policy_rate /= episodes;
  rep.oracle_rate /= episodes;
  rep.queue_gap = rep.oracle_mean_q > 0.0
                      ? (rep.policy_mean_q - rep.oracle_mean_q) / rep.oracle_mean_q
                      : rep.policy_mean_q - rep.oracle_mean_q;
  rep.rate_gap =
      rep.oracle_rate > 0.0 ? (rep.oracle_rate - rep.policy_rate) / rep.oracle_rate : 0.0;
  return rep;
}

}  // namespace risvr
