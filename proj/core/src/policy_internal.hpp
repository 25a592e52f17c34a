#pragma once

// Shared internals between the policy forward/backward pass and the
// training loop. Not installed.

#include <span>
#include <vector>

#include "risvr/policy.hpp"

namespace risvr::detail {

/// Offsets of each parameter block inside the flat theta vector.
/// LSTM gate blocks are ordered [input, forget, cell, output].
struct ParamLayout {
  int d = 0;  // input dim
  int h = 0;  // hidden width
  int l = 0;  // logit dim (B * (U+1))
  int lstm_w[3];
  int lstm_u[3];
  int lstm_b[3];
  int fc1_w, fc1_b;
  int fc2_w, fc2_b;
  int dec_w, dec_b;
  int total = 0;

  static ParamLayout make(const PolicyDims& dims);
};

struct LstmStepCache {
  std::vector<double> x;  // layer input
  std::vector<double> i, f, g, o;
  std::vector<double> c_prev, c, h_prev, h;
};

struct StepCache {
  LstmStepCache lstm[3];
  std::vector<double> a1, r1, a2, r2;  // fc pre/post activations
  std::vector<double> logits;
};

/// Forward one step, recording everything the backward pass needs.
void forward_cached(const PolicyParams& params, std::span<const double> features,
                    LstmCarry& carry, StepCache& cache);

/// BPTT over one episode. dlogits_seq[t] seeds the backward pass at the
/// decoder output of step t; the result is d(objective)/d(theta).
std::vector<double> episode_backward(const PolicyParams& params,
                                     std::span<const StepCache> caches,
                                     std::span<const std::vector<double>> dlogits_seq);

/// Replay the sequential masking of a recorded action: returns, per
/// head, the available option indices (users still free, then idle) and
/// the chosen option.
struct MaskedChoice {
  std::vector<int> available;
  int chosen = -1;  // option index in [0, U]
};
std::vector<MaskedChoice> replay_masking(const Association& action);

/// Softmax over an index subset of logits; returns probabilities
/// aligned with the subset.
std::vector<double> subset_softmax(std::span<const double> logits, std::span<const int> subset);

}  // namespace risvr::detail
