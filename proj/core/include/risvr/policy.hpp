#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "risvr/grid.hpp"
#include "risvr/rng.hpp"
#include "risvr/scheduler.hpp"

namespace risvr {

/// Scheduler-facing observation at the start of a slot: LoS indicators,
/// content queues and the two virtual queues. Mirrors the simulator
/// state exactly; link rates and positions are not observable.
struct MdpState {
  Grid<std::uint8_t> s;    // B x U
  std::vector<double> q;   // length U
  double z1 = 0.0;
  double z2 = 0.0;
};

struct EncodeNorms {
  double q_scale = 10.0;
  double z_scale = 20.0;
};

/// Flatten an MdpState into the policy input vector of length
/// B*U + U + 2: s row-major, then q / q_scale, then z1 and z2 / z_scale.
std::vector<double> encode_state(const MdpState& state, const EncodeNorms& norms);

struct PolicyDims {
  int b = 0;
  int u = 0;
  int hidden = 128;

  int input_dim() const { return b * u + u + 2; }
  int head_width() const { return u + 1; }  // users plus an explicit idle option
  int logit_dim() const { return b * head_width(); }

  bool operator==(const PolicyDims&) const = default;
};

/// Recurrent policy parameters, one flat vector of doubles partitioned
/// into 3 LSTM layers of width hidden, two ReLU fully connected layers,
/// and a final fully connected layer feeding B softmax heads.
class PolicyParams {
 public:
  PolicyParams() = default;
  explicit PolicyParams(PolicyDims dims);  // zero-initialized

  /// Uniform [-0.08, 0.08] weights, forget-gate biases 1, other biases 0.
  static PolicyParams init(PolicyDims dims, Rng& rng);

  const PolicyDims& dims() const { return dims_; }
  std::vector<double>& theta() { return theta_; }
  const std::vector<double>& theta() const { return theta_; }
  std::size_t size() const { return theta_.size(); }

  void validate() const;  // finite entries, size consistent with dims

 private:
  PolicyDims dims_;
  std::vector<double> theta_;
};

/// Recurrent carry threaded across the slots of one episode.
struct LstmCarry {
  std::vector<double> h[3];
  std::vector<double> c[3];

  void reset(int hidden);
  bool empty() const { return h[0].empty(); }
};

/// One probability vector per RIS over {user 0..U-1, idle}.
struct HeadDistributions {
  Grid<double> probs;  // B x (U+1)
};

/// One forward step; advances the carry in place.
HeadDistributions policy_forward(const PolicyParams& params, std::span<const double> features,
                                 LstmCarry& carry);

/// Sample a joint action head by head (b = 0..B-1), masking users taken
/// by earlier heads and renormalizing over the remaining options plus
/// idle. Returns the realized association and its log-probability under
/// the masked factorization.
std::pair<Association, double> sample_action(const HeadDistributions& dists, Rng& rng);

/// Deterministic masked decode: per head, the highest-probability
/// remaining option (lowest index on ties).
Association greedy_action(const HeadDistributions& dists);

/// Log-probability of a recorded feasible action under the masked
/// factorization.
double action_log_prob(const HeadDistributions& dists, const Association& action);

/// Gradient of sum_t log pi(a_t | s_t) over one episode via
/// backpropagation through time. Actions must have been feasible under
/// the masked factorization. Throws on non-finite results.
std::vector<double> log_prob_grad(const PolicyParams& params, std::span<const MdpState> states,
                                  std::span<const Association> actions, const EncodeNorms& norms);

/// Flat binary checkpoint: header (dims, seed) + 64-bit parameters.
void save_checkpoint(const std::string& path, const PolicyParams& params, std::uint64_t seed);
std::pair<PolicyParams, std::uint64_t> load_checkpoint(const std::string& path);

}  // namespace risvr
