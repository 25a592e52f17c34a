#include "risvr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "policy_internal.hpp"

namespace risvr {

using detail::ParamLayout;
using detail::StepCache;

namespace {

void matvec(const double* w, int rows, int cols, const double* x, double* y_accum) {
  for (int r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = w + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y_accum[r] += acc;
  }
}

// y += W^T dz
void matvec_t(const double* w, int rows, int cols, const double* dz, double* y_accum) {
  for (int r = 0; r < rows; ++r) {
    const double* row = w + static_cast<std::size_t>(r) * cols;
    const double d = dz[r];
    for (int c = 0; c < cols; ++c) y_accum[c] += row[c] * d;
  }
}

// dW += dz x^T
void outer_accum(double* dw, int rows, int cols, const double* dz, const double* x) {
  for (int r = 0; r < rows; ++r) {
    double* row = dw + static_cast<std::size_t>(r) * cols;
    const double d = dz[r];
    for (int c = 0; c < cols; ++c) row[c] += d * x[c];
  }
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

namespace detail {

ParamLayout ParamLayout::make(const PolicyDims& dims) {
  ParamLayout lay;
  lay.d = dims.input_dim();
  lay.h = dims.hidden;
  lay.l = dims.logit_dim();
  int off = 0;
  for (int layer = 0; layer < 3; ++layer) {
    const int in = layer == 0 ? lay.d : lay.h;
    lay.lstm_w[layer] = off;
    off += 4 * lay.h * in;
    lay.lstm_u[layer] = off;
    off += 4 * lay.h * lay.h;
    lay.lstm_b[layer] = off;
    off += 4 * lay.h;
  }
  lay.fc1_w = off;
  off += lay.h * lay.h;
  lay.fc1_b = off;
  off += lay.h;
  lay.fc2_w = off;
  off += lay.h * lay.h;
  lay.fc2_b = off;
  off += lay.h;
  lay.dec_w = off;
  off += lay.l * lay.h;
  lay.dec_b = off;
  off += lay.l;
  lay.total = off;
  return lay;
}

void forward_cached(const PolicyParams& params, std::span<const double> features,
                    LstmCarry& carry, StepCache& cache) {
  const PolicyDims& dims = params.dims();
  const ParamLayout lay = ParamLayout::make(dims);
  if (static_cast<int>(features.size()) != lay.d)
    throw std::invalid_argument("policy_forward: feature length mismatch");
  if (carry.empty()) carry.reset(lay.h);
  const double* th = params.theta().data();
  const int h = lay.h;

  std::vector<double> input(features.begin(), features.end());
  for (int layer = 0; layer < 3; ++layer) {
    const int in = layer == 0 ? lay.d : h;
    auto& lc = cache.lstm[layer];
    lc.x = input;
    lc.h_prev = carry.h[layer];
    lc.c_prev = carry.c[layer];

    std::vector<double> z(4 * h, 0.0);
    std::memcpy(z.data(), th + lay.lstm_b[layer], sizeof(double) * 4 * h);
    matvec(th + lay.lstm_w[layer], 4 * h, in, lc.x.data(), z.data());
    matvec(th + lay.lstm_u[layer], 4 * h, h, lc.h_prev.data(), z.data());

    lc.i.resize(h);
    lc.f.resize(h);
    lc.g.resize(h);
    lc.o.resize(h);
    lc.c.resize(h);
    lc.h.resize(h);
    for (int j = 0; j < h; ++j) {
      lc.i[j] = sigmoid(z[j]);
      lc.f[j] = sigmoid(z[h + j]);
      lc.g[j] = std::tanh(z[2 * h + j]);
      lc.o[j] = sigmoid(z[3 * h + j]);
      lc.c[j] = lc.f[j] * lc.c_prev[j] + lc.i[j] * lc.g[j];
      lc.h[j] = lc.o[j] * std::tanh(lc.c[j]);
    }
    carry.h[layer] = lc.h;
    carry.c[layer] = lc.c;
    input = lc.h;
  }

  cache.a1.assign(th + lay.fc1_b, th + lay.fc1_b + h);
  matvec(th + lay.fc1_w, h, h, input.data(), cache.a1.data());
  cache.r1.resize(h);
  for (int j = 0; j < h; ++j) cache.r1[j] = std::max(cache.a1[j], 0.0);

  cache.a2.assign(th + lay.fc2_b, th + lay.fc2_b + h);
  matvec(th + lay.fc2_w, h, h, cache.r1.data(), cache.a2.data());
  cache.r2.resize(h);
  for (int j = 0; j < h; ++j) cache.r2[j] = std::max(cache.a2[j], 0.0);

  cache.logits.assign(th + lay.dec_b, th + lay.dec_b + lay.l);
  matvec(th + lay.dec_w, lay.l, h, cache.r2.data(), cache.logits.data());
}

std::vector<double> episode_backward(const PolicyParams& params,
                                     std::span<const StepCache> caches,
                                     std::span<const std::vector<double>> dlogits_seq) {
  const ParamLayout lay = ParamLayout::make(params.dims());
  const int h = lay.h;
  const double* th = params.theta().data();
  std::vector<double> grad(lay.total, 0.0);
  double* gr = grad.data();

  // Carry gradients flowing to step t-1.
  std::vector<double> dh_carry[3], dc_carry[3];
  for (int layer = 0; layer < 3; ++layer) {
    dh_carry[layer].assign(h, 0.0);
    dc_carry[layer].assign(h, 0.0);
  }

  std::vector<double> dr2(h), da2(h), dr1(h), da1(h), dh(h), dz(4 * h), dx(lay.d);
  for (int t = static_cast<int>(caches.size()) - 1; t >= 0; --t) {
    const StepCache& cache = caches[t];
    const std::vector<double>& dlogits = dlogits_seq[t];

    std::fill(dr2.begin(), dr2.end(), 0.0);
    outer_accum(gr + lay.dec_w, lay.l, h, dlogits.data(), cache.r2.data());
    for (int r = 0; r < lay.l; ++r) gr[lay.dec_b + r] += dlogits[r];
    matvec_t(th + lay.dec_w, lay.l, h, dlogits.data(), dr2.data());

    for (int j = 0; j < h; ++j) da2[j] = cache.a2[j] > 0.0 ? dr2[j] : 0.0;
    std::fill(dr1.begin(), dr1.end(), 0.0);
    outer_accum(gr + lay.fc2_w, h, h, da2.data(), cache.r1.data());
    for (int j = 0; j < h; ++j) gr[lay.fc2_b + j] += da2[j];
    matvec_t(th + lay.fc2_w, h, h, da2.data(), dr1.data());

    for (int j = 0; j < h; ++j) da1[j] = cache.a1[j] > 0.0 ? dr1[j] : 0.0;
    std::vector<double> dtop(h, 0.0);
    outer_accum(gr + lay.fc1_w, h, h, da1.data(), cache.lstm[2].h.data());
    for (int j = 0; j < h; ++j) gr[lay.fc1_b + j] += da1[j];
    matvec_t(th + lay.fc1_w, h, h, da1.data(), dtop.data());

    // LSTM layers, top down; dtop is the gradient on layer output h_t.
    for (int layer = 2; layer >= 0; --layer) {
      const auto& lc = cache.lstm[layer];
      const int in = layer == 0 ? lay.d : h;
      for (int j = 0; j < h; ++j) dh[j] = dtop[j] + dh_carry[layer][j];

      for (int j = 0; j < h; ++j) {
        const double tc = std::tanh(lc.c[j]);
        const double d_o = dh[j] * tc;
        const double dc = dc_carry[layer][j] + dh[j] * lc.o[j] * (1.0 - tc * tc);
        const double d_i = dc * lc.g[j];
        const double d_g = dc * lc.i[j];
        const double d_f = dc * lc.c_prev[j];
        dz[j] = d_i * lc.i[j] * (1.0 - lc.i[j]);
        dz[h + j] = d_f * lc.f[j] * (1.0 - lc.f[j]);
        dz[2 * h + j] = d_g * (1.0 - lc.g[j] * lc.g[j]);
        dz[3 * h + j] = d_o * lc.o[j] * (1.0 - lc.o[j]);
        dc_carry[layer][j] = dc * lc.f[j];
      }

      outer_accum(gr + lay.lstm_w[layer], 4 * h, in, dz.data(), lc.x.data());
      outer_accum(gr + lay.lstm_u[layer], 4 * h, h, dz.data(), lc.h_prev.data());
      for (int r = 0; r < 4 * h; ++r) gr[lay.lstm_b[layer] + r] += dz[r];

      std::fill(dh_carry[layer].begin(), dh_carry[layer].end(), 0.0);
      matvec_t(th + lay.lstm_u[layer], 4 * h, h, dz.data(), dh_carry[layer].data());

      if (layer > 0) {
        std::fill(dtop.begin(), dtop.end(), 0.0);
        matvec_t(th + lay.lstm_w[layer], 4 * h, in, dz.data(), dtop.data());
      }
    }
  }
  return grad;
}

std::vector<MaskedChoice> replay_masking(const Association& action) {
  const int b_count = action.b_count();
  const int u_count = action.u_count();
  std::vector<char> taken(u_count, 0);
  std::vector<MaskedChoice> out(b_count);
  for (int b = 0; b < b_count; ++b) {
    MaskedChoice& mc = out[b];
    for (int u = 0; u < u_count; ++u)
      if (!taken[u]) mc.available.push_back(u);
    mc.available.push_back(u_count);  // idle option is always available
    const int chosen_user = action.user_of(b);
    mc.chosen = chosen_user < 0 ? u_count : chosen_user;
    if (chosen_user >= 0) {
      if (taken[chosen_user])
        throw std::invalid_argument("replay_masking: action violates per-user constraint");
      taken[chosen_user] = 1;
    }
  }
  return out;
}

std::vector<double> subset_softmax(std::span<const double> logits, std::span<const int> subset) {
  double m = -std::numeric_limits<double>::infinity();
  for (int j : subset) m = std::max(m, logits[j]);
  std::vector<double> p(subset.size());
  double denom = 0.0;
  for (std::size_t k = 0; k < subset.size(); ++k) {
    p[k] = std::exp(logits[subset[k]] - m);
    denom += p[k];
  }
  for (double& v : p) v /= denom;
  return p;
}

}  // namespace detail

std::vector<double> encode_state(const MdpState& state, const EncodeNorms& norms) {
  if (!(norms.q_scale > 0.0 && norms.z_scale > 0.0))
    throw std::invalid_argument("encode_state: scales must be > 0");
  std::vector<double> f;
  f.reserve(state.s.data().size() + state.q.size() + 2);
  for (auto v : state.s.data()) f.push_back(static_cast<double>(v));
  for (double q : state.q) f.push_back(q / norms.q_scale);
  f.push_back(state.z1 / norms.z_scale);
  f.push_back(state.z2 / norms.z_scale);
  return f;
}

PolicyParams::PolicyParams(PolicyDims dims)
    : dims_(dims), theta_(ParamLayout::make(dims).total, 0.0) {
  if (dims.b < 1 || dims.u < 1 || dims.hidden < 1)
    throw std::invalid_argument("PolicyParams: dimensions must be >= 1");
}

PolicyParams PolicyParams::init(PolicyDims dims, Rng& rng) {
  PolicyParams p(dims);
  const ParamLayout lay = ParamLayout::make(dims);
  for (double& v : p.theta_) v = rng.uniform(-0.08, 0.08);
  // Forget gates open at 1 so early gradients reach across slots.
  for (int layer = 0; layer < 3; ++layer) {
    double* b = p.theta_.data() + lay.lstm_b[layer];
    for (int j = 0; j < lay.h; ++j) b[lay.h + j] = 1.0;
  }
  return p;
}

void PolicyParams::validate() const {
  const ParamLayout lay = ParamLayout::make(dims_);
  if (static_cast<int>(theta_.size()) != lay.total)
    throw std::invalid_argument("PolicyParams: size inconsistent with dims");
  for (double v : theta_)
    if (!std::isfinite(v)) throw std::invalid_argument("PolicyParams: non-finite entry");
}

void LstmCarry::reset(int hidden) {
  for (int layer = 0; layer < 3; ++layer) {
    h[layer].assign(hidden, 0.0);
    c[layer].assign(hidden, 0.0);
  }
}

HeadDistributions policy_forward(const PolicyParams& params, std::span<const double> features,
                                 LstmCarry& carry) {
  StepCache cache;
  detail::forward_cached(params, features, carry, cache);
  const PolicyDims& dims = params.dims();
  const int width = dims.head_width();
  HeadDistributions out;
  out.probs = Grid<double>(dims.b, width);
  for (int b = 0; b < dims.b; ++b) {
    std::vector<int> all(width);
    for (int k = 0; k < width; ++k) all[k] = b * width + k;
    const auto p = detail::subset_softmax(cache.logits, all);
    for (int k = 0; k < width; ++k) out.probs.at(b, k) = p[k];
  }
  return out;
}

std::pair<Association, double> sample_action(const HeadDistributions& dists, Rng& rng) {
  const int b_count = dists.probs.rows();
  const int width = dists.probs.cols();
  const int u_count = width - 1;
  Association assoc(b_count, u_count);
  double log_prob = 0.0;
  std::vector<char> taken(u_count, 0);
  for (int b = 0; b < b_count; ++b) {
    double denom = dists.probs.at(b, u_count);  // idle
    for (int u = 0; u < u_count; ++u)
      if (!taken[u]) denom += dists.probs.at(b, u);
    const double r = rng.uniform() * denom;
    double acc = 0.0;
    int chosen = u_count;
    for (int u = 0; u < u_count; ++u) {
      if (taken[u]) continue;
      acc += dists.probs.at(b, u);
      if (r < acc) {
        chosen = u;
        break;
      }
    }
    log_prob += std::log(dists.probs.at(b, chosen) / denom);
    if (chosen < u_count) {
      taken[chosen] = 1;
      assoc.assign(b, chosen);
    }
  }
  return {assoc, log_prob};
}

Association greedy_action(const HeadDistributions& dists) {
  const int b_count = dists.probs.rows();
  const int u_count = dists.probs.cols() - 1;
  Association assoc(b_count, u_count);
  std::vector<char> taken(u_count, 0);
  for (int b = 0; b < b_count; ++b) {
    int best = u_count;
    double best_p = dists.probs.at(b, u_count);
    for (int u = u_count - 1; u >= 0; --u) {
      if (taken[u]) continue;
      if (dists.probs.at(b, u) >= best_p) {
        best_p = dists.probs.at(b, u);
        best = u;
      }
    }
    if (best < u_count) {
      taken[best] = 1;
      assoc.assign(b, best);
    }
  }
  return assoc;
}

double action_log_prob(const HeadDistributions& dists, const Association& action) {
  const auto choices = detail::replay_masking(action);
  double log_prob = 0.0;
  for (int b = 0; b < dists.probs.rows(); ++b) {
    double denom = 0.0;
    for (int opt : choices[b].available) denom += dists.probs.at(b, opt);
    log_prob += std::log(dists.probs.at(b, choices[b].chosen) / denom);
  }
  return log_prob;
}

std::vector<double> log_prob_grad(const PolicyParams& params, std::span<const MdpState> states,
                                  std::span<const Association> actions, const EncodeNorms& norms) {
  if (states.size() != actions.size() || states.empty())
    throw std::invalid_argument("log_prob_grad: state/action sequences must match and be non-empty");
  const PolicyDims& dims = params.dims();
  const int width = dims.head_width();

  LstmCarry carry;
  std::vector<StepCache> caches(states.size());
  std::vector<std::vector<double>> dlogits(states.size());
  for (std::size_t t = 0; t < states.size(); ++t) {
    const auto features = encode_state(states[t], norms);
    detail::forward_cached(params, features, carry, caches[t]);
    // d/d logit of log pi under the masked factorization: for each head,
    // indicator(chosen) - subset softmax on the available options.
    dlogits[t].assign(dims.logit_dim(), 0.0);
    const auto choices = detail::replay_masking(actions[t]);
    for (int b = 0; b < dims.b; ++b) {
      std::vector<int> subset;
      subset.reserve(choices[b].available.size());
      for (int opt : choices[b].available) subset.push_back(b * width + opt);
      const auto p = detail::subset_softmax(caches[t].logits, subset);
      for (std::size_t k = 0; k < subset.size(); ++k) {
        const bool is_chosen = choices[b].available[k] == choices[b].chosen;
        dlogits[t][subset[k]] = (is_chosen ? 1.0 : 0.0) - p[k];
      }
    }
  }
  auto grad = detail::episode_backward(params, caches, dlogits);
  for (double g : grad)
    if (!std::isfinite(g)) throw std::runtime_error("log_prob_grad: non-finite gradient");
  return grad;
}

void save_checkpoint(const std::string& path, const PolicyParams& params, std::uint64_t seed) {
  params.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  const char magic[8] = {'R', 'I', 'S', 'V', 'R', 'P', 'O', 'L'};
  const std::uint32_t version = 1;
  const std::int32_t b = params.dims().b, u = params.dims().u, h = params.dims().hidden;
  const std::uint64_t count = params.size();
  out.write(magic, sizeof(magic));
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&b), sizeof(b));
  out.write(reinterpret_cast<const char*>(&u), sizeof(u));
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));
  out.write(reinterpret_cast<const char*>(&seed), sizeof(seed));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  out.write(reinterpret_cast<const char*>(params.theta().data()),
            static_cast<std::streamsize>(count * sizeof(double)));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

std::pair<PolicyParams, std::uint64_t> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  std::uint32_t version = 0;
  std::int32_t b = 0, u = 0, h = 0;
  std::uint64_t seed = 0, count = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&b), sizeof(b));
  in.read(reinterpret_cast<char*>(&u), sizeof(u));
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  in.read(reinterpret_cast<char*>(&seed), sizeof(seed));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || std::memcmp(magic, "RISVRPOL", 8) != 0 || version != 1)
    throw std::runtime_error("load_checkpoint: bad header in " + path);
  PolicyParams params(PolicyDims{b, u, h});
  if (count != params.size()) throw std::runtime_error("load_checkpoint: size mismatch in " + path);
  in.read(reinterpret_cast<char*>(params.theta().data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path);
  params.validate();
  return {std::move(params), seed};
}

}  // namespace risvr
