#include <stdexcept>
#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "policy_internal.hpp"
#include "risvr/policy.hpp"

using namespace risvr;

namespace {

MdpState random_state(int b, int u, Rng& rng) {
  MdpState st;
  st.s = Grid<std::uint8_t>(b, u);
  for (auto& v : st.s.data()) v = rng.uniform() < 0.7 ? 1 : 0;
  st.q.resize(u);
  for (auto& q : st.q) q = rng.uniform(0.0, 8.0);
  st.z1 = rng.uniform(0.0, 4.0);
  st.z2 = rng.uniform(0.0, 10.0);
  return st;
}

Association random_feasible_action(const PolicyParams& params, const MdpState& st,
                                   const EncodeNorms& norms, LstmCarry& carry, Rng& rng) {
  const auto dists = policy_forward(params, encode_state(st, norms), carry);
  return sample_action(dists, rng).first;
}

/// Total masked log-probability of an episode, the quantity whose
/// gradient log_prob_grad returns.
double episode_log_prob(const PolicyParams& params, const std::vector<MdpState>& states,
                        const std::vector<Association>& actions, const EncodeNorms& norms) {
  LstmCarry carry;
  double total = 0.0;
  for (std::size_t t = 0; t < states.size(); ++t) {
    const auto dists = policy_forward(params, encode_state(states[t], norms), carry);
    total += action_log_prob(dists, actions[t]);
  }
  return total;
}

}  // namespace

TEST_SUITE("policy") {

TEST_CASE("encode_state layout and scaling") {
  MdpState st;
  st.s = Grid<std::uint8_t>(2, 2, 0);
  st.q = {0.0, 0.0};
  const EncodeNorms norms;
  auto f = encode_state(st, norms);
  REQUIRE(f.size() == 8);
  for (double v : f) CHECK(v == 0.0);

  st.s.at(1, 0) = 1;
  st.q = {4.0, 1.0};
  st.z1 = 3.0;
  st.z2 = 10.0;
  EncodeNorms scaled{2.0, 5.0};
  f = encode_state(st, scaled);
  CHECK(f[2] == 1.0);               // s(1,0) in row-major position 2
  CHECK(f[4] == doctest::Approx(2.0));  // q0 / 2
  CHECK(f[6] == doctest::Approx(0.6));  // z1 / 5
  CHECK(f[7] == doctest::Approx(2.0));  // z2 / 5
}

TEST_CASE("forward heads are normalized probability vectors") {
  const PolicyDims dims{3, 4, 16};
  Rng rng(61);
  const auto params = PolicyParams::init(dims, rng);
  LstmCarry carry;
  MdpState st = random_state(3, 4, rng);
  const auto dists = policy_forward(params, encode_state(st, {}), carry);
  REQUIRE(dists.probs.rows() == 3);
  REQUIRE(dists.probs.cols() == 5);
  for (int b = 0; b < 3; ++b) {
    double sum = 0.0;
    for (int k = 0; k < 5; ++k) {
      CHECK(dists.probs.at(b, k) > 0.0);
      sum += dists.probs.at(b, k);
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("zero parameters give uniform heads") {
  const PolicyDims dims{2, 3, 8};
  PolicyParams params(dims);  // all zeros
  LstmCarry carry;
  Rng rng(67);
  const auto dists = policy_forward(params, encode_state(random_state(2, 3, rng), {}), carry);
  for (int b = 0; b < 2; ++b)
    for (int k = 0; k < 4; ++k)
      CHECK(dists.probs.at(b, k) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("forward pass is deterministic") {
  const PolicyDims dims{2, 2, 8};
  Rng rng(71);
  const auto params = PolicyParams::init(dims, rng);
  const auto st = random_state(2, 2, rng);
  const auto f = encode_state(st, {});
  LstmCarry c1, c2;
  const auto d1 = policy_forward(params, f, c1);
  const auto d2 = policy_forward(params, f, c2);
  for (int b = 0; b < 2; ++b)
    for (int k = 0; k < 3; ++k) CHECK(d1.probs.at(b, k) == d2.probs.at(b, k));
  for (int layer = 0; layer < 3; ++layer)
    for (int j = 0; j < 8; ++j) CHECK(c1.h[layer][j] == c2.h[layer][j]);
}

TEST_CASE("sample_action on degenerate and uniform heads") {
  Rng rng(73);
  SUBCASE("deterministic head has zero log prob") {
    HeadDistributions dists;
    dists.probs = Grid<double>(1, 2);
    dists.probs.at(0, 0) = 1.0;
    dists.probs.at(0, 1) = 0.0;
    const auto [assoc, lp] = sample_action(dists, rng);
    CHECK(assoc.user_of(0) == 0);
    CHECK(lp == doctest::Approx(0.0));
  }
  SUBCASE("uniform 3-way head samples with log prob log(1/3)") {
    HeadDistributions dists;
    dists.probs = Grid<double>(1, 3, 1.0 / 3.0);
    const auto [assoc, lp] = sample_action(dists, rng);
    (void)assoc;
    CHECK(lp == doctest::Approx(std::log(1.0 / 3.0)));
  }
  SUBCASE("second head is masked to idle when the only user is taken") {
    HeadDistributions dists;
    dists.probs = Grid<double>(2, 2);
    dists.probs.at(0, 0) = 0.9;
    dists.probs.at(0, 1) = 0.1;
    dists.probs.at(1, 0) = 0.9;
    dists.probs.at(1, 1) = 0.1;
    for (int i = 0; i < 50; ++i) {
      const auto [assoc, lp] = sample_action(dists, rng);
      assoc.validate();
      CHECK(lp <= 1e-12);
      if (assoc.user_of(0) == 0) CHECK(assoc.user_of(1) == -1);
    }
  }
}

TEST_CASE("sampled actions are always feasible") {
  Rng rng(79);
  const PolicyDims dims{4, 3, 8};
  for (int trial = 0; trial < 20; ++trial) {
    const auto params = PolicyParams::init(dims, rng);
    LstmCarry carry;
    for (int t = 0; t < 20; ++t) {
      const auto st = random_state(4, 3, rng);
      const auto a = random_feasible_action(params, st, {}, carry, rng);
      a.validate();
    }
  }
}

TEST_CASE("greedy decode is deterministic and feasible") {
  Rng rng(83);
  const PolicyDims dims{3, 2, 8};
  const auto params = PolicyParams::init(dims, rng);
  const auto st = random_state(3, 2, rng);
  LstmCarry c1, c2;
  const auto a1 = greedy_action(policy_forward(params, encode_state(st, {}), c1));
  const auto a2 = greedy_action(policy_forward(params, encode_state(st, {}), c2));
  CHECK(a1 == a2);
  a1.validate();
}

TEST_CASE("log_prob_grad matches central finite differences") {
  const PolicyDims dims{2, 2, 4};
  Rng rng(89);
  auto params = PolicyParams::init(dims, rng);

  std::vector<MdpState> states;
  std::vector<Association> actions;
  LstmCarry carry;
  for (int t = 0; t < 3; ++t) {
    states.push_back(random_state(2, 2, rng));
    actions.push_back(random_feasible_action(params, states.back(), {}, carry, rng));
  }

  const auto grad = log_prob_grad(params, states, actions, {});
  REQUIRE(grad.size() == params.size());

  const double step = 1e-5;
  double max_rel = 0.0;
  // Spot-check a spread of coordinates; the acceptance suite sweeps all.
  for (std::size_t i = 0; i < params.size(); i += 7) {
    auto perturbed = params;
    perturbed.theta()[i] += step;
    const double up = episode_log_prob(perturbed, states, actions, {});
    perturbed.theta()[i] -= 2.0 * step;
    const double down = episode_log_prob(perturbed, states, actions, {});
    const double fd = (up - down) / (2.0 * step);
    const double rel = std::abs(grad[i] - fd) / std::max(1.0, std::abs(grad[i]));
    max_rel = std::max(max_rel, rel);
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("identical episodes give identical gradients") {
  const PolicyDims dims{2, 2, 6};
  Rng rng(97);
  const auto params = PolicyParams::init(dims, rng);
  std::vector<MdpState> states;
  std::vector<Association> actions;
  LstmCarry carry;
  for (int t = 0; t < 4; ++t) {
    states.push_back(random_state(2, 2, rng));
    actions.push_back(random_feasible_action(params, states.back(), {}, carry, rng));
  }
  const auto g1 = log_prob_grad(params, states, actions, {});
  const auto g2 = log_prob_grad(params, states, actions, {});
  CHECK(g1 == g2);
}

TEST_CASE("zero-weighted logit seeds produce a zero update") {
  const PolicyDims dims{2, 2, 4};
  Rng rng(101);
  const auto params = PolicyParams::init(dims, rng);
  LstmCarry carry;
  detail::StepCache cache;
  detail::forward_cached(params, encode_state(random_state(2, 2, rng), {}), carry, cache);
  std::vector<std::vector<double>> dlogits(1);
  dlogits[0].assign(dims.logit_dim(), 0.0);  // centered reward: zero seed
  const auto grad = detail::episode_backward(params, {&cache, 1}, dlogits);
  for (double g : grad) CHECK(g == 0.0);
}

TEST_CASE("checkpoint round trip is exact") {
  const PolicyDims dims{3, 4, 8};
  Rng rng(103);
  const auto params = PolicyParams::init(dims, rng);
  const std::string path = "/tmp/risvr_test_checkpoint.bin";
  save_checkpoint(path, params, 12345);
  const auto [loaded, seed] = load_checkpoint(path);
  CHECK(seed == 12345);
  CHECK(loaded.dims() == params.dims());
  CHECK(loaded.theta() == params.theta());
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_checkpoint("/tmp/risvr_no_such_checkpoint.bin"), std::runtime_error);
}

}  // TEST_SUITE
