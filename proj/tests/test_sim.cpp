#include <stdexcept>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "risvr/config.hpp"
#include "risvr/sim.hpp"

using namespace risvr;

namespace {

SimConfig small_config() {
  SimConfig cfg;
  cfg.channel.n_meta = 64;  // keep unit runs fast
  cfg.horizon = 500;
  cfg.seed = 11;
  cfg.finalize();
  return cfg;
}

std::vector<std::vector<double>> parse_csv(const std::string& body) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(body);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TEST_SUITE("sim") {

TEST_CASE("zero arrivals keep every queue at zero") {
  SimConfig cfg = small_config();
  cfg.lambda = {0.0};
  cfg.finalize();
  const auto trace = run_episode(cfg);
  for (const auto& row : trace.rows) {
    CHECK(row.q_max == 0.0);
    CHECK(row.z1 == 0.0);
    CHECK(row.z2 == 0.0);
  }
  CHECK(trace.summary.mean_q == 0.0);
  CHECK(trace.summary.constraint_eps_ok);
}

TEST_CASE("absorbing blockage starves the links and queues grow at max lambda") {
  SimConfig cfg = small_config();
  cfg.horizon = 4000;
  cfg.blockage.initial_blocked = true;
  cfg.blockage.p_stay_blocked = 1.0;
  cfg.finalize();
  const auto trace = run_episode(cfg);
  for (const auto& row : trace.rows) CHECK(row.sum_rate_bps == 0.0);
  // With no service, Q_max is a running Poisson sum; its slope settles
  // at the largest arrival rate.
  const double q_end = trace.rows.back().q_max;
  const double q_mid = trace.rows[cfg.horizon / 2].q_max;
  const double slope = (q_end - q_mid) / (cfg.horizon / 2.0);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("identical config and seed give byte-identical outputs") {
  const SimConfig cfg = small_config();
  const auto t1 = run_episode(cfg);
  const auto t2 = run_episode(cfg);
  CHECK(trace_csv_string(t1) == trace_csv_string(t2));
  CHECK(summary_json_string(t1) == summary_json_string(t2));
}

TEST_CASE("trace has exactly horizon rows and recomputable summary") {
  const SimConfig cfg = small_config();
  const auto trace = run_episode(cfg);
  const std::string csv = trace_csv_string(trace);
  const auto rows = parse_csv(csv);
  REQUIRE(static_cast<int>(rows.size()) == cfg.horizon);

  double mean_q = 0.0, mean_q2 = 0.0, mean_rate = 0.0;
  for (const auto& row : rows) {
    mean_q += row[1];
    mean_q2 += row[1] * row[1];
    mean_rate += row[2];
  }
  mean_q /= rows.size();
  mean_q2 /= rows.size();
  mean_rate /= rows.size();
  CHECK(std::abs(mean_q - trace.summary.mean_q) <= 1e-9 * std::max(1.0, mean_q));
  CHECK(std::abs(mean_q2 - trace.summary.mean_q2) <= 1e-9 * std::max(1.0, mean_q2));
  CHECK(std::abs(mean_rate - trace.summary.mean_sum_rate_bps) <= 1e-9 * mean_rate);
}

TEST_CASE("drift bound holds on every slot of a default run") {
  const SimConfig cfg = small_config();
  for (auto kind : {SchedulerKind::optimal, SchedulerKind::random, SchedulerKind::nearest}) {
    SimConfig run_cfg = cfg;
    run_cfg.scheduler = kind;
    const auto trace = run_episode(run_cfg);
    CHECK(trace.drift_violations == 0);
  }
}

TEST_CASE("every scheduler kind emits feasible associations") {
  SimConfig cfg = small_config();
  cfg.horizon = 100;
  Rng prng(5);
  const auto policy = PolicyParams::init(PolicyDims{cfg.b, cfg.u, 8}, prng);
  for (auto kind : {SchedulerKind::optimal, SchedulerKind::policy, SchedulerKind::random,
                    SchedulerKind::nearest}) {
    SimConfig run_cfg = cfg;
    run_cfg.scheduler = kind;
    int checked = 0;
    run_episode(run_cfg, kind == SchedulerKind::policy ? &policy : nullptr, 0,
                [&](int, const MdpState&, const Association& assoc) {
                  assoc.validate();
                  ++checked;
                });
    CHECK(checked == run_cfg.horizon);
  }
}

TEST_CASE("policy scheduler requires parameters") {
  SimConfig cfg = small_config();
  cfg.scheduler = SchedulerKind::policy;
  CHECK_THROWS_AS(run_episode(cfg), ValidationError);
}

TEST_CASE("dataset generation: counts, split, feasibility, determinism") {
  SimConfig cfg = small_config();
  cfg.horizon = 100;
  const Dataset ds = generate_dataset(cfg, 10);
  CHECK(ds.step_count() == 1000);
  CHECK(ds.of(Split::train).size() == 8);
  CHECK(ds.of(Split::val).size() == 1);
  CHECK(ds.of(Split::test).size() == 1);
  for (const auto& ep : ds.episodes)
    for (const auto& step : ep.steps) label_to_association(step.label, ds.u).validate();

  const std::string path1 = "/tmp/risvr_test_ds1.jsonl";
  const std::string path2 = "/tmp/risvr_test_ds2.jsonl";
  write_dataset(path1, ds);
  write_dataset(path2, generate_dataset(cfg, 10));
  std::ifstream f1(path1), f2(path2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());

  const Dataset loaded = load_dataset(path1);
  CHECK(loaded.step_count() == ds.step_count());
  CHECK(loaded.b == ds.b);
  CHECK(loaded.u == ds.u);
  for (std::size_t e = 0; e < ds.episodes.size(); ++e) {
    CHECK(loaded.episodes[e].split == ds.episodes[e].split);
    for (std::size_t t = 0; t < ds.episodes[e].steps.size(); ++t) {
      CHECK(loaded.episodes[e].steps[t].label == ds.episodes[e].steps[t].label);
      CHECK(loaded.episodes[e].steps[t].state.q == ds.episodes[e].steps[t].state.q);
    }
  }
  std::remove(path1.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("config parsing: defaults, broadcast, unknown keys, bad values") {
  const SimConfig cfg = parse_sim_config(R"({"network": {"b": 2, "u": 4},
                                            "arrivals": {"lambda": 0.5},
                                            "horizon": 50})");
  CHECK(cfg.b == 2);
  CHECK(cfg.u == 4);
  REQUIRE(cfg.lambda.size() == 4);
  CHECK(cfg.lambda[3] == doctest::Approx(0.5));
  CHECK(cfg.room.ris.size() == 2);

  CHECK_THROWS_AS(parse_sim_config(R"({"horizons": 10})"), ValidationError);
  CHECK_THROWS_AS(parse_sim_config(R"({"network": {"bees": 2}})"), ValidationError);
  CHECK_THROWS_AS(parse_sim_config(R"({"scheduler": "greedy"})"), ValidationError);
  CHECK_THROWS_AS(parse_sim_config(R"({"risk": {"gamma": 2.0}})"), ValidationError);
  CHECK_THROWS_AS(parse_sim_config("not json"), ValidationError);
  CHECK_THROWS_AS(load_sim_config("/tmp/risvr_missing_config.json"), IoError);
}

TEST_CASE("config hash is stable and sensitive") {
  SimConfig a = small_config();
  SimConfig b = small_config();
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 12;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("compare: optimal against itself has zero gaps, random trails it") {
  SimConfig cfg = small_config();
  cfg.horizon = 1500;
  const SchedulerKind kinds[] = {SchedulerKind::optimal, SchedulerKind::random};
  const auto rep = compare(cfg, kinds);
  REQUIRE(rep.size() == 2);
  CHECK(rep[0].queue_gap == doctest::Approx(0.0));
  CHECK(rep[0].rate_gap == doctest::Approx(0.0));
  CHECK(rep[1].rate_gap > 0.0);
}

TEST_CASE("evar trace column matches a direct estimate over the window") {
  SimConfig cfg = small_config();
  cfg.horizon = 300;
  const auto trace = run_episode(cfg);
  std::vector<double> window;
  for (const auto& row : trace.rows) window.push_back(row.q_max);
  const double direct = evar_estimate(window, cfg.risk.gamma);
  CHECK(trace.rows.back().evar_window == doctest::Approx(direct).epsilon(1e-12));
}

}  // TEST_SUITE
