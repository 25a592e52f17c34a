#include "risvr/sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace risvr {

namespace {

// EVaR trace column: sliding window over the most recent max-queue
// observations, approximating the long-run limit.
constexpr int kEvarWindowSlots = 10000;

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

SimEnv::SimEnv(const SimConfig& cfg, std::uint64_t episode_index)
    : cfg_(cfg),
      mobility_rng_(make_stream(cfg.seed, StreamPurpose::mobility, episode_index)),
      blockage_rng_(make_stream(cfg.seed, StreamPurpose::blockage, episode_index)),
      phases_rng_(make_stream(cfg.seed, StreamPurpose::phases, episode_index)),
      arrivals_rng_(make_stream(cfg.seed, StreamPurpose::arrivals, episode_index)) {
  if (static_cast<int>(cfg_.room.ris.size()) != cfg_.b)
    throw ValidationError("SimEnv: config not finalized (RIS placement missing)");

  if (!cfg_.mobility.positions.empty()) {
    users_.resize(cfg_.u);
    Rng placement = make_stream(cfg_.seed, StreamPurpose::placement, episode_index);
    for (int i = 0; i < cfg_.u; ++i) {
      users_[i].pos = cfg_.mobility.positions[i];
      users_[i].heading = placement.angle();
      users_[i].speed = cfg_.mobility.speed;
    }
  } else {
    Rng placement = make_stream(cfg_.seed, StreamPurpose::placement, episode_index);
    users_ = place_users(cfg_.u, cfg_.room, cfg_.mobility.speed, placement);
  }
  links_ = initial_links(users_, cfg_.room, cfg_.blockage);
  queues_.q.assign(cfg_.u, 0.0);
  psi_.resize(static_cast<std::size_t>(cfg_.b) * cfg_.u);
  for (auto& p : psi_) p.resize(cfg_.channel.n_meta);
}

void SimEnv::begin_slot() {
  users_ = step_users(users_, cfg_.room, mobility_rng_, cfg_.mobility.turn_half_angle);
  links_ = update_blockage(links_, users_, cfg_.room, cfg_.blockage, blockage_rng_);
  // Phases are drawn for every link each slot, blocked or not, so the
  // stream position never depends on the blockage realization.
  for (auto& p : psi_)
    for (auto& v : p) v = phases_rng_.angle();
  rates_ = link_rate(links_, psi_, cfg_.channel);
  state_.s = links_.s;
  state_.q = queues_.q;
  state_.z1 = queues_.z1;
  state_.z2 = queues_.z2;
}

SimEnv::SlotResult SimEnv::finish_slot(const Association& assoc) {
  assoc.validate();
  if (assoc.b_count() != cfg_.b || assoc.u_count() != cfg_.u)
    throw std::invalid_argument("finish_slot: association shape mismatch");

  const std::vector<int> arrivals = sample_arrivals(cfg_.arrivals(), arrivals_rng_);

  SlotResult res;
  std::vector<double> served(cfg_.u, 0.0);
  for (int b = 0; b < cfg_.b; ++b) {
    const int u = assoc.user_of(b);
    if (u < 0) continue;
    served[u] += rates_.r_images.at(b, u);
    res.sum_rate_bps += rates_.r_bps.at(b, u);
    res.served_count += rates_.r_images.at(b, u) > 0.0 ? 1 : 0;
  }
  res.reward = reward(assoc, rates_, queues_, arrivals, cfg_.risk);

  const QueueState before = queues_;
  QueueUpdate upd = update_queues(queues_, served, arrivals, cfg_.risk);
  res.q_max = upd.q_max;
  queues_ = std::move(upd.next);
  res.drift_ok = drift_bound_check(before, queues_, served, arrivals, rates_, cfg_.risk).pass;

  ++slot_;
  return res;
}

MetricsTrace run_episode(const SimConfig& cfg, const PolicyParams* policy,
                         std::uint64_t episode_index, const SlotRecorder& recorder) {
  if (cfg.scheduler == SchedulerKind::policy) {
    if (policy == nullptr)
      throw ValidationError("run_episode: policy scheduler requires policy parameters");
    policy->validate();
    if (policy->dims().b != cfg.b || policy->dims().u != cfg.u)
      throw ValidationError("run_episode: policy dimensions do not match the network");
  }

  SimEnv env(cfg, episode_index);
  Rng sched_rng = make_stream(cfg.seed, StreamPurpose::scheduler, episode_index);
  LstmCarry carry;

  MetricsTrace trace;
  trace.rows.reserve(cfg.horizon);
  std::vector<double> q_window;
  q_window.reserve(cfg.horizon);

  for (int t = 0; t < cfg.horizon; ++t) {
    env.begin_slot();

    Association assoc;
    switch (cfg.scheduler) {
      case SchedulerKind::optimal: {
        const WeightMatrix w = build_weights(env.rates(), env.queues(), cfg.risk);
        assoc = solve_assignment(w, AssignMethod::exact_matching);
        break;
      }
      case SchedulerKind::policy: {
        const auto features = encode_state(env.state(), cfg.norms);
        const auto dists = policy_forward(*policy, features, carry);
        assoc = greedy_action(dists);
        break;
      }
      case SchedulerKind::random:
        assoc = baseline_assoc(BaselineKind::random, env.links(), sched_rng);
        break;
      case SchedulerKind::nearest:
        assoc = baseline_assoc(BaselineKind::nearest, env.links(), sched_rng);
        break;
    }

    if (recorder) recorder(t, env.state(), assoc);
    const auto res = env.finish_slot(assoc);
    if (!res.drift_ok) ++trace.drift_violations;

    q_window.push_back(res.q_max);
    const std::size_t win =
        std::min<std::size_t>(q_window.size(), static_cast<std::size_t>(kEvarWindowSlots));
    const double evar = evar_estimate(
        std::span<const double>(q_window.data() + q_window.size() - win, win), cfg.risk.gamma);

    trace.rows.push_back({t, res.q_max, res.sum_rate_bps, env.queues().z1, env.queues().z2,
                          evar, res.served_count});
  }

  Summary& s = trace.summary;
  for (const auto& row : trace.rows) {
    s.mean_q += row.q_max;
    s.mean_q2 += row.q_max * row.q_max;
    s.mean_sum_rate_bps += row.sum_rate_bps;
  }
  const double t_count = static_cast<double>(cfg.horizon);
  s.mean_q /= t_count;
  s.mean_q2 /= t_count;
  s.mean_sum_rate_bps /= t_count;
  s.constraint_eps_ok = s.mean_q < cfg.risk.epsilon;
  s.constraint_eta_ok = s.mean_q2 < cfg.risk.eta;
  s.seed = cfg.seed;
  s.config_hash = config_hash(cfg);
  return trace;
}

Dataset generate_dataset(const SimConfig& cfg, int episodes) {
  if (episodes < 1) throw ValidationError("generate_dataset: episodes must be >= 1");
  SimConfig run_cfg = cfg;
  run_cfg.scheduler = SchedulerKind::optimal;

  Dataset ds;
  ds.b = cfg.b;
  ds.u = cfg.u;
  ds.episodes.reserve(episodes);
  for (int e = 0; e < episodes; ++e) {
    LabeledEpisode ep;
    ep.index = e;
    ep.split = split_of_episode(e, episodes, cfg.train.split);
    ep.steps.reserve(run_cfg.horizon);
    run_episode(run_cfg, nullptr, static_cast<std::uint64_t>(e),
                [&ep](int, const MdpState& state, const Association& assoc) {
                  ep.steps.push_back({state, association_to_label(assoc)});
                });
    ds.episodes.push_back(std::move(ep));
  }
  return ds;
}

std::string trace_csv_string(const MetricsTrace& trace) {
  std::string out = "t,q_max,sum_rate_bps,z1,z2,evar_window,served_count\n";
  for (const auto& r : trace.rows) {
    out += std::to_string(r.t);
    out += ',';
    append_double(out, r.q_max);
    out += ',';
    append_double(out, r.sum_rate_bps);
    out += ',';
    append_double(out, r.z1);
    out += ',';
    append_double(out, r.z2);
    out += ',';
    append_double(out, r.evar_window);
    out += ',';
    out += std::to_string(r.served_count);
    out += '\n';
  }
  return out;
}

void write_trace_csv(const std::string& path, const MetricsTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open trace file for writing: " + path);
  const std::string body = trace_csv_string(trace);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed for trace file: " + path);
}

std::string summary_json_string(const MetricsTrace& trace) {
  nlohmann::json doc = {
      {"mean_q", trace.summary.mean_q},
      {"mean_q2", trace.summary.mean_q2},
      {"mean_sum_rate_bps", trace.summary.mean_sum_rate_bps},
      {"constraint_eps_ok", trace.summary.constraint_eps_ok},
      {"constraint_eta_ok", trace.summary.constraint_eta_ok},
      {"seed", trace.summary.seed},
      {"config_hash", trace.summary.config_hash},
  };
  return doc.dump(2) + "\n";
}

void write_summary_json(const std::string& path, const MetricsTrace& trace) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open summary file for writing: " + path);
  const std::string body = summary_json_string(trace);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw IoError("write failed for summary file: " + path);
}

std::vector<SchedulerComparison> compare(const SimConfig& cfg,
                                         std::span<const SchedulerKind> kinds,
                                         const PolicyParams* policy) {
  SimConfig base = cfg;
  base.scheduler = SchedulerKind::optimal;
  const MetricsTrace optimal = run_episode(base, nullptr);

  std::vector<SchedulerComparison> out;
  for (SchedulerKind kind : kinds) {
    SimConfig run_cfg = cfg;
    run_cfg.scheduler = kind;
    const MetricsTrace trace =
        kind == SchedulerKind::optimal ? optimal : run_episode(run_cfg, policy);
    SchedulerComparison cmp;
    cmp.kind = kind;
    cmp.summary = trace.summary;
    if (optimal.summary.mean_q > 0.0)
      cmp.queue_gap = (trace.summary.mean_q - optimal.summary.mean_q) / optimal.summary.mean_q;
    else
      cmp.queue_gap = trace.summary.mean_q - optimal.summary.mean_q;
    if (optimal.summary.mean_sum_rate_bps > 0.0)
      cmp.rate_gap = (optimal.summary.mean_sum_rate_bps - trace.summary.mean_sum_rate_bps) /
                     optimal.summary.mean_sum_rate_bps;
    else
      cmp.rate_gap = 0.0;
    out.push_back(std::move(cmp));
  }
  return out;
}

}  // namespace risvr
