#include "risvr/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace risvr {

using nlohmann::json;

const char* scheduler_name(SchedulerKind k) {
  switch (k) {
    case SchedulerKind::optimal: return "optimal";
    case SchedulerKind::policy: return "policy";
    case SchedulerKind::random: return "random";
    default: return "nearest";
  }
}

SchedulerKind scheduler_from_name(const std::string& name) {
  if (name == "optimal") return SchedulerKind::optimal;
  if (name == "policy") return SchedulerKind::policy;
  if (name == "random") return SchedulerKind::random;
  if (name == "nearest") return SchedulerKind::nearest;
  throw ValidationError("unknown scheduler kind '" + name + "'");
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning_rate must be > 0");
  if (hidden < 1) throw std::invalid_argument("train: hidden width must be >= 1");
  if (patience < 1) throw std::invalid_argument("train: patience must be >= 1");
  if (episodes_per_epoch < 1 || reinforce_epochs < 1 || reinforce_horizon < 1)
    throw std::invalid_argument("train: reinforce settings must be >= 1");
  const double s = split[0] + split[1] + split[2];
  if (std::abs(s - 1.0) > 1e-9 || split[0] <= 0.0 || split[1] < 0.0 || split[2] < 0.0)
    throw std::invalid_argument("train: split fractions must be non-negative and sum to 1");
}

void SimConfig::finalize() {
  if (b < 1) throw ValidationError("config: b must be >= 1");
  if (u < 1) throw ValidationError("config: u must be >= 1");
  if (horizon < 1) throw ValidationError("config: horizon must be >= 1");

  if (lambda.size() == 1 && u > 1) lambda.assign(u, lambda[0]);
  if (static_cast<int>(lambda.size()) != u)
    throw ValidationError("config: arrivals.lambda must be scalar or length U");

  room.ris = place_ris(room.side, b);
  try {
    channel.validate();
    room.validate();
    blockage.validate();
    train.validate();
    arrivals().validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  if (!(mobility.speed >= 0.0)) throw ValidationError("config: mobility.speed must be >= 0");
  if (!(mobility.turn_half_angle >= 0.0 && mobility.turn_half_angle <= 3.141592653589793))
    throw ValidationError("config: mobility.turn_half_angle must be in [0, pi]");
  if (!mobility.positions.empty()) {
    if (static_cast<int>(mobility.positions.size()) != u)
      throw ValidationError("config: mobility.positions must list one position per user");
    for (const auto& p : mobility.positions)
      if (!(p.x > 0.0 && p.x < room.side && p.y > 0.0 && p.y < room.side))
        throw ValidationError("config: fixed user positions must be strictly inside the room");
  }
  if (!(norms.q_scale > 0.0 && norms.z_scale > 0.0))
    throw ValidationError("config: feature scales must be > 0");
}

namespace {

void expect_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!allowed.contains(key))
      throw ValidationError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

double get_num(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number()) throw ValidationError(std::string("config: '") + key + "' must be a number");
  return obj.at(key).get<double>();
}

int get_int(const json& obj, const char* key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_number_integer())
    throw ValidationError(std::string("config: '") + key + "' must be an integer");
  return obj.at(key).get<int>();
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "clone") return TrainMode::clone;
  if (name == "reinforce") return TrainMode::reinforce;
  if (name == "clone_then_reinforce") return TrainMode::clone_then_reinforce;
  throw ValidationError("config: unknown train mode '" + name + "'");
}

}  // namespace

SimConfig parse_sim_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config: parse error: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config: document must be an object");

  SimConfig cfg;
  expect_keys(doc, "", {"network", "channel", "risk", "arrivals", "room", "mobility", "blockage",
                        "horizon", "seed", "scheduler", "train"});

  if (doc.contains("network")) {
    const json& net = doc["network"];
    expect_keys(net, "network", {"b", "u", "n_meta", "z_levels"});
    cfg.b = get_int(net, "b", cfg.b);
    cfg.u = get_int(net, "u", cfg.u);
    cfg.channel.n_meta = get_int(net, "n_meta", cfg.channel.n_meta);
    cfg.channel.z_levels = get_int(net, "z_levels", cfg.channel.z_levels);
  }
  if (doc.contains("channel")) {
    const json& ch = doc["channel"];
    expect_keys(ch, "channel", {"power_w", "carrier_hz", "bandwidth_hz", "k_abs",
                                "temperature_k", "slot_s", "image_bits"});
    cfg.channel.power_w = get_num(ch, "power_w", cfg.channel.power_w);
    cfg.channel.carrier_hz = get_num(ch, "carrier_hz", cfg.channel.carrier_hz);
    cfg.channel.bandwidth_hz = get_num(ch, "bandwidth_hz", cfg.channel.bandwidth_hz);
    cfg.channel.k_abs = get_num(ch, "k_abs", cfg.channel.k_abs);
    cfg.channel.temperature_k = get_num(ch, "temperature_k", cfg.channel.temperature_k);
    cfg.channel.slot_s = get_num(ch, "slot_s", cfg.channel.slot_s);
    cfg.channel.image_bits = get_num(ch, "image_bits", cfg.channel.image_bits);
  }
  if (doc.contains("risk")) {
    const json& r = doc["risk"];
    expect_keys(r, "risk", {"gamma", "kappa", "epsilon", "alpha", "v"});
    try {
      cfg.risk = RiskParams(get_num(r, "gamma", cfg.risk.gamma), get_num(r, "kappa", cfg.risk.kappa),
                            get_num(r, "epsilon", cfg.risk.epsilon), get_num(r, "alpha", cfg.risk.alpha),
                            get_num(r, "v", cfg.risk.v_tradeoff));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(e.what());
    }
  }
  if (doc.contains("arrivals")) {
    const json& a = doc["arrivals"];
    expect_keys(a, "arrivals", {"lambda"});
    if (a.contains("lambda")) {
      if (a["lambda"].is_array())
        cfg.lambda = a["lambda"].get<std::vector<double>>();
      else if (a["lambda"].is_number())
        cfg.lambda = {a["lambda"].get<double>()};
      else
        throw ValidationError("config: arrivals.lambda must be a number or array");
    }
  }
  if (doc.contains("room")) {
    const json& r = doc["room"];
    expect_keys(r, "room", {"side_m", "min_link_distance_m"});
    cfg.room.side = get_num(r, "side_m", cfg.room.side);
    cfg.room.min_link_distance = get_num(r, "min_link_distance_m", cfg.room.min_link_distance);
  }
  if (doc.contains("mobility")) {
    const json& m = doc["mobility"];
    expect_keys(m, "mobility", {"speed", "turn_half_angle", "positions"});
    cfg.mobility.speed = get_num(m, "speed", cfg.mobility.speed);
    cfg.mobility.turn_half_angle = get_num(m, "turn_half_angle", cfg.mobility.turn_half_angle);
    if (m.contains("positions")) {
      if (!m["positions"].is_array()) throw ValidationError("config: mobility.positions must be an array");
      for (const auto& p : m["positions"]) {
        if (!p.is_array() || p.size() != 2)
          throw ValidationError("config: each position must be [x, y]");
        cfg.mobility.positions.push_back({p[0].get<double>(), p[1].get<double>()});
      }
    }
  }
  if (doc.contains("blockage")) {
    const json& bl = doc["blockage"];
    expect_keys(bl, "blockage", {"mode", "p_stay_los", "p_stay_blocked", "self_block_half_angle",
                                 "body_radius", "initial"});
    if (bl.contains("mode")) {
      const std::string mode = bl["mode"].get<std::string>();
      if (mode == "markov")
        cfg.blockage.mode = BlockageMode::markov;
      else if (mode == "geometric")
        cfg.blockage.mode = BlockageMode::geometric;
      else
        throw ValidationError("config: unknown blockage mode '" + mode + "'");
    }
    cfg.blockage.p_stay_los = get_num(bl, "p_stay_los", cfg.blockage.p_stay_los);
    cfg.blockage.p_stay_blocked = get_num(bl, "p_stay_blocked", cfg.blockage.p_stay_blocked);
    cfg.blockage.self_block_half_angle =
        get_num(bl, "self_block_half_angle", cfg.blockage.self_block_half_angle);
    cfg.blockage.body_radius = get_num(bl, "body_radius", cfg.blockage.body_radius);
    if (bl.contains("initial")) {
      const std::string init = bl["initial"].get<std::string>();
      if (init == "los")
        cfg.blockage.initial_blocked = false;
      else if (init == "blocked")
        cfg.blockage.initial_blocked = true;
      else
        throw ValidationError("config: blockage.initial must be 'los' or 'blocked'");
    }
  }
  if (doc.contains("horizon")) cfg.horizon = get_int(doc, "horizon", cfg.horizon);
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
      throw ValidationError("config: seed must be an integer");
    cfg.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("scheduler")) cfg.scheduler = scheduler_from_name(doc["scheduler"].get<std::string>());
  if (doc.contains("train")) {
    const json& t = doc["train"];
    expect_keys(t, "train", {"max_epochs", "batch_size", "learning_rate", "hidden", "mode",
                             "split", "patience", "target_accuracy", "episodes_per_epoch",
                             "reinforce_epochs", "reinforce_horizon", "q_scale", "z_scale"});
    cfg.train.max_epochs = get_int(t, "max_epochs", cfg.train.max_epochs);
    cfg.train.batch_size = get_int(t, "batch_size", cfg.train.batch_size);
    cfg.train.learning_rate = get_num(t, "learning_rate", cfg.train.learning_rate);
    cfg.train.hidden = get_int(t, "hidden", cfg.train.hidden);
    if (t.contains("mode")) cfg.train.mode = train_mode_from_name(t["mode"].get<std::string>());
    if (t.contains("split")) {
      const auto s = t["split"].get<std::vector<double>>();
      if (s.size() != 3) throw ValidationError("config: train.split must have 3 entries");
      for (int i = 0; i < 3; ++i) cfg.train.split[i] = s[i];
    }
    cfg.train.patience = get_int(t, "patience", cfg.train.patience);
    cfg.train.target_accuracy = get_num(t, "target_accuracy", cfg.train.target_accuracy);
    cfg.train.episodes_per_epoch = get_int(t, "episodes_per_epoch", cfg.train.episodes_per_epoch);
    cfg.train.reinforce_epochs = get_int(t, "reinforce_epochs", cfg.train.reinforce_epochs);
    cfg.train.reinforce_horizon = get_int(t, "reinforce_horizon", cfg.train.reinforce_horizon);
    cfg.norms.q_scale = get_num(t, "q_scale", cfg.norms.q_scale);
    cfg.norms.z_scale = get_num(t, "z_scale", cfg.norms.z_scale);
  }

  cfg.finalize();
  return cfg;
}

SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for config file: " + path);
  return parse_sim_config(buf.str());
}

std::string config_hash(const SimConfig& cfg) {
  json doc = {
      {"network", {{"b", cfg.b}, {"u", cfg.u}, {"n_meta", cfg.channel.n_meta},
                   {"z_levels", cfg.channel.z_levels}}},
      {"channel", {{"power_w", cfg.channel.power_w}, {"carrier_hz", cfg.channel.carrier_hz},
                   {"bandwidth_hz", cfg.channel.bandwidth_hz}, {"k_abs", cfg.channel.k_abs},
                   {"temperature_k", cfg.channel.temperature_k}, {"slot_s", cfg.channel.slot_s},
                   {"image_bits", cfg.channel.image_bits}}},
      {"risk", {{"gamma", cfg.risk.gamma}, {"kappa", cfg.risk.kappa}, {"epsilon", cfg.risk.epsilon},
                {"alpha", cfg.risk.alpha}, {"v", cfg.risk.v_tradeoff}}},
      {"arrivals", {{"lambda", cfg.lambda}}},
      {"room", {{"side_m", cfg.room.side}, {"min_link_distance_m", cfg.room.min_link_distance}}},
      {"mobility", {{"speed", cfg.mobility.speed}, {"turn_half_angle", cfg.mobility.turn_half_angle}}},
      {"blockage", {{"mode", cfg.blockage.mode == BlockageMode::markov ? "markov" : "geometric"},
                    {"p_stay_los", cfg.blockage.p_stay_los},
                    {"p_stay_blocked", cfg.blockage.p_stay_blocked},
                    {"self_block_half_angle", cfg.blockage.self_block_half_angle},
                    {"body_radius", cfg.blockage.body_radius},
                    {"initial", cfg.blockage.initial_blocked ? "blocked" : "los"}}},
      {"horizon", cfg.horizon},
      {"seed", cfg.seed},
      {"scheduler", scheduler_name(cfg.scheduler)},
  };
  if (!cfg.mobility.positions.empty()) {
    json pos = json::array();
    for (const auto& p : cfg.mobility.positions) pos.push_back({p.x, p.y});
    doc["mobility"]["positions"] = std::move(pos);
  }
  const std::string canon = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace risvr
