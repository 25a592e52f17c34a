#include "risvr/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace risvr {

using nlohmann::json;

std::vector<const LabeledEpisode*> Dataset::of(Split s) const {
  std::vector<const LabeledEpisode*> out;
  for (const auto& e : episodes)
    if (e.split == s) out.push_back(&e);
  return out;
}

std::size_t Dataset::step_count() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.steps.size();
  return n;
}

Split split_of_episode(int episode, int episode_count, const double fractions[3]) {
  const int train_end = static_cast<int>(fractions[0] * episode_count);
  const int val_end = train_end + static_cast<int>(fractions[1] * episode_count);
  if (episode < train_end) return Split::train;
  if (episode < val_end) return Split::val;
  return Split::test;
}

namespace {

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    default: return "test";
  }
}

Split split_from_name(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw std::runtime_error("dataset: unknown split tag '" + s + "'");
}

}  // namespace

Association label_to_association(const std::vector<int>& label, int u_count) {
  Association a(static_cast<int>(label.size()), u_count);
  for (std::size_t b = 0; b < label.size(); ++b)
    if (label[b] >= 0 && label[b] < u_count) a.assign(static_cast<int>(b), label[b]);
  return a;
}

std::vector<int> association_to_label(const Association& assoc) {
  std::vector<int> label(assoc.b_count());
  for (int b = 0; b < assoc.b_count(); ++b) {
    const int u = assoc.user_of(b);
    label[b] = u < 0 ? assoc.u_count() : u;
  }
  return label;
}

void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
  for (const auto& ep : ds.episodes) {
    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const LabeledStep& step = ep.steps[t];
      json s_rows = json::array();
      for (int b = 0; b < step.state.s.rows(); ++b) {
        json row = json::array();
        for (int u = 0; u < step.state.s.cols(); ++u) row.push_back(int(step.state.s.at(b, u)));
        s_rows.push_back(std::move(row));
      }
      json action = json::array();
      for (int lbl : step.label) action.push_back(lbl == ds.u ? -1 : lbl);
      json rec = {
          {"episode", ep.index},
          {"slot", static_cast<int>(t)},
          {"split", split_name(ep.split)},
          {"state", {{"s", std::move(s_rows)}, {"q", step.state.q},
                     {"z1", step.state.z1}, {"z2", step.state.z2}}},
          {"action", std::move(action)},
      };
      out << rec.dump() << '\n';
    }
  }
  if (!out) throw std::runtime_error("write_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  Dataset ds;
  std::string line;
  LabeledEpisode* current = nullptr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    const int episode = rec.at("episode").get<int>();
    if (current == nullptr || current->index != episode) {
      ds.episodes.push_back({});
      current = &ds.episodes.back();
      current->index = episode;
      current->split = split_from_name(rec.at("split").get<std::string>());
    }
    LabeledStep step;
    const json& st = rec.at("state");
    const json& s_rows = st.at("s");
    const int b_count = static_cast<int>(s_rows.size());
    const int u_count = b_count > 0 ? static_cast<int>(s_rows[0].size()) : 0;
    step.state.s = Grid<std::uint8_t>(b_count, u_count);
    for (int b = 0; b < b_count; ++b)
      for (int u = 0; u < u_count; ++u)
        step.state.s.at(b, u) = s_rows[b][u].get<int>() ? 1 : 0;
    step.state.q = st.at("q").get<std::vector<double>>();
    step.state.z1 = st.at("z1").get<double>();
    step.state.z2 = st.at("z2").get<double>();
    step.label.reserve(b_count);
    for (const auto& a : rec.at("action")) {
      const int u = a.get<int>();
      step.label.push_back(u < 0 ? u_count : u);
    }
    if (ds.b == 0) {
      ds.b = b_count;
      ds.u = u_count;
    } else if (ds.b != b_count || ds.u != u_count) {
      throw std::runtime_error("load_dataset: inconsistent dimensions in " + path);
    }
    current->steps.push_back(std::move(step));
  }
  if (ds.episodes.empty()) throw std::runtime_error("load_dataset: no records in " + path);
  return ds;
}

}  // namespace risvr
