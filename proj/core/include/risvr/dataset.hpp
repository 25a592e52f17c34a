#pragma once

#include <string>
#include <vector>

#include "risvr/policy.hpp"
#include "risvr/scheduler.hpp"

namespace risvr {

enum class Split { train, val, test };

/// One labeled slot: the observed state and, per RIS, the user chosen by
/// the exact scheduler (u == U means idle).
struct LabeledStep {
  MdpState state;
  std::vector<int> label;  // length B, entries in [0, U]
};

struct LabeledEpisode {
  int index = 0;
  Split split = Split::train;
  std::vector<LabeledStep> steps;
};

struct Dataset {
  int b = 0;
  int u = 0;
  std::vector<LabeledEpisode> episodes;

  std::vector<const LabeledEpisode*> of(Split s) const;
  std::size_t step_count() const;
};

/// Assign splits by episode index: first 80% train, next 10% val, rest
/// test (fractions configurable). Slots of one episode never straddle a
/// split boundary.
Split split_of_episode(int episode, int episode_count, const double fractions[3]);

/// Line-delimited JSON records, one slot per line:
/// {"episode":..,"slot":..,"split":"train","state":{"s":[[..]],"q":[..],
///  "z1":..,"z2":..},"action":[..]} with -1 marking an idle RIS.
void write_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

/// Convert a per-RIS label vector back into an Association.
Association label_to_association(const std::vector<int>& label, int u_count);
std::vector<int> association_to_label(const Association& assoc);

}  // namespace risvr
