#include "mfgcn/objectives.hpp"

namespace mfgcn {

LossReport total_loss(std::span<const CenterLoss> parts, bool supervised, double supervised_weight) {
  LossReport r;
  r.per_center.reserve(parts.size());
  for (const auto& p : parts) {
    CenterLoss entry = p;
    if (!supervised || !p.labeled) entry.supervised = 0.0;
    r.sgns += entry.sgns;
    r.supervised += entry.supervised;
    r.per_center.push_back(entry);
  }
  r.total = r.sgns + supervised_weight * r.supervised;
  return r;
}

}  // namespace mfgcn
