#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "mfgcn/graph.hpp"

namespace mfgcn {

/// Second-order (node2vec) walk settings plus the skip-gram window.
struct WalkConfig {
  int walk_length = 20;
  double return_param = 0.5;  // p
  double inout_param = 1.0;   // q
  int window = 5;
  int walks_per_center = 1;
  // Also exclude nodes adjacent to the center's neighbors or to any context.
  bool strict_negatives = false;

  void validate() const;
};

struct Batch {
  std::vector<NodeId> centers;
  std::vector<std::vector<NodeId>> contexts;   // distinct, first-occurrence order
  std::vector<std::vector<NodeId>> negatives;  // exactly k per center
  std::vector<NodeId> dropped;                 // centers with no valid negative

  std::size_t size() const { return centers.size(); }
};

/// Walk of at most cfg.walk_length nodes starting at `start`. Transitions
/// never use the implicit self-loop; a node without neighbors ends the walk.
std::vector<NodeId> biased_walk(const Graph& g, NodeId start, const WalkConfig& cfg, Rng& rng);

/// (walk[t], walk[t']) for 0 < |t - t'| <= window, skipping equal endpoints.
std::vector<std::pair<NodeId, NodeId>> extract_contexts(std::span<const NodeId> walk, int window);

/// k nodes drawn uniformly with replacement from
/// V \ ({center} u N(center) u contexts). Throws DataError("no valid
/// negatives ...") when that set is empty.
std::vector<NodeId> sample_negatives(const Graph& g, NodeId center, std::span<const NodeId> contexts,
                                     int k, Rng& rng, bool strict = false);

/// One draw from `rng` seeds per-center streams, so the result does not
/// depend on the order centers are processed in.
Batch make_batch(const Graph& g, std::span<const NodeId> centers, const WalkConfig& cfg, int k,
                 Rng& rng);

/// "center | contexts | negatives" per line, node names.
void dump_batch(const Graph& g, const Batch& batch, std::ostream& out);

}  // namespace mfgcn
