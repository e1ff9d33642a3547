#include "mfgcn/sampler.hpp"

#include <algorithm>
#include <ostream>
#include <string>

namespace mfgcn {

void WalkConfig::validate() const {
  if (walk_length < 2) throw std::invalid_argument("walk_length must be at least 2");
  if (window < 1 || window > walk_length - 1)
    throw std::invalid_argument("window must lie in [1, walk_length - 1]");
  if (!(return_param > 0.0) || !(inout_param > 0.0))
    throw std::invalid_argument("walk parameters p and q must be positive");
  if (walks_per_center < 1) throw std::invalid_argument("walks_per_center must be positive");
}

std::vector<NodeId> biased_walk(const Graph& g, NodeId start, const WalkConfig& cfg, Rng& rng) {
  std::vector<NodeId> walk{start};
  walk.reserve(static_cast<std::size_t>(cfg.walk_length));
  std::vector<double> weights;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(walk.size()) < cfg.walk_length) {
    const NodeId cur = walk.back();
    auto nb = g.neighbors(cur);
    if (nb.empty()) break;
    if (walk.size() == 1) {
      std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
      walk.push_back(nb[pick(rng)]);
      continue;
    }
    const NodeId prev = walk[walk.size() - 2];
    weights.resize(nb.size());
    double total = 0.0;
    for (std::size_t k = 0; k < nb.size(); ++k) {
      double w;
      if (nb[k] == prev)
        w = 1.0 / cfg.return_param;
      else if (g.has_edge(prev, nb[k]))
        w = 1.0;
      else
        w = 1.0 / cfg.inout_param;
      total += w;
      weights[k] = total;
    }
    const double r = unit(rng) * total;
    auto it = std::upper_bound(weights.begin(), weights.end(), r);
    std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - weights.begin()), nb.size() - 1);
    walk.push_back(nb[k]);
  }
  return walk;
}

std::vector<std::pair<NodeId, NodeId>> extract_contexts(std::span<const NodeId> walk, int window) {
  std::vector<std::pair<NodeId, NodeId>> pairs;
  const auto len = static_cast<long>(walk.size());
  for (long t = 0; t < len; ++t) {
    const long lo = std::max(0L, t - window);
    const long hi = std::min(len - 1, t + static_cast<long>(window));
    for (long s = lo; s <= hi; ++s)
      if (s != t && walk[s] != walk[t]) pairs.emplace_back(walk[t], walk[s]);
  }
  return pairs;
}

std::vector<NodeId> sample_negatives(const Graph& g, NodeId center, std::span<const NodeId> contexts,
                                     int k, Rng& rng, bool strict) {
  if (k < 1) throw std::invalid_argument("negative count must be positive");
  const NodeId n = g.node_count();
  std::vector<char> excluded(static_cast<std::size_t>(n), 0);
  auto exclude_with_neighbors = [&](NodeId v) {
    excluded[v] = 1;
    for (NodeId w : g.neighbors(v)) excluded[w] = 1;
  };
  excluded[center] = 1;
  for (NodeId v : g.neighbors(center)) {
    if (strict)
      exclude_with_neighbors(v);
    else
      excluded[v] = 1;
  }
  for (NodeId c : contexts) {
    if (strict)
      exclude_with_neighbors(c);
    else
      excluded[c] = 1;
  }

  const auto blocked = static_cast<NodeId>(std::count(excluded.begin(), excluded.end(), 1));
  if (blocked >= n)
    throw DataError("no valid negatives for node '" + g.name(center) + "'");

  std::vector<NodeId> out;
  out.reserve(static_cast<std::size_t>(k));
  if (blocked * 2 <= n) {
    std::uniform_int_distribution<NodeId> pick(0, n - 1);
    while (static_cast<int>(out.size()) < k) {
      NodeId v = pick(rng);
      if (!excluded[v]) out.push_back(v);
    }
  } else {
    std::vector<NodeId> pool;
    pool.reserve(static_cast<std::size_t>(n - blocked));
    for (NodeId v = 0; v < n; ++v)
      if (!excluded[v]) pool.push_back(v);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    for (int i = 0; i < k; ++i) out.push_back(pool[pick(rng)]);
  }
  return out;
}

Batch make_batch(const Graph& g, std::span<const NodeId> centers, const WalkConfig& cfg, int k,
                 Rng& rng) {
  if (centers.empty()) throw std::invalid_argument("make_batch needs at least one center");
  cfg.validate();
  const std::uint64_t base = rng();

  Batch batch;
  batch.centers.reserve(centers.size());
  for (NodeId u : centers) {
    if (!g.contains(u)) throw std::invalid_argument("center out of range");
    Rng stream = make_stream(base, static_cast<std::uint64_t>(u));

    std::vector<NodeId> contexts;
    for (int w = 0; w < cfg.walks_per_center; ++w) {
      auto walk = biased_walk(g, u, cfg, stream);
      for (auto [a, b] : extract_contexts(walk, cfg.window))
        if (a == u && std::find(contexts.begin(), contexts.end(), b) == contexts.end())
          contexts.push_back(b);
    }

    std::vector<NodeId> negatives;
    try {
      negatives = sample_negatives(g, u, contexts, k, stream, cfg.strict_negatives);
    } catch (const DataError&) {
      batch.dropped.push_back(u);
      continue;
    }
    batch.centers.push_back(u);
    batch.contexts.push_back(std::move(contexts));
    batch.negatives.push_back(std::move(negatives));
  }
  return batch;
}

void dump_batch(const Graph& g, const Batch& batch, std::ostream& out) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out << g.name(batch.centers[i]) << " |";
    for (NodeId c : batch.contexts[i]) out << ' ' << g.name(c);
    out << " |";
    for (NodeId c : batch.negatives[i]) out << ' ' << g.name(c);
    out << '\n';
  }
}

}  // namespace mfgcn
