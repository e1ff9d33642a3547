#include "mfgcn/synthetic.hpp"

#include <set>

namespace mfgcn {

Graph planted_partition(const PlantedPartitionConfig& cfg) {
  if (cfg.nodes < 2 || cfg.classes < 1 || cfg.vocabulary < cfg.classes || cfg.words_per_node < 1)
    throw std::invalid_argument("planted_partition: bad configuration");
  Rng rng(cfg.seed);
  const NodeId n = cfg.nodes;
  std::vector<std::string> names;
  std::vector<int> cls(static_cast<std::size_t>(n));
  std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(cfg.classes));
  for (NodeId v = 0; v < n; ++v) {
    names.push_back("n" + std::to_string(v));
    cls[v] = v % cfg.classes;
    members[cls[v]].push_back(v);
  }

  std::uniform_int_distribution<NodeId> any(0, n - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto target = static_cast<std::size_t>(cfg.average_degree * n / 2.0);
  std::set<Edge> edges;
  while (edges.size() < target) {
    const NodeId u = any(rng);
    NodeId v;
    if (unit(rng) < cfg.homophily) {
      const auto& same = members[cls[u]];
      std::uniform_int_distribution<std::size_t> pick(0, same.size() - 1);
      v = same[pick(rng)];
    } else {
      v = any(rng);
    }
    if (u != v) edges.insert(ordered(u, v));
  }

  const int block = cfg.vocabulary / cfg.classes;
  std::vector<Eigen::Triplet<double>> triplets;
  std::uniform_int_distribution<int> word(0, cfg.vocabulary - 1);
  std::uniform_int_distribution<int> in_block(0, block - 1);
  for (NodeId v = 0; v < n; ++v) {
    std::set<int> words;
    while (static_cast<int>(words.size()) < std::min(cfg.words_per_node, cfg.vocabulary))
      words.insert(unit(rng) < cfg.topic_purity ? cls[v] * block + in_block(rng) : word(rng));
    for (int w : words) triplets.emplace_back(v, w, 1.0);
  }
  AttributeMatrix x(n, cfg.vocabulary);
  x.setFromTriplets(triplets.begin(), triplets.end());

  Labels labels;
  for (int c = 0; c < cfg.classes; ++c) labels.class_names.push_back("c" + std::to_string(c));
  std::sort(labels.class_names.begin(), labels.class_names.end());
  for (NodeId v = 0; v < n; ++v) {
    const auto name = "c" + std::to_string(cls[v]);
    labels.index.push_back(static_cast<int>(
        std::lower_bound(labels.class_names.begin(), labels.class_names.end(), name) -
        labels.class_names.begin()));
  }
  std::vector<Edge> edge_list(edges.begin(), edges.end());
  return Graph(std::move(names), edge_list, std::move(x), std::move(labels));
}

}  // namespace mfgcn
