#pragma once

#include "mfgcn/graph.hpp"

namespace mfgcn {

/// Planted-partition citation-like graph: nodes split evenly into classes,
/// edges mostly within a class, binary bag-of-words attributes drawn mostly
/// from a per-class block of the vocabulary.
struct PlantedPartitionConfig {
  int nodes = 300;
  int classes = 3;
  double average_degree = 4.0;
  double homophily = 0.85;  // fraction of edges inside a class
  int vocabulary = 120;
  int words_per_node = 8;
  double topic_purity = 0.6;  // chance a word comes from the node's class block
  std::uint64_t seed = 1;
};

Graph planted_partition(const PlantedPartitionConfig& cfg);

}  // namespace mfgcn
