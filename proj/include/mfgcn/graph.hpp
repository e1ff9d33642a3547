#pragma once

#include <Eigen/SparseCore>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mfgcn/common.hpp"

namespace mfgcn {

using AttributeMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Labels {
  std::vector<int> index;                // per node, in [0, class_names.size())
  std::vector<std::string> class_names;  // sorted lexicographically
};

/// Immutable attributed undirected graph.
///
/// Neighbor lists are sorted and never contain the node itself; every node
/// carries an implicit self-loop, so degree(i) == neighbors(i).size() + 1.
/// Node names are the on-disk id tokens, mapped to dense indices in order of
/// first appearance.
class Graph {
 public:
  Graph() = default;

  /// Builds from an arbitrary edge list. Reversed duplicates, repeated edges
  /// and self pairs are folded away. Throws DataError on bad shapes or ids.
  Graph(std::vector<std::string> names, std::span<const Edge> edges, AttributeMatrix attributes,
        std::optional<Labels> labels = std::nullopt);

  NodeId node_count() const { return static_cast<NodeId>(names_.size()); }
  std::size_t edge_count() const { return adjacency_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {adjacency_.data() + offsets_[i], adjacency_.data() + offsets_[i + 1]};
  }
  int degree(NodeId i) const { return static_cast<int>(offsets_[i + 1] - offsets_[i]) + 1; }
  bool has_edge(NodeId i, NodeId j) const;
  bool contains(NodeId i) const { return i >= 0 && i < node_count(); }

  const AttributeMatrix& attributes() const { return attributes_; }
  Eigen::Index attribute_dim() const { return attributes_.cols(); }

  bool has_labels() const { return labels_.has_value(); }
  std::span<const int> labels() const;
  int num_classes() const { return labels_ ? static_cast<int>(labels_->class_names.size()) : 0; }
  const std::vector<std::string>& class_names() const;
  const std::optional<Labels>& label_set() const { return labels_; }

  const std::vector<std::string>& node_names() const { return names_; }
  const std::string& name(NodeId i) const { return names_[i]; }
  std::optional<NodeId> find(std::string_view name) const;

  /// Undirected edges as (i, j) with i < j, lexicographically sorted.
  std::vector<Edge> edges() const;

  /// Same nodes, attributes and labels over a different edge set.
  Graph with_edges(std::span<const Edge> edges) const;

  /// D^{-1/2} (A + I) D^{-1/2} as a sparse N x N matrix.
  Eigen::SparseMatrix<double, Eigen::RowMajor> normalized_adjacency() const;

  friend bool operator==(const Graph& a, const Graph& b);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adjacency_;
  AttributeMatrix attributes_;
  std::optional<Labels> labels_;
};

/// 1 / sqrt(D(i,i) D(j,j)); requires j in N(i) or j == i.
double norm_coefficient(const Graph& g, NodeId i, NodeId j);

/// Connected component index per node (breadth-first).
std::vector<NodeId> connected_components(const Graph& g);

// ---------------------------------------------------------------------------
// Loaders

struct LoadStats {
  std::size_t edge_lines = 0;
  std::size_t dropped_edges = 0;    // endpoint missing from the node set
  std::size_t duplicate_edges = 0;  // repeated or reversed lines
  std::size_t self_edges = 0;
};

/// Citation layout: "<id> <v1> ... <vC> <label>" per content line and
/// "<id> <id>" per cites line.
Graph load_content_cites(const std::filesystem::path& content_path,
                         const std::filesystem::path& cites_path, LoadStats* stats = nullptr);

/// Edge list plus optional "id v1 .. vC" attribute and "id class" label files.
/// Without an attribute file every node gets a one-column zero vector.
Graph load_edge_list(const std::filesystem::path& edges_path,
                     const std::optional<std::filesystem::path>& attrs_path = std::nullopt,
                     const std::optional<std::filesystem::path>& labels_path = std::nullopt,
                     LoadStats* stats = nullptr);

/// Writes edges.txt, attrs.txt and (when labelled) labels.txt into `dir`.
void save_edge_list(const Graph& g, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Link-prediction split

struct EdgeSplit {
  Graph train_graph;
  std::vector<Edge> removed_edges;   // positive test pairs
  std::vector<Edge> negative_edges;  // pairs absent from the original graph
  std::uint64_t seed = 0;
  double fraction = 0.0;
  std::size_t shortfall = 0;           // requested removals that were bridges
  std::size_t negative_shortfall = 0;  // graph too dense for enough non-edges
};

/// Uniform spanning forest (Wilson's algorithm) edges, i < j.
std::vector<Edge> uniform_spanning_forest(const Graph& g, Rng& rng);

/// Removes floor(fraction * |E|) non-forest edges, keeping every component
/// connected, and draws the same number of distinct non-edges of the
/// original graph.
EdgeSplit split_edges_connected(const Graph& g, double removal_fraction, Rng& rng);

/// train_edges.txt, test_positive.txt and test_negative.txt, each headed by
/// "# seed=<s> fraction=<f>".
void save_edge_split(const EdgeSplit& split, const std::filesystem::path& dir);
EdgeSplit load_edge_split(const Graph& original, const std::filesystem::path& dir);

}  // namespace mfgcn
