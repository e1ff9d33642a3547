#include "mfgcn/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <set>

#include "text.hpp"

namespace mfgcn {

namespace {

using Triplet = Eigen::Triplet<double>;

Labels make_labels(const std::vector<std::string>& tokens) {
  Labels out;
  out.class_names = tokens;
  std::sort(out.class_names.begin(), out.class_names.end());
  out.class_names.erase(std::unique(out.class_names.begin(), out.class_names.end()),
                        out.class_names.end());
  out.index.reserve(tokens.size());
  for (const auto& t : tokens) {
    auto it = std::lower_bound(out.class_names.begin(), out.class_names.end(), t);
    out.index.push_back(static_cast<int>(it - out.class_names.begin()));
  }
  return out;
}

// Reads "a b" lines into name pairs. Blank lines are skipped.
std::vector<std::pair<std::string, std::string>> read_pairs(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = detail::split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 2)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected two node ids");
    pairs.emplace_back(std::string(tok[0]), std::string(tok[1]));
  }
  return pairs;
}

std::vector<Edge> resolve_edges(const std::vector<std::pair<std::string, std::string>>& pairs,
                                const std::unordered_map<std::string, NodeId>& index,
                                LoadStats* stats) {
  std::vector<Edge> edges;
  std::set<Edge> seen;
  LoadStats local;
  local.edge_lines = pairs.size();
  for (const auto& [a, b] : pairs) {
    auto ia = index.find(a);
    auto ib = index.find(b);
    if (ia == index.end() || ib == index.end()) {
      ++local.dropped_edges;
      continue;
    }
    if (ia->second == ib->second) {
      ++local.self_edges;
      continue;
    }
    Edge e = ordered(ia->second, ib->second);
    if (!seen.insert(e).second) {
      ++local.duplicate_edges;
      continue;
    }
    edges.push_back(e);
  }
  if (stats) *stats = local;
  return edges;
}

}  // namespace

Graph::Graph(std::vector<std::string> names, std::span<const Edge> edges,
             AttributeMatrix attributes, std::optional<Labels> labels)
    : names_(std::move(names)), attributes_(std::move(attributes)), labels_(std::move(labels)) {
  const auto n = static_cast<NodeId>(names_.size());
  index_.reserve(names_.size());
  for (NodeId i = 0; i < n; ++i) {
    if (!index_.emplace(names_[i], i).second)
      throw DataError("node id collision: '" + names_[i] + "'");
  }
  if (attributes_.rows() != n)
    throw DataError("attribute rows (" + std::to_string(attributes_.rows()) +
                    ") do not match node count (" + std::to_string(n) + ")");
  attributes_.makeCompressed();
  for (Eigen::Index k = 0; k < attributes_.nonZeros(); ++k) {
    double v = attributes_.valuePtr()[k];
    if (!std::isfinite(v) || v < 0.0) throw DataError("attributes must be finite and non-negative");
  }
  if (labels_) {
    if (static_cast<NodeId>(labels_->index.size()) != n)
      throw DataError("label count does not match node count");
    const int m = static_cast<int>(labels_->class_names.size());
    for (int c : labels_->index)
      if (c < 0 || c >= m) throw DataError("label index out of range");
  }

  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (auto [a, b] : edges) {
    if (!contains(a) || !contains(b)) throw DataError("edge endpoint out of range");
    if (a == b) continue;
    directed.emplace_back(a, b);
    directed.emplace_back(b, a);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  adjacency_.reserve(directed.size());
  for (auto [a, b] : directed) {
    ++offsets_[a + 1];
    adjacency_.push_back(b);
  }
  std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

bool Graph::has_edge(NodeId i, NodeId j) const {
  auto nb = neighbors(i);
  return std::binary_search(nb.begin(), nb.end(), j);
}

std::span<const int> Graph::labels() const {
  if (!labels_) throw DataError("graph has no labels");
  return labels_->index;
}

const std::vector<std::string>& Graph::class_names() const {
  if (!labels_) throw DataError("graph has no labels");
  return labels_->class_names;
}

std::optional<NodeId> Graph::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (NodeId i = 0; i < node_count(); ++i)
    for (NodeId j : neighbors(i))
      if (i < j) out.emplace_back(i, j);
  return out;
}

Graph Graph::with_edges(std::span<const Edge> edges) const {
  return Graph(names_, edges, attributes_, labels_);
}

Eigen::SparseMatrix<double, Eigen::RowMajor> Graph::normalized_adjacency() const {
  const NodeId n = node_count();
  std::vector<Triplet> t;
  t.reserve(adjacency_.size() + static_cast<std::size_t>(n));
  for (NodeId i = 0; i < n; ++i) {
    t.emplace_back(i, i, 1.0 / degree(i));
    for (NodeId j : neighbors(i))
      t.emplace_back(i, j, 1.0 / std::sqrt(static_cast<double>(degree(i)) * degree(j)));
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

bool operator==(const Graph& a, const Graph& b) {
  if (a.names_ != b.names_ || a.offsets_ != b.offsets_ || a.adjacency_ != b.adjacency_)
    return false;
  if (a.attributes_.rows() != b.attributes_.rows() || a.attributes_.cols() != b.attributes_.cols())
    return false;
  if ((a.attributes_ - b.attributes_).squaredNorm() != 0.0) return false;
  if (a.labels_.has_value() != b.labels_.has_value()) return false;
  if (a.labels_ &&
      (a.labels_->index != b.labels_->index || a.labels_->class_names != b.labels_->class_names))
    return false;
  return true;
}

double norm_coefficient(const Graph& g, NodeId i, NodeId j) {
  if (!g.contains(i) || !g.contains(j) || (i != j && !g.has_edge(i, j)))
    throw std::invalid_argument("norm_coefficient: nodes " + std::to_string(i) + " and " +
                                std::to_string(j) + " are not adjacent");
  return 1.0 / std::sqrt(static_cast<double>(g.degree(i)) * g.degree(j));
}

std::vector<NodeId> connected_components(const Graph& g) {
  std::vector<NodeId> comp(static_cast<std::size_t>(g.node_count()), -1);
  NodeId next = 0;
  std::deque<NodeId> queue;
  for (NodeId s = 0; s < g.node_count(); ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    queue.push_back(s);
    while (!queue.empty()) {
      NodeId u = queue.front();
      queue.pop_front();
      for (NodeId v : g.neighbors(u))
        if (comp[v] < 0) {
          comp[v] = next;
          queue.push_back(v);
        }
    }
    ++next;
  }
  return comp;
}

// ---------------------------------------------------------------------------

Graph load_content_cites(const std::filesystem::path& content_path,
                         const std::filesystem::path& cites_path, LoadStats* stats) {
  auto in = detail::open_input(content_path);
  std::vector<std::string> names;
  std::vector<std::string> label_tokens;
  std::vector<Triplet> triplets;
  long dim = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    const auto where = content_path.string() + ":" + std::to_string(lineno);
    if (tok.size() < 3) throw DataError(where + ": expected id, attributes and label");
    const long c = static_cast<long>(tok.size()) - 2;
    if (dim < 0) dim = c;
    if (c != dim)
      throw DataError(where + ": inconsistent attribute dimension " + std::to_string(c) +
                      " (expected " + std::to_string(dim) + ")");
    const auto row = static_cast<int>(names.size());
    for (long k = 0; k < c; ++k) {
      auto v = detail::parse_double(tok[static_cast<std::size_t>(k) + 1]);
      if (!v) throw DataError(where + ": non-numeric attribute '" + std::string(tok[k + 1]) + "'");
      if (*v != 0.0) triplets.emplace_back(row, static_cast<int>(k), *v);
    }
    names.emplace_back(tok.front());
    label_tokens.emplace_back(tok.back());
  }
  if (names.empty()) throw DataError("empty content file: " + content_path.string());

  AttributeMatrix x(static_cast<Eigen::Index>(names.size()), dim);
  x.setFromTriplets(triplets.begin(), triplets.end());

  std::unordered_map<std::string, NodeId> index;
  for (NodeId i = 0; i < static_cast<NodeId>(names.size()); ++i)
    if (!index.emplace(names[i], i).second)
      throw DataError("node id collision: '" + names[i] + "'");

  auto edges = resolve_edges(read_pairs(cites_path), index, stats);
  return Graph(std::move(names), edges, std::move(x), make_labels(label_tokens));
}

Graph load_edge_list(const std::filesystem::path& edges_path,
                     const std::optional<std::filesystem::path>& attrs_path,
                     const std::optional<std::filesystem::path>& labels_path, LoadStats* stats) {
  auto pairs = read_pairs(edges_path);
  std::vector<std::string> names;
  std::unordered_map<std::string, NodeId> index;
  auto add = [&](const std::string& name) {
    if (index.emplace(name, static_cast<NodeId>(names.size())).second) names.push_back(name);
  };

  AttributeMatrix x;
  if (attrs_path) {
    auto in = detail::open_input(*attrs_path);
    std::vector<Triplet> triplets;
    long dim = -1;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto tok = detail::split_ws(line);
      if (tok.empty()) continue;
      const auto where = attrs_path->string() + ":" + std::to_string(lineno);
      const long c = static_cast<long>(tok.size()) - 1;
      if (c < 1) throw DataError(where + ": expected id and attribute values");
      if (dim < 0) dim = c;
      if (c != dim)
        throw DataError(where + ": inconsistent attribute dimension " + std::to_string(c) +
                        " (expected " + std::to_string(dim) + ")");
      std::string name(tok[0]);
      if (index.count(name)) throw DataError(where + ": node id collision: '" + name + "'");
      const auto row = static_cast<int>(names.size());
      add(name);
      for (long k = 0; k < c; ++k) {
        auto v = detail::parse_double(tok[static_cast<std::size_t>(k) + 1]);
        if (!v)
          throw DataError(where + ": non-numeric attribute '" + std::string(tok[k + 1]) + "'");
        if (*v != 0.0) triplets.emplace_back(row, static_cast<int>(k), *v);
      }
    }
    if (names.empty()) throw DataError("empty attribute file: " + attrs_path->string());
    for (const auto& [a, b] : pairs)
      for (const auto* id : {&a, &b})
        if (!index.count(*id))
          throw DataError("node '" + *id + "' in " + edges_path.string() +
                          " is missing from the attribute file");
    x.resize(static_cast<Eigen::Index>(names.size()), dim);
    x.setFromTriplets(triplets.begin(), triplets.end());
  } else {
    for (const auto& [a, b] : pairs) {
      add(a);
      add(b);
    }
    if (names.empty()) throw DataError("empty edge file: " + edges_path.string());
    x.resize(static_cast<Eigen::Index>(names.size()), 1);
  }

  std::optional<Labels> labels;
  if (labels_path) {
    auto in = detail::open_input(*labels_path);
    std::vector<std::string> tokens(names.size());
    std::vector<bool> seen(names.size(), false);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto tok = detail::split_ws(line);
      if (tok.empty()) continue;
      const auto where = labels_path->string() + ":" + std::to_string(lineno);
      if (tok.size() != 2) throw DataError(where + ": expected id and class token");
      auto it = index.find(std::string(tok[0]));
      if (it == index.end())
        throw DataError(where + ": dangling label id '" + std::string(tok[0]) + "'");
      if (seen[it->second])
        throw DataError(where + ": duplicate label for '" + std::string(tok[0]) + "'");
      seen[it->second] = true;
      tokens[it->second] = std::string(tok[1]);
    }
    for (std::size_t i = 0; i < names.size(); ++i)
      if (!seen[i])
        throw DataError("dangling label id: node '" + names[i] + "' has no entry in " +
                        labels_path->string());
    labels = make_labels(tokens);
  }

  auto edges = resolve_edges(pairs, index, stats);
  return Graph(std::move(names), edges, std::move(x), std::move(labels));
}

void save_edge_list(const Graph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = detail::open_output(dir / "edges.txt");
    for (auto [i, j] : g.edges()) out << g.name(i) << ' ' << g.name(j) << '\n';
  }
  {
    auto out = detail::open_output(dir / "attrs.txt");
    const Eigen::Index c = g.attribute_dim();
    std::vector<double> row(static_cast<std::size_t>(c));
    for (NodeId i = 0; i < g.node_count(); ++i) {
      std::fill(row.begin(), row.end(), 0.0);
      for (AttributeMatrix::InnerIterator it(g.attributes(), i); it; ++it) row[it.col()] = it.value();
      out << g.name(i);
      for (double v : row) out << ' ' << detail::format_double(v);
      out << '\n';
    }
  }
  if (g.has_labels()) {
    auto out = detail::open_output(dir / "labels.txt");
    for (NodeId i = 0; i < g.node_count(); ++i)
      out << g.name(i) << ' ' << g.class_names()[g.labels()[i]] << '\n';
  }
}

// ---------------------------------------------------------------------------

std::vector<Edge> uniform_spanning_forest(const Graph& g, Rng& rng) {
  const NodeId n = g.node_count();
  std::vector<NodeId> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const auto comp = connected_components(g);
  std::vector<char> in_tree(order.size(), 0);
  std::vector<char> rooted(order.size(), 0);
  for (NodeId u : order)
    if (!rooted[comp[u]]) {
      rooted[comp[u]] = 1;
      in_tree[u] = 1;
    }

  // Wilson: loop-erased random walks into the growing tree.
  std::vector<NodeId> next(order.size(), -1);
  std::vector<Edge> forest;
  forest.reserve(order.size());
  for (NodeId start : order) {
    for (NodeId cur = start; !in_tree[cur]; cur = next[cur]) {
      auto nb = g.neighbors(cur);
      std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
      next[cur] = nb[pick(rng)];
    }
    for (NodeId cur = start; !in_tree[cur]; cur = next[cur]) {
      in_tree[cur] = 1;
      forest.push_back(ordered(cur, next[cur]));
    }
  }
  std::sort(forest.begin(), forest.end());
  return forest;
}

EdgeSplit split_edges_connected(const Graph& g, double removal_fraction, Rng& rng) {
  if (!(removal_fraction > 0.0 && removal_fraction < 1.0))
    throw std::invalid_argument("removal fraction must lie in (0, 1)");

  EdgeSplit split;
  split.fraction = removal_fraction;

  const auto all = g.edges();
  const auto forest = uniform_spanning_forest(g, rng);
  std::vector<Edge> removable;
  std::set_difference(all.begin(), all.end(), forest.begin(), forest.end(),
                      std::back_inserter(removable));

  const auto target =
      static_cast<std::size_t>(std::floor(removal_fraction * static_cast<double>(all.size())));
  const std::size_t take = std::min(target, removable.size());
  split.shortfall = target - take;
  for (std::size_t k = 0; k < take; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, removable.size() - 1);
    std::swap(removable[k], removable[pick(rng)]);
  }
  split.removed_edges.assign(removable.begin(), removable.begin() + static_cast<long>(take));
  std::sort(split.removed_edges.begin(), split.removed_edges.end());

  std::vector<Edge> retained;
  std::set_difference(all.begin(), all.end(), split.removed_edges.begin(),
                      split.removed_edges.end(), std::back_inserter(retained));
  split.train_graph = g.with_edges(retained);

  // Non-edges of the original graph, distinct, uniform.
  const auto n = static_cast<std::uint64_t>(g.node_count());
  const std::uint64_t available = n * (n - 1) / 2 - all.size();
  std::size_t wanted = take;
  if (wanted > available) {
    split.negative_shortfall = wanted - available;
    wanted = available;
  }
  if (wanted * 2 > available) {
    std::vector<Edge> pool;
    for (NodeId i = 0; i < g.node_count(); ++i)
      for (NodeId j = i + 1; j < g.node_count(); ++j)
        if (!g.has_edge(i, j)) pool.emplace_back(i, j);
    for (std::size_t k = 0; k < wanted; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(rng)]);
    }
    split.negative_edges.assign(pool.begin(), pool.begin() + static_cast<long>(wanted));
  } else {
    std::set<Edge> chosen;
    std::uniform_int_distribution<NodeId> pick(0, g.node_count() - 1);
    while (split.negative_edges.size() < wanted) {
      NodeId a = pick(rng);
      NodeId b = pick(rng);
      if (a == b || g.has_edge(a, b)) continue;
      Edge e = ordered(a, b);
      if (chosen.insert(e).second) split.negative_edges.push_back(e);
    }
  }
  return split;
}

namespace {

void write_pairs(const Graph& g, const std::filesystem::path& path, const std::vector<Edge>& edges,
                 const EdgeSplit& split) {
  auto out = detail::open_output(path);
  out << "# seed=" << split.seed << " fraction=" << detail::format_double(split.fraction) << '\n';
  for (auto [i, j] : edges) out << g.name(i) << ' ' << g.name(j) << '\n';
}

std::vector<Edge> read_split_pairs(const Graph& g, const std::filesystem::path& path,
                                   std::string* header) {
  auto in = detail::open_input(path);
  std::vector<Edge> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind('#', 0) == 0) {
      if (header) *header = line;
      continue;
    }
    auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 2) throw DataError(path.string() + ": expected two node ids per line");
    auto a = g.find(tok[0]);
    auto b = g.find(tok[1]);
    if (!a || !b) throw DataError(path.string() + ": unknown node id");
    out.push_back(ordered(*a, *b));
  }
  return out;
}

}  // namespace

void save_edge_split(const EdgeSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const Graph& g = split.train_graph;
  write_pairs(g, dir / "train_edges.txt", g.edges(), split);
  write_pairs(g, dir / "test_positive.txt", split.removed_edges, split);
  write_pairs(g, dir / "test_negative.txt", split.negative_edges, split);
}

EdgeSplit load_edge_split(const Graph& original, const std::filesystem::path& dir) {
  EdgeSplit split;
  std::string header;
  auto train = read_split_pairs(original, dir / "train_edges.txt", &header);
  split.removed_edges = read_split_pairs(original, dir / "test_positive.txt", nullptr);
  split.negative_edges = read_split_pairs(original, dir / "test_negative.txt", nullptr);
  split.train_graph = original.with_edges(train);
  for (auto tok : detail::split_ws(header)) {
    if (tok.rfind("seed=", 0) == 0) split.seed = std::stoull(std::string(tok.substr(5)));
    if (tok.rfind("fraction=", 0) == 0)
      split.fraction = detail::parse_double(tok.substr(9)).value_or(0.0);
  }
  return split;
}

}  // namespace mfgcn
