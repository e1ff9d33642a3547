#include "mfgcn/model.hpp"

#include <fstream>
#include <sstream>

#include "text.hpp"

namespace mfgcn {

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (num_filters < 1 || filter_dim < 1 || embed_dim < 1 || input_dim < 1)
    throw std::invalid_argument("model dimensions must all be at least 1");
  if (depth != 1)
    throw std::invalid_argument("depth " + std::to_string(depth) +
                                " is not supported; only single-layer (K=1) models are built");
  if (num_classes < 0) throw std::invalid_argument("num_classes must be non-negative");
}

namespace {

const char* kMagic = "mfgcn-checkpoint 1";

void write_block(std::ostream& out, const char* name, const auto& m) {
  out << "matrix " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ' ';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = detail::open_output(path);
  const auto& c = ckpt.config;
  out << kMagic << '\n';
  out << "config num_filters " << c.num_filters << '\n';
  out << "config filter_dim " << c.filter_dim << '\n';
  out << "config embed_dim " << c.embed_dim << '\n';
  out << "config input_dim " << c.input_dim << '\n';
  out << "config depth " << c.depth << '\n';
  out << "config aggregator_activation " << to_string(c.aggregator_activation) << '\n';
  out << "config encoder_activation " << to_string(c.encoder_activation) << '\n';
  out << "config num_classes " << c.num_classes << '\n';
  for (const auto& [k, v] : ckpt.meta) out << "meta " << k << ' ' << v << '\n';
  ckpt.params.for_each_block([&out](const char* name, const auto& m) { write_block(out, name, m); });
  out << "end\n";
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  const auto fail = [&path](const std::string& what) {
    return DataError("checkpoint header mismatch in " + path.string() + ": " + what);
  };
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw fail("bad magic line");

  Checkpoint ckpt;
  ModelConfig& c = ckpt.config;
  auto to_int = [&](std::string_view v) {
    auto d = detail::parse_double(v);
    if (!d) throw fail("non-numeric config value '" + std::string(v) + "'");
    return static_cast<int>(*d);
  };
  while (std::getline(in, line)) {
    auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "matrix") break;
    if (tok[0] == "meta" && tok.size() >= 2) {
      const auto rest = line.find(tok[1]) + tok[1].size();
      std::string value = rest < line.size() ? line.substr(rest + 1) : "";
      ckpt.meta[std::string(tok[1])] = value;
      continue;
    }
    if (tok[0] != "config" || tok.size() != 3) throw fail("unexpected line '" + line + "'");
    const auto key = tok[1];
    const auto value = tok[2];
    if (key == "num_filters") c.num_filters = to_int(value);
    else if (key == "filter_dim") c.filter_dim = to_int(value);
    else if (key == "embed_dim") c.embed_dim = to_int(value);
    else if (key == "input_dim") c.input_dim = to_int(value);
    else if (key == "depth") c.depth = to_int(value);
    else if (key == "aggregator_activation") c.aggregator_activation = parse_activation(value);
    else if (key == "encoder_activation") c.encoder_activation = parse_activation(value);
    else if (key == "num_classes") c.num_classes = to_int(value);
    else throw fail("unknown config key '" + std::string(key) + "'");
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw fail(e.what());
  }

  ckpt.params = ModelParams<double>::zeros(c);
  bool first = true;
  ckpt.params.for_each_block([&](const char* name, auto& m) {
    if (!first && !std::getline(in, line)) throw fail("truncated before block " + std::string(name));
    first = false;
    auto tok = detail::split_ws(line);
    if (tok.size() != 4 || tok[0] != "matrix" || tok[1] != name ||
        to_int(tok[2]) != m.rows() || to_int(tok[3]) != m.cols())
      throw fail("expected block '" + std::string(name) + "' of shape " +
                 std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", found '" + line +
                 "'");
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::getline(in, line)) throw fail("truncated block " + std::string(name));
      auto vals = detail::split_ws(line);
      if (static_cast<Eigen::Index>(vals.size()) != m.cols())
        throw fail("row width mismatch in block " + std::string(name));
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        auto v = detail::parse_double(vals[static_cast<std::size_t>(j)]);
        if (!v) throw fail("non-numeric value in block " + std::string(name));
        m(i, j) = *v;
      }
    }
  });
  if (!std::getline(in, line) || line != "end") throw fail("missing end marker");
  return ckpt;
}

void write_embeddings(const std::filesystem::path& path, const Graph& g,
                      std::span<const NodeId> nodes, const Matrix<double>& z) {
  if (static_cast<Eigen::Index>(nodes.size()) != z.rows())
    throw std::invalid_argument("write_embeddings: row count mismatch");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto out = detail::open_output(path);
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    out << g.name(nodes[r]);
    for (Eigen::Index j = 0; j < z.cols(); ++j)
      out << ' ' << detail::format_double(z(static_cast<Eigen::Index>(r), j));
    out << '\n';
  }
}

}  // namespace mfgcn
