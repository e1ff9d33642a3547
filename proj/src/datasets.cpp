#include "mfgcn/datasets.hpp"

#include <cstdlib>

namespace mfgcn {

namespace fs = std::filesystem;

fs::path default_data_dir() {
  if (const char* env = std::getenv("MFGCN_DATA_DIR"); env && *env) return env;
  return "data";
}

DatasetSource resolve_dataset(const std::string& name, const fs::path& data_dir) {
  DatasetSource src;
  src.name = name;
  if (name == "cora" || name == "citeseer" || name == "pubmed") {
    src.content = data_dir / name / (name + ".content");
    src.cites = data_dir / name / (name + ".cites");
    return src;
  }
  fs::path dir = name == "wiki" ? data_dir / "wiki" : fs::path(name);
  if (name != "wiki") src.name = dir.filename().string();
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".content") {
        src.content = entry.path();
        src.cites = fs::path(entry.path()).replace_extension(".cites");
        return src;
      }
    }
  }
  src.edges = dir / "edges.txt";
  if (fs::exists(dir / "attrs.txt")) src.attrs = dir / "attrs.txt";
  if (fs::exists(dir / "labels.txt")) src.labels = dir / "labels.txt";
  return src;
}

bool dataset_available(const DatasetSource& src) {
  for (const auto* p : {&src.content, &src.cites, &src.edges, &src.attrs, &src.labels})
    if (*p && !fs::exists(**p)) return false;
  return src.content.has_value() || src.edges.has_value();
}

Graph load_dataset(const DatasetSource& src, LoadStats* stats) {
  for (const auto* p : {&src.content, &src.cites, &src.edges, &src.attrs, &src.labels})
    if (*p && !fs::exists(**p)) throw DataError("dataset file not found: " + (*p)->string());
  if (src.content) return load_content_cites(*src.content, *src.cites, stats);
  if (src.edges) return load_edge_list(*src.edges, src.attrs, src.labels, stats);
  throw DataError("dataset '" + src.name + "' has no files");
}

}  // namespace mfgcn
