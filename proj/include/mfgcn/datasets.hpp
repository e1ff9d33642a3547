#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "mfgcn/graph.hpp"

namespace mfgcn {

/// Where a dataset lives on disk.
///
/// Built-in names resolve under the data directory:
///   cora, citeseer, pubmed  ->  <dir>/<name>/<name>.content + <name>.cites
///   wiki                    ->  <dir>/wiki/edges.txt, attrs.txt, labels.txt
/// Any other value is treated as a directory holding either one
/// *.content/*.cites pair or edges.txt (+ attrs.txt, labels.txt).
struct DatasetSource {
  std::string name;
  std::optional<std::filesystem::path> content, cites;
  std::optional<std::filesystem::path> edges, attrs, labels;
};

/// $MFGCN_DATA_DIR, else "data".
std::filesystem::path default_data_dir();

DatasetSource resolve_dataset(const std::string& name, const std::filesystem::path& data_dir);

/// Throws DataError naming the first missing path.
Graph load_dataset(const DatasetSource& src, LoadStats* stats = nullptr);

/// True when every file the source names exists.
bool dataset_available(const DatasetSource& src);

}  // namespace mfgcn
