#pragma once

#include "lovm/assets.hpp"
#include "lovm/gap_bridge.hpp"
#include "lovm/text_scores.hpp"
#include "lovm/transport.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lovm {

namespace fs = std::filesystem;

/// One-line JSON header of a SWAB-MAT v1 file.
struct MatHeader {
  Index rows = 0;
  Index cols = 0;
  std::string role;
  std::string dataset_id;
  std::optional<std::string> model_id;
  std::optional<Index> class_index;
  std::optional<std::string> level;
};

struct MatFile {
  MatHeader header;
  Matrix values;
  bool csv = false;  // read through the CSV fallback
};

/// Header rows/cols are taken from `values`. Payload is little-endian f32.
void write_swab_mat(const fs::path& path, const Matrix& values, MatHeader header);
MatFile read_swab_mat(const fs::path& path);

/// Header row c0..c{n-1}; values printed with enough digits for exact f32 round trips.
void write_csv_matrix(const fs::path& path, const Matrix& values);
Matrix read_csv_matrix(const fs::path& path);

/// Dispatches on the extension: ".csv" uses the fallback, anything else SWAB-MAT.
MatFile read_matrix(const fs::path& path);

enum class MatrixFormat { swab_mat, csv };

/// Directory with manifest.json plus one matrix file per role (and per class
/// for captions, synonyms and images).
void write_bundle(const fs::path& dir, const AssetBundle& bundle, MatrixFormat format = MatrixFormat::swab_mat);

struct LoadedBundle {
  AssetBundle bundle;
  std::vector<std::string> formats;  // distinct matrix formats encountered
};
LoadedBundle read_bundle(const fs::path& dir);

/// Universe directory: universe.json (dataset order, model zoo) plus one
/// bundle subdirectory per dataset.
void write_universe(const fs::path& dir, std::span<const AssetBundle> bundles, const ModelZoo& zoo,
                    MatrixFormat format = MatrixFormat::swab_mat);

struct LoadedUniverse {
  std::vector<AssetBundle> bundles;
  ModelZoo zoo;
  std::vector<std::string> formats;
};
LoadedUniverse read_universe(const fs::path& dir);

/// SWAB-MAT with role transport_plan and a `<path>.json` sidecar.
void write_plan(const fs::path& path, const TransportPlan& plan, const std::string& dataset_id);
void write_gap_table(const fs::path& path, const GapTable& table, const std::string& dataset_id);

/// model_id, dataset_id, the seven features and provenance columns.
std::string score_table_csv(std::span<const ScoreVector> scores);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, const std::string& text);

}  // namespace lovm
