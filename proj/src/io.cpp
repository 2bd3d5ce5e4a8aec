#include "lovm/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace lovm {

namespace {

using nlohmann::json;

constexpr const char* kMagic = "SWAB-MAT";

std::uint32_t swap_bytes(std::uint32_t x) {
  return (x >> 24) | ((x >> 8) & 0xff00u) | ((x << 8) & 0xff0000u) | (x << 24);
}

std::uint32_t to_little(std::uint32_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  return swap_bytes(x);
}

Error io_error(const fs::path& path, const std::string& what) {
  return Error(ErrorKind::io, path.string() + ": " + what);
}

Error format_error(const fs::path& path, const std::string& what) {
  return Error(ErrorKind::validation, path.string() + ": " + what);
}

std::string float_text(double x) {
  std::ostringstream os;
  os << std::setprecision(9) << static_cast<float>(x);
  return os.str();
}

const char* extension(MatrixFormat f) { return f == MatrixFormat::csv ? ".csv" : ".swab"; }

void write_matrix(const fs::path& path, const Matrix& values, MatHeader header, MatrixFormat format) {
  if (format == MatrixFormat::csv) {
    write_csv_matrix(path, values);
  } else {
    write_swab_mat(path, values, std::move(header));
  }
}

struct Reader {
  fs::path dir;
  std::set<std::string> formats;

  Matrix load(const json& entry, const std::string& role) {
    if (!entry.is_string()) throw format_error(dir / "manifest.json", "entry for " + role + " is not a path");
    const fs::path path = dir / entry.get<std::string>();
    MatFile f = read_matrix(path);
    if (f.csv) {
      formats.insert("csv");
    } else {
      formats.insert("swab-mat");
      if (f.header.role != role) {
        throw format_error(path, "role '" + f.header.role + "' where '" + role + "' was expected");
      }
    }
    return std::move(f.values);
  }

  std::vector<Matrix> load_list(const json& entry, const std::string& role) {
    std::vector<Matrix> out;
    if (!entry.is_array()) throw format_error(dir / "manifest.json", role + " must be a list of paths");
    for (const auto& e : entry) out.push_back(load(e, role));
    return out;
  }
};

}  // namespace

void write_swab_mat(const fs::path& path, const Matrix& values, MatHeader header) {
  require_finite(values, path.string());
  header.rows = values.rows();
  header.cols = values.cols();
  json h;
  h["magic"] = kMagic;
  h["version"] = 1;
  h["rows"] = header.rows;
  h["cols"] = header.cols;
  h["dtype"] = "f32";
  h["role"] = header.role;
  h["dataset_id"] = header.dataset_id;
  if (header.model_id) h["model_id"] = *header.model_id;
  if (header.class_index) h["class_index"] = *header.class_index;
  if (header.level) h["level"] = *header.level;

  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error(path, "cannot open for writing");
  const std::string line = h.dump() + "\n";
  os.write(line.data(), static_cast<std::streamsize>(line.size()));
  std::vector<std::uint32_t> payload(static_cast<std::size_t>(values.size()));
  std::size_t k = 0;
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      payload[k++] = to_little(std::bit_cast<std::uint32_t>(static_cast<float>(values(r, c))));
    }
  }
  os.write(reinterpret_cast<const char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(std::uint32_t)));
  if (!os) throw io_error(path, "write failed");
}

MatFile read_swab_mat(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error(path, "cannot open");
  std::string line;
  if (!std::getline(is, line)) throw format_error(path, "missing header line");
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception&) {
    throw format_error(path, "header is not valid JSON");
  }
  MatFile out;
  try {
    if (h.value("magic", "") != kMagic) throw format_error(path, "bad magic");
    if (h.value("version", 0) != 1) throw format_error(path, "unsupported version");
    if (h.value("dtype", "") != "f32") throw format_error(path, "unsupported dtype");
    const auto rows = h.at("rows").get<long long>();
    const auto cols = h.at("cols").get<long long>();
    if (rows < 0 || cols < 0) throw format_error(path, "negative shape");
    out.header.rows = static_cast<Index>(rows);
    out.header.cols = static_cast<Index>(cols);
    out.header.role = h.value("role", "");
    out.header.dataset_id = h.value("dataset_id", "");
    if (h.contains("model_id")) out.header.model_id = h["model_id"].get<std::string>();
    if (h.contains("class_index")) out.header.class_index = h["class_index"].get<Index>();
    if (h.contains("level")) out.header.level = h["level"].get<std::string>();
  } catch (const json::exception& e) {
    throw format_error(path, std::string("malformed header: ") + e.what());
  }

  const std::size_t count = static_cast<std::size_t>(out.header.rows * out.header.cols);
  std::vector<std::uint32_t> payload(count);
  is.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(count * sizeof(std::uint32_t)));
  if (static_cast<std::size_t>(is.gcount()) != count * sizeof(std::uint32_t)) {
    throw format_error(path, "payload shorter than header rows·cols");
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw format_error(path, "payload longer than header rows·cols");
  }
  out.values.resize(out.header.rows, out.header.cols);
  std::size_t k = 0;
  for (Index r = 0; r < out.header.rows; ++r) {
    for (Index c = 0; c < out.header.cols; ++c) {
      const float v = std::bit_cast<float>(to_little(payload[k++]));
      if (!std::isfinite(v)) throw format_error(path, "non-finite value in payload");
      out.values(r, c) = v;
    }
  }
  return out;
}

void write_csv_matrix(const fs::path& path, const Matrix& values) {
  require_finite(values, path.string());
  std::ofstream os(path);
  if (!os) throw io_error(path, "cannot open for writing");
  for (Index c = 0; c < values.cols(); ++c) os << (c ? "," : "") << 'c' << c;
  os << '\n';
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) os << (c ? "," : "") << float_text(values(r, c));
    os << '\n';
  }
  if (!os) throw io_error(path, "write failed");
}

Matrix read_csv_matrix(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error(path, "cannot open");
  std::string line;
  if (!std::getline(is, line)) throw format_error(path, "missing CSV header row");
  const Index cols = static_cast<Index>(std::count(line.begin(), line.end(), ',')) + (line.empty() ? 0 : 1);
  std::vector<float> data;
  Index rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Index n = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const float v = std::strtof(cell.c_str(), &end);
      if (end == cell.c_str() || !std::isfinite(v)) {
        throw format_error(path, "row " + std::to_string(rows + 1) + ": bad value '" + cell + "'");
      }
      data.push_back(v);
      ++n;
    }
    if (n != cols) throw format_error(path, "row " + std::to_string(rows + 1) + " has " + std::to_string(n) + " fields");
    ++rows;
  }
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

MatFile read_matrix(const fs::path& path) {
  if (path.extension() == ".csv") {
    MatFile f;
    f.values = read_csv_matrix(path);
    f.header.rows = f.values.rows();
    f.header.cols = f.values.cols();
    f.csv = true;
    return f;
  }
  return read_swab_mat(path);
}

void write_bundle(const fs::path& dir, const AssetBundle& b, MatrixFormat format) {
  fs::create_directories(dir);
  const std::string ext = extension(format);
  json manifest;
  manifest["format"] = "swab-bundle";
  manifest["version"] = 1;
  manifest["dataset_id"] = b.dataset_id;
  manifest["classes"] = b.vocabulary.names;
  manifest["classname_embeddings"] = "classnames" + ext;
  write_matrix(dir / ("classnames" + ext), b.classname_embeddings, {0, 0, "classname_embeddings", b.dataset_id, {}, {}, {}},
               format);

  json models = json::array();
  for (std::size_t i = 0; i < b.models.size(); ++i) {
    const ModelAssets& m = b.models[i];
    const std::string sub = "models/m" + std::to_string(i) + "/";
    fs::create_directories(dir / sub);
    auto header = [&](const std::string& role, std::optional<Index> cls = {}) {
      return MatHeader{0, 0, role, b.dataset_id, m.model_id, cls, {}};
    };
    json e;
    e["model_id"] = m.model_id;
    e["classifier_embeddings"] = sub + "classifiers" + ext;
    write_matrix(dir / (sub + "classifiers" + ext), m.classifiers, header("classifier_embeddings"), format);
    auto per_class = [&](const std::vector<Matrix>& list, const std::string& role, const std::string& stem) {
      json paths = json::array();
      for (std::size_t c = 0; c < list.size(); ++c) {
        const std::string rel = sub + stem + "_" + std::to_string(c) + ext;
        write_matrix(dir / rel, list[c], header(role, static_cast<Index>(c)), format);
        paths.push_back(rel);
      }
      return paths;
    };
    e["caption_embeddings"] = per_class(m.captions, "caption_embeddings", "captions");
    if (m.has_synonyms()) e["synonym_embeddings"] = per_class(m.synonyms, "synonym_embeddings", "synonyms");
    if (m.has_images()) e["image_embeddings"] = per_class(m.images, "image_embeddings", "images");
    if (m.class_gaps) {
      MatHeader h = header("gap_table");
      h.level = "class_mean";
      write_matrix(dir / (sub + "gap_table" + ext), *m.class_gaps, h, format);
      e["gap_table"] = sub + "gap_table" + ext;
    }
    if (m.class_accuracies) {
      write_matrix(dir / (sub + "class_accuracies" + ext), Matrix(*m.class_accuracies),
                   header("class_accuracies"), format);
      e["class_accuracies"] = sub + "class_accuracies" + ext;
    }
    if (m.imagenet_accuracy) e["imagenet_accuracy"] = *m.imagenet_accuracy;
    models.push_back(e);
  }
  manifest["models"] = models;
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

LoadedBundle read_bundle(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_text_file(manifest_path));
  } catch (const json::exception& e) {
    throw format_error(manifest_path, std::string("invalid JSON: ") + e.what());
  }
  Reader rd{dir, {}};
  LoadedBundle out;
  AssetBundle& b = out.bundle;
  try {
    b.dataset_id = manifest.at("dataset_id").get<std::string>();
    b.vocabulary.dataset_id = b.dataset_id;
    b.vocabulary.names = manifest.at("classes").get<std::vector<std::string>>();
    b.classname_embeddings = rd.load(manifest.at("classname_embeddings"), "classname_embeddings");
    for (const auto& e : manifest.at("models")) {
      ModelAssets m;
      m.model_id = e.at("model_id").get<std::string>();
      if (e.contains("classifier_embeddings")) {
        m.classifiers = rd.load(e["classifier_embeddings"], "classifier_embeddings");
      }
      if (e.contains("caption_embeddings")) m.captions = rd.load_list(e["caption_embeddings"], "caption_embeddings");
      if (e.contains("synonym_embeddings")) m.synonyms = rd.load_list(e["synonym_embeddings"], "synonym_embeddings");
      if (e.contains("image_embeddings")) m.images = rd.load_list(e["image_embeddings"], "image_embeddings");
      if (e.contains("gap_table")) m.class_gaps = rd.load(e["gap_table"], "gap_table");
      if (e.contains("class_accuracies")) {
        const Matrix acc = rd.load(e["class_accuracies"], "class_accuracies");
        if (acc.cols() != 1 && acc.rows() != 1) {
          throw format_error(dir / "manifest.json", m.model_id + ": class_accuracies must be a vector");
        }
        m.class_accuracies = Eigen::Map<const Vector>(acc.data(), acc.size());
      }
      if (e.contains("imagenet_accuracy")) m.imagenet_accuracy = e["imagenet_accuracy"].get<double>();
      b.models.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw format_error(manifest_path, std::string("malformed manifest: ") + e.what());
  }
  out.formats.assign(rd.formats.begin(), rd.formats.end());
  return out;
}

void write_universe(const fs::path& dir, std::span<const AssetBundle> bundles, const ModelZoo& zoo,
                    MatrixFormat format) {
  fs::create_directories(dir);
  json u;
  u["format"] = "swab-universe";
  u["version"] = 1;
  u["model_ids"] = zoo.model_ids;
  json datasets = json::array();
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const std::string sub = "d" + std::to_string(i);
    write_bundle(dir / sub, bundles[i], format);
    datasets.push_back({{"dataset_id", bundles[i].dataset_id}, {"path", sub}});
  }
  u["datasets"] = datasets;
  write_text_file(dir / "universe.json", u.dump(2) + "\n");
}

LoadedUniverse read_universe(const fs::path& dir) {
  const fs::path path = dir / "universe.json";
  json u;
  try {
    u = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw format_error(path, std::string("invalid JSON: ") + e.what());
  }
  LoadedUniverse out;
  std::set<std::string> formats;
  try {
    out.zoo = make_zoo(u.at("model_ids").get<std::vector<std::string>>());
    for (const auto& d : u.at("datasets")) {
      LoadedBundle lb = read_bundle(dir / d.at("path").get<std::string>());
      formats.insert(lb.formats.begin(), lb.formats.end());
      out.bundles.push_back(std::move(lb.bundle));
    }
  } catch (const json::exception& e) {
    throw format_error(path, std::string("malformed universe: ") + e.what());
  }
  out.formats.assign(formats.begin(), formats.end());
  return out;
}

void write_plan(const fs::path& path, const TransportPlan& plan, const std::string& dataset_id) {
  write_swab_mat(path, plan.plan, {0, 0, "transport_plan", dataset_id, {}, {}, {}});
  json side;
  side["objective"] = plan.objective;
  side["solver_tag"] = plan.solver_tag;
  side["mass"] = plan.total_mass;
  side["rows"] = plan.plan.rows();
  side["cols"] = plan.plan.cols();
  write_text_file(fs::path(path.string() + ".json"), side.dump(2) + "\n");
}

void write_gap_table(const fs::path& path, const GapTable& table, const std::string& dataset_id) {
  MatHeader h{0, 0, "gap_table", dataset_id, table.model_id, {}, std::string(to_string(table.level))};
  write_swab_mat(path, table.gaps, h);
}

std::string score_table_csv(std::span<const ScoreVector> scores) {
  std::ostringstream os;
  os << "model_id,dataset_id";
  for (std::size_t f = 0; f < kFeatureCount; ++f) os << ',' << feature_name(static_cast<Feature>(f));
  os << ",noise_sigma,seed,gap_applied,imagenet_filled\n";
  os << std::setprecision(17);
  for (const auto& s : scores) {
    os << s.model_id << ',' << s.dataset_id;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      os << ',';
      if (s.present[f]) os << s.features[f];
    }
    os << ',' << s.provenance.noise_sigma << ',' << s.provenance.seed << ',' << s.provenance.gap_applied
       << ',' << s.provenance.imagenet_filled << '\n';
  }
  return os.str();
}

std::string read_text_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io_error(path, "cannot open");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error(path, "cannot open for writing");
  os << text;
  if (!os) throw io_error(path, "write failed");
}

}  // namespace lovm
