#include "lovm/benchmark.hpp"
#include "lovm/io.hpp"
#include "lovm/pipeline.hpp"
#include "lovm/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

using namespace lovm;
using nlohmann::json;

namespace {

struct ConfigFlags {
  std::string config_file;
  std::optional<double> alpha;
  std::optional<double> lambda_filter;
  std::optional<double> mass_fraction;
  std::optional<bool> exponentiate_cost;
  std::optional<double> noise_sigma;
  std::optional<std::string> seeds;
  std::optional<std::string> ot_method;
  std::optional<std::string> branch;
  std::optional<double> ridge;
  std::optional<std::string> gap_level;
  std::optional<bool> partial_for_capability;
  std::optional<bool> zscore_gap_space;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON run config; flags override it");
    cmd->add_option("--alpha", alpha, "Borda weight of the learned branch");
    cmd->add_option("--lambda", lambda_filter, "source-class similarity filter");
    cmd->add_option("--mass", mass_fraction, "partial OT mass fraction");
    cmd->add_option("--exponentiate-cost", exponentiate_cost, "exp() the OT cost (true|false)");
    cmd->add_option("--noise-sigma", noise_sigma, "Gaussian noise on target texts");
    cmd->add_option("--seeds", seeds, "noise seeds, e.g. 1..10 or 1,4,7");
    cmd->add_option("--ot-method", ot_method, "exact|sinkhorn");
    cmd->add_option("--branch", branch, "swab|swab-m|swab-c|avg-rank|inb|modelgpt");
    cmd->add_option("--ridge", ridge, "ranker ridge coefficient");
    cmd->add_option("--gap-level", gap_level, "class_mean|dataset_mean");
    cmd->add_option("--partial-capability", partial_for_capability, "partial OT for the capability branch");
    cmd->add_option("--zscore-gap-space", zscore_gap_space, "z-score features before gap arithmetic");
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config_file.empty()) {
      json j;
      try {
        j = json::parse(read_text_file(config_file));
      } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_argument, config_file + ": " + e.what());
      }
      // A full report is accepted too, so runs can be repeated from it.
      if (j.contains("config") && j["config"].is_object()) j = j["config"];
      c = config_from_json(j, c);
    }
    if (alpha) c.alpha = *alpha;
    if (lambda_filter) c.lambda_filter = *lambda_filter;
    if (mass_fraction) c.mass_fraction = *mass_fraction;
    if (exponentiate_cost) c.exponentiate_cost = *exponentiate_cost;
    if (noise_sigma) c.noise_sigma = *noise_sigma;
    if (seeds) c.seeds = parse_seeds(*seeds);
    if (ot_method) c.ot_method = ot_method_from_string(*ot_method);
    if (branch) c.branch = branch_from_string(*branch);
    if (ridge) c.ridge = *ridge;
    if (gap_level) c.gap_level = gap_level_from_string(*gap_level);
    if (partial_for_capability) c.partial_for_capability = *partial_for_capability;
    if (zscore_gap_space) c.zscore_gap_space = *zscore_gap_space;
    c.validate();
    return c;
  }

  static std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    auto number = [&](const std::string& s) {
      std::size_t used = 0;
      unsigned long long v = 0;
      try {
        v = std::stoull(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || s.empty()) throw Error(ErrorKind::invalid_argument, "bad seed '" + s + "'");
      return static_cast<std::uint64_t>(v);
    };
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const auto lo = number(text.substr(0, dots));
      const auto hi = number(text.substr(dots + 2));
      if (hi < lo) throw Error(ErrorKind::invalid_argument, "empty seed range '" + text + "'");
      for (auto s = lo; s <= hi; ++s) out.push_back(s);
      return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number(item));
    return out;
  }
};

void echo_config(const RunConfig& c) { std::cout << "config: " << to_json(c).dump() << "\n"; }

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::asset_missing: return 2;
    case ErrorKind::solver: return 3;
    default: return 1;
  }
}

ModelZoo zoo_of(const AssetBundle& b) {
  std::vector<std::string> ids;
  for (const auto& m : b.models) ids.push_back(m.model_id);
  return make_zoo(ids);
}

int cmd_validate(const std::string& path, const RunConfig& config) {
  echo_config(config);
  std::vector<AssetBundle> bundles;
  std::vector<std::string> formats;
  std::optional<ModelZoo> zoo;
  if (fs::exists(fs::path(path) / "universe.json")) {
    LoadedUniverse u = read_universe(path);
    bundles = std::move(u.bundles);
    formats = u.formats;
    zoo = u.zoo;
  } else {
    LoadedBundle lb = read_bundle(path);
    formats = lb.formats;
    bundles.push_back(std::move(lb.bundle));
  }
  std::cout << "format:";
  for (const auto& f : formats) std::cout << ' ' << f;
  std::cout << "\n";
  bool ok = true;
  for (const auto& b : bundles) {
    const ModelZoo z = zoo ? *zoo : zoo_of(b);
    const ValidationReport report = validate_bundle(b, z);
    if (report.ok()) {
      std::cout << b.dataset_id << ": ok\n";
    } else {
      ok = false;
      std::cout << b.dataset_id << ": " << report.violations.size() << " violation(s)\n" << report.to_string();
    }
  }
  return ok ? 0 : 1;
}

json prediction_json(const TargetPrediction& p, const RunConfig& config, const std::vector<std::string>& notes) {
  const std::string primary = to_string(config.branch);
  const RankVector& order = p.ranking(primary);
  std::vector<std::size_t> idx(p.model_ids.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return order.ranks[static_cast<Index>(a)] < order.ranks[static_cast<Index>(b)];
  });
  json j;
  j["config"] = to_json(config);
  j["target"] = p.dataset_id;
  j["seed"] = p.seed;
  j["primary_method"] = primary;
  json models = json::array();
  for (std::size_t i : idx) {
    const auto k = static_cast<Index>(i);
    json m;
    m["model_id"] = p.model_ids[i];
    m["rank"] = order.ranks[k];
    json ranks;
    for (const auto& method : method_names()) ranks[method] = p.ranking(method).ranks[k];
    m["ranks"] = ranks;
    m["learned"] = p.learned[k];
    m["learned_plain"] = p.learned_plain[k];
    m["capability"] = p.capability[k];
    m["average_rank"] = p.average_rank[k];
    m["imagenet"] = p.imagenet[k];
    models.push_back(m);
  }
  j["models"] = models;
  j["notes"] = notes;
  return j;
}

int cmd_rank(const std::string& target_dir, const std::vector<std::string>& source_dirs,
             const std::string& json_out, const RunConfig& config) {
  echo_config(config);
  const AssetBundle target = read_bundle(target_dir).bundle;
  std::vector<AssetBundle> sources;
  for (const auto& d : source_dirs) sources.push_back(read_bundle(d).bundle);
  const ModelZoo zoo = zoo_of(target);
  std::vector<const AssetBundle*> src_ptrs;
  for (const auto& s : sources) src_ptrs.push_back(&s);
  SwabPipeline pipeline(src_ptrs, target, zoo, config);
  const TargetPrediction p = pipeline.predict(config.seeds.front());
  const json j = prediction_json(p, config, pipeline.notes());

  std::cout << "target " << p.dataset_id << ", seed " << p.seed << ", method " << j["primary_method"].get<std::string>()
            << "\n";
  std::cout << "pos  model_id                rank    swab-m  swab-c\n";
  int pos = 1;
  for (const auto& m : j["models"]) {
    std::cout << std::left << std::setw(5) << pos++ << std::setw(24) << m["model_id"].get<std::string>()
              << std::right << std::fixed << std::setprecision(2) << std::setw(6) << m["rank"].get<double>()
              << std::setw(8) << m["ranks"]["swab-m"].get<double>() << std::setw(8)
              << m["ranks"]["swab-c"].get<double>() << "\n";
  }
  std::cout.unsetf(std::ios::floatfield);
  for (const auto& n : pipeline.notes()) std::cout << "note: " << n << "\n";
  if (json_out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_text_file(json_out, j.dump(2) + "\n");
  }
  return 0;
}

int cmd_bench(const std::string& universe_dir, const std::string& out_dir, unsigned threads,
              const RunConfig& config) {
  echo_config(config);
  const LoadedUniverse u = read_universe(universe_dir);
  const BenchmarkReport report = run_lodo_benchmark(u.bundles, u.zoo, config, threads);
  fs::create_directories(out_dir);
  write_text_file(fs::path(out_dir) / "report.json", report_to_json(report).dump(2) + "\n");
  write_text_file(fs::path(out_dir) / "per_dataset.csv", per_dataset_csv(report));
  write_text_file(fs::path(out_dir) / "predictions.csv", predictions_csv(report));
  std::cout << "method        R5 mean (std)      tau mean (std)     R5+tau\n" << std::fixed << std::setprecision(3);
  for (const auto& m : method_names()) {
    const MethodSummary& s = report.method(m);
    std::cout << std::left << std::setw(10) << m << std::right << std::setw(9) << s.r5_mean << " (" << s.r5_std
              << ")  " << std::setw(8) << s.tau_mean << " (" << s.tau_std << ")  " << std::setw(8) << s.sum_mean
              << "\n";
  }
  return 0;
}

struct SynthFlags {
  std::string out;
  std::uint64_t seed = 1;
  std::string preset = "default";
  std::optional<Index> datasets, classes, models, dim, clusters;
  std::optional<double> gap_scale, noise, gap_heterogeneity;
  bool csv = false;
};

int cmd_synth(const SynthFlags& f, const RunConfig& config) {
  echo_config(config);
  SyntheticConfig sc;
  if (f.preset == "heterogeneous") {
    sc = heterogeneous_gap_config();
  } else if (f.preset != "default") {
    throw Error(ErrorKind::invalid_argument, "unknown preset '" + f.preset + "'");
  }
  if (f.datasets) sc.n_datasets = *f.datasets;
  if (f.classes) sc.classes_per_dataset = *f.classes;
  if (f.models) sc.n_models = *f.models;
  if (f.dim) sc.dim = *f.dim;
  if (f.clusters) sc.semantic_clusters = *f.clusters;
  if (f.gap_scale) sc.gap_scale = *f.gap_scale;
  if (f.noise) sc.noise = *f.noise;
  if (f.gap_heterogeneity) sc.gap_heterogeneity = *f.gap_heterogeneity;
  const SyntheticUniverse u = generate_synthetic_universe(sc, f.seed);
  write_universe(f.out, u.bundles, u.zoo, f.csv ? MatrixFormat::csv : MatrixFormat::swab_mat);
  json truth;
  for (std::size_t i = 0; i < u.bundles.size(); ++i) {
    truth[u.bundles[i].dataset_id] = std::vector<double>(u.truth[i].ranks.begin(), u.truth[i].ranks.end());
  }
  write_text_file(fs::path(f.out) / "truth.json", truth.dump(2) + "\n");
  std::cout << "wrote " << u.bundles.size() << " datasets x " << u.zoo.size() << " models to " << f.out << "\n";
  return 0;
}

int cmd_ot(const std::string& src, const std::string& tgt, bool partial, bool filter, const std::string& plan_out,
           const RunConfig& config) {
  echo_config(config);
  Matrix a = read_matrix(src).values;
  const Matrix b = read_matrix(tgt).values;
  if (filter) {
    const auto kept = filter_source_classes(a, b, config.lambda_filter);
    Matrix k(static_cast<Index>(kept.size()), a.cols());
    for (std::size_t i = 0; i < kept.size(); ++i) k.row(static_cast<Index>(i)) = a.row(kept[i]);
    std::cout << "kept " << kept.size() << " of " << a.rows() << " source rows\n";
    a = k;
  }
  const CostMatrix cost = build_cost_matrix(a, b, config.exponentiate_cost);
  const Vector u = uniform_marginal(cost.values.rows());
  const Vector v = uniform_marginal(cost.values.cols());
  const TransportPlan plan = partial ? solve_partial_ot(cost, u, v, config.mass_fraction)
                                     : solve_ot(cost, u, v, config.ot_method, config.sinkhorn);
  std::cout << std::setprecision(12) << "solver " << plan.solver_tag << "\nobjective " << plan.objective
            << "\nmass " << plan.total_mass << "\nplan " << plan.plan.rows() << "x" << plan.plan.cols() << "\n";
  std::cout << std::setprecision(6);
  for (Index r = 0; r < plan.plan.rows(); ++r) {
    for (Index c = 0; c < plan.plan.cols(); ++c) std::cout << (c ? " " : "") << plan.plan(r, c);
    std::cout << "\n";
  }
  if (!plan_out.empty()) write_plan(plan_out, plan, "");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-only ranking of vision-language models"};
  app.require_subcommand(1);

  ConfigFlags flags;
  std::string path;
  auto* validate = app.add_subcommand("validate", "check a bundle or universe directory");
  validate->add_option("path", path, "bundle or universe directory")->required();
  flags.attach(validate);

  std::string target;
  std::vector<std::string> sources;
  std::string json_out;
  auto* rank = app.add_subcommand("rank", "rank the zoo on a target bundle");
  rank->add_option("--target", target, "target bundle directory")->required();
  rank->add_option("--source", sources, "open-source bundle directory (repeatable)")->required();
  rank->add_option("--json", json_out, "write the JSON result here instead of stdout");
  flags.attach(rank);

  std::string universe;
  std::string out_dir = "bench_out";
  unsigned threads = 0;
  auto* bench = app.add_subcommand("bench", "leave-one-dataset-out benchmark over a universe");
  bench->add_option("universe", universe, "universe directory")->required();
  bench->add_option("--out", out_dir, "report directory");
  bench->add_option("--threads", threads, "worker threads (0 = hardware; SWAB_THREADS caps)");
  flags.attach(bench);

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "generate a synthetic universe");
  synth->add_option("--out", sf.out, "output directory")->required();
  synth->add_option("--seed", sf.seed, "generator seed");
  synth->add_option("--preset", sf.preset, "default|heterogeneous");
  synth->add_option("--datasets", sf.datasets);
  synth->add_option("--classes", sf.classes);
  synth->add_option("--models", sf.models);
  synth->add_option("--dim", sf.dim);
  synth->add_option("--clusters", sf.clusters);
  synth->add_option("--gap-scale", sf.gap_scale);
  synth->add_option("--noise", sf.noise);
  synth->add_option("--gap-heterogeneity", sf.gap_heterogeneity);
  synth->add_flag("--csv", sf.csv, "write matrices through the CSV fallback");
  flags.attach(synth);

  std::string src_file;
  std::string tgt_file;
  bool partial = false;
  bool filter = false;
  std::string plan_out;
  auto* ot = app.add_subcommand("ot", "solve OT between two class-embedding matrices");
  ot->add_option("source", src_file)->required();
  ot->add_option("target", tgt_file)->required();
  ot->add_flag("--partial", partial, "partial OT with --mass");
  ot->add_flag("--filter", filter, "drop source rows below --lambda first");
  ot->add_option("--plan-out", plan_out, "write the plan as SWAB-MAT");
  flags.attach(ot);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig config = flags.resolve();
    if (*validate) return cmd_validate(path, config);
    if (*rank) return cmd_rank(target, sources, json_out, config);
    if (*bench) return cmd_bench(universe, out_dir, threads, config);
    if (*synth) return cmd_synth(sf, config);
    if (*ot) return cmd_ot(src_file, tgt_file, partial, filter, plan_out, config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
