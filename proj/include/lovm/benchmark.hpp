#pragma once

#include "lovm/assets.hpp"
#include "lovm/config.hpp"
#include "lovm/metrics.hpp"
#include "lovm/pipeline.hpp"

#include <json.hpp>

#include <map>
#include <span>
#include <string>
#include <vector>

namespace lovm {

/// Ground-truth ranking of a bundle: mean class accuracy, rank 1 = best.
RankVector ground_truth_ranking(const AssetBundle& bundle, const ModelZoo& zoo);

struct BenchmarkRow {
  std::string dataset_id;
  std::uint64_t seed = 0;
  std::string method;
  double r5 = 0.0;
  double tau = 0.0;
  Index overlap = 0;          // |F|, size of the top-5 intersection
  bool tie_at_cut = false;    // a tie straddled the top-5 boundary
};

struct MethodSummary {
  std::vector<double> per_seed_r5;   // averaged over datasets
  std::vector<double> per_seed_tau;
  double r5_mean = 0.0;
  double r5_std = 0.0;
  double tau_mean = 0.0;
  double tau_std = 0.0;
  double sum_mean = 0.0;  // mean of R5 + tau
  double sum_std = 0.0;
};

struct BenchmarkReport {
  RunConfig config;
  std::vector<std::string> datasets;
  std::vector<std::string> model_ids;
  std::vector<BenchmarkRow> rows;
  std::map<std::string, MethodSummary> summary;
  std::vector<TargetPrediction> predictions;  // dataset-major, then seed
  std::vector<std::string> notes;

  const MethodSummary& method(const std::string& name) const;
};

/// Leave-one-dataset-out over `bundles`. `threads` = 0 picks the hardware
/// count, further capped by SWAB_THREADS.
BenchmarkReport run_lodo_benchmark(std::span<const AssetBundle> bundles, const ModelZoo& zoo,
                                   const RunConfig& config, unsigned threads = 0);

unsigned resolve_thread_count(unsigned requested, std::size_t jobs);

nlohmann::json report_to_json(const BenchmarkReport& report);
/// Dataset x {R5, tau} rows with one column per method, seed-averaged.
std::string per_dataset_csv(const BenchmarkReport& report);
/// One row per (dataset, seed, model) with branch outputs and ranks.
std::string predictions_csv(const BenchmarkReport& report);

}  // namespace lovm
