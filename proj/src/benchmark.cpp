#include "lovm/benchmark.hpp"

#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

namespace lovm {

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double mu = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

struct TargetResult {
  std::vector<TargetPrediction> predictions;
  std::vector<BenchmarkRow> rows;
  std::vector<std::string> notes;
};

TargetResult run_target(std::span<const AssetBundle> bundles, std::size_t t, const ModelZoo& zoo,
                        const RunConfig& config) {
  std::vector<const AssetBundle*> sources;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (i != t) sources.push_back(&bundles[i]);
  }
  const AssetBundle& target = bundles[t];
  SwabPipeline pipeline(sources, target, zoo, config);
  const RankVector truth = ground_truth_ranking(target, zoo);

  TargetResult out;
  out.notes = pipeline.notes();
  for (std::uint64_t seed : config.seeds) {
    TargetPrediction p = pipeline.predict(seed);
    for (const auto& method : method_names()) {
      const RankVector& pred = p.ranking(method);
      BenchmarkRow row;
      row.dataset_id = target.dataset_id;
      row.seed = seed;
      row.method = method;
      row.r5 = top5_recall(pred, truth);
      const TauResult tau = kendall_tau_top5(pred, truth);
      row.tau = tau.tau;
      row.overlap = tau.overlap;
      row.tie_at_cut = top5(pred).tie_straddles_cut;
      out.rows.push_back(row);
    }
    out.predictions.push_back(std::move(p));
  }
  return out;
}

}  // namespace

RankVector ground_truth_ranking(const AssetBundle& bundle, const ModelZoo& zoo) {
  Vector acc(zoo.size());
  for (Index m = 0; m < zoo.size(); ++m) {
    acc[m] = dataset_accuracy(bundle.model(zoo.model_ids[static_cast<std::size_t>(m)]));
  }
  return RankVector{zoo.model_ids, rank_values(acc, RankOrder::descending)};
}

const MethodSummary& BenchmarkReport::method(const std::string& name) const {
  const auto it = summary.find(name);
  if (it == summary.end()) throw Error(ErrorKind::invalid_argument, "no method '" + name + "' in report");
  return it->second;
}

unsigned resolve_thread_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SWAB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(jobs, 1))));
}

BenchmarkReport run_lodo_benchmark(std::span<const AssetBundle> bundles, const ModelZoo& zoo,
                                   const RunConfig& config, unsigned threads) {
  config.validate();
  if (bundles.size() < 2) throw Error(ErrorKind::invalid_argument, "benchmark needs at least two bundles");
  if (zoo.size() < 5) throw Error(ErrorKind::invalid_argument, "benchmark needs at least five models");

  // Fail fast: every dataset serves as a source at some point.
  std::vector<std::string> missing;
  for (const auto& b : bundles) {
    const auto m = missing_assets(b, zoo, true);
    missing.insert(missing.end(), m.begin(), m.end());
  }
  if (!missing.empty()) {
    std::string msg = "missing assets:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorKind::asset_missing, msg);
  }

  std::vector<TargetResult> results(bundles.size());
  std::vector<std::exception_ptr> errors(bundles.size());
  const unsigned n_threads = resolve_thread_count(threads, bundles.size());
  if (n_threads == 1) {
    for (std::size_t t = 0; t < bundles.size(); ++t) results[t] = run_target(bundles, t, zoo, config);
  } else {
    std::size_t next = 0;
    std::mutex lock;
    auto worker = [&] {
      for (;;) {
        std::size_t t;
        {
          std::lock_guard<std::mutex> g(lock);
          if (next >= bundles.size()) return;
          t = next++;
        }
        try {
          results[t] = run_target(bundles, t, zoo, config);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  BenchmarkReport report;
  report.config = config;
  report.model_ids = zoo.model_ids;
  for (const auto& b : bundles) report.datasets.push_back(b.dataset_id);
  for (auto& r : results) {
    report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
    report.notes.insert(report.notes.end(), r.notes.begin(), r.notes.end());
    for (auto& p : r.predictions) report.predictions.push_back(std::move(p));
  }
  for (const auto& row : report.rows) {
    if (row.overlap <= 1 && row.method == to_string(config.branch)) {
      report.notes.push_back(row.dataset_id + " seed " + std::to_string(row.seed) + ": |F| = " +
                             std::to_string(row.overlap) + ", tau set to 0");
    }
  }

  const double n_data = static_cast<double>(bundles.size());
  for (const auto& method : method_names()) {
    MethodSummary s;
    for (std::uint64_t seed : config.seeds) {
      double r5 = 0.0;
      double tau = 0.0;
      for (const auto& row : report.rows) {
        if (row.method == method && row.seed == seed) {
          r5 += row.r5;
          tau += row.tau;
        }
      }
      s.per_seed_r5.push_back(r5 / n_data);
      s.per_seed_tau.push_back(tau / n_data);
    }
    std::vector<double> sums;
    for (std::size_t i = 0; i < s.per_seed_r5.size(); ++i) sums.push_back(s.per_seed_r5[i] + s.per_seed_tau[i]);
    s.r5_mean = mean_of(s.per_seed_r5);
    s.r5_std = std_of(s.per_seed_r5);
    s.tau_mean = mean_of(s.per_seed_tau);
    s.tau_std = std_of(s.per_seed_tau);
    s.sum_mean = mean_of(sums);
    s.sum_std = std_of(sums);
    report.summary.emplace(method, std::move(s));
  }
  return report;
}

nlohmann::json report_to_json(const BenchmarkReport& report) {
  nlohmann::json j;
  j["config"] = to_json(report.config);
  j["datasets"] = report.datasets;
  j["model_ids"] = report.model_ids;
  j["primary_method"] = to_string(report.config.branch);
  nlohmann::json summary = nlohmann::json::object();
  for (const auto& method : method_names()) {
    const MethodSummary& s = report.method(method);
    summary[method] = {{"r5_mean", s.r5_mean},       {"r5_std", s.r5_std},
                       {"tau_mean", s.tau_mean},     {"tau_std", s.tau_std},
                       {"sum_mean", s.sum_mean},     {"sum_std", s.sum_std},
                       {"per_seed_r5", s.per_seed_r5}, {"per_seed_tau", s.per_seed_tau}};
  }
  j["summary"] = summary;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"dataset", r.dataset_id}, {"seed", r.seed},       {"method", r.method},
                    {"r5", r.r5},              {"tau", r.tau},         {"overlap", r.overlap},
                    {"tie_at_cut", r.tie_at_cut}});
  }
  j["rows"] = rows;
  j["notes"] = report.notes;
  return j;
}

std::string per_dataset_csv(const BenchmarkReport& report) {
  std::ostringstream os;
  os << "dataset,metric";
  for (const auto& m : method_names()) os << ',' << m;
  os << '\n';
  const double n_seeds = static_cast<double>(report.config.seeds.size());
  for (const auto& ds : report.datasets) {
    for (const char* metric : {"R5", "tau"}) {
      os << ds << ',' << metric;
      for (const auto& m : method_names()) {
        double acc = 0.0;
        for (const auto& r : report.rows) {
          if (r.dataset_id == ds && r.method == m) acc += metric[0] == 'R' ? r.r5 : r.tau;
        }
        os << ',' << fmt(acc / n_seeds);
      }
      os << '\n';
    }
  }
  for (const char* metric : {"R5", "tau"}) {
    os << "mean," << metric;
    for (const auto& m : method_names()) {
      const MethodSummary& s = report.method(m);
      os << ',' << fmt(metric[0] == 'R' ? s.r5_mean : s.tau_mean);
    }
    os << '\n';
  }
  return os.str();
}

std::string predictions_csv(const BenchmarkReport& report) {
  std::ostringstream os;
  os << "dataset,seed,model_id,learned,learned_plain,capability,average_rank,imagenet";
  for (const auto& m : method_names()) os << ",rank_" << m;
  os << '\n';
  for (const auto& p : report.predictions) {
    for (std::size_t i = 0; i < p.model_ids.size(); ++i) {
      const auto k = static_cast<Index>(i);
      os << p.dataset_id << ',' << p.seed << ',' << p.model_ids[i] << ',' << fmt(p.learned[k]) << ','
         << fmt(p.learned_plain[k]) << ',' << fmt(p.capability[k]) << ',' << fmt(p.average_rank[k])
         << ',' << fmt(p.imagenet[k]);
      for (const auto& m : method_names()) os << ',' << fmt(p.ranking(m).ranks[k]);
      os << '\n';
    }
  }
  return os.str();
}

}  // namespace lovm
