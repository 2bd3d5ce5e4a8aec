#include "lovm/config.hpp"

#include <set>

namespace lovm {

const char* to_string(Branch b) {
  switch (b) {
    case Branch::swab: return "swab";
    case Branch::swab_m: return "swab-m";
    case Branch::swab_c: return "swab-c";
    case Branch::avg_rank: return "avg-rank";
    case Branch::inb: return "inb";
    case Branch::modelgpt: return "modelgpt";
  }
  return "?";
}

Branch branch_from_string(const std::string& s) {
  for (Branch b : {Branch::swab, Branch::swab_m, Branch::swab_c, Branch::avg_rank, Branch::inb,
                   Branch::modelgpt}) {
    if (s == to_string(b)) return b;
  }
  throw Error(ErrorKind::invalid_argument, "unknown branch '" + s + "'");
}

const char* to_string(OtMethod m) { return m == OtMethod::exact ? "exact" : "sinkhorn"; }

OtMethod ot_method_from_string(const std::string& s) {
  if (s == "exact") return OtMethod::exact;
  if (s == "sinkhorn") return OtMethod::sinkhorn;
  throw Error(ErrorKind::invalid_argument, "unknown ot_method '" + s + "'");
}

const std::vector<std::string>& method_names() {
  static const std::vector<std::string> names{"swab", "swab-m", "swab-c",
                                              "modelgpt", "avg-rank", "inb"};
  return names;
}

void RunConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::invalid_argument, what); };
  if (!(alpha >= 0.0 && alpha <= 1.0)) bad("alpha must lie in [0,1]");
  if (!(lambda_filter >= 0.0 && lambda_filter <= 1.0)) bad("lambda_filter must lie in [0,1]");
  if (!(mass_fraction > 0.0 && mass_fraction <= 1.0)) bad("mass_fraction must lie in (0,1]");
  if (!(noise_sigma >= 0.0)) bad("noise_sigma must be >= 0");
  if (!(ridge >= 0.0)) bad("ridge must be >= 0");
  if (seeds.empty()) bad("at least one seed is required");
  if (sinkhorn.max_iter < 1 || !(sinkhorn.tol > 0.0)) bad("invalid sinkhorn parameters");
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["alpha"] = c.alpha;
  j["lambda_filter"] = c.lambda_filter;
  j["mass_fraction"] = c.mass_fraction;
  j["exponentiate_cost"] = c.exponentiate_cost;
  j["noise_sigma"] = c.noise_sigma;
  j["seeds"] = c.seeds;
  j["ot_method"] = to_string(c.ot_method);
  j["branch"] = to_string(c.branch);
  j["ridge"] = c.ridge;
  j["gap_level"] = to_string(c.gap_level);
  j["partial_for_capability"] = c.partial_for_capability;
  j["zscore_gap_space"] = c.zscore_gap_space;
  j["sinkhorn_epsilon"] = c.sinkhorn.epsilon;
  j["sinkhorn_max_iter"] = c.sinkhorn.max_iter;
  j["sinkhorn_tol"] = c.sinkhorn.tol;
  return j;
}

RunConfig config_from_json(const nlohmann::json& j, RunConfig c) {
  if (!j.is_object()) throw Error(ErrorKind::invalid_argument, "config must be a JSON object");
  static const std::set<std::string> known{
      "alpha", "lambda_filter", "mass_fraction", "exponentiate_cost", "noise_sigma", "seeds",
      "ot_method", "branch", "ridge", "gap_level", "partial_for_capability", "zscore_gap_space",
      "sinkhorn_epsilon", "sinkhorn_max_iter", "sinkhorn_tol"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(ErrorKind::invalid_argument, "unknown config key '" + key + "'");
  }
  try {
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("lambda_filter")) c.lambda_filter = j["lambda_filter"].get<double>();
    if (j.contains("mass_fraction")) c.mass_fraction = j["mass_fraction"].get<double>();
    if (j.contains("exponentiate_cost")) c.exponentiate_cost = j["exponentiate_cost"].get<bool>();
    if (j.contains("noise_sigma")) c.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("ot_method")) c.ot_method = ot_method_from_string(j["ot_method"].get<std::string>());
    if (j.contains("branch")) c.branch = branch_from_string(j["branch"].get<std::string>());
    if (j.contains("ridge")) c.ridge = j["ridge"].get<double>();
    if (j.contains("gap_level")) c.gap_level = gap_level_from_string(j["gap_level"].get<std::string>());
    if (j.contains("partial_for_capability")) {
      c.partial_for_capability = j["partial_for_capability"].get<bool>();
    }
    if (j.contains("zscore_gap_space")) c.zscore_gap_space = j["zscore_gap_space"].get<bool>();
    if (j.contains("sinkhorn_epsilon")) c.sinkhorn.epsilon = j["sinkhorn_epsilon"].get<double>();
    if (j.contains("sinkhorn_max_iter")) c.sinkhorn.max_iter = j["sinkhorn_max_iter"].get<int>();
    if (j.contains("sinkhorn_tol")) c.sinkhorn.tol = j["sinkhorn_tol"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::invalid_argument, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace lovm
