#pragma once

#include "lovm/gap_bridge.hpp"
#include "lovm/transport.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace lovm {

enum class Branch { swab, swab_m, swab_c, avg_rank, inb, modelgpt };

const char* to_string(Branch b);
Branch branch_from_string(const std::string& s);
const char* to_string(OtMethod m);
OtMethod ot_method_from_string(const std::string& s);

/// Every method the pipeline produces, in report order.
const std::vector<std::string>& method_names();

struct RunConfig {
  double alpha = 0.5;
  double lambda_filter = 0.5;
  double mass_fraction = 0.9;
  bool exponentiate_cost = true;
  double noise_sigma = 0.1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  OtMethod ot_method = OtMethod::exact;
  Branch branch = Branch::swab;
  double ridge = 1e-3;
  GapLevel gap_level = GapLevel::class_mean;
  bool partial_for_capability = true;
  bool zscore_gap_space = true;
  SinkhornParams sinkhorn;

  /// Throws ErrorKind::invalid_argument on out-of-range fields.
  void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
/// Fields absent from `j` keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});

}  // namespace lovm
