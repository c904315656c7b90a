#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ulab/dataset.hpp"
#include "ulab/metrics.hpp"
#include "ulab/model.hpp"

namespace ulab {

struct PerExample {
  std::string id;
  std::string split;
  std::optional<double> similarity;  // decoded splits only (forget/retain)
  double loss = 0.0;                 // mean masked next-token loss
};

struct EvalReport {
  double mia = 0.0;
  double tas = 0.0;
  double capability = 0.0;
  double final = 0.0;
  std::vector<PerExample> per_example;
  nlohmann::json metadata;
};

struct SplitSimilarity {
  double mean_forget = 0.0;
  double mean_retain = 0.0;
};

// Greedy-decodes every forget/retain example and scores LCS-F1 against the
// reference output tokens (output bytes then EOS).
double similarity(const Model& model, const Example& e);

// 0.5 * (1 - mean forget similarity) + 0.5 * mean retain similarity
double tas_score(const Model& model, const Dataset& ds, SplitSimilarity* sims = nullptr,
                 std::vector<PerExample>* per_example = nullptr);

// 1 - 2*|AUC - 0.5| over per-example losses, forget vs holdout.
double mia_score(const Model& model, const Dataset& ds,
                 std::vector<PerExample>* per_example = nullptr);

// min(1, ppl_base / ppl_model) on the eval_general split.
double capability_score(const Model& base_model, const Model& model, const Dataset& ds,
                        std::vector<PerExample>* per_example = nullptr);

EvalReport evaluate(const Model& base_model, const Model& model, const Dataset& ds,
                    nlohmann::json metadata = {});

void write_report(const EvalReport& report, const std::string& path);
EvalReport load_report(const std::string& path);

}  // namespace ulab
