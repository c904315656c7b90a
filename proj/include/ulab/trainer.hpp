#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ulab/config.hpp"
#include "ulab/dataset.hpp"
#include "ulab/model.hpp"

namespace ulab {

struct StepRecord {
  int epoch = 0;
  int step = 0;  // 1-based, global across epochs
  std::string task;
  double loss = 0.0;
  double ntp = 0.0;
  double grad_norm = 0.0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  nlohmann::json effective_config;
  std::string dataset_digest;
  std::string kind;  // "train-base" or "unlearn"

  // JSON-lines: one meta record, then one record per optimizer step.
  void write(const std::string& path) const;
};

using LogFn = std::function<void(const std::string&)>;

// Memorization pass: ntp_loss on retain + forget, full parameters, no LoRA.
TrainLog train_base(Model& model, const Dataset& ds, const RunConfig& cfg,
                    const std::string& trainlog_path = "", const LogFn& log = nullptr);

// The unlearning pipeline: NR -> DA -> optional LoRA attach -> multi-task
// epochs (forget loss on forget batches, ntp on retain batches) -> merge.
// Deterministic given (model, dataset, config).
TrainLog run_unlearn(Model& model, const Dataset& ds, const RunConfig& cfg,
                     const std::string& trainlog_path = "", const LogFn& log = nullptr);

}  // namespace ulab
