#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "ulab/model.hpp"

namespace ulab {

enum class ForgetLoss { Eul, EulSquared, GradAscent, Ntp };

std::string to_string(ForgetLoss f);
ForgetLoss forget_loss_from_string(const std::string& s);

struct UnlearnConfig {
  ForgetLoss forget_loss = ForgetLoss::Eul;
  double alpha = 1.0;
  double epsilon = 1e-3;
  double lr = 1e-4;
  int epochs = 5;
  int batch_size = 32;
  std::uint64_t seed = 42;
  bool use_retain = true;             // RD
  bool use_augmentation = true;       // DA
  bool use_negative_response = false; // NR

  void validate() const;
};

// One JSON document: {"unlearn": {...}, "model": {...}, "lora": {...}|null}.
// Every section is optional (defaults apply); unknown keys are rejected.
struct RunConfig {
  UnlearnConfig unlearn;
  ModelConfig model;
  std::optional<LoraConfig> lora;
};

RunConfig load_run_config(const std::string& path);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& cfg);

// Flag-style override of a single UnlearnConfig field, e.g. ("lr", "1e-3").
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace ulab
