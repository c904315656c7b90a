#include "ulab/config.hpp"

#include <fstream>
#include <set>

#include "ulab/error.hpp"

namespace ulab {

using nlohmann::json;

std::string to_string(ForgetLoss f) {
  switch (f) {
    case ForgetLoss::Eul: return "EUL";
    case ForgetLoss::EulSquared: return "EUL_SQUARED";
    case ForgetLoss::GradAscent: return "GRAD_ASCENT";
    case ForgetLoss::Ntp: return "NTP";
  }
  return "?";
}

ForgetLoss forget_loss_from_string(const std::string& s) {
  if (s == "EUL") return ForgetLoss::Eul;
  if (s == "EUL_SQUARED") return ForgetLoss::EulSquared;
  if (s == "GRAD_ASCENT") return ForgetLoss::GradAscent;
  if (s == "NTP") return ForgetLoss::Ntp;
  throw_validation("unknown forget_loss \"" + s + "\"");
}

void UnlearnConfig::validate() const {
  if (alpha <= 0) throw_validation("config: alpha must be positive");
  if (epsilon <= 0) throw_validation("config: epsilon must be positive");
  if (lr <= 0) throw_validation("config: lr must be positive");
  if (epochs < 0) throw_validation("config: epochs must be non-negative");
  if (batch_size < 1) throw_validation("config: batch_size must be at least 1");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw_validation("config: unknown key \"" + key + "\" in " + where);
    }
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw_validation("config: document must be a JSON object");
  reject_unknown(j, {"unlearn", "model", "lora"}, "config root");
  RunConfig cfg;

  if (j.contains("unlearn")) {
    const json& u = j.at("unlearn");
    reject_unknown(u,
                   {"forget_loss", "alpha", "epsilon", "lr", "epochs", "batch_size", "seed",
                    "use_retain", "use_augmentation", "use_negative_response"},
                   "unlearn section");
    if (u.contains("forget_loss")) {
      cfg.unlearn.forget_loss = forget_loss_from_string(u.at("forget_loss").get<std::string>());
    }
    read_if(u, "alpha", cfg.unlearn.alpha);
    read_if(u, "epsilon", cfg.unlearn.epsilon);
    read_if(u, "lr", cfg.unlearn.lr);
    read_if(u, "epochs", cfg.unlearn.epochs);
    read_if(u, "batch_size", cfg.unlearn.batch_size);
    read_if(u, "seed", cfg.unlearn.seed);
    read_if(u, "use_retain", cfg.unlearn.use_retain);
    read_if(u, "use_augmentation", cfg.unlearn.use_augmentation);
    read_if(u, "use_negative_response", cfg.unlearn.use_negative_response);
  }

  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m, {"d_model", "n_layers", "n_heads", "d_ff", "ctx", "init_std"}, "model section");
    read_if(m, "d_model", cfg.model.d_model);
    read_if(m, "n_layers", cfg.model.n_layers);
    read_if(m, "n_heads", cfg.model.n_heads);
    read_if(m, "d_ff", cfg.model.d_ff);
    read_if(m, "ctx", cfg.model.ctx);
    read_if(m, "init_std", cfg.model.init_std);
  }

  if (j.contains("lora") && !j.at("lora").is_null()) {
    const json& l = j.at("lora");
    reject_unknown(l, {"rank", "alpha", "dropout", "targets"}, "lora section");
    LoraConfig lc;
    read_if(l, "rank", lc.rank);
    read_if(l, "alpha", lc.alpha);
    read_if(l, "dropout", lc.dropout);
    read_if(l, "targets", lc.targets);
    lc.validate();
    cfg.lora = lc;
  }

  cfg.unlearn.validate();
  cfg.model.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw_io("cannot open config: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw_validation("config: invalid JSON: " + std::string(e.what()));
  }
  return run_config_from_json(j);
}

json run_config_to_json(const RunConfig& cfg) {
  json u{{"forget_loss", to_string(cfg.unlearn.forget_loss)},
         {"alpha", cfg.unlearn.alpha},
         {"epsilon", cfg.unlearn.epsilon},
         {"lr", cfg.unlearn.lr},
         {"epochs", cfg.unlearn.epochs},
         {"batch_size", cfg.unlearn.batch_size},
         {"seed", cfg.unlearn.seed},
         {"use_retain", cfg.unlearn.use_retain},
         {"use_augmentation", cfg.unlearn.use_augmentation},
         {"use_negative_response", cfg.unlearn.use_negative_response}};
  json m{{"d_model", cfg.model.d_model}, {"n_layers", cfg.model.n_layers},
         {"n_heads", cfg.model.n_heads}, {"d_ff", cfg.model.d_ff},
         {"ctx", cfg.model.ctx},         {"init_std", cfg.model.init_std}};
  json l = nullptr;
  if (cfg.lora) {
    l = json{{"rank", cfg.lora->rank},
             {"alpha", cfg.lora->alpha},
             {"dropout", cfg.lora->dropout},
             {"targets", cfg.lora->targets}};
  }
  return json{{"unlearn", u}, {"model", m}, {"lora", l}};
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto as_bool = [&](const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw_validation("config: expected boolean for " + key + ", got \"" + v + "\"");
    return false;
  };
  try {
    if (key == "forget_loss") {
      cfg.unlearn.forget_loss = forget_loss_from_string(value);
    } else if (key == "alpha") {
      cfg.unlearn.alpha = std::stod(value);
    } else if (key == "epsilon") {
      cfg.unlearn.epsilon = std::stod(value);
    } else if (key == "lr") {
      cfg.unlearn.lr = std::stod(value);
    } else if (key == "epochs") {
      cfg.unlearn.epochs = std::stoi(value);
    } else if (key == "batch_size") {
      cfg.unlearn.batch_size = std::stoi(value);
    } else if (key == "seed") {
      cfg.unlearn.seed = std::stoull(value);
    } else if (key == "use_retain") {
      cfg.unlearn.use_retain = as_bool(value);
    } else if (key == "use_augmentation") {
      cfg.unlearn.use_augmentation = as_bool(value);
    } else if (key == "use_negative_response") {
      cfg.unlearn.use_negative_response = as_bool(value);
    } else {
      throw_validation("config: unknown override key \"" + key + "\"");
    }
  } catch (const std::invalid_argument&) {
    throw_validation("config: invalid value \"" + value + "\" for " + key);
  } catch (const std::out_of_range&) {
    throw_validation("config: value \"" + value + "\" out of range for " + key);
  }
  cfg.unlearn.validate();
}

}  // namespace ulab
