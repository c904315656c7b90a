// Command-line front end. Links only the C API (ulab.h).

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ulab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

int exit_code_of(ulab_status st) {
  switch (st) {
    case ULAB_OK: return kExitOk;
    case ULAB_ERR_NUMERIC: return kExitNumeric;
    default: return kExitValidation;
  }
}

int fail(ulab_status st) {
  std::fprintf(stderr, "error: %s\n", ulab_last_error());
  return exit_code_of(st);
}

void print_log_line(const char* line, void*) { std::printf("%s\n", line); }

struct ConfigHandle {
  ulab_config* ptr = nullptr;
  ~ConfigHandle() { ulab_config_free(ptr); }
};

struct DatasetHandle {
  ulab_dataset* ptr = nullptr;
  ~DatasetHandle() { ulab_dataset_free(ptr); }
};

struct Override {
  std::string key;
  std::string value;
  bool set = false;
};

// Every UnlearnConfig field is overridable as --key=value; overrides win over
// the config file.
void add_override_options(CLI::App* cmd, std::vector<Override>& overrides) {
  static const char* keys[] = {"forget_loss", "alpha",      "epsilon",
                               "lr",          "epochs",     "batch_size",
                               "seed",        "use_retain", "use_augmentation",
                               "use_negative_response"};
  overrides.resize(std::size(keys));
  for (std::size_t i = 0; i < std::size(keys); ++i) {
    overrides[i].key = keys[i];
    cmd->add_option_function<std::string>(
        std::string("--") + keys[i],
        [&overrides, i](const std::string& v) {
          overrides[i].value = v;
          overrides[i].set = true;
        });
  }
}

ulab_status load_config(const std::string& config_path, const std::vector<Override>& overrides,
                        ConfigHandle& cfg) {
  ulab_status st = config_path.empty() ? ulab_config_create(&cfg.ptr)
                                       : ulab_config_load(config_path.c_str(), &cfg.ptr);
  if (st != ULAB_OK) return st;
  for (const Override& o : overrides) {
    if (!o.set) continue;
    st = ulab_config_override(cfg.ptr, o.key.c_str(), o.value.c_str());
    if (st != ULAB_OK) return st;
  }
  return ULAB_OK;
}

void print_split_counts(const ulab_dataset* ds, const char* label) {
  static const char* splits[] = {"forget", "retain", "holdout", "eval_general"};
  std::printf("%s:", label);
  for (const char* s : splits) {
    size_t n = 0;
    ulab_dataset_count(ds, s, &n);
    std::printf(" %s=%zu", s, n);
  }
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale unlearning lab"};
  app.require_subcommand(1);

  std::string config_path, data_path, base_path, model_path, out_path, report_path;
  std::uint64_t seed = 0;
  std::vector<Override> train_overrides, unlearn_overrides;

  CLI::App* train = app.add_subcommand("train-base", "train the memorization base model");
  train->add_option("--config", config_path);
  train->add_option("--data", data_path)->required();
  train->add_option("--out", out_path)->required();
  add_override_options(train, train_overrides);

  CLI::App* unlearn = app.add_subcommand("unlearn", "run the unlearning pipeline");
  unlearn->add_option("--config", config_path);
  unlearn->add_option("--base", base_path)->required();
  unlearn->add_option("--data", data_path)->required();
  unlearn->add_option("--out", out_path)->required();
  add_override_options(unlearn, unlearn_overrides);

  CLI::App* augment = app.add_subcommand("augment", "write the re-segmented dataset");
  augment->add_option("--data", data_path)->required();
  augment->add_option("--out", out_path)->required();

  CLI::App* eval = app.add_subcommand("eval", "score a model against its base");
  eval->add_option("--base", base_path)->required();
  eval->add_option("--model", model_path)->required();
  eval->add_option("--data", data_path)->required();
  eval->add_option("--report", report_path)->required();

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "verify the EUL gradient identity");
  gradcheck->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  if (train->parsed() || unlearn->parsed()) {
    const bool is_train = train->parsed();
    ConfigHandle cfg;
    ulab_status st = load_config(config_path, is_train ? train_overrides : unlearn_overrides, cfg);
    if (st != ULAB_OK) return fail(st);

    DatasetHandle ds;
    st = ulab_dataset_load(data_path.c_str(), &ds.ptr);
    if (st != ULAB_OK) return fail(st);

    st = is_train ? ulab_train_base(cfg.ptr, ds.ptr, out_path.c_str(), print_log_line, nullptr)
                  : ulab_unlearn(cfg.ptr, base_path.c_str(), ds.ptr, out_path.c_str(),
                                 print_log_line, nullptr);
    if (st != ULAB_OK) return fail(st);
    std::printf("wrote %s\n", out_path.c_str());
    return kExitOk;
  }

  if (augment->parsed()) {
    DatasetHandle ds;
    ulab_status st = ulab_dataset_load(data_path.c_str(), &ds.ptr);
    if (st != ULAB_OK) return fail(st);
    print_split_counts(ds.ptr, "before");

    DatasetHandle aug;
    st = ulab_dataset_augment(ds.ptr, &aug.ptr);
    if (st != ULAB_OK) return fail(st);
    print_split_counts(aug.ptr, "after");

    st = ulab_dataset_save(aug.ptr, out_path.c_str());
    if (st != ULAB_OK) return fail(st);
    std::printf("wrote %s\n", out_path.c_str());
    return kExitOk;
  }

  if (eval->parsed()) {
    DatasetHandle ds;
    ulab_status st = ulab_dataset_load(data_path.c_str(), &ds.ptr);
    if (st != ULAB_OK) return fail(st);

    double scores[4] = {0, 0, 0, 0};
    st = ulab_evaluate(base_path.c_str(), model_path.c_str(), ds.ptr, report_path.c_str(), scores);
    if (st != ULAB_OK) return fail(st);
    std::printf("mia=%.3f tas=%.3f capability=%.3f final=%.3f\n", scores[0], scores[1], scores[2],
                scores[3]);
    return kExitOk;
  }

  if (gradcheck->parsed()) {
    double dual = 0.0, fd = 0.0;
    const ulab_status st = ulab_gradcheck(seed, &dual, &fd);
    std::printf("max dual-backward rel err: %.3e\nmax finite-difference rel err: %.3e\n", dual, fd);
    if (st != ULAB_OK) return fail(st);
    return kExitOk;
  }

  return kExitValidation;
}
