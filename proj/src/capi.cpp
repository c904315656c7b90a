#include "ulab.h"

#include <string>

#include "ulab/checkpoint.hpp"
#include "ulab/config.hpp"
#include "ulab/dataset.hpp"
#include "ulab/error.hpp"
#include "ulab/evaluate.hpp"
#include "ulab/gradcheck.hpp"
#include "ulab/trainer.hpp"

struct ulab_config {
  ulab::RunConfig cfg;
};

struct ulab_dataset {
  ulab::Dataset ds;
};

namespace {

thread_local std::string g_last_error;

ulab_status status_of(const ulab::Error& e) {
  switch (e.kind()) {
    case ulab::ErrorKind::Numeric: return ULAB_ERR_NUMERIC;
    case ulab::ErrorKind::Io: return ULAB_ERR_IO;
    default: return ULAB_ERR_VALIDATION;
  }
}

template <typename Fn>
ulab_status guarded(Fn&& fn) {
  try {
    fn();
    return ULAB_OK;
  } catch (const ulab::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ULAB_ERR_VALIDATION;
  }
}

ulab_status require(bool cond, const char* msg) {
  if (cond) return ULAB_OK;
  g_last_error = msg;
  return ULAB_ERR_VALIDATION;
}

std::string trainlog_path_for(const std::string& checkpoint_path) {
  return checkpoint_path + ".trainlog.jsonl";
}

ulab::LogFn wrap_log(ulab_log_fn log, void* user) {
  if (!log) return nullptr;
  return [log, user](const std::string& line) { log(line.c_str(), user); };
}

}  // namespace

extern "C" {

const char* ulab_last_error(void) { return g_last_error.c_str(); }

void ulab_string_free(char* s) { delete[] s; }

ulab_status ulab_config_create(ulab_config** out) {
  if (require(out != nullptr, "out must not be NULL")) return ULAB_ERR_VALIDATION;
  return guarded([&] { *out = new ulab_config{}; });
}

ulab_status ulab_config_load(const char* path, ulab_config** out) {
  if (require(path && out, "path/out must not be NULL")) return ULAB_ERR_VALIDATION;
  return guarded([&] { *out = new ulab_config{ulab::load_run_config(path)}; });
}

ulab_status ulab_config_override(ulab_config* cfg, const char* key, const char* value) {
  if (require(cfg && key && value, "cfg/key/value must not be NULL")) return ULAB_ERR_VALIDATION;
  return guarded([&] { ulab::apply_override(cfg->cfg, key, value); });
}

ulab_status ulab_config_to_json(const ulab_config* cfg, char** out_json) {
  if (require(cfg && out_json, "cfg/out_json must not be NULL")) return ULAB_ERR_VALIDATION;
  return guarded([&] {
    const std::string s = ulab::run_config_to_json(cfg->cfg).dump(2);
    *out_json = new char[s.size() + 1];
    std::copy(s.begin(), s.end(), *out_json);
    (*out_json)[s.size()] = '\0';
  });
}

void ulab_config_free(ulab_config* cfg) { delete cfg; }

ulab_status ulab_dataset_load(const char* path, ulab_dataset** out) {
  if (require(path && out, "path/out must not be NULL")) return ULAB_ERR_VALIDATION;
  return guarded([&] { *out = new ulab_dataset{ulab::load_dataset(path)}; });
}

ulab_status ulab_dataset_save(const ulab_dataset* ds, const char* path) {
  if (require(ds && path, "ds/path must not be NULL")) return ULAB_ERR_VALIDATION;
  return guarded([&] { ulab::save_dataset(ds->ds, path); });
}

ulab_status ulab_dataset_augment(const ulab_dataset* ds, ulab_dataset** out) {
  if (require(ds && out, "ds/out must not be NULL")) return ULAB_ERR_VALIDATION;
  return guarded([&] { *out = new ulab_dataset{ulab::augment_resegment(ds->ds)}; });
}

ulab_status ulab_dataset_count(const ulab_dataset* ds, const char* split, size_t* out_count) {
  if (require(ds && split && out_count, "ds/split/out_count must not be NULL")) {
    return ULAB_ERR_VALIDATION;
  }
  return guarded([&] { *out_count = ds->ds.count(ulab::split_from_string(split)); });
}

void ulab_dataset_free(ulab_dataset* ds) { delete ds; }

ulab_status ulab_train_base(const ulab_config* cfg, const ulab_dataset* ds,
                            const char* out_checkpoint, ulab_log_fn log, void* user) {
  if (require(cfg && ds && out_checkpoint, "cfg/ds/out_checkpoint must not be NULL")) {
    return ULAB_ERR_VALIDATION;
  }
  return guarded([&] {
    ulab::Model model(cfg->cfg.model, cfg->cfg.unlearn.seed);
    ulab::train_base(model, ds->ds, cfg->cfg, trainlog_path_for(out_checkpoint),
                     wrap_log(log, user));
    ulab::save_checkpoint(model, out_checkpoint);
  });
}

ulab_status ulab_unlearn(const ulab_config* cfg, const char* base_checkpoint,
                         const ulab_dataset* ds, const char* out_checkpoint, ulab_log_fn log,
                         void* user) {
  if (require(cfg && base_checkpoint && ds && out_checkpoint,
              "cfg/base_checkpoint/ds/out_checkpoint must not be NULL")) {
    return ULAB_ERR_VALIDATION;
  }
  return guarded([&] {
    ulab::Model model = ulab::load_checkpoint(base_checkpoint);
    ulab::run_unlearn(model, ds->ds, cfg->cfg, trainlog_path_for(out_checkpoint),
                      wrap_log(log, user));
    ulab::save_checkpoint(model, out_checkpoint);
  });
}

ulab_status ulab_evaluate(const char* base_checkpoint, const char* model_checkpoint,
                          const ulab_dataset* ds, const char* report_path,
                          double out_scores[4]) {
  if (require(base_checkpoint && model_checkpoint && ds,
              "base_checkpoint/model_checkpoint/ds must not be NULL")) {
    return ULAB_ERR_VALIDATION;
  }
  return guarded([&] {
    const ulab::Model base = ulab::load_checkpoint(base_checkpoint);
    const ulab::Model model = ulab::load_checkpoint(model_checkpoint);
    nlohmann::json meta{{"base_checkpoint", base_checkpoint},
                        {"model_checkpoint", model_checkpoint}};
    const ulab::EvalReport report = ulab::evaluate(base, model, ds->ds, meta);
    if (report_path) ulab::write_report(report, report_path);
    if (out_scores) {
      out_scores[0] = report.mia;
      out_scores[1] = report.tas;
      out_scores[2] = report.capability;
      out_scores[3] = report.final;
    }
  });
}

ulab_status ulab_gradcheck(uint64_t seed, double* out_dual_err, double* out_fd_err) {
  bool ok = false;
  const ulab_status st = guarded([&] {
    const ulab::GradcheckResult res = ulab::gradcheck(seed);
    if (out_dual_err) *out_dual_err = res.max_dual_rel_err;
    if (out_fd_err) *out_fd_err = res.max_fd_rel_err;
    ok = res.ok;
  });
  if (st != ULAB_OK) return st;
  if (!ok) {
    g_last_error = "gradient check exceeded tolerance";
    return ULAB_ERR_NUMERIC;
  }
  return ULAB_OK;
}

}  // extern "C"
