#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "ulab.h"
#include "ulab/checkpoint.hpp"
#include "ulab/dataset.hpp"

namespace {

void write_micro_corpus(const std::string& path) {
  ulab::Dataset ds;
  ds.examples.push_back({"f0", "fa", "x7x7", ulab::Split::Forget, ulab::Task::Qa});
  ds.examples.push_back({"f1", "fb", "y3y3", ulab::Split::Forget, ulab::Task::Qa});
  ds.examples.push_back({"r0", "ra", "pp", ulab::Split::Retain, ulab::Task::Qa});
  ds.examples.push_back({"r1", "rb", "qq", ulab::Split::Retain, ulab::Task::Qa});
  ds.examples.push_back({"r2", "rc", "u. v.", ulab::Split::Retain, ulab::Task::Qa});
  ds.examples.push_back({"h0", "ha", "m5m5", ulab::Split::Holdout, ulab::Task::Qa});
  ds.examples.push_back({"g0", "ga", "ss", ulab::Split::EvalGeneral, ulab::Task::Completion});
  ulab::save_dataset(ds, path);
}

const char* kMicroConfig = R"({
  "model": {"d_model": 16, "n_layers": 1, "n_heads": 2, "d_ff": 32, "ctx": 32},
  "unlearn": {"epochs": 2, "lr": 0.005, "batch_size": 8, "use_augmentation": false}
})";

}  // namespace

TEST_CASE("config handles: create, load, override, serialize") {
  fixtures::TmpDir tmp;

  ulab_config* cfg = nullptr;
  REQUIRE(ulab_config_create(&cfg) == ULAB_OK);
  CHECK(ulab_config_override(cfg, "lr", "0.01") == ULAB_OK);
  CHECK(ulab_config_override(cfg, "bogus", "1") == ULAB_ERR_VALIDATION);
  CHECK(std::string(ulab_last_error()).find("bogus") != std::string::npos);
  CHECK(ulab_config_override(cfg, "alpha", "-2") == ULAB_ERR_VALIDATION);

  char* json_text = nullptr;
  REQUIRE(ulab_config_to_json(cfg, &json_text) == ULAB_OK);
  CHECK(std::string(json_text).find("\"lr\": 0.01") != std::string::npos);
  ulab_string_free(json_text);
  ulab_config_free(cfg);

  const std::string cfg_path = tmp.file("cfg.json");
  fixtures::write_text(cfg_path, kMicroConfig);
  ulab_config* loaded = nullptr;
  REQUIRE(ulab_config_load(cfg_path.c_str(), &loaded) == ULAB_OK);
  ulab_config_free(loaded);

  ulab_config* missing = nullptr;
  CHECK(ulab_config_load(tmp.file("nope.json").c_str(), &missing) == ULAB_ERR_IO);
  CHECK(ulab_config_create(nullptr) == ULAB_ERR_VALIDATION);
}

TEST_CASE("dataset handles: load, counts, augment, save") {
  fixtures::TmpDir tmp;
  const std::string data = tmp.file("data.jsonl");
  write_micro_corpus(data);

  ulab_dataset* ds = nullptr;
  REQUIRE(ulab_dataset_load(data.c_str(), &ds) == ULAB_OK);
  size_t n = 0;
  CHECK(ulab_dataset_count(ds, "forget", &n) == ULAB_OK);
  CHECK(n == 2);
  CHECK(ulab_dataset_count(ds, "retain", &n) == ULAB_OK);
  CHECK(n == 3);
  CHECK(ulab_dataset_count(ds, "nope", &n) == ULAB_ERR_VALIDATION);

  ulab_dataset* aug = nullptr;
  REQUIRE(ulab_dataset_augment(ds, &aug) == ULAB_OK);
  const std::string out = tmp.file("aug.jsonl");
  CHECK(ulab_dataset_save(aug, out.c_str()) == ULAB_OK);
  CHECK(std::filesystem::exists(out));
  ulab_dataset_free(aug);
  ulab_dataset_free(ds);

  ulab_dataset* bad = nullptr;
  const std::string bad_path = tmp.file("bad.jsonl");
  fixtures::write_text(bad_path, "{oops}\n");
  CHECK(ulab_dataset_load(bad_path.c_str(), &bad) == ULAB_ERR_VALIDATION);
  CHECK(std::string(ulab_last_error()).find("line 1") != std::string::npos);

  ulab_dataset* missing = nullptr;
  CHECK(ulab_dataset_load(tmp.file("missing.jsonl").c_str(), &missing) == ULAB_ERR_IO);
}

TEST_CASE("pipeline through the C surface: train, unlearn, evaluate, gradcheck") {
  fixtures::TmpDir tmp;
  const std::string data = tmp.file("data.jsonl");
  write_micro_corpus(data);
  const std::string cfg_path = tmp.file("cfg.json");
  fixtures::write_text(cfg_path, kMicroConfig);

  ulab_config* cfg = nullptr;
  REQUIRE(ulab_config_load(cfg_path.c_str(), &cfg) == ULAB_OK);
  ulab_dataset* ds = nullptr;
  REQUIRE(ulab_dataset_load(data.c_str(), &ds) == ULAB_OK);

  int log_lines = 0;
  auto log_cb = [](const char*, void* user) { ++*static_cast<int*>(user); };

  const std::string base = tmp.file("base.ulf");
  REQUIRE(ulab_train_base(cfg, ds, base.c_str(), log_cb, &log_lines) == ULAB_OK);
  CHECK(log_lines == 2);
  CHECK(std::filesystem::exists(base));
  CHECK(std::filesystem::exists(base + ".trainlog.jsonl"));
  CHECK_NOTHROW(ulab::load_checkpoint(base));

  const std::string out = tmp.file("unlearned.ulf");
  REQUIRE(ulab_unlearn(cfg, base.c_str(), ds, out.c_str(), nullptr, nullptr) == ULAB_OK);
  CHECK(std::filesystem::exists(out));
  CHECK(std::filesystem::exists(out + ".trainlog.jsonl"));

  const std::string report = tmp.file("report.json");
  double scores[4] = {-1, -1, -1, -1};
  REQUIRE(ulab_evaluate(base.c_str(), out.c_str(), ds, report.c_str(), scores) == ULAB_OK);
  CHECK(std::filesystem::exists(report));
  for (double s : scores) {
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  CHECK(scores[3] == doctest::Approx((scores[0] + scores[1] + scores[2]) / 3.0).epsilon(1e-12));

  double dual = 1.0, fd = 1.0;
  CHECK(ulab_gradcheck(7, &dual, &fd) == ULAB_OK);
  CHECK(dual <= 1e-10);
  CHECK(fd <= 1e-4);

  // missing checkpoint path surfaces as an error, not a crash
  CHECK(ulab_evaluate(tmp.file("nope.ulf").c_str(), out.c_str(), ds, nullptr, nullptr) != ULAB_OK);

  ulab_dataset_free(ds);
  ulab_config_free(cfg);
}

TEST_CASE("unlearn rejects a dataset without forget rows") {
  fixtures::TmpDir tmp;
  ulab::Dataset ds;
  ds.examples.push_back({"r0", "ra", "pp", ulab::Split::Retain, ulab::Task::Qa});
  const std::string data = tmp.file("retain_only.jsonl");
  ulab::save_dataset(ds, data);
  const std::string cfg_path = tmp.file("cfg.json");
  fixtures::write_text(cfg_path, kMicroConfig);

  ulab_config* cfg = nullptr;
  REQUIRE(ulab_config_load(cfg_path.c_str(), &cfg) == ULAB_OK);
  ulab_dataset* handle = nullptr;
  REQUIRE(ulab_dataset_load(data.c_str(), &handle) == ULAB_OK);

  const std::string base = tmp.file("base.ulf");
  CHECK(ulab_train_base(cfg, handle, base.c_str(), nullptr, nullptr) == ULAB_ERR_VALIDATION);

  ulab_dataset_free(handle);
  ulab_config_free(cfg);
}
