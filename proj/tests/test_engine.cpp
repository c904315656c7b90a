#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "ulab/adam.hpp"
#include "ulab/checkpoint.hpp"
#include "ulab/config.hpp"
#include "ulab/gradcheck.hpp"
#include "ulab/losses.hpp"
#include "ulab/trainer.hpp"

using namespace ulab;

namespace {

ModelConfig tiny_config() {
  ModelConfig mc;
  mc.d_model = 16;
  mc.n_layers = 1;
  mc.n_heads = 2;
  mc.d_ff = 32;
  mc.ctx = 32;
  return mc;
}

Dataset counting_corpus(int retain, int forget) {
  Dataset ds;
  for (int i = 0; i < retain; ++i) {
    ds.examples.push_back({"r" + std::to_string(i), "q" + std::to_string(i), "a.", Split::Retain, Task::Qa});
  }
  for (int i = 0; i < forget; ++i) {
    ds.examples.push_back({"f" + std::to_string(i), "s" + std::to_string(i), "b.", Split::Forget, Task::Qa});
  }
  ds.content_digest = "counting";
  return ds;
}

std::string file_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("reciprocal composition reproduces the loss formula") {
  // alpha / (L + eps) at L = 1 tends to alpha as eps -> 0
  Tensor l = Tensor::scalar(1.0);
  CHECK(scale(nullptr, reciprocal(nullptr, add_const(nullptr, l, 1e-12)), 1.0).scalar_value() ==
        doctest::Approx(1.0).epsilon(1e-9));
  // squared variant at L = 0.5 gives (1/0.5)^2 = 4
  Tensor half = Tensor::scalar(0.5);
  Tensor e = scale(nullptr, reciprocal(nullptr, add_const(nullptr, half, 1e-12)), 1.0);
  CHECK(mul(nullptr, e, e).scalar_value() == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("eul_loss on the uniform model equals 1/(ln 260 + eps)") {
  Model model(tiny_config(), 31);
  Tensor head_w = model.param("head.w");
  for (double& v : head_w.mutable_values()) v = 0.0;
  std::vector<EncodedExample> batch = {encode_io("ab", "c", 32)};
  Tensor ntp;
  const double eul = eul_loss(nullptr, model, batch, 1.0, 1e-3, false, nullptr, &ntp).scalar_value();
  CHECK(ntp.scalar_value() == doctest::Approx(std::log(260.0)).epsilon(1e-14));
  CHECK(eul == doctest::Approx(1.0 / (std::log(260.0) + 1e-3)).epsilon(1e-14));
}

TEST_CASE("eul gradient identity: dual backward passes agree to 1e-10") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const GradcheckResult res = gradcheck(seed);
    CHECK(res.max_dual_rel_err <= 1e-10);
    CHECK(res.max_fd_rel_err <= 1e-4);
    CHECK(res.ok);
  }
}

TEST_CASE("gradcheck negative control: a corrupted gradient trips the check") {
  GradcheckOptions opts;
  opts.corrupt_for_test = true;
  const GradcheckResult res = gradcheck(4, opts);
  CHECK(res.max_dual_rel_err > 1e-10);
  CHECK_FALSE(res.ok);
}

TEST_CASE("eul_squared follows the chain rule against eul") {
  Model model(tiny_config(), 32);
  std::vector<EncodedExample> batch = {encode_io("pq", "rst", 32)};
  const double alpha = 1.3, eps = 1e-3;

  std::vector<double> eul_grad;
  double eul_val = 0.0;
  {
    Tape tape;
    Tensor e = eul_loss(&tape, model, batch, alpha, eps);
    tape.backward(e);
    eul_val = e.scalar_value();
    for (const Tensor& p : model.trainable()) {
      eul_grad.insert(eul_grad.end(), p.grad().begin(), p.grad().end());
    }
  }
  std::vector<double> sq_grad;
  double sq_val = 0.0;
  {
    Tape tape;
    Tensor e2 = eul_squared_loss(&tape, model, batch, alpha, eps);
    tape.backward(e2);
    sq_val = e2.scalar_value();
    for (const Tensor& p : model.trainable()) {
      sq_grad.insert(sq_grad.end(), p.grad().begin(), p.grad().end());
    }
  }
  CHECK(sq_val == doctest::Approx(eul_val * eul_val).epsilon(1e-13));
  double grad_scale = 0.0;
  for (std::size_t i = 0; i < eul_grad.size(); ++i) {
    grad_scale = std::max({grad_scale, std::abs(2.0 * eul_val * eul_grad[i]), std::abs(sq_grad[i])});
  }
  const double zero_floor = 1e-14 * std::max(1.0, grad_scale);
  for (std::size_t i = 0; i < eul_grad.size(); ++i) {
    const double want = 2.0 * eul_val * eul_grad[i];
    if (std::max(std::abs(want), std::abs(sq_grad[i])) < zero_floor) continue;
    const double scale = std::max(std::abs(want), std::abs(sq_grad[i]));
    if (want != sq_grad[i]) CHECK(std::abs(want - sq_grad[i]) / scale <= 1e-10);
  }
}

TEST_CASE("grad_ascent_loss negates value and gradient exactly") {
  Model model(tiny_config(), 33);
  Tensor head_w = model.param("head.w");
  for (double& v : head_w.mutable_values()) v = 0.0;
  std::vector<EncodedExample> batch = {encode_io("ab", "cd", 32)};

  Tensor ntp_ref;
  {
    Tape tape;
    Tensor ga = grad_ascent_loss(&tape, model, batch, false, nullptr, &ntp_ref);
    tape.backward(ga);
    CHECK(ga.scalar_value() == doctest::Approx(-std::log(260.0)).epsilon(1e-14));
  }
  std::vector<double> ga_grad;
  for (const Tensor& p : model.trainable()) {
    ga_grad.insert(ga_grad.end(), p.grad().begin(), p.grad().end());
  }
  {
    Tape tape;
    tape.backward(ntp_loss(&tape, model, batch));
  }
  std::size_t off = 0;
  for (const Tensor& p : model.trainable()) {
    for (double g : p.grad()) {
      CHECK(ga_grad[off] == -g);
      ++off;
    }
  }
}

TEST_CASE("descending the ascent loss increases ntp loss after one step") {
  Model model(tiny_config(), 34);
  std::vector<EncodedExample> batch = {encode_io("ab", "cd", 32)};
  const double before = ntp_loss(nullptr, model, batch).scalar_value();
  std::vector<Tensor> params = model.trainable();
  Adam opt(params);
  Tape tape;
  Tensor ga = grad_ascent_loss(&tape, model, batch);
  tape.backward(ga);
  opt.step(params, 1e-4);
  const double after = ntp_loss(nullptr, model, batch).scalar_value();
  CHECK(after > before);
}

TEST_CASE("eul self-damping: the multiplier is strictly decreasing in L") {
  const double alpha = 1.0, eps = 1e-3;
  const double grid[] = {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0};
  double prev = std::numeric_limits<double>::infinity();
  for (double l : grid) {
    const double mult = alpha / ((l + eps) * (l + eps));
    CHECK(mult < prev);
    prev = mult;
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  std::vector<Tensor> params = {Tensor::from_values({3}, {1.0, -2.0, 0.5})};
  Adam opt(params);
  Tape tape;
  Tensor loss = scale(&tape, sum_all(&tape, params[0]), 0.0);
  tape.backward(loss);
  opt.step(params, 0.1);
  CHECK(params[0].values()[0] == 1.0);
  CHECK(params[0].values()[1] == -2.0);
  CHECK(params[0].values()[2] == 0.5);
}

TEST_CASE("adam: first-step magnitude is bounded by lr") {
  std::vector<Tensor> params = {Tensor::from_values({2}, {1.0, 1.0})};
  Adam opt(params);
  Tape tape;
  Tensor weights = Tensor::from_values({2}, {3.0, -0.001});
  tape.backward(sum_all(&tape, mul(&tape, params[0], weights)));
  const double lr = 0.05;
  opt.step(params, lr);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(params[0].values()[static_cast<std::size_t>(i)] - 1.0) <= lr * (1.0 + 1e-8) + 1e-15);
  }
  // a healthy-sized gradient moves the parameter by essentially lr
  CHECK(std::abs(params[0].values()[0] - 1.0) == doctest::Approx(lr).epsilon(1e-6));
}

TEST_CASE("adam: 10 steps on x^2 match the scalar oracle to 1e-12") {
  std::vector<Tensor> params = {Tensor::scalar(1.0)};
  Adam opt(params);
  oracle::ScalarAdam ref;
  double x_ref = 1.0;
  for (int step = 0; step < 10; ++step) {
    Tape tape;
    tape.backward(mul(&tape, params[0], params[0]));
    opt.step(params, 0.1);
    x_ref = ref.update(x_ref, 2.0 * x_ref, 0.1);
    CHECK(params[0].values()[0] == doctest::Approx(x_ref).epsilon(1e-12));
  }
  CHECK(opt.step_count() == 10);
}

TEST_CASE("adam: non-finite gradient aborts with a diagnostic") {
  std::vector<Tensor> params = {Tensor::scalar(1.0)};
  Adam opt(params);
  params[0].data()->grad = {std::numeric_limits<double>::quiet_NaN()};
  CHECK_THROWS_AS(opt.step(params, 0.1, "task forget"), Error);
  try {
    params[0].data()->grad = {std::numeric_limits<double>::infinity()};
    opt.step(params, 0.1, "task forget");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
    CHECK(std::string(e.what()).find("forget") != std::string::npos);
  }
}

TEST_CASE("run_unlearn with zero epochs writes a byte-identical checkpoint") {
  fixtures::TmpDir tmp;
  RunConfig cfg;
  cfg.model = tiny_config();
  cfg.unlearn.epochs = 0;
  cfg.unlearn.use_augmentation = false;
  cfg.lora = LoraConfig{};  // attach+merge must still be the identity

  Model model(cfg.model, 55);
  const std::string before = tmp.file("before.ulf");
  save_checkpoint(model, before);

  Dataset ds = counting_corpus(4, 2);
  run_unlearn(model, ds, cfg);
  const std::string after = tmp.file("after.ulf");
  save_checkpoint(model, after);
  CHECK(file_bytes(before) == file_bytes(after));
}

TEST_CASE("run_unlearn: 64 retain + 32 forget at batch 32 gives steps F,R,R") {
  RunConfig cfg;
  cfg.model = tiny_config();
  cfg.unlearn.epochs = 1;
  cfg.unlearn.batch_size = 32;
  cfg.unlearn.use_augmentation = false;
  Model model(cfg.model, 56);
  Dataset ds = counting_corpus(64, 32);
  const TrainLog log = run_unlearn(model, ds, cfg);
  REQUIRE(log.steps.size() == 3);
  CHECK(log.steps[0].task == "forget");
  CHECK(log.steps[1].task == "retain");
  CHECK(log.steps[2].task == "retain");
  CHECK(log.steps[0].step == 1);
  CHECK(log.steps[2].step == 3);
}

TEST_CASE("run_unlearn replays are bit-identical") {
  fixtures::TmpDir tmp;
  RunConfig cfg;
  cfg.model = tiny_config();
  cfg.unlearn.epochs = 2;
  cfg.unlearn.batch_size = 8;
  cfg.unlearn.seed = 99;
  cfg.lora = LoraConfig{};  // exercise adapter dropout determinism too
  Dataset ds = counting_corpus(20, 10);

  Model base(cfg.model, 57);
  const std::string out1 = tmp.file("a.ulf"), out2 = tmp.file("b.ulf");
  Model m1 = base.clone();
  run_unlearn(m1, ds, cfg);
  save_checkpoint(m1, out1);
  Model m2 = base.clone();
  run_unlearn(m2, ds, cfg);
  save_checkpoint(m2, out2);
  CHECK(file_bytes(out1) == file_bytes(out2));
}

TEST_CASE("run_unlearn validates its preconditions") {
  RunConfig cfg;
  cfg.model = tiny_config();
  Model model(cfg.model, 58);
  Dataset no_forget = counting_corpus(4, 0);
  CHECK_THROWS_AS(run_unlearn(model, no_forget, cfg), Error);

  Dataset no_retain = counting_corpus(0, 4);
  cfg.unlearn.use_retain = true;
  CHECK_THROWS_AS(run_unlearn(model, no_retain, cfg), Error);
}

TEST_CASE("run_unlearn skips retain batches when RD is off") {
  RunConfig cfg;
  cfg.model = tiny_config();
  cfg.unlearn.epochs = 1;
  cfg.unlearn.batch_size = 8;
  cfg.unlearn.use_retain = false;
  cfg.unlearn.use_augmentation = false;
  Model model(cfg.model, 59);
  Dataset ds = counting_corpus(16, 8);
  const TrainLog log = run_unlearn(model, ds, cfg);
  CHECK(log.steps.size() == 1);
  for (const StepRecord& r : log.steps) CHECK(r.task == "forget");
}

TEST_CASE("task isolation: the loss applied to a batch depends only on its split") {
  RunConfig cfg;
  cfg.model = tiny_config();
  cfg.unlearn.epochs = 2;
  cfg.unlearn.batch_size = 8;
  cfg.unlearn.use_augmentation = false;
  cfg.unlearn.alpha = 1.25;
  Model model(cfg.model, 60);
  Dataset ds = counting_corpus(16, 8);
  const TrainLog log = run_unlearn(model, ds, cfg);
  CHECK(!log.steps.empty());
  for (const StepRecord& r : log.steps) {
    if (r.task == "forget") {
      // EUL relation holds on every forget record
      CHECK(r.loss * (r.ntp + cfg.unlearn.epsilon) ==
            doctest::Approx(cfg.unlearn.alpha).epsilon(1e-12));
    } else {
      CHECK(r.task == "retain");
      CHECK(r.loss == r.ntp);
    }
    CHECK(std::isfinite(r.loss));
  }
}

TEST_CASE("train log file carries the effective config and step records") {
  fixtures::TmpDir tmp;
  RunConfig cfg;
  cfg.model = tiny_config();
  cfg.unlearn.epochs = 1;
  cfg.unlearn.batch_size = 16;
  cfg.unlearn.use_augmentation = false;
  Model model(cfg.model, 61);
  Dataset ds = counting_corpus(8, 4);
  const std::string path = tmp.file("log.jsonl");
  run_unlearn(model, ds, cfg, path);

  std::ifstream is(path);
  std::string line;
  REQUIRE(std::getline(is, line));
  const auto meta = nlohmann::json::parse(line);
  CHECK(meta.at("type") == "meta");
  CHECK(meta.at("kind") == "unlearn");
  CHECK(meta.at("effective_config").at("unlearn").at("batch_size") == 16);
  int steps = 0;
  while (std::getline(is, line)) {
    const auto rec = nlohmann::json::parse(line);
    CHECK(rec.at("type") == "step");
    CHECK(rec.at("task").is_string());
    ++steps;
  }
  CHECK(steps == 2);
}

TEST_CASE("train_base memorizes the counting corpus quickly") {
  RunConfig cfg;
  cfg.model = tiny_config();
  cfg.unlearn.epochs = 25;
  cfg.unlearn.batch_size = 8;
  cfg.unlearn.lr = 5e-3;
  Model model(cfg.model, 62);
  Dataset ds = counting_corpus(6, 3);
  const TrainLog log = train_base(model, ds, cfg);
  CHECK(log.kind == "train-base");
  CHECK(!log.steps.empty());
  CHECK(log.steps.back().loss < 0.5);

  Dataset empty;
  CHECK_THROWS_AS(train_base(model, empty, cfg), Error);
}

TEST_CASE("config defaults and json round-trip") {
  RunConfig cfg;
  CHECK(cfg.unlearn.alpha == 1.0);
  CHECK(cfg.unlearn.epsilon == 1e-3);
  CHECK(cfg.unlearn.lr == 1e-4);
  CHECK(cfg.unlearn.epochs == 5);
  CHECK(cfg.unlearn.batch_size == 32);
  CHECK(cfg.unlearn.forget_loss == ForgetLoss::Eul);
  CHECK(cfg.model.d_model == 64);
  CHECK(cfg.model.n_layers == 2);
  CHECK(cfg.model.n_heads == 4);
  CHECK(cfg.model.d_ff == 256);
  CHECK(cfg.model.ctx == 128);
  CHECK_FALSE(cfg.lora.has_value());

  const RunConfig back = run_config_from_json(run_config_to_json(cfg));
  CHECK(back.unlearn.lr == cfg.unlearn.lr);
  CHECK(back.unlearn.seed == cfg.unlearn.seed);
}

TEST_CASE("config file loading rejects unknown keys") {
  fixtures::TmpDir tmp;
  const std::string good = tmp.file("good.json");
  fixtures::write_text(good, R"({"unlearn":{"lr":0.001,"forget_loss":"GRAD_ASCENT"},"lora":{"rank":4}})");
  const RunConfig cfg = load_run_config(good);
  CHECK(cfg.unlearn.lr == 0.001);
  CHECK(cfg.unlearn.forget_loss == ForgetLoss::GradAscent);
  REQUIRE(cfg.lora.has_value());
  CHECK(cfg.lora->rank == 4);
  CHECK(cfg.lora->alpha == 32.0);
  CHECK(cfg.lora->dropout == 0.05);

  const std::string bad = tmp.file("bad.json");
  fixtures::write_text(bad, R"({"unlearn":{"learning_rate":0.001}})");
  CHECK_THROWS_WITH_AS(load_run_config(bad), doctest::Contains("unknown key"), Error);

  const std::string invalid = tmp.file("invalid.json");
  fixtures::write_text(invalid, R"({"unlearn":{"alpha":-1}})");
  CHECK_THROWS_AS(load_run_config(invalid), Error);
}

TEST_CASE("config overrides parse and win") {
  RunConfig cfg;
  apply_override(cfg, "lr", "0.01");
  apply_override(cfg, "forget_loss", "EUL_SQUARED");
  apply_override(cfg, "use_retain", "false");
  apply_override(cfg, "epochs", "7");
  CHECK(cfg.unlearn.lr == 0.01);
  CHECK(cfg.unlearn.forget_loss == ForgetLoss::EulSquared);
  CHECK_FALSE(cfg.unlearn.use_retain);
  CHECK(cfg.unlearn.epochs == 7);
  CHECK_THROWS_AS(apply_override(cfg, "nope", "1"), Error);
  CHECK_THROWS_AS(apply_override(cfg, "lr", "fast"), Error);
  CHECK_THROWS_AS(apply_override(cfg, "use_retain", "yep"), Error);
}
