#include "ulab/trainer.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "ulab/adam.hpp"
#include "ulab/error.hpp"
#include "ulab/losses.hpp"

namespace ulab {

using nlohmann::json;

void TrainLog::write(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw_io("cannot open train log for writing: " + path);
  json meta{{"type", "meta"},
            {"kind", kind},
            {"dataset_digest", dataset_digest},
            {"effective_config", effective_config}};
  os << meta.dump() << "\n";
  for (const StepRecord& r : steps) {
    json line{{"type", "step"},   {"epoch", r.epoch}, {"step", r.step},
              {"task", r.task},   {"loss", r.loss},   {"ntp", r.ntp},
              {"grad_norm", r.grad_norm}};
    os << line.dump() << "\n";
  }
  if (!os) throw_io("failed writing train log: " + path);
}

namespace {

double grad_l2_norm(const std::vector<Tensor>& params) {
  double acc = 0.0;
  for (const Tensor& p : params) {
    for (double g : p.grad()) acc += g * g;
  }
  return std::sqrt(acc);
}

struct EncodeCache {
  const Dataset* ds;
  int ctx;
  std::unordered_map<const Example*, EncodedExample> cache;

  const EncodedExample& get(const Example* e) {
    auto it = cache.find(e);
    if (it != cache.end()) return it->second;
    return cache.emplace(e, encode_example(*e, ctx)).first->second;
  }

  std::vector<EncodedExample> batch(const Batch& b) {
    std::vector<EncodedExample> out;
    out.reserve(b.examples.size());
    for (const Example* e : b.examples) out.push_back(get(e));
    return out;
  }
};

void flush_on_abort(const TrainLog& log, const std::string& path) {
  if (path.empty()) return;
  try {
    log.write(path);
  } catch (...) {
    // the abort diagnostic matters more than a failed flush
  }
}

}  // namespace

TrainLog train_base(Model& model, const Dataset& ds, const RunConfig& cfg,
                    const std::string& trainlog_path, const LogFn& log) {
  cfg.unlearn.validate();
  if (ds.count(Split::Forget) == 0 || ds.count(Split::Retain) == 0) {
    throw_validation("train_base: dataset needs both retain and forget examples");
  }

  TrainLog tl;
  tl.kind = "train-base";
  tl.dataset_digest = ds.content_digest;
  tl.effective_config = run_config_to_json(cfg);

  EncodeCache enc{&ds, model.config().ctx, {}};
  std::vector<Tensor> trainable = model.trainable();
  Adam opt(trainable);

  try {
    for (int epoch = 0; epoch < cfg.unlearn.epochs; ++epoch) {
      double loss_sum = 0.0;
      int batch_count = 0;
      for (const Batch& b : make_batches(ds, cfg.unlearn.batch_size, cfg.unlearn.seed,
                                         static_cast<std::uint64_t>(epoch))) {
        const auto encoded = enc.batch(b);
        Tape tape;
        Tensor loss = ntp_loss(&tape, model, encoded);
        tape.backward(loss);
        const std::string task = to_string(b.split);
        opt.step(trainable, cfg.unlearn.lr, "epoch " + std::to_string(epoch) + " task " + task);
        const double lv = loss.scalar_value();
        tl.steps.push_back({epoch, static_cast<int>(opt.step_count()), task, lv, lv,
                            grad_l2_norm(trainable)});
        loss_sum += lv;
        ++batch_count;
      }
      if (log && batch_count > 0) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "epoch %d/%d: mean ntp loss %.4f", epoch + 1,
                      cfg.unlearn.epochs, loss_sum / batch_count);
        log(buf);
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Numeric) flush_on_abort(tl, trainlog_path);
    throw;
  }

  if (!trainlog_path.empty()) tl.write(trainlog_path);
  return tl;
}

TrainLog run_unlearn(Model& model, const Dataset& ds, const RunConfig& cfg,
                     const std::string& trainlog_path, const LogFn& log) {
  cfg.unlearn.validate();
  if (ds.count(Split::Forget) == 0) {
    throw_validation("run_unlearn: forget split is empty");
  }
  if (cfg.unlearn.use_retain && ds.count(Split::Retain) == 0) {
    throw_validation("run_unlearn: use_retain requires a nonempty retain split");
  }

  Dataset effective = ds;
  if (cfg.unlearn.use_negative_response) effective = apply_negative_response(effective);
  if (cfg.unlearn.use_augmentation) effective = augment_resegment(effective);

  if (cfg.lora) model.attach_lora(*cfg.lora, Rng::mix(cfg.unlearn.seed, 0xA77A));

  TrainLog tl;
  tl.kind = "unlearn";
  tl.dataset_digest = ds.content_digest;
  tl.effective_config = run_config_to_json(cfg);

  EncodeCache enc{&effective, model.config().ctx, {}};
  std::vector<Tensor> trainable = model.trainable();
  Adam opt(trainable);
  Rng dropout_rng(Rng::mix(cfg.unlearn.seed, 0xD209));
  const bool training = cfg.lora.has_value() && cfg.lora->dropout > 0.0;

  try {
    for (int epoch = 0; epoch < cfg.unlearn.epochs; ++epoch) {
      double forget_sum = 0.0, forget_ntp_sum = 0.0, retain_sum = 0.0;
      int forget_n = 0, retain_n = 0;
      for (const Batch& b : make_batches(effective, cfg.unlearn.batch_size, cfg.unlearn.seed,
                                         static_cast<std::uint64_t>(epoch))) {
        if (b.split == Split::Retain && !cfg.unlearn.use_retain) continue;
        const auto encoded = enc.batch(b);
        Tape tape;
        Tensor loss, ntp;
        std::string task;
        if (b.split == Split::Forget) {
          task = "forget";
          switch (cfg.unlearn.forget_loss) {
            case ForgetLoss::Eul:
              loss = eul_loss(&tape, model, encoded, cfg.unlearn.alpha, cfg.unlearn.epsilon,
                              training, &dropout_rng, &ntp);
              break;
            case ForgetLoss::EulSquared:
              loss = eul_squared_loss(&tape, model, encoded, cfg.unlearn.alpha,
                                      cfg.unlearn.epsilon, training, &dropout_rng, &ntp);
              break;
            case ForgetLoss::GradAscent:
              loss = grad_ascent_loss(&tape, model, encoded, training, &dropout_rng, &ntp);
              break;
            case ForgetLoss::Ntp:
              loss = ntp_loss(&tape, model, encoded, training, &dropout_rng);
              ntp = loss;
              break;
          }
        } else {
          task = "retain";
          loss = ntp_loss(&tape, model, encoded, training, &dropout_rng);
          ntp = loss;
        }
        tape.backward(loss);
        opt.step(trainable, cfg.unlearn.lr, "epoch " + std::to_string(epoch) + " task " + task);
        const double lv = loss.scalar_value(), nv = ntp.scalar_value();
        tl.steps.push_back({epoch, static_cast<int>(opt.step_count()), task, lv, nv,
                            grad_l2_norm(trainable)});
        if (b.split == Split::Forget) {
          forget_sum += lv;
          forget_ntp_sum += nv;
          ++forget_n;
        } else {
          retain_sum += lv;
          ++retain_n;
        }
      }
      if (log) {
        char buf[192];
        std::snprintf(buf, sizeof buf,
                      "epoch %d/%d: forget loss %.4f (ntp %.4f) over %d batches, retain loss %.4f over %d batches",
                      epoch + 1, cfg.unlearn.epochs, forget_n ? forget_sum / forget_n : 0.0,
                      forget_n ? forget_ntp_sum / forget_n : 0.0, forget_n,
                      retain_n ? retain_sum / retain_n : 0.0, retain_n);
        log(buf);
      }
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Numeric) flush_on_abort(tl, trainlog_path);
    throw;
  }

  if (model.has_lora()) model.merge_lora();
  if (!trainlog_path.empty()) tl.write(trainlog_path);
  return tl;
}

}  // namespace ulab
