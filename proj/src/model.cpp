#include "ulab/model.hpp"

#include <algorithm>
#include <cmath>

#include "ulab/error.hpp"

namespace ulab {

namespace {
constexpr double kLnEps = 1e-5;
}

void ModelConfig::validate() const {
  if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || d_ff <= 0) {
    throw_validation("model config: dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    throw_validation("model config: d_model must be divisible by n_heads");
  }
  if (ctx < 8) throw_validation("model config: ctx must be at least 8");
  if (init_std <= 0) throw_validation("model config: init_std must be positive");
}

void LoraConfig::validate() const {
  if (rank < 1) throw_validation("lora config: rank must be at least 1");
  if (dropout < 0.0 || dropout >= 1.0) {
    throw_validation("lora config: dropout must lie in [0, 1)");
  }
  if (alpha <= 0) throw_validation("lora config: alpha must be positive");
  if (targets.empty()) throw_validation("lora config: target set is empty");
}

Model::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  const int d = cfg_.d_model, f = cfg_.d_ff, v = tok::VOCAB_SIZE;
  auto w = [&](std::string name, std::vector<int> shape) {
    params_.push_back({std::move(name), Tensor::randn(std::move(shape), cfg_.init_std, rng)});
  };
  auto zeros = [&](std::string name, std::vector<int> shape) {
    params_.push_back({std::move(name), Tensor::zeros(std::move(shape))});
  };
  auto ones = [&](std::string name, std::vector<int> shape) {
    params_.push_back({std::move(name), Tensor::full(std::move(shape), 1.0)});
  };

  w("tok_emb", {v, d});
  w("pos_emb", {cfg_.ctx, d});
  for (int i = 0; i < cfg_.n_layers; ++i) {
    const std::string p = "layers." + std::to_string(i) + ".";
    ones(p + "ln1.gamma", {d});
    zeros(p + "ln1.beta", {d});
    w(p + "attn.wq", {d, d});
    zeros(p + "attn.bq", {d});
    w(p + "attn.wk", {d, d});
    zeros(p + "attn.bk", {d});
    w(p + "attn.wv", {d, d});
    zeros(p + "attn.bv", {d});
    w(p + "attn.wo", {d, d});
    zeros(p + "attn.bo", {d});
    ones(p + "ln2.gamma", {d});
    zeros(p + "ln2.beta", {d});
    w(p + "ff.w1", {d, f});
    zeros(p + "ff.b1", {f});
    w(p + "ff.w2", {f, d});
    zeros(p + "ff.b2", {d});
  }
  ones("ln_f.gamma", {d});
  zeros("ln_f.beta", {d});
  w("head.w", {d, v});
  zeros("head.b", {v});
}

const Tensor& Model::param(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  for (const auto& p : lora_params_) {
    if (p.name == name) return p.tensor;
  }
  throw_validation("unknown parameter: " + name);
}

std::vector<NamedParam> Model::manifest() const {
  std::vector<NamedParam> all = params_;
  all.insert(all.end(), lora_params_.begin(), lora_params_.end());
  return all;
}

std::vector<Tensor> Model::trainable() const {
  std::vector<Tensor> out;
  if (lora_cfg_) {
    for (const auto& p : lora_params_) out.push_back(p.tensor);
  } else {
    for (const auto& p : params_) out.push_back(p.tensor);
  }
  return out;
}

std::size_t Model::trainable_count() const {
  std::size_t n = 0;
  for (const Tensor& t : trainable()) n += t.size();
  return n;
}

Tensor Model::linear(Tape* tape, const Tensor& x, const std::string& weight_name, const Tensor& w,
                     const Tensor& bias, bool training, Rng* rng) const {
  Tensor y = add_row(tape, matmul(tape, x, w), bias);
  auto it = adapters_.find(weight_name);
  if (it == adapters_.end()) return y;
  const Adapter& ad = it->second;
  Tensor xin = x;
  if (training && lora_cfg_->dropout > 0.0) {
    if (!rng) throw_validation("training forward with LoRA dropout requires an RNG");
    xin = dropout(tape, x, lora_cfg_->dropout, *rng);
  }
  Tensor delta = matmul(tape, matmul(tape, xin, ad.a), ad.b);
  const double s = lora_cfg_->alpha / static_cast<double>(lora_cfg_->rank);
  return add(tape, y, scale(tape, delta, s));
}

Tensor Model::forward(Tape* tape, std::span<const int> tokens, bool training, Rng* rng) const {
  if (tokens.empty()) throw_validation("forward: empty token sequence");
  if (static_cast<int>(tokens.size()) > cfg_.ctx) {
    throw_validation("forward: sequence length " + std::to_string(tokens.size()) +
                     " exceeds ctx " + std::to_string(cfg_.ctx));
  }
  const int t = static_cast<int>(tokens.size());
  const int heads = cfg_.n_heads;
  const int dh = cfg_.d_model / heads;

  std::vector<int> pos(t);
  for (int i = 0; i < t; ++i) pos[i] = i;

  Tensor x = add(tape, embedding(tape, param("tok_emb"), tokens),
                 embedding(tape, param("pos_emb"), pos));

  for (int li = 0; li < cfg_.n_layers; ++li) {
    const std::string p = "layers." + std::to_string(li) + ".";
    Tensor h = layer_norm(tape, x, param(p + "ln1.gamma"), param(p + "ln1.beta"), kLnEps);
    Tensor q = linear(tape, h, p + "attn.wq", param(p + "attn.wq"), param(p + "attn.bq"), training, rng);
    Tensor k = linear(tape, h, p + "attn.wk", param(p + "attn.wk"), param(p + "attn.bk"), training, rng);
    Tensor v = linear(tape, h, p + "attn.wv", param(p + "attn.wv"), param(p + "attn.bv"), training, rng);

    std::vector<Tensor> head_outs;
    head_outs.reserve(heads);
    for (int hi = 0; hi < heads; ++hi) {
      Tensor qh = slice_cols(tape, q, hi * dh, (hi + 1) * dh);
      Tensor kh = slice_cols(tape, k, hi * dh, (hi + 1) * dh);
      Tensor vh = slice_cols(tape, v, hi * dh, (hi + 1) * dh);
      Tensor scores = scale(tape, matmul(tape, qh, transpose(tape, kh)), 1.0 / std::sqrt(dh));
      Tensor probs = causal_softmax(tape, scores);
      head_outs.push_back(matmul(tape, probs, vh));
    }
    Tensor cat = concat_cols(tape, head_outs);
    Tensor attn_out = linear(tape, cat, p + "attn.wo", param(p + "attn.wo"), param(p + "attn.bo"), training, rng);
    x = add(tape, x, attn_out);

    Tensor h2 = layer_norm(tape, x, param(p + "ln2.gamma"), param(p + "ln2.beta"), kLnEps);
    Tensor ff1 = gelu(tape, linear(tape, h2, p + "ff.w1", param(p + "ff.w1"), param(p + "ff.b1"), training, rng));
    Tensor ff2 = linear(tape, ff1, p + "ff.w2", param(p + "ff.w2"), param(p + "ff.b2"), training, rng);
    x = add(tape, x, ff2);
  }

  x = layer_norm(tape, x, param("ln_f.gamma"), param("ln_f.beta"), kLnEps);
  return add_row(tape, matmul(tape, x, param("head.w")), param("head.b"));
}

void Model::attach_lora(const LoraConfig& cfg, std::uint64_t seed) {
  if (lora_cfg_) throw_validation("lora_attach: adapters already attached");
  cfg.validate();
  Rng rng(seed);
  std::vector<std::string> valid = LoraConfig::default_targets();
  std::vector<std::string> resolved;
  for (const std::string& t : cfg.targets) {
    if (std::find(valid.begin(), valid.end(), t) == valid.end()) {
      throw_validation("lora_attach: unknown target layer \"" + t + "\"");
    }
  }
  lora_cfg_ = cfg;
  for (int li = 0; li < cfg_.n_layers; ++li) {
    const std::string p = "layers." + std::to_string(li) + ".";
    for (const std::string& t : cfg.targets) {
      const std::string wname = p + t;
      const Tensor& w = param(wname);
      const int in = w.dim(0), out = w.dim(1);
      Adapter ad;
      ad.a = Tensor::randn({in, cfg.rank}, 0.02, rng);
      ad.b = Tensor::zeros({cfg.rank, out});
      lora_params_.push_back({wname + ".lora_a", ad.a});
      lora_params_.push_back({wname + ".lora_b", ad.b});
      adapters_[wname] = std::move(ad);
    }
  }
}

void Model::merge_lora() {
  if (!lora_cfg_) throw_validation("lora_merge: no adapters attached");
  const double s = lora_cfg_->alpha / static_cast<double>(lora_cfg_->rank);
  for (auto& [wname, ad] : adapters_) {
    Tensor delta = scale(nullptr, matmul(nullptr, ad.a, ad.b), s);
    for (auto& p : params_) {
      if (p.name == wname) {
        auto w = p.tensor.mutable_values();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += delta.values()[i];
        break;
      }
    }
  }
  adapters_.clear();
  lora_params_.clear();
  lora_cfg_.reset();
}

Model Model::clone() const {
  Model m;
  m.cfg_ = cfg_;
  m.lora_cfg_ = lora_cfg_;
  auto copy_tensor = [](const Tensor& t) {
    return Tensor::from_values(t.shape(), {t.values().begin(), t.values().end()});
  };
  for (const auto& p : params_) m.params_.push_back({p.name, copy_tensor(p.tensor)});
  for (const auto& p : lora_params_) m.lora_params_.push_back({p.name, copy_tensor(p.tensor)});
  for (const auto& p : m.lora_params_) {
    const bool is_a = p.name.ends_with(".lora_a");
    const std::string wname = p.name.substr(0, p.name.size() - 7);
    if (is_a) {
      m.adapters_[wname].a = p.tensor;
    } else {
      m.adapters_[wname].b = p.tensor;
    }
  }
  return m;
}

std::vector<int> greedy_decode(const Model& model, std::span<const int> prompt_tokens, int max_new) {
  if (prompt_tokens.empty() || prompt_tokens.back() != tok::SEP) {
    throw_validation("greedy_decode: prompt must end with SEP");
  }
  if (static_cast<int>(prompt_tokens.size()) > model.config().ctx) {
    throw_validation("greedy_decode: prompt exceeds ctx");
  }
  std::vector<int> seq(prompt_tokens.begin(), prompt_tokens.end());
  std::vector<int> generated;
  while (static_cast<int>(generated.size()) < max_new &&
         static_cast<int>(seq.size()) < model.config().ctx) {
    Tensor logits = model.forward(nullptr, seq);
    const int t = logits.dim(0) - 1, v = logits.dim(1);
    int best = 0;
    double best_val = logits.at(t, 0);
    for (int j = 1; j < v; ++j) {
      const double val = logits.at(t, j);
      if (val > best_val) {
        best = j;
        best_val = val;
      }
    }
    generated.push_back(best);
    seq.push_back(best);
    if (best == tok::EOS) break;
  }
  return generated;
}

}  // namespace ulab
