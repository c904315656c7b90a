#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ulab/ops.hpp"
#include "ulab/tensor.hpp"
#include "ulab/tokenizer.hpp"

namespace ulab {

struct ModelConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  int ctx = 128;
  double init_std = 0.02;

  void validate() const;
};

struct LoraConfig {
  int rank = 8;
  double alpha = 32.0;
  double dropout = 0.05;
  // per-layer weight suffixes; resolved against every decoder block
  std::vector<std::string> targets = default_targets();

  static std::vector<std::string> default_targets() {
    return {"attn.wq", "attn.wk", "attn.wv", "attn.wo", "ff.w1", "ff.w2"};
  }
  void validate() const;
};

struct NamedParam {
  std::string name;
  Tensor tensor;
};

// Decoder-only transformer over the byte vocabulary: learned token and
// position embeddings, pre-norm blocks (LN -> causal MHA -> residual,
// LN -> GELU feed-forward -> residual), final LN, projection to vocab.
class Model {
 public:
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  // Logits for every position, shape [T x VOCAB_SIZE]. training enables
  // adapter dropout and requires rng when LoRA dropout is configured.
  Tensor forward(Tape* tape, std::span<const int> tokens, bool training = false,
                 Rng* rng = nullptr) const;

  // Manifest order: base parameters, then adapter parameters when attached.
  std::vector<NamedParam> manifest() const;
  std::vector<Tensor> trainable() const;
  std::size_t trainable_count() const;
  const Tensor& param(const std::string& name) const;

  void attach_lora(const LoraConfig& cfg, std::uint64_t seed);
  void merge_lora();
  bool has_lora() const { return lora_cfg_.has_value(); }
  const std::optional<LoraConfig>& lora_config() const { return lora_cfg_; }

  Model clone() const;

 private:
  struct Adapter {
    Tensor a;  // [in x r]
    Tensor b;  // [r x out]
  };

  Tensor linear(Tape* tape, const Tensor& x, const std::string& weight_name, const Tensor& w,
                const Tensor& bias, bool training, Rng* rng) const;

  Model() = default;

  ModelConfig cfg_;
  std::vector<NamedParam> params_;
  std::optional<LoraConfig> lora_cfg_;
  std::vector<NamedParam> lora_params_;
  std::map<std::string, Adapter> adapters_;  // keyed by target weight name
};

// Appends argmax tokens (ties to the lowest id) until EOS, max_new tokens, or
// the context limit; returns only the generated tokens, EOS included when hit.
std::vector<int> greedy_decode(const Model& model, std::span<const int> prompt_tokens, int max_new);

}  // namespace ulab
