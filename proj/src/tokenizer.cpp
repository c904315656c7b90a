#include "ulab/tokenizer.hpp"

#include <algorithm>

#include "ulab/error.hpp"

namespace ulab {

std::vector<int> encode_bytes(std::string_view text) {
  std::vector<int> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(static_cast<int>(c));
  return out;
}

std::string decode_bytes(const std::vector<int>& tokens) {
  std::string out;
  out.reserve(tokens.size());
  for (int t : tokens) {
    if (t >= 0 && t < 256) out.push_back(static_cast<char>(static_cast<unsigned char>(t)));
  }
  return out;
}

EncodedExample encode_io(std::string_view input, std::string_view output, int ctx) {
  if (output.empty()) throw_validation("encode: output must be nonempty");
  if (ctx < 8) throw_validation("encode: ctx must be at least 8");

  std::size_t out_len = output.size();
  const std::size_t specials = 3;  // BOS, SEP, EOS
  if (out_len + specials > static_cast<std::size_t>(ctx)) {
    out_len = static_cast<std::size_t>(ctx) - specials;
  }
  std::size_t in_budget = static_cast<std::size_t>(ctx) - specials - out_len;
  std::size_t in_len = std::min(input.size(), in_budget);

  EncodedExample enc;
  enc.tokens.reserve(in_len + out_len + specials);
  enc.tokens.push_back(tok::BOS);
  // keep the rightmost input bytes
  for (std::size_t i = input.size() - in_len; i < input.size(); ++i) {
    enc.tokens.push_back(static_cast<int>(static_cast<unsigned char>(input[i])));
  }
  enc.sep_index = static_cast<int>(enc.tokens.size());
  enc.tokens.push_back(tok::SEP);
  for (std::size_t i = 0; i < out_len; ++i) {
    enc.tokens.push_back(static_cast<int>(static_cast<unsigned char>(output[i])));
  }
  enc.tokens.push_back(tok::EOS);

  enc.loss_mask.resize(enc.tokens.size() - 1);
  for (std::size_t t = 0; t + 1 < enc.tokens.size(); ++t) {
    enc.loss_mask[t] = static_cast<int>(t + 1) > enc.sep_index;
  }
  return enc;
}

}  // namespace ulab
