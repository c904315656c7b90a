#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ulab {

// Byte-level vocabulary: ids 0..255 are raw bytes, then the specials.
namespace tok {
constexpr int BOS = 256;
constexpr int EOS = 257;
constexpr int SEP = 258;
constexpr int PAD = 259;
constexpr int VOCAB_SIZE = 260;
}  // namespace tok

std::vector<int> encode_bytes(std::string_view text);
// Inverse of encode_bytes; special tokens are dropped.
std::string decode_bytes(const std::vector<int>& tokens);

// One training sequence: [BOS, input bytes, SEP, output bytes, EOS], with
// loss_mask[t] true iff the token predicted at position t (i.e. tokens[t+1])
// lies strictly after SEP. loss_mask has tokens.size()-1 entries.
struct EncodedExample {
  std::vector<int> tokens;
  std::vector<bool> loss_mask;
  int sep_index = 0;
};

// Truncation: input bytes are dropped from the left first; if the output plus
// the three specials alone exceed ctx, the output is cut from the right.
EncodedExample encode_io(std::string_view input, std::string_view output, int ctx);

}  // namespace ulab
