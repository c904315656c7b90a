#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ulab/tokenizer.hpp"

namespace ulab {

enum class Split { Forget, Retain, Holdout, EvalGeneral };
enum class Task { Qa, Completion };

std::string to_string(Split s);
std::string to_string(Task t);
Split split_from_string(const std::string& s);
Task task_from_string(const std::string& s);

struct Example {
  std::string id;
  std::string input;
  std::string output;
  Split split = Split::Retain;
  Task task = Task::Qa;
};

struct Dataset {
  std::vector<Example> examples;
  std::string source_path;
  std::string content_digest;  // fnv1a-64 of the file bytes, hex

  std::vector<const Example*> by_split(Split s) const;
  std::size_t count(Split s) const;
};

// JSON-lines, one object per line with exactly the Example fields.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path);

// Every forget-split output is replaced by the phrase; other splits untouched.
Dataset apply_negative_response(const Dataset& ds, const std::string& phrase = "I don't know.");

// Split on '.', '!', '?' followed by a space or end-of-text; delimiters stay
// with the preceding sentence and concatenation reproduces the text exactly.
std::vector<std::string> split_sentences(const std::string& text);

// Re-segmentation: a forget example with sentences s1..sk (k >= 2) becomes k
// variants; variant i moves s1..si into the input. Ids become "{id}#aug{i}".
Dataset augment_resegment(const Dataset& ds);

struct Batch {
  Split split;
  std::vector<const Example*> examples;
};

// Forget and retain examples are shuffled independently (deterministic in
// (seed, epoch_index)), chunked to at most batch_size, then interleaved
// round-robin starting with the forget stream.
std::vector<Batch> make_batches(const Dataset& ds, int batch_size, std::uint64_t seed,
                                std::uint64_t epoch_index);

std::string fnv1a_hex(const std::string& bytes);

inline EncodedExample encode_example(const Example& e, int ctx) {
  return encode_io(e.input, e.output, ctx);
}

}  // namespace ulab
