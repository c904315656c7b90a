#pragma once

// Shared test fixtures: temp directories and synthetic corpora.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ulab/dataset.hpp"
#include "ulab/rng.hpp"

namespace fixtures {

struct TmpDir {
  std::filesystem::path path;

  TmpDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "ulab_test_XXXXXX").string();
    if (!mkdtemp(tmpl.data())) {
      std::perror("mkdtemp");
      std::abort();
    }
    path = tmpl;
  }
  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
}

inline const std::vector<std::string>& adjectives() {
  static const std::vector<std::string> v = {
      "amber", "quiet", "rusty",  "pale",  "brisk", "mossy", "dusty", "gentle",
      "wiry",  "solid", "sleek",  "bold",  "faded", "young", "stout", "keen",
      "plain", "tidy",  "narrow", "broad"};
  return v;
}

inline const std::vector<std::string>& animals() {
  static const std::vector<std::string> v = {
      "fox",    "heron", "lynx",  "otter",  "crane", "badger", "plover", "stoat",
      "finch",  "raven", "vole",  "marten", "swift", "teal",   "shrew",  "wren",
      "osprey", "hare",  "snipe", "weasel", "lark",  "dunlin", "grouse", "owl",
      "mole",   "deer",  "boar",  "ibex",   "seal",  "gull"};
  return v;
}

inline const std::vector<std::string>& verbs() {
  static const std::vector<std::string> v = {
      "naps",  "circles", "guards", "waits",  "hides", "digs",
      "rests", "crosses", "feeds",  "drifts", "calls", "roams"};
  return v;
}

inline const std::vector<std::string>& code_words() {
  static const std::vector<std::string> v = {
      "ALPHA", "ZETA",  "KILO",  "NOVA",  "ORBIT", "PRIME", "ECHO",  "VOLT",
      "GRID",  "DELTA", "QUARK", "RIDGE", "ONYX",  "VAPOR", "TIDAL", "CRUX",
      "LUMEN", "FERN",  "SABLE", "IRIS",  "OCHRE", "PLUME", "RUNE",  "VERTEX"};
  return v;
}

inline std::string lowercase_sentence(ulab::Rng& rng) {
  const auto& adj = adjectives();
  const auto& ani = animals();
  const auto& vrb = verbs();
  return "the " + adj[rng.next_below(adj.size())] + " " + ani[rng.next_below(ani.size())] + " " +
         vrb[rng.next_below(vrb.size())] + ".";
}

// distinct (letter, digit) pair repeated eight times: trivially memorizable,
// near-zero byte overlap between different codes
inline std::string pair_code(char letter, char digit) {
  std::string out;
  for (int i = 0; i < 8; ++i) {
    out.push_back(letter);
    out.push_back(digit);
  }
  out.push_back('.');
  return out;
}

// The standard desk-scale corpus: 180 retain, 20 forget, 20 holdout,
// 50 eval_general. Forget and holdout share the pair-code distribution;
// retain and eval_general share the lowercase-sentence distribution.
inline ulab::Dataset fixture_corpus(std::uint64_t seed) {
  ulab::Rng rng(seed);
  ulab::Dataset ds;

  std::vector<std::pair<char, char>> pairs;
  for (char l = 'A'; l <= 'Z'; ++l) {
    for (char d = '0'; d <= '9'; ++d) pairs.emplace_back(l, d);
  }
  rng.shuffle(pairs);

  char buf[64];
  const auto& ani = animals();
  for (int i = 0; i < 180; ++i) {
    std::snprintf(buf, sizeof buf, "q%03d: %s?", i, ani[rng.next_below(ani.size())].c_str());
    ds.examples.push_back({"r" + std::to_string(i), buf, lowercase_sentence(rng),
                           ulab::Split::Retain, ulab::Task::Qa});
  }
  for (int i = 0; i < 20; ++i) {
    std::snprintf(buf, sizeof buf, "s%03d: key?", i);
    ds.examples.push_back({"f" + std::to_string(i), buf,
                           pair_code(pairs[i].first, pairs[i].second), ulab::Split::Forget,
                           ulab::Task::Qa});
  }
  for (int i = 0; i < 20; ++i) {
    std::snprintf(buf, sizeof buf, "s%03d: key?", 100 + i);
    ds.examples.push_back({"h" + std::to_string(i), buf,
                           pair_code(pairs[20 + i].first, pairs[20 + i].second),
                           ulab::Split::Holdout, ulab::Task::Qa});
  }
  for (int i = 0; i < 50; ++i) {
    std::snprintf(buf, sizeof buf, "q9%02d: %s?", i, ani[rng.next_below(ani.size())].c_str());
    ds.examples.push_back({"g" + std::to_string(i), buf, lowercase_sentence(rng),
                           ulab::Split::EvalGeneral, ulab::Task::Completion});
  }
  ds.content_digest = "fixture-" + std::to_string(seed);
  return ds;
}

inline std::string code_sentence(ulab::Rng& rng) {
  const auto& w = code_words();
  return w[rng.next_below(w.size())] + " " + w[rng.next_below(w.size())] + " " +
         w[rng.next_below(w.size())] + ".";
}

// Corpus whose forget outputs all have >= `sentences` sentences; used for the
// augmentation-direction experiment.
inline ulab::Dataset multi_sentence_corpus(std::uint64_t seed, int sentences = 5) {
  ulab::Rng rng(seed);
  ulab::Dataset ds;
  char buf[64];
  auto long_code = [&]() {
    std::string out;
    for (int s = 0; s < sentences; ++s) {
      if (s) out += " ";
      out += code_sentence(rng);
    }
    return out;
  };
  const auto& ani = animals();
  for (int i = 0; i < 60; ++i) {
    std::snprintf(buf, sizeof buf, "q%03d: %s?", i, ani[rng.next_below(ani.size())].c_str());
    ds.examples.push_back({"r" + std::to_string(i), buf, lowercase_sentence(rng),
                           ulab::Split::Retain, ulab::Task::Qa});
  }
  for (int i = 0; i < 12; ++i) {
    std::snprintf(buf, sizeof buf, "s%03d: log?", i);
    ds.examples.push_back({"f" + std::to_string(i), buf, long_code(), ulab::Split::Forget,
                           ulab::Task::Completion});
  }
  for (int i = 0; i < 12; ++i) {
    std::snprintf(buf, sizeof buf, "s%03d: log?", 100 + i);
    ds.examples.push_back({"h" + std::to_string(i), buf, long_code(), ulab::Split::Holdout,
                           ulab::Task::Completion});
  }
  for (int i = 0; i < 20; ++i) {
    std::snprintf(buf, sizeof buf, "q9%02d: %s?", i, ani[rng.next_below(ani.size())].c_str());
    ds.examples.push_back({"g" + std::to_string(i), buf, lowercase_sentence(rng),
                           ulab::Split::EvalGeneral, ulab::Task::Completion});
  }
  ds.content_digest = "multisentence-" + std::to_string(seed);
  return ds;
}

// Randomized corpus for augmentation property tests: outputs mix sentence
// counts, delimiters, and awkward spacing.
inline ulab::Dataset random_augment_corpus(std::uint64_t seed, int n) {
  ulab::Rng rng(seed);
  ulab::Dataset ds;
  const char delims[3] = {'.', '!', '?'};
  for (int i = 0; i < n; ++i) {
    const int sentences = 1 + static_cast<int>(rng.next_below(6));
    std::string out;
    for (int s = 0; s < sentences; ++s) {
      const int words = 1 + static_cast<int>(rng.next_below(4));
      for (int w = 0; w < words; ++w) {
        if (!out.empty() && out.back() != ' ') out += " ";
        const auto& ani = animals();
        out += ani[rng.next_below(ani.size())];
      }
      out.push_back(delims[rng.next_below(3)]);
      if (s + 1 < sentences) out += " ";
    }
    // occasionally no trailing delimiter or embedded "3.14"-style dots
    if (rng.next_below(5) == 0) out += " tail";
    if (rng.next_below(7) == 0) out += " v1.2x ok";
    ulab::Split split = rng.next_below(3) == 0 ? ulab::Split::Retain : ulab::Split::Forget;
    ds.examples.push_back({"e" + std::to_string(i), "in" + std::to_string(i), out, split,
                           ulab::Task::Completion});
  }
  ds.content_digest = "aug-" + std::to_string(seed);
  return ds;
}

}  // namespace fixtures
