#include "ulab/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ulab/error.hpp"
#include "ulab/rng.hpp"

namespace ulab {

using nlohmann::json;

std::string to_string(Split s) {
  switch (s) {
    case Split::Forget: return "forget";
    case Split::Retain: return "retain";
    case Split::Holdout: return "holdout";
    case Split::EvalGeneral: return "eval_general";
  }
  return "?";
}

std::string to_string(Task t) { return t == Task::Qa ? "qa" : "completion"; }

Split split_from_string(const std::string& s) {
  if (s == "forget") return Split::Forget;
  if (s == "retain") return Split::Retain;
  if (s == "holdout") return Split::Holdout;
  if (s == "eval_general") return Split::EvalGeneral;
  throw_validation("unknown split \"" + s + "\"");
}

Task task_from_string(const std::string& s) {
  if (s == "qa") return Task::Qa;
  if (s == "completion") return Task::Completion;
  throw_validation("unknown task \"" + s + "\"");
}

std::vector<const Example*> Dataset::by_split(Split s) const {
  std::vector<const Example*> out;
  for (const Example& e : examples) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

std::size_t Dataset::count(Split s) const { return by_split(s).size(); }

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

Example parse_example_line(const std::string& line, int line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw_validation("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
  }
  if (!j.is_object()) {
    throw_validation("line " + std::to_string(line_no) + ": expected a JSON object");
  }
  static const std::set<std::string> known = {"id", "input", "output", "split", "task"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) {
      throw_validation("line " + std::to_string(line_no) + ": unknown field \"" + key + "\"");
    }
  }
  Example e;
  try {
    e.id = j.at("id").get<std::string>();
    e.input = j.at("input").get<std::string>();
    e.output = j.at("output").get<std::string>();
    e.split = split_from_string(j.at("split").get<std::string>());
    e.task = task_from_string(j.at("task").get<std::string>());
  } catch (const json::exception& ex) {
    throw_validation("line " + std::to_string(line_no) + ": " + ex.what());
  } catch (const Error& ex) {
    throw_validation("line " + std::to_string(line_no) + ": " + ex.what());
  }
  if (e.output.empty() &&
      (e.split == Split::Forget || e.split == Split::Retain || e.split == Split::Holdout)) {
    throw_validation("line " + std::to_string(line_no) + ": empty output on split " + to_string(e.split));
  }
  return e;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_io("cannot open dataset: " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string content = buf.str();

  Dataset ds;
  ds.source_path = path;
  ds.content_digest = fnv1a_hex(content);

  std::set<std::string> seen_ids;
  std::istringstream lines(content);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.empty()) continue;
    Example e = parse_example_line(line, line_no);
    if (!seen_ids.insert(e.id).second) {
      throw_validation("line " + std::to_string(line_no) + ": duplicate id \"" + e.id + "\"");
    }
    ds.examples.push_back(std::move(e));
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw_io("cannot open dataset for writing: " + path);
  for (const Example& e : ds.examples) {
    json j{{"id", e.id},
           {"input", e.input},
           {"output", e.output},
           {"split", to_string(e.split)},
           {"task", to_string(e.task)}};
    os << j.dump() << "\n";
  }
  if (!os) throw_io("failed writing dataset: " + path);
}

Dataset apply_negative_response(const Dataset& ds, const std::string& phrase) {
  if (phrase.empty()) throw_validation("negative response phrase must be nonempty");
  Dataset out = ds;
  for (Example& e : out.examples) {
    if (e.split == Split::Forget) e.output = phrase;
  }
  return out;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> pieces;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == text.size() || text[i + 1] == ' ')) {
      pieces.push_back(text.substr(start, i + 1 - start));
      start = i + 1;
    }
  }
  if (start < text.size()) pieces.push_back(text.substr(start));
  if (pieces.empty() && !text.empty()) pieces.push_back(text);
  return pieces;
}

Dataset augment_resegment(const Dataset& ds) {
  Dataset out;
  out.source_path = ds.source_path;
  out.content_digest = ds.content_digest;
  for (const Example& e : ds.examples) {
    if (e.split != Split::Forget) {
      out.examples.push_back(e);
      continue;
    }
    const std::vector<std::string> sents = split_sentences(e.output);
    const std::size_t k = sents.size();
    if (k < 2) {
      out.examples.push_back(e);
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) {
      Example v = e;
      v.id = e.id + "#aug" + std::to_string(i);
      std::string prefix, suffix;
      for (std::size_t s = 0; s < i; ++s) prefix += sents[s];
      for (std::size_t s = i; s < k; ++s) suffix += sents[s];
      v.input = e.input + prefix;
      v.output = suffix;
      out.examples.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Batch> make_batches(const Dataset& ds, int batch_size, std::uint64_t seed,
                                std::uint64_t epoch_index) {
  if (batch_size < 1) throw_validation("batch_size must be at least 1");
  Rng rng(Rng::mix(seed, epoch_index));

  auto chunk = [batch_size](std::vector<const Example*> items, Split split) {
    std::vector<Batch> batches;
    for (std::size_t i = 0; i < items.size(); i += static_cast<std::size_t>(batch_size)) {
      Batch b;
      b.split = split;
      const std::size_t end = std::min(items.size(), i + static_cast<std::size_t>(batch_size));
      b.examples.assign(items.begin() + static_cast<long>(i), items.begin() + static_cast<long>(end));
      batches.push_back(std::move(b));
    }
    return batches;
  };

  auto forget = ds.by_split(Split::Forget);
  auto retain = ds.by_split(Split::Retain);
  rng.shuffle(forget);
  rng.shuffle(retain);
  const auto fb = chunk(std::move(forget), Split::Forget);
  const auto rb = chunk(std::move(retain), Split::Retain);

  std::vector<Batch> out;
  std::size_t fi = 0, ri = 0;
  bool take_forget = true;
  while (fi < fb.size() || ri < rb.size()) {
    if (take_forget && fi < fb.size()) {
      out.push_back(fb[fi++]);
    } else if (!take_forget && ri < rb.size()) {
      out.push_back(rb[ri++]);
    } else if (fi < fb.size()) {
      out.push_back(fb[fi++]);
    } else {
      out.push_back(rb[ri++]);
    }
    take_forget = !take_forget;
  }
  return out;
}

}  // namespace ulab
