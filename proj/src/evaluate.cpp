#include "ulab/evaluate.hpp"

#include <cmath>
#include <ctime>
#include <fstream>

#include "ulab/error.hpp"
#include "ulab/losses.hpp"

namespace ulab {

using nlohmann::json;

namespace {

std::vector<int> reference_output_tokens(const EncodedExample& enc) {
  // everything the model is asked to generate: output bytes then EOS
  return {enc.tokens.begin() + enc.sep_index + 1, enc.tokens.end()};
}

std::vector<int> prompt_tokens(const EncodedExample& enc) {
  return {enc.tokens.begin(), enc.tokens.begin() + enc.sep_index + 1};
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

double similarity(const Model& model, const Example& e) {
  const EncodedExample enc = encode_example(e, model.config().ctx);
  const std::vector<int> reference = reference_output_tokens(enc);
  const std::vector<int> prompt = prompt_tokens(enc);
  const std::vector<int> generated =
      greedy_decode(model, prompt, static_cast<int>(reference.size()) + 8);
  return lcs_f1(reference, generated);
}

double tas_score(const Model& model, const Dataset& ds, SplitSimilarity* sims,
                 std::vector<PerExample>* per_example) {
  const auto forget = ds.by_split(Split::Forget);
  const auto retain = ds.by_split(Split::Retain);
  if (forget.empty() || retain.empty()) {
    throw_validation("tas_score: forget and retain splits must be nonempty");
  }
  auto split_mean = [&](const std::vector<const Example*>& items) {
    double acc = 0.0;
    for (const Example* e : items) {
      const double sim = similarity(model, *e);
      acc += sim;
      if (per_example) {
        const double loss = example_ntp_loss(model, encode_example(*e, model.config().ctx));
        per_example->push_back({e->id, to_string(e->split), sim, loss});
      }
    }
    return acc / static_cast<double>(items.size());
  };
  const double mf = split_mean(forget);
  const double mr = split_mean(retain);
  if (sims) *sims = {mf, mr};
  return 0.5 * (1.0 - mf) + 0.5 * mr;
}

double mia_score(const Model& model, const Dataset& ds, std::vector<PerExample>* per_example) {
  const auto forget = ds.by_split(Split::Forget);
  const auto holdout = ds.by_split(Split::Holdout);
  if (forget.empty()) throw_validation("mia_score: forget split is empty");
  if (holdout.empty()) throw_validation("mia_score: holdout split is empty");
  auto losses = [&](const std::vector<const Example*>& items, bool record) {
    std::vector<double> out;
    out.reserve(items.size());
    for (const Example* e : items) {
      const double l = example_ntp_loss(model, encode_example(*e, model.config().ctx));
      out.push_back(l);
      if (record && per_example) {
        per_example->push_back({e->id, to_string(e->split), std::nullopt, l});
      }
    }
    return out;
  };
  const std::vector<double> member = losses(forget, false);
  const std::vector<double> nonmember = losses(holdout, true);
  const double auc = mia_auc(member, nonmember);
  return 1.0 - 2.0 * std::abs(auc - 0.5);
}

namespace {

double split_perplexity(const Model& model, const std::vector<const Example*>& items) {
  double total_nll = 0.0;
  std::size_t total_tokens = 0;
  for (const Example* e : items) {
    const EncodedExample enc = encode_example(*e, model.config().ctx);
    std::size_t masked = 0;
    for (bool b : enc.loss_mask) masked += b ? 1 : 0;
    total_nll += example_ntp_loss(model, enc) * static_cast<double>(masked);
    total_tokens += masked;
  }
  return std::exp(total_nll / static_cast<double>(total_tokens));
}

}  // namespace

double capability_score(const Model& base_model, const Model& model, const Dataset& ds,
                        std::vector<PerExample>* per_example) {
  const auto general = ds.by_split(Split::EvalGeneral);
  if (general.empty()) throw_validation("capability_score: eval_general split is empty");
  const double ppl_base = split_perplexity(base_model, general);
  const double ppl_model = split_perplexity(model, general);
  if (per_example) {
    for (const Example* e : general) {
      per_example->push_back({e->id, to_string(e->split), std::nullopt,
                              example_ntp_loss(model, encode_example(*e, model.config().ctx))});
    }
  }
  return std::min(1.0, ppl_base / ppl_model);
}

EvalReport evaluate(const Model& base_model, const Model& model, const Dataset& ds,
                    json metadata) {
  EvalReport r;
  r.tas = tas_score(model, ds, nullptr, &r.per_example);
  r.mia = mia_score(model, ds, &r.per_example);
  r.capability = capability_score(base_model, model, ds, &r.per_example);
  r.final = final_score(r.mia, r.tas, r.capability);
  if (!metadata.is_object()) metadata = json::object();
  metadata["dataset_digest"] = ds.content_digest;
  metadata["timestamp"] = utc_timestamp();
  r.metadata = std::move(metadata);
  return r;
}

void write_report(const EvalReport& report, const std::string& path) {
  for (double v : {report.mia, report.tas, report.capability, report.final}) {
    if (!(v >= 0.0 && v <= 1.0)) throw_validation("write_report: scores must lie in [0,1]");
  }
  json per = json::array();
  for (const PerExample& p : report.per_example) {
    per.push_back(json{{"id", p.id},
                       {"split", p.split},
                       {"similarity", p.similarity ? json(*p.similarity) : json(nullptr)},
                       {"loss", p.loss}});
  }
  json j{{"mia", report.mia},
         {"tas", report.tas},
         {"capability", report.capability},
         {"final", report.final},
         {"display",
          json{{"mia", format_score(report.mia)},
               {"tas", format_score(report.tas)},
               {"capability", format_score(report.capability)},
               {"final", format_score(report.final)}}},
         {"per_example", per},
         {"metadata", report.metadata}};
  std::ofstream os(path, std::ios::binary);
  if (!os) throw_io("cannot open report for writing: " + path);
  os << j.dump(2) << "\n";
  if (!os) throw_io("failed writing report: " + path);
}

EvalReport load_report(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw_io("cannot open report: " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw_validation("invalid report JSON: " + std::string(e.what()));
  }
  EvalReport r;
  r.mia = j.at("mia").get<double>();
  r.tas = j.at("tas").get<double>();
  r.capability = j.at("capability").get<double>();
  r.final = j.at("final").get<double>();
  for (const auto& p : j.at("per_example")) {
    PerExample pe;
    pe.id = p.at("id").get<std::string>();
    pe.split = p.at("split").get<std::string>();
    if (!p.at("similarity").is_null()) pe.similarity = p.at("similarity").get<double>();
    pe.loss = p.at("loss").get<double>();
    r.per_example.push_back(std::move(pe));
  }
  r.metadata = j.at("metadata");
  return r;
}

}  // namespace ulab
