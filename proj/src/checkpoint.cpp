#include "ulab/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "ulab/error.hpp"

namespace ulab {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'U', 'L', 'F', '1'};

json model_config_to_json(const ModelConfig& c) {
  return json{{"d_model", c.d_model}, {"n_layers", c.n_layers}, {"n_heads", c.n_heads},
              {"d_ff", c.d_ff},       {"ctx", c.ctx},           {"init_std", c.init_std}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.ctx = j.at("ctx").get<int>();
  c.init_std = j.at("init_std").get<double>();
  return c;
}

json lora_config_to_json(const LoraConfig& c) {
  return json{{"rank", c.rank}, {"alpha", c.alpha}, {"dropout", c.dropout}, {"targets", c.targets}};
}

LoraConfig lora_config_from_json(const json& j) {
  LoraConfig c;
  c.rank = j.at("rank").get<int>();
  c.alpha = j.at("alpha").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.targets = j.at("targets").get<std::vector<std::string>>();
  return c;
}

void write_u32_le(std::ostream& os, std::uint32_t v) {
  char buf[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                 static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  os.write(buf, 4);
}

std::uint32_t read_u32_le(std::istream& is) {
  unsigned char buf[4];
  is.read(reinterpret_cast<char*>(buf), 4);
  return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
         (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

}  // namespace

void save_checkpoint(const Model& model, const std::string& path) {
  json manifest = json::array();
  const auto params = model.manifest();
  for (const auto& p : params) {
    manifest.push_back(json{{"name", p.name}, {"shape", p.tensor.shape()}});
  }
  json header;
  header["model"] = model_config_to_json(model.config());
  header["lora"] = model.has_lora() ? lora_config_to_json(*model.lora_config()) : json(nullptr);
  header["manifest"] = manifest;
  const std::string header_str = header.dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw_io("cannot open checkpoint for writing: " + path);
  os.write(kMagic, 4);
  write_u32_le(os, static_cast<std::uint32_t>(header_str.size()));
  os.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));

  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  for (const auto& p : params) {
    for (double v : p.tensor.values()) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, 8);
      char buf[8];
      for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
      os.write(buf, 8);
    }
  }
  if (!os) throw_io("failed writing checkpoint: " + path);
}

Model load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw_io("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw_validation("not a ULF1 checkpoint: " + path);
  }
  const std::uint32_t hlen = read_u32_le(is);
  std::string header_str(hlen, '\0');
  is.read(header_str.data(), hlen);
  if (!is) throw_validation("truncated checkpoint header: " + path);

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw_validation("invalid checkpoint header: " + std::string(e.what()));
  }

  Model model(model_config_from_json(header.at("model")), 0);
  if (!header.at("lora").is_null()) {
    model.attach_lora(lora_config_from_json(header.at("lora")), 0);
  }

  auto params = model.manifest();
  const auto& manifest = header.at("manifest");
  if (manifest.size() != params.size()) {
    throw_validation("checkpoint manifest size mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& entry = manifest.at(i);
    if (entry.at("name").get<std::string>() != params[i].name ||
        entry.at("shape").get<std::vector<int>>() != params[i].tensor.shape()) {
      throw_validation("checkpoint manifest entry mismatch at index " + std::to_string(i));
    }
    auto vals = params[i].tensor.mutable_values();
    for (std::size_t k = 0; k < vals.size(); ++k) {
      unsigned char buf[8];
      is.read(reinterpret_cast<char*>(buf), 8);
      if (!is) throw_validation("truncated checkpoint payload: " + path);
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
      double v;
      std::memcpy(&v, &bits, 8);
      vals[k] = v;
    }
  }
  return model;
}

}  // namespace ulab
