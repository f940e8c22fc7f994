// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#include "vipnerf/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <sstream>

#include "vipnerf/error.hpp"
#include "vipnerf/png_io.hpp"

namespace vipnerf {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'V', 'I', 'P', 'N', 'C', 'K', 'P', 'T'};

void append_doubles(std::string& out, std::span<const double> values) {
  const size_t offset = out.size();
  out.resize(offset + values.size() * sizeof(double));
  if (!values.empty()) std::memcpy(out.data() + offset, values.data(), values.size() * sizeof(double));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string path) : bytes_(bytes), path_(std::move(path)) {}

  void read(void* dst, size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError(path_ + ": checkpoint is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::vector<double> doubles(size_t count) {
    std::vector<double> v(count);
    read(v.data(), count * sizeof(double));
    return v;
  }

  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

nlohmann::ordered_json field_config_to_json(const FieldConfig& c) {
  nlohmann::ordered_json j;
  j["width"] = c.width;
  j["depth"] = c.depth;
  j["pos_freqs"] = c.pos_freqs;
  j["dir_freqs"] = c.dir_freqs;
  j["include_input"] = c.include_input;
  return j;
}

FieldConfig field_config_from_json(const nlohmann::json& j) {
  FieldConfig c;
  c.width = j.value("width", c.width);
  c.depth = j.value("depth", c.depth);
  c.pos_freqs = j.value("pos_freqs", c.pos_freqs);
  c.dir_freqs = j.value("dir_freqs", c.dir_freqs);
  c.include_input = j.value("include_input", c.include_input);
  return c;
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string checkpoint_config_hash(const FieldConfig& config) {
  nlohmann::ordered_json j;
  j["format"] = kCheckpointFormat;
  j["field"] = field_config_to_json(config);
  return fnv1a_hex(j.dump());
}

RadianceField Checkpoint::make_field() const {
  RadianceField field(field_config, 0);
  const auto& params = field.parameters();
  if (params.size() != parameters.size()) throw DataError("checkpoint parameter count does not match architecture");
  for (size_t k = 0; k < params.size(); ++k) {
    if (params[k].name != parameters[k].name || params[k].tensor.shape() != parameters[k].tensor.shape()) {
      throw DataError("checkpoint parameter '" + parameters[k].name + "' does not match architecture");
    }
    ad::Tensor dst = params[k].tensor;
    const auto src = parameters[k].tensor.values();
    std::copy(src.begin(), src.end(), dst.mutable_values().begin());
  }
  return field;
}

void save_checkpoint(const std::string& path, const RadianceField& field, const Adam* optimizer,
                     std::int64_t iteration, const nlohmann::json& train_config) {
  nlohmann::ordered_json header;
  header["format"] = kCheckpointFormat;
  header["dtype"] = "float64";
  header["iteration"] = iteration;
  header["field"] = field_config_to_json(field.config());
  header["config_hash"] = checkpoint_config_hash(field.config());
  header["train_config"] = train_config;
  auto& list = header["parameters"] = nlohmann::ordered_json::array();
  for (const auto& p : field.parameters()) {
    list.push_back({{"name", p.name}, {"shape", {p.tensor.rows(), p.tensor.cols()}}});
  }
  header["has_optimizer"] = optimizer != nullptr;
  header["optimizer_step"] = optimizer ? optimizer->step_count() : 0;

  const std::string text = header.dump();
  std::string bytes(kMagic, sizeof(kMagic));
  const std::uint64_t len = text.size();
  bytes.append(reinterpret_cast<const char*>(&len), sizeof(len));
  bytes += text;
  for (const auto& p : field.parameters()) append_doubles(bytes, p.tensor.values());
  if (optimizer) {
    for (const auto& m : optimizer->first_moments()) append_doubles(bytes, m);
    for (const auto& v : optimizer->second_moments()) append_doubles(bytes, v);
  }
  write_text_file(path, bytes);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string bytes = read_text_file(path);
  Reader in(bytes, path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw DataError(path + ": not a vipnerf checkpoint");
  std::uint64_t len = 0;
  in.read(&len, sizeof(len));
  if (len > bytes.size()) throw DataError(path + ": checkpoint is truncated");
  std::string text(len, '\0');
  in.read(text.data(), len);

  Checkpoint ck;
  try {
    const nlohmann::json header = nlohmann::json::parse(text);
    ck.field_config = field_config_from_json(header.at("field"));
    ck.config_hash = header.at("config_hash").get<std::string>();
    const std::string expected = checkpoint_config_hash(ck.field_config);
    if (ck.config_hash != expected) {
      throw DataError(path + ": checkpoint config hash " + ck.config_hash + " does not match expected " + expected);
    }
    if (header.at("dtype").get<std::string>() != "float64") throw DataError(path + ": unsupported dtype");
    ck.iteration = header.at("iteration").get<std::int64_t>();
    ck.train_config = header.value("train_config", nlohmann::json::object());
    for (const auto& entry : header.at("parameters")) {
      const auto shape = entry.at("shape").get<std::vector<size_t>>();
      if (shape.size() != 2) throw DataError(path + ": parameter shape must have two dimensions");
      ck.parameters.push_back(
          {entry.at("name").get<std::string>(), ad::Tensor::from(in.doubles(shape[0] * shape[1]), shape[0], shape[1])});
    }
    ck.has_optimizer = header.at("has_optimizer").get<bool>();
    ck.optimizer_step = header.at("optimizer_step").get<std::int64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": malformed checkpoint header: " + e.what());
  }
  if (ck.has_optimizer) {
    for (const auto& p : ck.parameters) ck.first_moments.push_back(in.doubles(p.tensor.numel()));
    for (const auto& p : ck.parameters) ck.second_moments.push_back(in.doubles(p.tensor.numel()));
  }
  if (!in.at_end()) throw DataError(path + ": trailing bytes after checkpoint payload");
  return ck;
}

}  // namespace vipnerf
