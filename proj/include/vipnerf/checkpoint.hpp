// Copyright Contributors to the vipnerf project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vipnerf/field.hpp"
#include "vipnerf/optim.hpp"

namespace vipnerf {

// Binary layout: 8-byte magic "VIPNCKPT", little-endian uint64 header length,
// UTF-8 JSON header, then raw little-endian float64 payload. The payload holds
// every parameter in header order, followed by the Adam first and second
// moments when "has_optimizer" is set.

inline constexpr std::string_view kCheckpointFormat = "vipnerf-checkpoint-1";

nlohmann::ordered_json field_config_to_json(const FieldConfig& config);
FieldConfig field_config_from_json(const nlohmann::json& j);

/// 64-bit FNV-1a, printed as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view bytes);

/// Hash over the format tag and the architecture; a checkpoint whose stored
/// hash differs from this value is refused.
std::string checkpoint_config_hash(const FieldConfig& config);

struct Checkpoint {
  std::int64_t iteration = 0;
  FieldConfig field_config;
  nlohmann::json train_config;  // opaque to this module
  std::string config_hash;
  std::vector<NamedParameter> parameters;
  bool has_optimizer = false;
  std::int64_t optimizer_step = 0;
  std::vector<std::vector<double>> first_moments;
  std::vector<std::vector<double>> second_moments;

  /// A field with this checkpoint's architecture and parameter values.
  RadianceField make_field() const;
};

void save_checkpoint(const std::string& path, const RadianceField& field, const Adam* optimizer,
                     std::int64_t iteration, const nlohmann::json& train_config);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace vipnerf
