#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cnndo/cnn.hpp"
#include "json.hpp"

namespace cnndo {

inline constexpr int kCheckpointFormatVersion = 1;

/// {format_version, architecture, theta (base64, little-endian float64),
///  rng_state (optional), metadata}
struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  Architecture architecture;
  std::vector<double> theta;
  nlohmann::json rng_state;  // null when absent
  nlohmann::json metadata = nlohmann::json::object();

  CnnNdo model() const { return CnnNdo(architecture, theta); }
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ConfigError on malformed input.
std::vector<std::uint8_t> base64_decode(const std::string& text);

std::string encode_theta(std::span<const double> theta);
std::vector<double> decode_theta(const std::string& text);

nlohmann::json checkpoint_to_json(const Checkpoint& ck);
/// Strict: unknown keys, a different format_version or a theta length that
/// does not match the architecture throw ConfigError.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cnndo
