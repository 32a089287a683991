#include "cnndo/checkpoint.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <fstream>

#include "cnndo/config.hpp"
#include "cnndo/errors.hpp"

namespace cnndo {

using nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw ConfigError("theta", "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * (text.size() / 4));
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw ConfigError("theta", "malformed base64");
  // EVP_DecodeBlock keeps the bytes behind '=' padding
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string encode_theta(std::span<const double> theta) {
  std::vector<std::uint8_t> bytes(theta.size() * 8);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const auto u = std::bit_cast<std::uint64_t>(theta[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<std::uint8_t>(u >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<double> decode_theta(const std::string& text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) throw ConfigError("theta", "byte length is not a multiple of 8");
  std::vector<double> theta(bytes.size() / 8);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    std::uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u |= std::uint64_t{bytes[i * 8 + b]} << (8 * b);
    theta[i] = std::bit_cast<double>(u);
  }
  return theta;
}

json checkpoint_to_json(const Checkpoint& ck) {
  json j;
  j["format_version"] = ck.format_version;
  j["architecture"] = architecture_to_json(ck.architecture);
  j["theta"] = encode_theta(ck.theta);
  j["n_params"] = ck.theta.size();
  if (!ck.rng_state.is_null()) j["rng_state"] = ck.rng_state;
  j["metadata"] = ck.metadata;
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("checkpoint", "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    static const char* known[] = {"format_version", "architecture", "theta", "n_params", "rng_state", "metadata"};
    if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return it.key() == k; }) ==
        std::end(known)) {
      throw ConfigError("checkpoint." + it.key(), "unknown key");
    }
  }
  Checkpoint ck;
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw ConfigError("checkpoint.format_version", "required integer");
  }
  ck.format_version = j["format_version"].get<int>();
  if (ck.format_version != kCheckpointFormatVersion) {
    throw ConfigError("checkpoint.format_version", "unsupported version " + std::to_string(ck.format_version));
  }
  if (!j.contains("architecture")) throw ConfigError("checkpoint.architecture", "required");
  ck.architecture = architecture_from_json(j["architecture"], "checkpoint.architecture");
  if (!j.contains("theta") || !j["theta"].is_string()) throw ConfigError("checkpoint.theta", "required base64 string");
  ck.theta = decode_theta(j["theta"].get<std::string>());
  const std::size_t expected = count_params(ck.architecture);
  if (ck.theta.size() != expected) {
    throw ConfigError("checkpoint.theta", "holds " + std::to_string(ck.theta.size()) + " parameters, architecture needs " +
                                              std::to_string(expected));
  }
  if (j.contains("n_params") && j["n_params"] != ck.theta.size()) {
    throw ConfigError("checkpoint.n_params", "does not match theta");
  }
  if (j.contains("rng_state")) ck.rng_state = j["rng_state"];
  if (j.contains("metadata")) ck.metadata = j["metadata"];
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << checkpoint_to_json(ck).dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("init_from", "cannot open checkpoint " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("init_from", path.string() + ": " + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace cnndo
