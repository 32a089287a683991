#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cnndo/cnn.hpp"
#include "cnndo/liouvillian.hpp"
#include "cnndo/optimizer.hpp"
#include "cnndo/sampler.hpp"
#include "json.hpp"

namespace cnndo {

inline constexpr std::string_view kVersion = "0.1.0";

struct TrackConfig {
  /// Observable estimated along the trace; none disables tracking.
  std::optional<Pauli> observable = Pauli::X;
  std::size_t every = 100;
  std::size_t n_samples = 1024;
};

struct EvalConfig {
  std::size_t n_samples = 100000;
  std::size_t n_chains = 16;
  std::vector<Pauli> observables{Pauli::X, Pauli::Y, Pauli::Z};
};

/// Everything a command needs. Defaults: TFI chain (N = 6, V = 2, g = 1),
/// chain architecture, 1024 samples; a heisenberg2d model switches the
/// defaults to the square architecture, beta = 0.2 and sector-restricted moves.
struct RunConfig {
  std::string model_type = "tfi1d";
  ModelSpec model{Lattice({6}), TfiParams{}};
  Architecture architecture = Architecture::chain_preset();
  InitScale init_scale = InitScale::LayerParams;
  SamplerConfig sampler;
  OptimizerConfig optimizer;
  bool stop_on_plateau = true;
  TrackConfig track;
  EvalConfig eval;
  std::uint64_t seed = 0;
  std::optional<std::string> init_from;
  std::string output_dir = "run";
};

/// Strict parse: unknown keys and wrong types throw ConfigError with the key
/// path (e.g. "sampler.beta").
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Fully expanded configuration; parse_config(config_to_json(c)) reproduces c.
nlohmann::json config_to_json(const RunConfig& cfg);
nlohmann::json model_to_json(const std::string& type, const ModelSpec& model);

/// Architecture descriptor shared by configs and checkpoints:
/// {"conv_layers": [{"kernel": [X, Y], "in_channels": C, "kernels": K}, ...],
///  "pooling": bool, "fixed_dims": [...], "leaky_slope": a}
nlohmann::json architecture_to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace cnndo
