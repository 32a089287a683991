#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "cnndo/density_model.hpp"
#include "cnndo/lattice.hpp"

namespace cnndo {

struct SamplerConfig {
  std::size_t n_samples = 1024;
  std::size_t n_chains = 16;
  std::optional<std::size_t> burn_in;  // default 10 * S
  std::optional<std::size_t> thin;     // default S
  double beta = 1.0;
  bool sector_restricted = false;
  std::uint64_t seed = 0;

  /// Throws ConfigError (key path relative to the sampler section).
  void validate() const;
  std::size_t burn_in_for(std::size_t n_sites) const { return burn_in.value_or(10 * n_sites); }
  std::size_t thin_for(std::size_t n_sites) const { return thin.value_or(n_sites); }
};

/// Draws from q(sigma, sigma') ∝ |rho|^{2 beta}, stored chain-major.
///
/// log_q is the log of the unnormalized sampling density at each sample and
/// log_weights = 2 log|rho| - log_q, so sum w h / sum w estimates the
/// expectation under |rho|^2 / sum |rho|^2.
struct SampleBatch {
  std::vector<JointConfig> configs;
  std::vector<Complex> rho;
  std::vector<double> log_q;
  std::vector<double> log_weights;
  std::size_t n_chains = 1;
  double acceptance_rate = 0.0;

  std::size_t size() const noexcept { return configs.size(); }
  std::size_t per_chain() const noexcept { return configs.size() / n_chains; }
};

/// Samples from p(sigma) ∝ |rho(sigma, sigma)| with the sign of rho(sigma, sigma).
/// `weights` is empty for Markov-chain draws; enumeration fills it with |rho|.
struct DiagonalBatch {
  std::vector<SpinConfig> configs;
  std::vector<double> rho_diag;
  std::vector<int> signs;
  std::vector<double> weights;
  std::size_t n_chains = 1;
  double acceptance_rate = 0.0;

  std::size_t size() const noexcept { return configs.size(); }
  std::size_t per_chain() const noexcept { return configs.size() / n_chains; }
};

enum class Move { FlipRow, FlipCol, FlipBoth, PairRow, PairCol, OneEach };

/// One symmetric proposal. Unrestricted: single row flip / single column flip /
/// same-site double flip with weights (0.4, 0.4, 0.2). Restricted: two row
/// flips / two column flips / one flip on each side / same-site double flip,
/// 1/4 each; all of them keep the parity of the sector offset.
JointConfig propose(const JointConfig& cfg, bool sector_restricted, std::mt19937_64& rng);

/// The full proposal distribution out of `cfg`, q(cfg -> target).
std::map<JointConfig, double> proposal_distribution(const JointConfig& cfg, bool sector_restricted);

/// Starting point: uniform random joint configuration, moved into an even
/// sector offset when restricted.
JointConfig random_start(std::size_t n_sites, bool sector_restricted, std::mt19937_64& rng);

/// Independent stream for (seed, stream, chain).
std::mt19937_64 chain_rng(std::uint64_t seed, std::uint64_t stream, std::size_t chain);

/// Metropolis chains over joint configurations. `stream` separates the draws of
/// successive calls with the same seed (the optimizer passes the iteration).
/// Throws NumericError when the burn-in acceptance is below 0.1%.
SampleBatch sample_joint(const DensityModel& model, const SamplerConfig& cfg, const Lattice& lattice,
                         std::uint64_t stream = 0, unsigned threads = 1);

/// Metropolis chains over diagonal configurations with single-site flips.
DiagonalBatch sample_diagonal(const DensityModel& model, const SamplerConfig& cfg, const Lattice& lattice,
                              std::uint64_t stream = 0, unsigned threads = 1);

/// Every joint configuration with |rho| >= 1e-300, log_q = 0 (uniform), one chain.
SampleBatch enumeration_batch(DensityModel& model, std::size_t n_sites);

/// Every diagonal configuration with rho != 0 and its exact probability weight.
DiagonalBatch enumeration_diagonal(DensityModel& model, std::size_t n_sites);

}  // namespace cnndo
