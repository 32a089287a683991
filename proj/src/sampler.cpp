#include "cnndo/sampler.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "cnndo/errors.hpp"
#include "cnndo/parallel.hpp"

namespace cnndo {

namespace {

constexpr double kTiny = 1e-300;
constexpr double kStuckAcceptance = 1e-3;

std::size_t pick_site(std::size_t n, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::pair<std::size_t, std::size_t> pick_pair(std::size_t n, std::mt19937_64& rng) {
  const std::size_t i = pick_site(n, rng);
  std::size_t j = pick_site(n - 1, rng);
  if (j >= i) ++j;
  return {i, j};
}

double log_abs(Complex z) {
  const double a = std::abs(z);
  return a < kTiny ? -std::numeric_limits<double>::infinity() : std::log(a);
}

struct ChainResult {
  std::vector<JointConfig> configs;
  std::vector<Complex> rho;
  std::size_t burn_accepted = 0, burn_steps = 0;
  std::size_t accepted = 0, steps = 0;
};

}  // namespace

void SamplerConfig::validate() const {
  if (n_chains == 0) throw ConfigError("n_chains", "must be positive");
  if (n_samples == 0) throw ConfigError("n_samples", "must be positive");
  if (n_samples % n_chains != 0) {
    throw ConfigError("n_samples", "must be divisible by n_chains (" + std::to_string(n_chains) + ")");
  }
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("beta", "must lie in (0, 1]");
  if (thin && *thin == 0) throw ConfigError("thin", "must be positive");
}

JointConfig propose(const JointConfig& cfg, bool sector_restricted, std::mt19937_64& rng) {
  const std::size_t n = cfg.row.size();
  JointConfig out = cfg;
  if (!sector_restricted) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const std::size_t i = pick_site(n, rng);
    if (u < 0.4) {
      out.row.flip_inplace(i);
    } else if (u < 0.8) {
      out.col.flip_inplace(i);
    } else {
      out.row.flip_inplace(i);
      out.col.flip_inplace(i);
    }
    return out;
  }
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: {
      const auto [i, j] = pick_pair(n, rng);
      out.row.flip_inplace(i);
      out.row.flip_inplace(j);
      break;
    }
    case 1: {
      const auto [i, j] = pick_pair(n, rng);
      out.col.flip_inplace(i);
      out.col.flip_inplace(j);
      break;
    }
    case 2: {
      const std::size_t i = pick_site(n, rng);
      out.row.flip_inplace(i);
      out.col.flip_inplace(pick_site(n, rng));
      break;
    }
    default: {
      const std::size_t i = pick_site(n, rng);
      out.row.flip_inplace(i);
      out.col.flip_inplace(i);
      break;
    }
  }
  return out;
}

std::map<JointConfig, double> proposal_distribution(const JointConfig& cfg, bool sector_restricted) {
  const std::size_t n = cfg.row.size();
  const double dn = static_cast<double>(n);
  std::map<JointConfig, double> q;
  auto add = [&](bool flip_row, std::size_t i, bool flip_col, std::size_t j, double p) {
    JointConfig t = cfg;
    if (flip_row) t.row.flip_inplace(i);
    if (flip_col) t.col.flip_inplace(j);
    q[t] += p;
  };
  if (!sector_restricted) {
    for (std::size_t i = 0; i < n; ++i) {
      add(true, i, false, 0, 0.4 / dn);
      add(false, 0, true, i, 0.4 / dn);
      add(true, i, true, i, 0.2 / dn);
    }
    return q;
  }
  const double ordered_pairs = dn * (dn - 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) {
        JointConfig r = cfg, c = cfg;
        r.row.flip_inplace(i);
        r.row.flip_inplace(j);
        c.col.flip_inplace(i);
        c.col.flip_inplace(j);
        q[r] += 0.25 / ordered_pairs;
        q[c] += 0.25 / ordered_pairs;
      }
      add(true, i, true, j, 0.25 / (dn * dn));
    }
    add(true, i, true, i, 0.25 / dn);
  }
  return q;
}

JointConfig random_start(std::size_t n_sites, bool sector_restricted, std::mt19937_64& rng) {
  std::vector<std::int8_t> r(n_sites), c(n_sites);
  std::bernoulli_distribution coin(0.5);
  for (auto& v : r) v = coin(rng) ? 1 : -1;
  for (auto& v : c) v = coin(rng) ? 1 : -1;
  JointConfig cfg{SpinConfig(std::move(r)), SpinConfig(std::move(c))};
  if (sector_restricted && !sector_allowed(cfg)) cfg.col.flip_inplace(pick_site(n_sites, rng));
  return cfg;
}

std::mt19937_64 chain_rng(std::uint64_t seed, std::uint64_t stream, std::size_t chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(chain), 0x6a6f696eu};
  return std::mt19937_64(seq);
}

SampleBatch sample_joint(const DensityModel& model, const SamplerConfig& cfg, const Lattice& lattice,
                         std::uint64_t stream, unsigned threads) {
  cfg.validate();
  const std::size_t n = lattice.n_sites();
  const std::size_t per_chain = cfg.n_samples / cfg.n_chains;
  const std::size_t burn = cfg.burn_in_for(n), thin = cfg.thin_for(n);
  const double two_beta = 2.0 * cfg.beta;

  std::vector<ChainResult> chains(cfg.n_chains);
  std::vector<std::unique_ptr<DensityModel>> workers(worker_count(cfg.n_chains, threads));
  for (auto& w : workers) w = model.clone();

  parallel_for(cfg.n_chains, threads, [&](std::size_t c, unsigned w) {
    DensityModel& m = *workers[w];
    auto rng = chain_rng(cfg.seed, stream, c);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    JointConfig cur = random_start(n, cfg.sector_restricted, rng);
    Complex cur_rho = m.rho(cur);
    for (int tries = 0; std::abs(cur_rho) < kTiny; ++tries) {
      if (tries > 1000) throw NumericError("sampler: no starting configuration with nonzero rho");
      cur = random_start(n, cfg.sector_restricted, rng);
      cur_rho = m.rho(cur);
    }
    double cur_log = log_abs(cur_rho);

    ChainResult& out = chains[c];
    auto step = [&](std::size_t& accepted) {
      JointConfig prop = propose(cur, cfg.sector_restricted, rng);
      const Complex r = m.rho(prop);
      const double u = unif(rng);
      if (std::abs(r) < kTiny) return;
      const double l = log_abs(r);
      if (std::log(u) < two_beta * (l - cur_log)) {
        cur = std::move(prop);
        cur_rho = r;
        cur_log = l;
        ++accepted;
      }
    };
    for (std::size_t t = 0; t < burn; ++t) step(out.burn_accepted);
    out.burn_steps = burn;
    out.configs.reserve(per_chain);
    out.rho.reserve(per_chain);
    for (std::size_t k = 0; k < per_chain; ++k) {
      for (std::size_t t = 0; t < thin; ++t) step(out.accepted);
      out.steps += thin;
      out.configs.push_back(cur);
      out.rho.push_back(cur_rho);
    }
  });

  SampleBatch batch;
  batch.n_chains = cfg.n_chains;
  batch.configs.reserve(cfg.n_samples);
  std::size_t burn_acc = 0, burn_steps = 0, acc = 0, steps = 0;
  for (auto& ch : chains) {
    for (std::size_t k = 0; k < ch.configs.size(); ++k) {
      const double l = log_abs(ch.rho[k]);
      batch.configs.push_back(std::move(ch.configs[k]));
      batch.rho.push_back(ch.rho[k]);
      batch.log_q.push_back(two_beta * l);
      batch.log_weights.push_back(cfg.beta == 1.0 ? 0.0 : (2.0 - two_beta) * l);
    }
    burn_acc += ch.burn_accepted;
    burn_steps += ch.burn_steps;
    acc += ch.accepted;
    steps += ch.steps;
  }
  if (burn_steps > 0 && static_cast<double>(burn_acc) < kStuckAcceptance * static_cast<double>(burn_steps)) {
    throw NumericError("sampler: chains stuck, burn-in acceptance " + std::to_string(burn_acc) + "/" +
                       std::to_string(burn_steps));
  }
  batch.acceptance_rate = steps ? static_cast<double>(acc) / static_cast<double>(steps) : 0.0;
  return batch;
}

DiagonalBatch sample_diagonal(const DensityModel& model, const SamplerConfig& cfg, const Lattice& lattice,
                              std::uint64_t stream, unsigned threads) {
  cfg.validate();
  const std::size_t n = lattice.n_sites();
  const std::size_t per_chain = cfg.n_samples / cfg.n_chains;
  const std::size_t burn = cfg.burn_in_for(n), thin = cfg.thin_for(n);

  struct Diag {
    std::vector<SpinConfig> configs;
    std::vector<double> rho;
    std::size_t burn_accepted = 0, accepted = 0;
  };
  std::vector<Diag> chains(cfg.n_chains);
  std::vector<std::unique_ptr<DensityModel>> workers(worker_count(cfg.n_chains, threads));
  for (auto& w : workers) w = model.clone();

  parallel_for(cfg.n_chains, threads, [&](std::size_t c, unsigned w) {
    DensityModel& m = *workers[w];
    // offset the stream so diagonal and joint draws never share a generator
    auto rng = chain_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull, stream, c);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto eval = [&](const SpinConfig& s) { return m.rho({s, s}).real(); };
    SpinConfig cur = random_start(n, false, rng).row;
    double cur_rho = eval(cur);
    for (int tries = 0; std::abs(cur_rho) < kTiny; ++tries) {
      if (tries > 1000) throw NumericError("sampler: no diagonal configuration with nonzero rho");
      cur = random_start(n, false, rng).row;
      cur_rho = eval(cur);
    }
    Diag& out = chains[c];
    auto step = [&](std::size_t& accepted) {
      SpinConfig prop = cur;
      prop.flip_inplace(pick_site(n, rng));
      const double r = eval(prop);
      const double u = unif(rng);
      if (std::abs(r) < kTiny) return;
      if (u * std::abs(cur_rho) < std::abs(r)) {
        cur = std::move(prop);
        cur_rho = r;
        ++accepted;
      }
    };
    for (std::size_t t = 0; t < burn; ++t) step(out.burn_accepted);
    for (std::size_t k = 0; k < per_chain; ++k) {
      for (std::size_t t = 0; t < thin; ++t) step(out.accepted);
      out.configs.push_back(cur);
      out.rho.push_back(cur_rho);
    }
  });

  DiagonalBatch batch;
  batch.n_chains = cfg.n_chains;
  std::size_t burn_acc = 0, acc = 0;
  for (auto& ch : chains) {
    for (std::size_t k = 0; k < ch.configs.size(); ++k) {
      batch.configs.push_back(std::move(ch.configs[k]));
      batch.rho_diag.push_back(ch.rho[k]);
      batch.signs.push_back(ch.rho[k] < 0.0 ? -1 : 1);
    }
    burn_acc += ch.burn_accepted;
    acc += ch.accepted;
  }
  const std::size_t burn_steps = burn * cfg.n_chains, steps = per_chain * thin * cfg.n_chains;
  if (burn_steps > 0 && static_cast<double>(burn_acc) < kStuckAcceptance * static_cast<double>(burn_steps)) {
    throw NumericError("sampler: diagonal chains stuck, burn-in acceptance " + std::to_string(burn_acc) + "/" +
                       std::to_string(burn_steps));
  }
  batch.acceptance_rate = steps ? static_cast<double>(acc) / static_cast<double>(steps) : 0.0;
  return batch;
}

SampleBatch enumeration_batch(DensityModel& model, std::size_t n_sites) {
  if (n_sites > 6) throw SizeGuardError("enumeration_batch: 4^S joint configurations, S = " + std::to_string(n_sites) + " > 6");
  const std::uint64_t dim = std::uint64_t{1} << n_sites;
  SampleBatch batch;
  for (std::uint64_t i = 0; i < dim; ++i) {
    for (std::uint64_t j = 0; j < dim; ++j) {
      JointConfig c{SpinConfig::from_index(i, n_sites), SpinConfig::from_index(j, n_sites)};
      const Complex r = model.rho(c);
      if (std::abs(r) < kTiny) continue;
      batch.configs.push_back(std::move(c));
      batch.rho.push_back(r);
      batch.log_q.push_back(0.0);
      batch.log_weights.push_back(2.0 * std::log(std::abs(r)));
    }
  }
  batch.n_chains = 1;
  batch.acceptance_rate = 1.0;
  return batch;
}

DiagonalBatch enumeration_diagonal(DensityModel& model, std::size_t n_sites) {
  if (n_sites > 20) throw SizeGuardError("enumeration_diagonal: 2^S configurations, S = " + std::to_string(n_sites) + " > 20");
  const std::uint64_t dim = std::uint64_t{1} << n_sites;
  DiagonalBatch batch;
  for (std::uint64_t i = 0; i < dim; ++i) {
    SpinConfig s = SpinConfig::from_index(i, n_sites);
    const double r = model.rho({s, s}).real();
    if (std::abs(r) < kTiny) continue;
    batch.configs.push_back(std::move(s));
    batch.rho_diag.push_back(r);
    batch.signs.push_back(r < 0.0 ? -1 : 1);
    batch.weights.push_back(std::abs(r));
  }
  batch.n_chains = 1;
  batch.acceptance_rate = 1.0;
  return batch;
}

}  // namespace cnndo
