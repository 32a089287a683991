#include <cmath>
#include <map>
#include <random>

#include "cnndo/cnn.hpp"
#include "cnndo/errors.hpp"
#include "cnndo/estimators.hpp"
#include "cnndo/exact.hpp"
#include "cnndo/sampler.hpp"
#include "doctest.h"

using namespace cnndo;

namespace {

std::vector<JointConfig> all_joint(std::size_t n) {
  std::vector<JointConfig> out;
  const std::uint64_t dim = std::uint64_t{1} << n;
  for (std::uint64_t i = 0; i < dim; ++i)
    for (std::uint64_t j = 0; j < dim; ++j) out.push_back({SpinConfig::from_index(i, n), SpinConfig::from_index(j, n)});
  return out;
}

std::size_t joint_index(const JointConfig& c) { return (c.row.index() << c.row.size()) | c.col.index(); }

// Checks empirical counts against probabilities p with a 3 sigma multinomial band.
void check_histogram(const std::vector<double>& counts, const std::vector<double>& p, double n) {
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double sigma = std::sqrt(n * p[k] * (1.0 - p[k]));
    CHECK(std::abs(counts[k] - n * p[k]) <= 3.0 * sigma + 1e-9);
  }
}

}  // namespace

TEST_CASE("proposals are symmetric and normalized") {
  for (bool restricted : {false, true}) {
    for (const auto& a : all_joint(3)) {
      const auto qa = proposal_distribution(a, restricted);
      double total = 0.0;
      for (const auto& [b, p] : qa) {
        total += p;
        const auto qb = proposal_distribution(b, restricted);
        REQUIRE(qb.count(a) == 1);
        CHECK(std::abs(qb.at(a) - p) < 1e-15);
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("restricted moves never change the sector parity") {
  std::size_t audited = 0;
  for (const auto& a : all_joint(4)) {
    if (!sector_allowed(a)) continue;
    for (const auto& [b, p] : proposal_distribution(a, true)) {
      CHECK(sector_allowed(b));
      ++audited;
    }
  }
  CHECK(audited > 0);
  std::mt19937_64 rng(1);
  JointConfig c = random_start(4, true, rng);
  for (int t = 0; t < 20000; ++t) {
    c = propose(c, true, rng);
    REQUIRE(sector_allowed(c));
  }
  // unrestricted proposals always change the parity except the double flip
  std::size_t odd = 0;
  for (int t = 0; t < 1000; ++t)
    if (!sector_allowed(propose(c, false, rng))) ++odd;
  CHECK(odd > 600);
}

TEST_CASE("proposal draws follow the proposal distribution") {
  const JointConfig a{SpinConfig({1, -1, -1}), SpinConfig({1, 1, -1})};
  for (bool restricted : {false, true}) {
    const auto q = proposal_distribution(a, restricted);
    std::mt19937_64 rng(2);
    std::map<JointConfig, double> hits;
    const double n = 200000;
    for (int t = 0; t < static_cast<int>(n); ++t) hits[propose(a, restricted, rng)] += 1.0;
    for (const auto& [b, h] : hits) REQUIRE(q.count(b) == 1);
    std::vector<double> counts, probs;
    for (const auto& [b, p] : q) {
      counts.push_back(hits[b]);
      probs.push_back(p);
    }
    check_histogram(counts, probs, n);
  }
}

TEST_CASE("flat target gives uniform joint samples") {
  TableModel flat(Eigen::MatrixXcd::Ones(4, 4));
  SamplerConfig cfg;
  cfg.n_samples = 32000;
  cfg.n_chains = 16;
  cfg.thin = 10;
  cfg.seed = 3;
  const auto batch = sample_joint(flat, cfg, Lattice({2}));
  CHECK(batch.acceptance_rate == 1.0);
  std::vector<double> counts(16, 0.0);
  for (const auto& c : batch.configs) counts[joint_index(c)] += 1.0;
  check_histogram(counts, std::vector<double>(16, 1.0 / 16.0), static_cast<double>(batch.size()));
  for (double lw : batch.log_weights) CHECK(lw == 0.0);
}

TEST_CASE("joint chains sample |rho|^(2 beta) of a random network") {
  const Lattice lat({2});
  Architecture arch{{{2, 1, 2, 3}}, true, {}, 0.01};
  CnnEvaluator ev(init_params(arch, 17), lat);
  const auto configs = all_joint(2);
  for (double beta : {1.0, 0.4}) {
    std::vector<double> p(16);
    double z = 0.0;
    for (const auto& c : configs) z += p[joint_index(c)] = std::pow(std::abs(ev.rho(c)), 2.0 * beta);
    for (auto& v : p) v /= z;

    SamplerConfig cfg;
    cfg.n_samples = 32000;
    cfg.thin = 10;
    cfg.beta = beta;
    cfg.seed = 4;
    const auto batch = sample_joint(ev, cfg, lat);
    std::vector<double> counts(16, 0.0);
    for (const auto& c : batch.configs) counts[joint_index(c)] += 1.0;
    check_histogram(counts, p, static_cast<double>(batch.size()));

    // reweighted expectation of a bounded function matches |rho|^2 / Z
    double exact_num = 0.0, exact_den = 0.0;
    for (const auto& c : configs) {
      const double w = std::norm(ev.rho(c));
      exact_num += w * (c.row.magnetization() - 0.5 * c.col.magnetization());
      exact_den += w;
    }
    std::vector<double> num(batch.n_chains, 0.0), den(batch.n_chains, 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const std::size_t ch = i / batch.per_chain();
      const double w = std::exp(batch.log_weights[i]);
      num[ch] += w * (batch.configs[i].row.magnetization() - 0.5 * batch.configs[i].col.magnetization());
      den[ch] += w;
      if (beta == 1.0) CHECK(batch.log_weights[i] == 0.0);
    }
    const auto est = jackknife_ratio(num, den);
    CHECK(std::abs(est.value - exact_num / exact_den) <= 3.0 * est.std_error);
  }
}

TEST_CASE("deterministic replay, independent of the thread count") {
  const Lattice lat({4});
  CnnEvaluator ev(init_params(Architecture::chain_preset(), 5), lat);
  SamplerConfig cfg;
  cfg.n_samples = 256;
  cfg.seed = 99;
  const auto a = sample_joint(ev, cfg, lat, 7, 1);
  const auto b = sample_joint(ev, cfg, lat, 7, 3);
  const auto c = sample_joint(ev, cfg, lat, 8, 1);
  CHECK(a.configs == b.configs);
  CHECK(a.rho == b.rho);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  CHECK(a.configs != c.configs);
  const auto d1 = sample_diagonal(ev, cfg, lat, 1, 1);
  const auto d2 = sample_diagonal(ev, cfg, lat, 1, 2);
  CHECK(d1.configs == d2.configs);
  CHECK(d1.signs == d2.signs);
}

TEST_CASE("restricted chains stay in the allowed sectors of the Heisenberg steady state") {
  const ModelSpec spec{Lattice({2, 2}), HeisenbergParams{0.9, 1.0, 1.0, 1.0}};
  const auto ness = solve_ness(spec);
  Eigen::MatrixXcd smeared = ness.rho;
  // a table that is nonzero everywhere so the unrestricted chain can move
  for (Eigen::Index i = 0; i < smeared.rows(); ++i)
    for (Eigen::Index j = 0; j < smeared.cols(); ++j)
      if (std::abs(smeared(i, j)) < 1e-12) smeared(i, j) = 1e-4;
  TableModel table(smeared);
  SamplerConfig cfg;
  cfg.n_samples = 4096;
  cfg.seed = 6;
  cfg.sector_restricted = true;
  const auto restricted = sample_joint(table, cfg, spec.lattice);
  for (const auto& c : restricted.configs) CHECK(sector_allowed(c));
  cfg.sector_restricted = false;
  const auto free = sample_joint(table, cfg, spec.lattice);
  std::size_t odd = 0;
  for (const auto& c : free.configs) odd += sector_allowed(c) ? 0 : 1;
  MESSAGE("odd-sector visits, unrestricted: " << odd << " / " << free.size());
  CHECK(free.acceptance_rate < restricted.acceptance_rate);
}

TEST_CASE("diagonal chains sample |rho(s, s)| and report signs") {
  const Lattice lat({2});
  Architecture arch{{{2, 1, 2, 3}}, true, {}, 0.01};
  CnnEvaluator ev(init_params(arch, 23), lat);
  std::vector<double> p(4);
  double z = 0.0;
  for (std::uint64_t i = 0; i < 4; ++i) {
    const auto s = SpinConfig::from_index(i, 2);
    z += p[i] = std::abs(ev.rho({s, s}));
  }
  for (auto& v : p) v /= z;
  SamplerConfig cfg;
  cfg.n_samples = 32000;
  cfg.thin = 6;
  cfg.seed = 8;
  const auto batch = sample_diagonal(ev, cfg, lat);
  std::vector<double> counts(4, 0.0);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    counts[batch.configs[k].index()] += 1.0;
    const auto& s = batch.configs[k];
    CHECK(batch.signs[k] == (ev.rho({s, s}).real() < 0 ? -1 : 1));
  }
  check_histogram(counts, p, static_cast<double>(batch.size()));

  const auto spec = ModelSpec{Lattice({3}), TfiParams{2.0, 1.5, 1.0}};
  TableModel exact(solve_ness(spec).rho);
  cfg.n_samples = 1024;
  for (int s : sample_diagonal(exact, cfg, spec.lattice).signs) CHECK(s == 1);
}

TEST_CASE("stuck chains and bad configurations are reported") {
  Eigen::MatrixXcd spike = Eigen::MatrixXcd::Zero(4, 4);
  spike(1, 2) = 1.0;
  spike(2, 1) = 1.0;
  TableModel table(spike);
  SamplerConfig cfg;
  cfg.n_samples = 64;
  CHECK_THROWS_AS(sample_joint(table, cfg, Lattice({2})), NumericError);

  cfg.n_samples = 100;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.n_samples = 64;
  cfg.beta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.beta = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
