#include "cnndo/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>

#include "cnndo/errors.hpp"
#include "cnndo/parallel.hpp"

namespace cnndo {

namespace {

constexpr double kTiny = 1e-300;
constexpr std::size_t kChunk = 16;
constexpr std::size_t kBlock = 256;

struct ChainSums {
  double w = 0.0;
  double wf2 = 0.0;
  std::vector<double> g1, g2;
};

std::vector<std::unique_ptr<DensityModel>> make_workers(const DensityModel& model, std::size_t n, unsigned threads) {
  std::vector<std::unique_ptr<DensityModel>> out(worker_count(n, threads));
  for (auto& w : out) w = model.clone();
  return out;
}

void check_batch(const SampleBatch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("estimator: empty sample batch");
  if (batch.n_chains == 0 || batch.size() % batch.n_chains != 0) {
    throw std::invalid_argument("estimator: batch size is not a multiple of the chain count");
  }
}

/// Normalized importance weights exp(2 log|rho_x| - log_q - max).
std::vector<double> importance_weights(const std::vector<Complex>& rho_x, const SampleBatch& batch) {
  std::vector<double> lw(rho_x.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rho_x.size(); ++i) {
    const double a = std::abs(rho_x[i]);
    lw[i] = a < kTiny ? -std::numeric_limits<double>::infinity() : 2.0 * std::log(a) - batch.log_q[i];
    top = std::max(top, lw[i]);
  }
  if (!std::isfinite(top)) throw NumericError("estimator: all importance weights vanish");
  for (auto& v : lw) v = std::exp(v - top);
  return lw;
}

/// Per-chain sums of w, w|f|^2 and the two gradient pieces.
std::vector<ChainSums> accumulate_per_chain(const DensityModel& model, const Liouvillian& liouv,
                                            const SampleBatch& batch, const std::vector<double>& w,
                                            unsigned threads) {
  const std::size_t chains = batch.n_chains, per = batch.per_chain();
  const std::size_t np = model.num_params();
  auto workers = make_workers(model, chains, threads);
  std::vector<ChainSums> sums(chains);

  parallel_for(chains, threads, [&](std::size_t c, unsigned wk) {
    DensityModel& m = *workers[wk];
    ChainSums& s = sums[c];
    s.g1.assign(np, 0.0);
    s.g2.assign(np, 0.0);
    std::vector<ConnectedElement> row;
    std::vector<JointConfig> cfgs, xs;
    std::vector<Complex> vals, xvals, k1, k2;
    std::vector<std::size_t> start;
    std::vector<Complex> amps;
    for (std::size_t lo = c * per; lo < (c + 1) * per; lo += kChunk) {
      const std::size_t hi = std::min(lo + kChunk, (c + 1) * per);
      cfgs.clear();
      amps.clear();
      start.clear();
      xs.clear();
      for (std::size_t i = lo; i < hi; ++i) {
        start.push_back(cfgs.size());
        xs.push_back(batch.configs[i]);
        if (w[i] == 0.0) continue;
        liouv.row(batch.configs[i], row);
        for (const auto& e : row) {
          cfgs.push_back(e.source);
          amps.push_back(e.amplitude);
        }
      }
      start.push_back(cfgs.size());
      vals.resize(cfgs.size());
      m.forward(cfgs, vals);
      k1.assign(cfgs.size(), Complex{});
      k2.assign(xs.size(), Complex{});
      for (std::size_t i = lo; i < hi; ++i) {
        if (w[i] == 0.0) continue;
        const std::size_t a = start[i - lo], b = start[i - lo + 1];
        const Complex rx = batch.rho[i];
        Complex acc{};
        for (std::size_t t = a; t < b; ++t) acc += amps[t] * vals[t];
        const Complex f = acc / rx;
        const double f2 = std::norm(f);
        if (!std::isfinite(f2)) {
          throw NumericError("estimator: non-finite local residual at " + batch.configs[i].row.to_string() + "," +
                             batch.configs[i].col.to_string());
        }
        s.w += w[i];
        s.wf2 += w[i] * f2;
        const Complex pre = 2.0 * w[i] * std::conj(f) / rx;
        for (std::size_t t = a; t < b; ++t) k1[t] = pre * amps[t];
        k2[i - lo] = w[i] / rx;
      }
      m.backward(k1, s.g1);
      xvals.resize(xs.size());
      m.forward(xs, xvals);
      m.backward(k2, s.g2);
    }
  });
  return sums;
}

// Every source configuration of a batch, stored once.
struct Sources {
  std::vector<JointConfig> uniq;
  std::vector<std::size_t> start;  // per sample, into ids / amps
  std::vector<std::uint32_t> ids;
  std::vector<Complex> amps;
  std::vector<std::uint32_t> self;  // id of the sample itself
};

struct PairHash {
  std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.first * 0x9e3779b97f4a7c15ULL ^ (k.second + 0x632be59bd9b4e019ULL));
  }
};

Sources collect_sources(const Liouvillian& liouv, const SampleBatch& batch, const std::vector<double>& w,
                        bool with_self) {
  Sources out;
  std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::uint32_t, PairHash> index;
  index.reserve(batch.size() * 8);
  auto intern = [&](const JointConfig& c) {
    const auto [it, fresh] = index.try_emplace({c.row.index(), c.col.index()}, 0);
    if (fresh) {
      it->second = static_cast<std::uint32_t>(out.uniq.size());
      out.uniq.push_back(c);
    }
    return it->second;
  };
  std::vector<ConnectedElement> row;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.start.push_back(out.ids.size());
    out.self.push_back(0);
    if (w[i] == 0.0) continue;
    liouv.row(batch.configs[i], row);
    for (const auto& e : row) {
      out.ids.push_back(intern(e.source));
      out.amps.push_back(e.amplitude);
    }
    if (with_self) out.self.back() = intern(batch.configs[i]);
  }
  out.start.push_back(out.ids.size());
  return out;
}

std::size_t n_blocks(std::size_t n) { return (n + kBlock - 1) / kBlock; }

std::vector<Complex> evaluate_unique(const DensityModel& model, const std::vector<JointConfig>& cfgs,
                                     unsigned threads) {
  std::vector<Complex> out(cfgs.size());
  const std::size_t nb = n_blocks(cfgs.size());
  auto workers = make_workers(model, nb, threads);
  parallel_for(nb, threads, [&](std::size_t b, unsigned wk) {
    const std::size_t lo = b * kBlock, len = std::min(kBlock, cfgs.size() - lo);
    workers[wk]->forward(std::span(cfgs.data() + lo, len), std::span(out.data() + lo, len));
  });
  return out;
}

struct PooledSums {
  std::vector<ChainSums> chains;  // w and wf2 only
  std::vector<Complex> f;
};

PooledSums pooled_residuals(const SampleBatch& batch, const Sources& src, const std::vector<Complex>& vals,
                            const std::vector<Complex>& rho_x, const std::vector<double>& w) {
  const std::size_t per = batch.per_chain();
  PooledSums out;
  out.chains.resize(batch.n_chains);
  out.f.assign(batch.size(), Complex{});
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (w[i] == 0.0) continue;
    Complex acc{};
    for (std::size_t t = src.start[i]; t < src.start[i + 1]; ++t) acc += src.amps[t] * vals[src.ids[t]];
    const Complex f = acc / rho_x[i];
    const double f2 = std::norm(f);
    if (!std::isfinite(f2)) {
      throw NumericError("estimator: non-finite local residual at " + batch.configs[i].row.to_string() + "," +
                         batch.configs[i].col.to_string());
    }
    out.f[i] = f;
    auto& s = out.chains[i / per];
    s.w += w[i];
    s.wf2 += w[i] * f2;
  }
  return out;
}

std::vector<Complex> evaluate_samples(const DensityModel& model, const SampleBatch& batch, unsigned threads) {
  const std::size_t chains = batch.n_chains, per = batch.per_chain();
  auto workers = make_workers(model, chains, threads);
  std::vector<Complex> out(batch.size());
  parallel_for(chains, threads, [&](std::size_t c, unsigned wk) {
    std::span<const JointConfig> cfgs(batch.configs.data() + c * per, per);
    workers[wk]->forward(cfgs, std::span<Complex>(out.data() + c * per, per));
  });
  return out;
}

CostEstimate cost_from_sums(const std::vector<ChainSums>& sums, std::size_t n) {
  std::vector<double> num, den;
  for (const auto& s : sums) {
    num.push_back(s.wf2);
    den.push_back(s.w);
  }
  const auto jk = jackknife_ratio(num, den);
  return {jk.value, jk.std_error, n};
}

}  // namespace

RatioJackknife jackknife_ratio(const std::vector<double>& num, const std::vector<double>& den) {
  double total_n = 0.0, total_d = 0.0;
  for (double v : num) total_n += v;
  for (double v : den) total_d += v;
  if (total_d == 0.0) throw NumericError("jackknife: zero total weight");
  RatioJackknife out;
  out.value = total_n / total_d;
  const std::size_t k = num.size();
  if (k < 2) return out;
  std::vector<double> loo(k);
  double mean = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    const double d = total_d - den[c];
    loo[c] = d == 0.0 ? std::numeric_limits<double>::infinity() : (total_n - num[c]) / d;
    mean += loo[c];
  }
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double v : loo) var += (v - mean) * (v - mean);
  out.std_error = std::sqrt(var * static_cast<double>(k - 1) / static_cast<double>(k));
  return out;
}

LocalResidual local_residual(DensityModel& model, const Liouvillian& liouv, const JointConfig& cfg) {
  const Complex rx = model.rho(cfg);
  if (std::abs(rx) < kTiny) throw NumericError("local_residual: rho vanishes at " + cfg.row.to_string() + "," + cfg.col.to_string());
  Complex acc{};
  for (const auto& e : liouv.row(cfg)) acc += e.amplitude * model.rho(e.source);
  return {cfg, acc / rx};
}

CostEstimate estimate_cost(DensityModel& model, const Liouvillian& liouv, const SampleBatch& batch, unsigned threads) {
  check_batch(batch);
  const auto w = importance_weights(batch.rho, batch);
  const auto src = collect_sources(liouv, batch, w, false);
  const auto vals = evaluate_unique(model, src.uniq, threads);
  return cost_from_sums(pooled_residuals(batch, src, vals, batch.rho, w).chains, batch.size());
}

CostEstimate estimate_cost_reweighted(DensityModel& other, const Liouvillian& liouv, const SampleBatch& batch,
                                      unsigned threads) {
  check_batch(batch);
  const auto rho_x = evaluate_samples(other, batch, threads);
  const auto w = importance_weights(rho_x, batch);
  const auto src = collect_sources(liouv, batch, w, false);
  const auto vals = evaluate_unique(other, src.uniq, threads);
  return cost_from_sums(pooled_residuals(batch, src, vals, rho_x, w).chains, batch.size());
}

CostAndGradient estimate_cost_and_gradient(DensityModel& model, const Liouvillian& liouv, const SampleBatch& batch,
                                           unsigned threads, bool grad_errors) {
  check_batch(batch);
  const auto w = importance_weights(batch.rho, batch);
  if (!grad_errors) {
    const auto src = collect_sources(liouv, batch, w, true);
    const auto vals = evaluate_unique(model, src.uniq, threads);
    const auto pooled = pooled_residuals(batch, src, vals, batch.rho, w);
    double W = 0.0, F = 0.0;
    for (const auto& s : pooled.chains) {
      W += s.w;
      F += s.wf2;
    }
    const double C = F / W;
    // both gradient pieces folded into one seed per distinct configuration
    std::vector<Complex> kappa(src.uniq.size(), Complex{});
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (w[i] == 0.0) continue;
      const Complex rx = batch.rho[i];
      const Complex pre = 2.0 * w[i] * std::conj(pooled.f[i]) / rx / W;
      for (std::size_t t = src.start[i]; t < src.start[i + 1]; ++t) kappa[src.ids[t]] += pre * src.amps[t];
      kappa[src.self[i]] -= 2.0 * C * w[i] / rx / W;
    }
    const std::size_t np = model.num_params(), nb = n_blocks(src.uniq.size());
    std::vector<std::vector<double>> parts(nb);
    auto workers = make_workers(model, nb, threads);
    parallel_for(nb, threads, [&](std::size_t b, unsigned wk) {
      const std::size_t lo = b * kBlock, len = std::min(kBlock, src.uniq.size() - lo);
      std::vector<Complex> tmp(len);
      parts[b].assign(np, 0.0);
      workers[wk]->forward(std::span(src.uniq.data() + lo, len), tmp);
      workers[wk]->backward(std::span(kappa.data() + lo, len), parts[b]);
    });
    CostAndGradient out;
    out.cost = cost_from_sums(pooled.chains, batch.size());
    out.grad.g.assign(np, 0.0);
    for (const auto& part : parts)
      for (std::size_t i = 0; i < np; ++i) out.grad.g[i] += part[i];
    return out;
  }
  const auto sums = accumulate_per_chain(model, liouv, batch, w, threads);
  const std::size_t np = model.num_params(), k = sums.size();

  double W = 0.0, F = 0.0;
  std::vector<double> G1(np, 0.0), G2(np, 0.0);
  for (const auto& s : sums) {
    W += s.w;
    F += s.wf2;
    for (std::size_t i = 0; i < np; ++i) {
      G1[i] += s.g1[i];
      G2[i] += s.g2[i];
    }
  }
  CostAndGradient out;
  out.cost = cost_from_sums(sums, batch.size());
  const double C = F / W;
  out.grad.g.resize(np);
  for (std::size_t i = 0; i < np; ++i) out.grad.g[i] = G1[i] / W - 2.0 * C * G2[i] / W;

  out.grad.std_error.assign(np, 0.0);
  if (k >= 2) {
    std::vector<double> mean(np, 0.0);
    std::vector<std::vector<double>> loo(k, std::vector<double>(np));
    for (std::size_t c = 0; c < k; ++c) {
      const double w_c = W - sums[c].w;
      const double c_c = (F - sums[c].wf2) / w_c;
      for (std::size_t i = 0; i < np; ++i) {
        loo[c][i] = (G1[i] - sums[c].g1[i]) / w_c - 2.0 * c_c * (G2[i] - sums[c].g2[i]) / w_c;
        mean[i] += loo[c][i] / static_cast<double>(k);
      }
    }
    for (std::size_t i = 0; i < np; ++i) {
      double var = 0.0;
      for (std::size_t c = 0; c < k; ++c) var += (loo[c][i] - mean[i]) * (loo[c][i] - mean[i]);
      out.grad.std_error[i] = std::sqrt(var * static_cast<double>(k - 1) / static_cast<double>(k));
    }
  }
  return out;
}

GradientEstimate estimate_gradient_explicit(DensityModel& model, const Liouvillian& liouv, const SampleBatch& batch) {
  check_batch(batch);
  const auto w = importance_weights(batch.rho, batch);
  const std::size_t np = model.num_params();
  double W = 0.0;
  std::vector<double> term1(np, 0.0), term2(np, 0.0), mean_o(np, 0.0);
  std::vector<std::vector<double>> re_o(batch.size());
  std::vector<double> f2s(batch.size(), 0.0);
  for (std::size_t x = 0; x < batch.size(); ++x) {
    if (w[x] == 0.0) continue;
    const auto& cfg = batch.configs[x];
    const Complex rx = model.rho(cfg);
    const auto ox = grad_log_rho(model, cfg);
    Complex acc{};
    std::vector<Complex> inner(np, Complex{});
    for (const auto& e : liouv.row(cfg)) {
      const Complex ry = model.rho(e.source);
      acc += e.amplitude * ry;
      const auto dy = grad_rho(model, e.source);
      // (rho_y / rho_x)(O_y - O_x) without dividing by rho_y
      for (std::size_t i = 0; i < np; ++i) inner[i] += e.amplitude * (dy[i] - ry * ox[i]) / rx;
    }
    const Complex f = acc / rx;
    W += w[x];
    f2s[x] = std::norm(f);
    re_o[x].resize(np);
    for (std::size_t i = 0; i < np; ++i) {
      re_o[x][i] = ox[i].real();
      mean_o[i] += w[x] * ox[i].real();
      term2[i] += w[x] * 2.0 * (std::conj(f) * inner[i]).real();
    }
  }
  for (auto& v : mean_o) v /= W;
  for (std::size_t x = 0; x < batch.size(); ++x) {
    if (w[x] == 0.0) continue;
    for (std::size_t i = 0; i < np; ++i) term1[i] += w[x] * f2s[x] * (2.0 * re_o[x][i] - 2.0 * mean_o[i]);
  }
  GradientEstimate out;
  out.g.resize(np);
  for (std::size_t i = 0; i < np; ++i) out.g[i] = (term1[i] + term2[i]) / W;
  return out;
}

std::vector<ObservableEstimate> estimate_observables(DensityModel& model, const std::vector<Pauli>& ops,
                                                     const DiagonalBatch& batch, unsigned threads) {
  if (batch.size() == 0) throw std::invalid_argument("estimate_observable: empty sample set");
  if (batch.n_chains == 0 || batch.size() % batch.n_chains != 0) {
    throw std::invalid_argument("estimate_observable: batch size is not a multiple of the chain count");
  }
  const std::size_t chains = batch.n_chains, per = batch.per_chain();
  const std::size_t n_sites = batch.configs.front().size();
  const std::size_t n_ops = ops.size();
  auto workers = make_workers(model, chains, threads);

  // per chain: sum s w, then per op sum s w Re/Im(P_loc)
  std::vector<double> sign_sum(chains, 0.0), weight_sum(chains, 0.0);
  std::vector<std::vector<double>> re(n_ops, std::vector<double>(chains, 0.0)), im = re;

  parallel_for(chains, threads, [&](std::size_t c, unsigned wk) {
    DensityModel& m = *workers[wk];
    for (std::size_t x = c * per; x < (c + 1) * per; ++x) {
      const SpinConfig& s = batch.configs[x];
      const double rd = batch.rho_diag[x];
      const double w = batch.weights.empty() ? 1.0 : batch.weights[x];
      const double sw = batch.signs[x] * w;
      sign_sum[c] += sw;
      weight_sum[c] += w;
      for (std::size_t o = 0; o < n_ops; ++o) {
        Complex loc{};
        for (std::size_t j = 0; j < n_sites; ++j) {
          for (const auto& e : observable_row(ops[o], j, s)) {
            // diagonal elements need no evaluation and give exact ratios
            loc += e.ket == s ? e.amplitude : e.amplitude * m.rho({e.ket, s}) / rd;
          }
        }
        loc /= static_cast<double>(n_sites);
        re[o][c] += sw * loc.real();
        im[o][c] += sw * loc.imag();
      }
    }
  });

  const auto sign = jackknife_ratio(sign_sum, weight_sum);
  if (sign.value == 0.0 || std::abs(sign.value) < 3.0 * sign.std_error) {
    throw NumericError("estimate_observable: mean sign " + std::to_string(sign.value) + " +- " +
                       std::to_string(sign.std_error) + " is consistent with zero");
  }
  std::vector<ObservableEstimate> out;
  for (std::size_t o = 0; o < n_ops; ++o) {
    ObservableEstimate e;
    e.name = std::string(pauli_name(ops[o]));
    const auto r = jackknife_ratio(re[o], sign_sum);
    const auto i = jackknife_ratio(im[o], sign_sum);
    e.value = r.value;
    e.std_error = r.std_error;
    e.imag = i.value;
    e.imag_std_error = i.std_error;
    e.mean_sign = sign.value;
    out.push_back(std::move(e));
  }
  return out;
}

ObservableEstimate estimate_observable(DensityModel& model, Pauli op, const DiagonalBatch& batch, unsigned threads) {
  return estimate_observables(model, {op}, batch, threads).front();
}

}  // namespace cnndo
