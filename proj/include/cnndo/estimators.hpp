#pragma once

#include <string>
#include <vector>

#include "cnndo/density_model.hpp"
#include "cnndo/liouvillian.hpp"
#include "cnndo/sampler.hpp"

namespace cnndo {

struct CostEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
};

/// f(sigma, sigma') = sum (L row) rho(source) / rho(sigma, sigma').
struct LocalResidual {
  JointConfig config;
  Complex f;
};

struct GradientEstimate {
  std::vector<double> g;
  std::vector<double> std_error;
};

struct CostAndGradient {
  CostEstimate cost;
  GradientEstimate grad;
};

struct ObservableEstimate {
  std::string name;
  double value = 0.0;
  double std_error = 0.0;
  double imag = 0.0;
  double imag_std_error = 0.0;
  double mean_sign = 1.0;
};

/// Throws NumericError when rho(cfg) vanishes.
LocalResidual local_residual(DensityModel& model, const Liouvillian& liouv, const JointConfig& cfg);

/// C = sum w |f|^2 / sum w with jackknife errors over chains.
CostEstimate estimate_cost(DensityModel& model, const Liouvillian& liouv, const SampleBatch& batch,
                           unsigned threads = 1);

/// Cost and gradient in one sweep. The gradient is accumulated as
///   g = E[2 Re(conj(f_x) / rho_x sum_y L_xy d rho_y)] - 2 C E[Re(d rho_x / rho_x)],
/// i.e. reverse mode through the network. Without `grad_errors` every distinct
/// configuration is evaluated once and grad.std_error is left empty; with it the
/// sums are kept per chain for the jackknife.
CostAndGradient estimate_cost_and_gradient(DensityModel& model, const Liouvillian& liouv, const SampleBatch& batch,
                                           unsigned threads = 1, bool grad_errors = true);

/// The same gradient from the log-derivative form
///   E[|f|^2 (2 Re O_x - 2 Re E[O])] + E[2 Re(conj(f_x) sum_y L_xy (rho_y / rho_x)(O_y - O_x))].
/// Slow; used to cross-check the reverse-mode path.
GradientEstimate estimate_gradient_explicit(DensityModel& model, const Liouvillian& liouv, const SampleBatch& batch);

/// Cost of `other` estimated on a batch drawn for a different model:
/// log w = 2 log|rho_other| - log_q.
CostEstimate estimate_cost_reweighted(DensityModel& other, const Liouvillian& liouv, const SampleBatch& batch,
                                      unsigned threads = 1);

/// Site-averaged Tr(P rho) / Tr(rho) = E[s P_loc] / E[s] with
/// P_loc(sigma) = sum_sigma' <sigma|P|sigma'> rho(sigma', sigma) / rho(sigma, sigma).
/// Throws NumericError when the mean sign is consistent with zero.
ObservableEstimate estimate_observable(DensityModel& model, Pauli op, const DiagonalBatch& batch,
                                       unsigned threads = 1);
std::vector<ObservableEstimate> estimate_observables(DensityModel& model, const std::vector<Pauli>& ops,
                                                     const DiagonalBatch& batch, unsigned threads = 1);

/// Jackknife over blocks for the ratio sum(num) / sum(den).
struct RatioJackknife {
  double value = 0.0;
  double std_error = 0.0;
};
RatioJackknife jackknife_ratio(const std::vector<double>& num, const std::vector<double>& den);

}  // namespace cnndo
