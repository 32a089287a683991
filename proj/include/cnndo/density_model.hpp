#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "cnndo/lattice.hpp"

namespace cnndo {

using Complex = std::complex<double>;

/// Anything that maps (sigma, sigma') to a density-matrix element and can
/// back-propagate a cotangent into its real parameter vector.
///
/// Instances carry scratch space and are not thread-safe; call clone() to get
/// one per worker.
class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual std::unique_ptr<DensityModel> clone() const = 0;
  virtual std::size_t num_params() const = 0;

  virtual Complex rho(const JointConfig& cfg) = 0;

  /// Evaluates rho on every configuration and keeps what backward() needs.
  virtual void forward(std::span<const JointConfig> cfgs, std::span<Complex> out) = 0;

  /// grad[i] += sum_j Re(kappa[j] * d rho(cfgs[j]) / d theta_i) for the batch
  /// passed to the most recent forward().
  virtual void backward(std::span<const Complex> kappa, std::span<double> grad) = 0;
};

/// O_i = (d rho / d theta_i) / rho. Throws NumericError when |rho| < 1e-300.
std::vector<Complex> grad_log_rho(DensityModel& model, const JointConfig& cfg);

/// d rho / d theta_i as a complex vector.
std::vector<Complex> grad_rho(DensityModel& model, const JointConfig& cfg);

}  // namespace cnndo
