#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cnndo/density_model.hpp"
#include "cnndo/lattice.hpp"

namespace cnndo {

/// One periodic convolution: K kernels of shape (X, Y, C), no bias, followed
/// by a leaky ReLU.
struct ConvLayerSpec {
  int kernel_x = 3;
  int kernel_y = 1;
  int in_channels = 2;
  int out_kernels = 1;

  std::size_t param_count() const noexcept {
    return static_cast<std::size_t>(kernel_x) * kernel_y * in_channels * out_kernels;
  }
  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

/// How the He-style initializer counts v_n.
enum class InitScale {
  LayerParams,  ///< v_n = X*Y*C*K (all parameters of the layer)
  FanIn,        ///< v_n = X*Y*C
};

struct Architecture {
  std::vector<ConvLayerSpec> conv_layers;
  /// Mean pooling over all sites before the dense layer.
  bool pooling = true;
  /// Lattice extents the dense layer is wired for; only used without pooling.
  std::vector<int> fixed_dims;
  double leaky_slope = 0.01;

  /// Throws std::invalid_argument on an inconsistent layer chain.
  void validate() const;
  std::size_t dense_inputs() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;

  /// conv (3,1,2)x6, conv (3,1,6)x20, mean pool, dense 20->2.
  static Architecture chain_preset();
  /// Three conv layers of six (2,2,C) kernels, mean pool, dense 6->2.
  static Architecture square_preset();
  /// conv (3,1,2)x4, conv (3,1,4)x10, mean pool, dense 10->2.
  static Architecture toy_preset();
};

/// Kernels (layer by layer, index ((x*Y + y)*C + c)*K + k), then dense
/// weights (index i*2 + o), then the two dense biases.
std::size_t count_params(const Architecture& arch);

/// Architecture + flat parameter vector of the convolutional density operator.
class CnnNdo {
 public:
  CnnNdo(Architecture arch, std::vector<double> theta);

  const Architecture& architecture() const noexcept { return arch_; }
  std::span<const double> theta() const noexcept { return theta_; }
  std::span<double> theta_mut() noexcept { return theta_; }
  void set_theta(std::span<const double> theta);
  std::size_t num_params() const noexcept { return theta_.size(); }

  /// Offset of conv layer `n` inside theta; n == n_layers gives the dense weights.
  std::size_t layer_offset(std::size_t n) const;
  std::size_t dense_bias_offset() const noexcept { return theta_.size() - 2; }

  /// Throws std::invalid_argument when the lattice cannot be evaluated.
  void check_lattice(const Lattice& lat) const;

 private:
  Architecture arch_;
  std::vector<double> theta_;
};

/// Kernels ~ Normal(0, 2/v_n), dense weights likewise, dense biases zero.
CnnNdo init_params(const Architecture& arch, std::uint64_t seed,
                   InitScale scale = InitScale::LayerParams);

/// Channels-last network input: element [s*2 + 0] = row spin, [s*2 + 1] = column spin.
std::vector<double> encode_input(const JointConfig& cfg);

/// Evaluates a CnnNdo on one lattice. Owns scratch buffers.
class CnnEvaluator final : public DensityModel {
 public:
  CnnEvaluator(CnnNdo model, const Lattice& lattice);
  ~CnnEvaluator() override;
  CnnEvaluator(const CnnEvaluator&);
  CnnEvaluator& operator=(const CnnEvaluator&) = delete;

  std::unique_ptr<DensityModel> clone() const override;
  std::size_t num_params() const override { return model_.num_params(); }

  /// A = F0 + i F1 of the network.
  Complex amplitude(const JointConfig& cfg);
  /// rho = conj(A(s, s')) + A(s', s).
  Complex rho(const JointConfig& cfg) override;

  void forward(std::span<const JointConfig> cfgs, std::span<Complex> out) override;
  void backward(std::span<const Complex> kappa, std::span<double> grad) override;

  /// grad += seed0 * dF0/dtheta + seed1 * dF1/dtheta at `cfg`.
  void amplitude_vjp(const JointConfig& cfg, double seed0, double seed1, std::span<double> grad);

  const CnnNdo& model() const noexcept { return model_; }
  const Lattice& lattice() const noexcept { return lattice_; }

 private:
  struct Plan;
  struct Batch;
  void batch_forward();
  void batch_backward(double* grad);
  Complex run_pass(const SpinConfig& a, const SpinConfig& b, double* tape) const;
  void back_pass(const double* tape, double seed0, double seed1, std::span<double> grad);

  CnnNdo model_;
  Lattice lattice_;
  std::unique_ptr<Plan> plan_;
  std::unique_ptr<Batch> batch_;
  std::vector<double> tape_;
  std::vector<double> scratch_;
  // Batch bookkeeping from the last forward().
  std::vector<std::size_t> batch_pass_a_;
  std::vector<std::size_t> batch_pass_b_;  // npos on diagonal configs
};

Complex forward_amplitude(const CnnNdo& model, const Lattice& lattice, const JointConfig& cfg);
Complex rho(const CnnNdo& model, const Lattice& lattice, const JointConfig& cfg);

}  // namespace cnndo
