#include "cnndo/cnn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "cnndo/errors.hpp"

namespace cnndo {

void Architecture::validate() const {
  if (conv_layers.empty()) throw std::invalid_argument("architecture needs at least one conv layer");
  if (conv_layers.front().in_channels != 2) {
    throw std::invalid_argument("first conv layer must have 2 input channels (sigma, sigma')");
  }
  for (std::size_t n = 0; n < conv_layers.size(); ++n) {
    const auto& l = conv_layers[n];
    if (l.kernel_x < 1 || l.kernel_y < 1 || l.in_channels < 1 || l.out_kernels < 1) {
      throw std::invalid_argument("conv layer " + std::to_string(n) + " has a non-positive extent");
    }
    if (n > 0 && l.in_channels != conv_layers[n - 1].out_kernels) {
      throw std::invalid_argument("conv layer " + std::to_string(n) +
                                  " in_channels must equal the previous layer's kernel count");
    }
  }
  if (!pooling) {
    if (fixed_dims.empty()) {
      throw std::invalid_argument("an architecture without pooling must fix the lattice extents");
    }
    for (int d : fixed_dims) {
      if (d < 1) throw std::invalid_argument("fixed lattice extents must be positive");
    }
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw std::invalid_argument("leaky slope must lie in [0, 1)");
  }
}

std::size_t Architecture::dense_inputs() const {
  const auto k_last = static_cast<std::size_t>(conv_layers.back().out_kernels);
  if (pooling) return k_last;
  std::size_t sites = 1;
  for (int d : fixed_dims) sites *= static_cast<std::size_t>(d);
  return sites * k_last;
}

Architecture Architecture::chain_preset() {
  return {{{3, 1, 2, 6}, {3, 1, 6, 20}}, true, {}, 0.01};
}

Architecture Architecture::square_preset() {
  return {{{2, 2, 2, 6}, {2, 2, 6, 6}, {2, 2, 6, 6}}, true, {}, 0.01};
}

Architecture Architecture::toy_preset() {
  return {{{3, 1, 2, 4}, {3, 1, 4, 10}}, true, {}, 0.01};
}

std::size_t count_params(const Architecture& arch) {
  arch.validate();
  std::size_t n = 0;
  for (const auto& l : arch.conv_layers) n += l.param_count();
  return n + 2 * arch.dense_inputs() + 2;
}

CnnNdo::CnnNdo(Architecture arch, std::vector<double> theta)
    : arch_(std::move(arch)), theta_(std::move(theta)) {
  if (theta_.size() != count_params(arch_)) {
    throw std::invalid_argument("theta has " + std::to_string(theta_.size()) +
                                " entries, architecture needs " + std::to_string(count_params(arch_)));
  }
}

void CnnNdo::set_theta(std::span<const double> theta) {
  if (theta.size() != theta_.size()) throw std::invalid_argument("theta length mismatch");
  std::copy(theta.begin(), theta.end(), theta_.begin());
}

std::size_t CnnNdo::layer_offset(std::size_t n) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < n && i < arch_.conv_layers.size(); ++i) off += arch_.conv_layers[i].param_count();
  return off;
}

void CnnNdo::check_lattice(const Lattice& lat) const {
  for (std::size_t n = 0; n < arch_.conv_layers.size(); ++n) {
    const auto& l = arch_.conv_layers[n];
    if (l.kernel_x > lat.extent_x() || l.kernel_y > lat.extent_y()) {
      throw std::invalid_argument("conv layer " + std::to_string(n) + " kernel (" +
                                  std::to_string(l.kernel_x) + "," + std::to_string(l.kernel_y) +
                                  ") exceeds lattice extent " + lat.describe());
    }
  }
  if (!arch_.pooling) {
    std::vector<int> dims(lat.dims().begin(), lat.dims().end());
    if (dims != arch_.fixed_dims) {
      throw std::invalid_argument("architecture without pooling is wired for a different lattice than " +
                                  lat.describe());
    }
  }
}

CnnNdo init_params(const Architecture& arch, std::uint64_t seed, InitScale scale) {
  const std::size_t total = count_params(arch);
  std::vector<double> theta(total, 0.0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x6b65726eU};
  std::mt19937_64 rng(seq);

  std::size_t off = 0;
  auto fill = [&](std::size_t count, double v) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / v));
    for (std::size_t i = 0; i < count; ++i) theta[off + i] = dist(rng);
    off += count;
  };
  for (const auto& l : arch.conv_layers) {
    const double v = scale == InitScale::LayerParams
                         ? static_cast<double>(l.param_count())
                         : static_cast<double>(l.kernel_x * l.kernel_y * l.in_channels);
    fill(l.param_count(), v);
  }
  const std::size_t n_in = arch.dense_inputs();
  fill(2 * n_in, scale == InitScale::LayerParams ? 2.0 * n_in : static_cast<double>(n_in));
  return CnnNdo(arch, std::move(theta));
}

std::vector<double> encode_input(const JointConfig& cfg) {
  if (cfg.row.size() != cfg.col.size()) throw std::invalid_argument("row and column sizes differ");
  std::vector<double> x(2 * cfg.row.size());
  for (std::size_t s = 0; s < cfg.row.size(); ++s) {
    x[2 * s] = cfg.row[s];
    x[2 * s + 1] = cfg.col[s];
  }
  return x;
}

// ---------------------------------------------------------------------------

struct CnnEvaluator::Plan {
  struct Layer {
    std::size_t x_y = 0;  // kernel_x * kernel_y
    std::size_t c = 0;
    std::size_t k = 0;
    std::size_t w_off = 0;
    std::size_t in_off = 0;
    std::size_t pre_off = 0;
    std::size_t out_off = 0;
    std::vector<std::uint32_t> neighbor;  // [s * x_y + (dx * Y + dy)]
  };
  std::size_t sites = 0;
  std::vector<Layer> layers;
  std::size_t dense_w_off = 0;
  std::size_t dense_in = 0;
  std::size_t h_off = 0;
  std::size_t pass_size = 0;
  std::size_t max_width = 0;
  bool pooling = true;
  double alpha = 0.01;
};

// Batched path: all passes of a forward() call go through im2col + GEMM.
struct CnnEvaluator::Batch {
  using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<const SpinConfig*> a, b;  // pass p evaluates A(*a[p], *b[p])
  std::vector<RMat> col, pre;           // per layer
  RMat in0, out, h, f, df, dh, dout, dpre, dcol;
  std::vector<Complex> seeds;
};

CnnEvaluator::CnnEvaluator(CnnNdo model, const Lattice& lattice)
    : model_(std::move(model)), lattice_(lattice), plan_(std::make_unique<Plan>()), batch_(std::make_unique<Batch>()) {
  model_.check_lattice(lattice_);
  const auto& arch = model_.architecture();
  auto& p = *plan_;
  p.sites = lattice_.n_sites();
  p.pooling = arch.pooling;
  p.alpha = arch.leaky_slope;

  std::size_t tape_off = 2 * p.sites;  // input block
  std::size_t w_off = 0;
  std::size_t in_off = 0;
  p.max_width = 2 * p.sites;
  const int lx = lattice_.extent_x();
  const int ly = lattice_.extent_y();
  for (const auto& spec : arch.conv_layers) {
    Plan::Layer L;
    L.x_y = static_cast<std::size_t>(spec.kernel_x * spec.kernel_y);
    L.c = static_cast<std::size_t>(spec.in_channels);
    L.k = static_cast<std::size_t>(spec.out_kernels);
    L.w_off = w_off;
    L.in_off = in_off;
    L.pre_off = tape_off;
    L.out_off = tape_off + p.sites * L.k;
    tape_off = L.out_off + p.sites * L.k;
    in_off = L.out_off;
    w_off += spec.param_count();
    p.max_width = std::max(p.max_width, p.sites * L.k);

    L.neighbor.resize(p.sites * L.x_y);
    for (std::size_t s = 0; s < p.sites; ++s) {
      const int x = static_cast<int>(s % static_cast<std::size_t>(lx));
      const int y = static_cast<int>(s / static_cast<std::size_t>(lx));
      for (int dx = 0; dx < spec.kernel_x; ++dx) {
        for (int dy = 0; dy < spec.kernel_y; ++dy) {
          const int nx = (x + dx) % lx;
          const int ny = (y + dy) % ly;
          L.neighbor[s * L.x_y + static_cast<std::size_t>(dx * spec.kernel_y + dy)] =
              static_cast<std::uint32_t>(ny * lx + nx);
        }
      }
    }
    p.layers.push_back(std::move(L));
  }
  p.dense_w_off = w_off;
  p.dense_in = arch.dense_inputs();
  p.h_off = tape_off;
  p.pass_size = tape_off + p.dense_in + 2;
  scratch_.resize(2 * p.max_width + p.dense_in);
}

CnnEvaluator::~CnnEvaluator() = default;

CnnEvaluator::CnnEvaluator(const CnnEvaluator& other)
    : DensityModel(),
      model_(other.model_),
      lattice_(other.lattice_),
      plan_(std::make_unique<Plan>(*other.plan_)),
      batch_(std::make_unique<Batch>()),
      scratch_(other.scratch_.size()) {}

std::unique_ptr<DensityModel> CnnEvaluator::clone() const { return std::make_unique<CnnEvaluator>(*this); }

Complex CnnEvaluator::run_pass(const SpinConfig& a, const SpinConfig& b, double* tape) const {
  const auto& p = *plan_;
  if (a.size() != p.sites || b.size() != p.sites) {
    throw std::invalid_argument("configuration size does not match the evaluator lattice");
  }
  const double* theta = model_.theta().data();
  for (std::size_t s = 0; s < p.sites; ++s) {
    tape[2 * s] = a[s];
    tape[2 * s + 1] = b[s];
  }
  for (const auto& L : p.layers) {
    const double* in = tape + L.in_off;
    double* pre = tape + L.pre_off;
    double* out = tape + L.out_off;
    const double* w = theta + L.w_off;
    std::fill(pre, pre + p.sites * L.k, 0.0);
    for (std::size_t s = 0; s < p.sites; ++s) {
      double* ps = pre + s * L.k;
      for (std::size_t o = 0; o < L.x_y; ++o) {
        const double* x = in + static_cast<std::size_t>(L.neighbor[s * L.x_y + o]) * L.c;
        const double* wo = w + o * L.c * L.k;
        for (std::size_t c = 0; c < L.c; ++c) {
          const double xc = x[c];
          const double* wr = wo + c * L.k;
          for (std::size_t k = 0; k < L.k; ++k) ps[k] += xc * wr[k];
        }
      }
    }
    for (std::size_t i = 0; i < p.sites * L.k; ++i) out[i] = pre[i] > 0.0 ? pre[i] : p.alpha * pre[i];
  }
  const auto& last = p.layers.back();
  const double* feat = tape + last.out_off;
  double* h = tape + p.h_off;
  if (p.pooling) {
    std::fill(h, h + last.k, 0.0);
    for (std::size_t s = 0; s < p.sites; ++s) {
      for (std::size_t k = 0; k < last.k; ++k) h[k] += feat[s * last.k + k];
    }
    const double inv = 1.0 / static_cast<double>(p.sites);
    for (std::size_t k = 0; k < last.k; ++k) h[k] *= inv;
  } else {
    std::copy(feat, feat + p.dense_in, h);
  }
  const double* wd = theta + p.dense_w_off;
  double f0 = theta[p.dense_w_off + 2 * p.dense_in];
  double f1 = theta[p.dense_w_off + 2 * p.dense_in + 1];
  for (std::size_t i = 0; i < p.dense_in; ++i) {
    f0 += h[i] * wd[2 * i];
    f1 += h[i] * wd[2 * i + 1];
  }
  tape[p.h_off + p.dense_in] = f0;
  tape[p.h_off + p.dense_in + 1] = f1;
  return {f0, f1};
}

void CnnEvaluator::back_pass(const double* tape, double seed0, double seed1, std::span<double> grad) {
  const auto& p = *plan_;
  const double* theta = model_.theta().data();
  double* g = grad.data();
  const double* h = tape + p.h_off;
  const double* wd = theta + p.dense_w_off;

  double* buf_a = scratch_.data();
  double* buf_b = scratch_.data() + p.max_width;
  double* dh = scratch_.data() + 2 * p.max_width;

  for (std::size_t i = 0; i < p.dense_in; ++i) {
    g[p.dense_w_off + 2 * i] += h[i] * seed0;
    g[p.dense_w_off + 2 * i + 1] += h[i] * seed1;
    dh[i] = seed0 * wd[2 * i] + seed1 * wd[2 * i + 1];
  }
  g[p.dense_w_off + 2 * p.dense_in] += seed0;
  g[p.dense_w_off + 2 * p.dense_in + 1] += seed1;

  const auto& last = p.layers.back();
  double* dout = buf_a;
  if (p.pooling) {
    const double inv = 1.0 / static_cast<double>(p.sites);
    for (std::size_t s = 0; s < p.sites; ++s) {
      for (std::size_t k = 0; k < last.k; ++k) dout[s * last.k + k] = dh[k] * inv;
    }
  } else {
    std::copy(dh, dh + p.dense_in, dout);
  }

  for (std::size_t n = p.layers.size(); n-- > 0;) {
    const auto& L = p.layers[n];
    const double* pre = tape + L.pre_off;
    const double* in = tape + L.in_off;
    const double* w = theta + L.w_off;
    double* gw = g + L.w_off;
    // dout becomes dpre in place
    for (std::size_t i = 0; i < p.sites * L.k; ++i) {
      if (!(pre[i] > 0.0)) dout[i] *= p.alpha;
    }
    const bool need_din = n > 0;
    double* din = (dout == buf_a) ? buf_b : buf_a;
    if (need_din) std::fill(din, din + p.sites * L.c, 0.0);
    for (std::size_t s = 0; s < p.sites; ++s) {
      const double* dp = dout + s * L.k;
      for (std::size_t o = 0; o < L.x_y; ++o) {
        const std::size_t src = L.neighbor[s * L.x_y + o];
        const double* x = in + src * L.c;
        double* dx = din + src * L.c;
        const double* wo = w + o * L.c * L.k;
        double* gwo = gw + o * L.c * L.k;
        for (std::size_t c = 0; c < L.c; ++c) {
          const double xc = x[c];
          const double* wr = wo + c * L.k;
          double* gr = gwo + c * L.k;
          double acc = 0.0;
          for (std::size_t k = 0; k < L.k; ++k) {
            gr[k] += xc * dp[k];
            acc += wr[k] * dp[k];
          }
          if (need_din) dx[c] += acc;
        }
      }
    }
    dout = din;
  }
}

Complex CnnEvaluator::amplitude(const JointConfig& cfg) {
  if (tape_.size() < plan_->pass_size) tape_.resize(plan_->pass_size);
  batch_pass_a_.clear();
  batch_pass_b_.clear();
  return run_pass(cfg.row, cfg.col, tape_.data());
}

Complex CnnEvaluator::rho(const JointConfig& cfg) {
  if (tape_.size() < plan_->pass_size) tape_.resize(plan_->pass_size);
  batch_pass_a_.clear();
  batch_pass_b_.clear();
  const Complex a = run_pass(cfg.row, cfg.col, tape_.data());
  if (cfg.row == cfg.col) return {2.0 * a.real(), 0.0};
  const Complex b = run_pass(cfg.col, cfg.row, tape_.data());
  return std::conj(a) + b;
}

void CnnEvaluator::batch_forward() {
  using RMat = Batch::RMat;
  const auto& p = *plan_;
  auto& B = *batch_;
  const auto P = static_cast<Eigen::Index>(B.a.size());
  const auto S = static_cast<Eigen::Index>(p.sites);
  const double* theta = model_.theta().data();
  B.in0.resize(P * S, 2);
  for (Eigen::Index q = 0; q < P; ++q) {
    const SpinConfig& a = *B.a[static_cast<std::size_t>(q)];
    const SpinConfig& b = *B.b[static_cast<std::size_t>(q)];
    for (Eigen::Index s = 0; s < S; ++s) {
      B.in0(q * S + s, 0) = a[static_cast<std::size_t>(s)];
      B.in0(q * S + s, 1) = b[static_cast<std::size_t>(s)];
    }
  }
  B.col.resize(p.layers.size());
  B.pre.resize(p.layers.size());
  const RMat* in = &B.in0;
  for (std::size_t n = 0; n < p.layers.size(); ++n) {
    const auto& L = p.layers[n];
    const auto C = static_cast<Eigen::Index>(L.c);
    const auto XY = static_cast<Eigen::Index>(L.x_y);
    RMat& col = B.col[n];
    col.resize(P * S, XY * C);
    for (Eigen::Index q = 0; q < P; ++q) {
      const double* src = in->data() + q * S * C;
      for (Eigen::Index s = 0; s < S; ++s) {
        double* dst = col.data() + (q * S + s) * XY * C;
        const std::uint32_t* nb = L.neighbor.data() + s * XY;
        for (Eigen::Index o = 0; o < XY; ++o) std::copy_n(src + nb[o] * C, C, dst + o * C);
      }
    }
    Eigen::Map<const RMat> w(theta + L.w_off, XY * C, static_cast<Eigen::Index>(L.k));
    B.pre[n].noalias() = col * w;
    B.out = B.pre[n].cwiseMax(0.0) + p.alpha * B.pre[n].cwiseMin(0.0);
    in = &B.out;
  }
  const auto K = static_cast<Eigen::Index>(p.layers.back().k);
  const auto D = static_cast<Eigen::Index>(p.dense_in);
  if (p.pooling) {
    B.h.resize(P, K);
    const double inv = 1.0 / static_cast<double>(S);
    for (Eigen::Index q = 0; q < P; ++q) B.h.row(q) = B.out.middleRows(q * S, S).colwise().sum() * inv;
  } else {
    B.h = Eigen::Map<const RMat>(B.out.data(), P, D);
  }
  Eigen::Map<const RMat> wd(theta + p.dense_w_off, D, 2);
  Eigen::Map<const Eigen::RowVector2d> bias(theta + p.dense_w_off + 2 * p.dense_in);
  B.f.noalias() = B.h * wd;
  B.f.rowwise() += bias;
}

void CnnEvaluator::batch_backward(double* g) {
  using RMat = Batch::RMat;
  const auto& p = *plan_;
  auto& B = *batch_;
  const auto P = static_cast<Eigen::Index>(B.a.size());
  const auto S = static_cast<Eigen::Index>(p.sites);
  const auto D = static_cast<Eigen::Index>(p.dense_in);
  const double* theta = model_.theta().data();

  Eigen::Map<const RMat> wd(theta + p.dense_w_off, D, 2);
  Eigen::Map<RMat> gwd(g + p.dense_w_off, D, 2);
  Eigen::Map<Eigen::RowVector2d> gbias(g + p.dense_w_off + 2 * p.dense_in);
  gwd.noalias() += B.h.transpose() * B.df;
  gbias += B.df.colwise().sum();
  B.dh.noalias() = B.df * wd.transpose();

  const auto K = static_cast<Eigen::Index>(p.layers.back().k);
  B.dout.resize(P * S, K);
  if (p.pooling) {
    const double inv = 1.0 / static_cast<double>(S);
    for (Eigen::Index q = 0; q < P; ++q) B.dout.middleRows(q * S, S).rowwise() = B.dh.row(q) * inv;
  } else {
    B.dout = Eigen::Map<const RMat>(B.dh.data(), P * S, K);
  }
  for (std::size_t n = p.layers.size(); n-- > 0;) {
    const auto& L = p.layers[n];
    const auto C = static_cast<Eigen::Index>(L.c);
    const auto XY = static_cast<Eigen::Index>(L.x_y);
    const auto Kn = static_cast<Eigen::Index>(L.k);
    B.dpre = (B.pre[n].array() > 0.0).select(B.dout, p.alpha * B.dout);
    Eigen::Map<RMat> gw(g + L.w_off, XY * C, Kn);
    gw.noalias() += B.col[n].transpose() * B.dpre;
    if (n == 0) break;
    Eigen::Map<const RMat> w(theta + L.w_off, XY * C, Kn);
    B.dcol.noalias() = B.dpre * w.transpose();
    B.dout.setZero(P * S, C);
    for (Eigen::Index q = 0; q < P; ++q) {
      double* dst = B.dout.data() + q * S * C;
      for (Eigen::Index s = 0; s < S; ++s) {
        const double* src = B.dcol.data() + (q * S + s) * XY * C;
        const std::uint32_t* nb = L.neighbor.data() + s * XY;
        for (Eigen::Index o = 0; o < XY; ++o) {
          double* d = dst + nb[o] * C;
          const double* sv = src + o * C;
          for (Eigen::Index c = 0; c < C; ++c) d[c] += sv[c];
        }
      }
    }
  }
}

void CnnEvaluator::forward(std::span<const JointConfig> cfgs, std::span<Complex> out) {
  if (out.size() != cfgs.size()) throw std::invalid_argument("forward: output span size mismatch");
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  auto& B = *batch_;
  B.a.clear();
  B.b.clear();
  batch_pass_a_.assign(cfgs.size(), 0);
  batch_pass_b_.assign(cfgs.size(), npos);
  for (std::size_t j = 0; j < cfgs.size(); ++j) {
    const auto& c = cfgs[j];
    if (c.row.size() != plan_->sites || c.col.size() != plan_->sites) {
      throw std::invalid_argument("configuration size does not match the evaluator lattice");
    }
    batch_pass_a_[j] = B.a.size();
    B.a.push_back(&c.row);
    B.b.push_back(&c.col);
    if (!(c.row == c.col)) {
      batch_pass_b_[j] = B.a.size();
      B.a.push_back(&c.col);
      B.b.push_back(&c.row);
    }
  }
  batch_forward();
  // the configs may not outlive this call
  B.a.assign(B.a.size(), nullptr);
  B.b.assign(B.b.size(), nullptr);
  for (std::size_t j = 0; j < cfgs.size(); ++j) {
    const auto ia = static_cast<Eigen::Index>(batch_pass_a_[j]);
    const Complex a{B.f(ia, 0), B.f(ia, 1)};
    if (batch_pass_b_[j] == npos) {
      out[j] = {2.0 * a.real(), 0.0};
    } else {
      const auto ib = static_cast<Eigen::Index>(batch_pass_b_[j]);
      out[j] = std::conj(a) + Complex{B.f(ib, 0), B.f(ib, 1)};
    }
  }
}

void CnnEvaluator::backward(std::span<const Complex> kappa, std::span<double> grad) {
  if (kappa.size() != batch_pass_a_.size()) {
    throw std::invalid_argument("backward: kappa does not match the last forward batch");
  }
  if (grad.size() != model_.num_params()) throw std::invalid_argument("backward: gradient length mismatch");
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  auto& B = *batch_;
  B.df.resize(static_cast<Eigen::Index>(B.a.size()), 2);
  for (std::size_t j = 0; j < kappa.size(); ++j) {
    const Complex k = kappa[j];
    const auto ia = static_cast<Eigen::Index>(batch_pass_a_[j]);
    if (batch_pass_b_[j] == npos) {
      // rho = 2 Re A on the diagonal
      B.df(ia, 0) = 2.0 * k.real();
      B.df(ia, 1) = 0.0;
    } else {
      // Re(k conj(dA)) = Re k dF0 + Im k dF1 ; Re(k dA') = Re k dF0' - Im k dF1'
      const auto ib = static_cast<Eigen::Index>(batch_pass_b_[j]);
      B.df(ia, 0) = k.real();
      B.df(ia, 1) = k.imag();
      B.df(ib, 0) = k.real();
      B.df(ib, 1) = -k.imag();
    }
  }
  batch_backward(grad.data());
}

void CnnEvaluator::amplitude_vjp(const JointConfig& cfg, double seed0, double seed1, std::span<double> grad) {
  if (grad.size() != model_.num_params()) throw std::invalid_argument("gradient length mismatch");
  if (tape_.size() < plan_->pass_size) tape_.resize(plan_->pass_size);
  batch_pass_a_.clear();
  batch_pass_b_.clear();
  run_pass(cfg.row, cfg.col, tape_.data());
  back_pass(tape_.data(), seed0, seed1, grad);
}

Complex forward_amplitude(const CnnNdo& model, const Lattice& lattice, const JointConfig& cfg) {
  CnnEvaluator ev(model, lattice);
  return ev.amplitude(cfg);
}

Complex rho(const CnnNdo& model, const Lattice& lattice, const JointConfig& cfg) {
  CnnEvaluator ev(model, lattice);
  return ev.rho(cfg);
}

// ---------------------------------------------------------------------------

std::vector<Complex> grad_rho(DensityModel& model, const JointConfig& cfg) {
  const std::size_t n = model.num_params();
  std::vector<double> re(n, 0.0), im(n, 0.0);
  Complex r;
  model.forward(std::span(&cfg, 1), std::span(&r, 1));
  const Complex one{1.0, 0.0};
  const Complex minus_i{0.0, -1.0};
  model.backward(std::span(&one, 1), re);
  model.backward(std::span(&minus_i, 1), im);
  std::vector<Complex> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {re[i], im[i]};
  return out;
}

std::vector<Complex> grad_log_rho(DensityModel& model, const JointConfig& cfg) {
  const Complex r = model.rho(cfg);
  if (std::abs(r) < 1e-300) throw NumericError("grad_log_rho: |rho| below underflow guard (dead configuration)");
  auto g = grad_rho(model, cfg);
  for (auto& v : g) v /= r;
  return g;
}

}  // namespace cnndo
