#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "cnndo/cnn.hpp"
#include "cnndo/liouvillian.hpp"
#include "cnndo/sampler.hpp"

namespace cnndo {

struct OptimizerConfig {
  double momentum = 0.9;
  double eta0 = 0.01;
  double eta_max = 0.1;
  double eta_min = 1e-8;
  double eta_growth = 1.05;
  /// A lookahead point is rejected when its cost exceeds the anchor cost by
  /// more than this many combined standard errors.
  double backtrack_sigmas = 3.0;
  std::size_t max_iters = 20000;
  std::size_t plateau_window = 500;
  double plateau_rel_tol = 1e-3;

  void validate() const;
};

/// theta is the current iterate, anchor the point it was stepped from.
struct OptimizerState {
  std::vector<double> theta;
  std::vector<double> velocity;
  std::vector<double> anchor;
  double step_size = 0.01;
  double momentum = 0.9;
  std::size_t iter = 0;
  double best_cost = 0.0;
  std::size_t rejections = 0;

  static OptimizerState start(std::span<const double> theta, const OptimizerConfig& cfg);
  std::vector<double> lookahead() const;
};

/// Cost and gradient at the lookahead point theta + mu v, plus the cost of the
/// anchor estimated on the same samples. `same_point` is set when the two
/// coincide (zero velocity), in which case ref_* may simply copy cost_*.
struct LookaheadEval {
  double cost = 0.0;
  double std_error = 0.0;
  double ref_cost = 0.0;
  double ref_std_error = 0.0;
  std::vector<double> grad;
};
using LookaheadFn =
    std::function<LookaheadEval(std::span<const double> lookahead, std::span<const double> anchor, bool same_point)>;

struct StepResult {
  bool accepted = true;
  LookaheadEval eval;
};

/// One backtracking Nesterov step.
///   accept: v <- mu v - eta g(theta + mu v); anchor <- theta; theta <- theta + v; eta <- min(1.05 eta, eta_max)
///   reject: theta <- anchor; v <- 0; eta <- eta / 2
/// Throws NumericError on a non-finite gradient or when eta drops below eta_min.
StepResult step(OptimizerState& state, const OptimizerConfig& cfg, const LookaheadFn& eval);

/// Mean cost over the latest window against the window before it; reports a
/// plateau once the relative decrease falls below the tolerance.
class PlateauDetector {
 public:
  PlateauDetector(std::size_t window, double rel_tol);
  bool push(double cost);
  bool reached() const noexcept { return reached_; }

 private:
  std::size_t window_;
  double tol_;
  std::deque<double> history_;
  double older_sum_ = 0.0, newer_sum_ = 0.0;
  bool reached_ = false;
};

struct TraceRow {
  std::size_t iter = 0;
  double cost = 0.0;
  double std_error = 0.0;
  double step_size = 0.0;
  double acceptance = 0.0;
  bool accepted = true;
  std::optional<double> observable;
};

struct RunOptions {
  unsigned threads = 1;
  std::optional<Pauli> tracked;
  std::size_t track_every = 100;
  std::size_t track_samples = 1024;
  /// Called after every iteration, e.g. to stream the trace to disk.
  std::function<void(const TraceRow&)> on_row;
  /// Stop on the plateau criterion; otherwise only max_iters ends the run.
  bool stop_on_plateau = true;
};

struct RunResult {
  CnnNdo model;
  std::vector<TraceRow> trace;
  bool plateau = false;
  std::size_t iterations = 0;
  std::size_t rejections = 0;
};

/// sample -> estimate cost and gradient -> step, until max_iters or a plateau.
/// Sampling stream k is used at iteration k, so the run is a function of
/// (initial theta, configs, seed).
RunResult run(const CnnNdo& init, const Liouvillian& liouv, const SamplerConfig& sampler, const OptimizerConfig& opt,
              const RunOptions& options = {});

}  // namespace cnndo
