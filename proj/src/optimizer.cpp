#include "cnndo/optimizer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "cnndo/errors.hpp"
#include "cnndo/estimators.hpp"

namespace cnndo {

void OptimizerConfig::validate() const {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum", "must lie in [0, 1)");
  if (!(eta0 > 0.0)) throw ConfigError("eta0", "must be positive");
  if (!(eta_max >= eta0)) throw ConfigError("eta_max", "must be at least eta0");
  if (!(eta_min > 0.0 && eta_min < eta0)) throw ConfigError("eta_min", "must lie in (0, eta0)");
  if (!(eta_growth >= 1.0)) throw ConfigError("eta_growth", "must be at least 1");
  if (!(backtrack_sigmas >= 0.0)) throw ConfigError("backtrack_sigmas", "must be non-negative");
  if (max_iters == 0) throw ConfigError("max_iters", "must be positive");
  if (plateau_window == 0) throw ConfigError("plateau_window", "must be positive");
  if (!(plateau_rel_tol > 0.0)) throw ConfigError("plateau_rel_tol", "must be positive");
}

OptimizerState OptimizerState::start(std::span<const double> theta, const OptimizerConfig& cfg) {
  OptimizerState s;
  s.theta.assign(theta.begin(), theta.end());
  s.anchor = s.theta;
  s.velocity.assign(theta.size(), 0.0);
  s.step_size = cfg.eta0;
  s.momentum = cfg.momentum;
  s.best_cost = std::numeric_limits<double>::infinity();
  return s;
}

std::vector<double> OptimizerState::lookahead() const {
  std::vector<double> la(theta.size());
  for (std::size_t i = 0; i < la.size(); ++i) la[i] = theta[i] + momentum * velocity[i];
  return la;
}

StepResult step(OptimizerState& state, const OptimizerConfig& cfg, const LookaheadFn& eval) {
  const auto la = state.lookahead();
  const bool same = la == state.anchor;
  StepResult out;
  out.eval = eval(la, state.anchor, same);
  const auto& e = out.eval;
  if (e.grad.size() != state.theta.size()) throw std::invalid_argument("optimizer: gradient length mismatch");
  for (double g : e.grad)
    if (!std::isfinite(g)) throw NumericError("optimizer: non-finite gradient");
  if (!std::isfinite(e.cost)) throw NumericError("optimizer: non-finite cost");
  ++state.iter;

  const double tol = cfg.backtrack_sigmas * std::hypot(e.std_error, e.ref_std_error);
  if (!same && e.cost > e.ref_cost + tol) {
    out.accepted = false;
    ++state.rejections;
    state.theta = state.anchor;
    std::fill(state.velocity.begin(), state.velocity.end(), 0.0);
    state.step_size *= 0.5;
    if (state.step_size < cfg.eta_min) {
      throw NumericError("optimizer: step size fell below " + std::to_string(cfg.eta_min) + " at iteration " +
                         std::to_string(state.iter));
    }
    return out;
  }
  state.best_cost = std::min(state.best_cost, e.cost);
  state.anchor = state.theta;
  for (std::size_t i = 0; i < state.theta.size(); ++i) {
    state.velocity[i] = state.momentum * state.velocity[i] - state.step_size * e.grad[i];
    state.theta[i] += state.velocity[i];
  }
  state.step_size = std::min(state.step_size * cfg.eta_growth, cfg.eta_max);
  return out;
}

PlateauDetector::PlateauDetector(std::size_t window, double rel_tol) : window_(window), tol_(rel_tol) {
  if (window == 0) throw std::invalid_argument("PlateauDetector: window must be positive");
}

bool PlateauDetector::push(double cost) {
  history_.push_back(cost);
  newer_sum_ += cost;
  if (history_.size() > window_) {
    const double moved = history_[history_.size() - 1 - window_];
    newer_sum_ -= moved;
    older_sum_ += moved;
  }
  if (history_.size() > 2 * window_) {
    older_sum_ -= history_.front();
    history_.pop_front();
  }
  if (history_.size() == 2 * window_ && older_sum_ > 0.0) {
    if ((older_sum_ - newer_sum_) / older_sum_ < tol_) reached_ = true;
  }
  return reached_;
}

RunResult run(const CnnNdo& init, const Liouvillian& liouv, const SamplerConfig& sampler, const OptimizerConfig& opt,
              const RunOptions& options) {
  sampler.validate();
  opt.validate();
  const Lattice& lattice = liouv.lattice();
  const Architecture& arch = init.architecture();
  init.check_lattice(lattice);

  auto state = OptimizerState::start(init.theta(), opt);
  PlateauDetector plateau(opt.plateau_window, opt.plateau_rel_tol);
  RunResult result{init, {}, false, 0, 0};
  double last_acceptance = 0.0;

  LookaheadFn eval = [&](std::span<const double> la, std::span<const double> anchor, bool same) {
    CnnEvaluator model(CnnNdo(arch, {la.begin(), la.end()}), lattice);
    const auto batch = sample_joint(model, sampler, lattice, state.iter, options.threads);
    last_acceptance = batch.acceptance_rate;
    const auto cg = estimate_cost_and_gradient(model, liouv, batch, options.threads, false);
    LookaheadEval e;
    e.cost = cg.cost.value;
    e.std_error = cg.cost.std_error;
    e.grad = cg.grad.g;
    if (same) {
      e.ref_cost = e.cost;
      e.ref_std_error = e.std_error;
    } else {
      CnnEvaluator ref(CnnNdo(arch, {anchor.begin(), anchor.end()}), lattice);
      const auto rc = estimate_cost_reweighted(ref, liouv, batch, options.threads);
      e.ref_cost = rc.value;
      e.ref_std_error = rc.std_error;
    }
    return e;
  };

  for (std::size_t it = 0; it < opt.max_iters; ++it) {
    StepResult sr;
    try {
      sr = step(state, opt, eval);
    } catch (const NumericError& err) {
      throw NumericError("iteration " + std::to_string(it) + ": " + err.what());
    }
    TraceRow row;
    row.iter = it;
    row.cost = sr.eval.cost;
    row.std_error = sr.eval.std_error;
    row.step_size = state.step_size;
    row.acceptance = last_acceptance;
    row.accepted = sr.accepted;
    const bool last = it + 1 == opt.max_iters;
    if (options.tracked && ((it + 1) % options.track_every == 0 || last)) {
      CnnEvaluator cur(CnnNdo(arch, state.theta), lattice);
      SamplerConfig dcfg = sampler;
      dcfg.n_samples = options.track_samples;
      if (dcfg.n_samples % dcfg.n_chains != 0) dcfg.n_samples += dcfg.n_chains - dcfg.n_samples % dcfg.n_chains;
      try {
        const auto diag = sample_diagonal(cur, dcfg, lattice, it, options.threads);
        row.observable = estimate_observable(cur, *options.tracked, diag, options.threads).value;
      } catch (const NumericError&) {
        row.observable = std::numeric_limits<double>::quiet_NaN();
      }
    }
    result.trace.push_back(row);
    if (options.on_row) options.on_row(row);
    result.iterations = it + 1;
    if (plateau.push(sr.eval.cost)) {
      result.plateau = true;
      if (options.stop_on_plateau) break;
    }
  }
  result.rejections = state.rejections;
  result.model = CnnNdo(arch, state.theta);
  return result;
}

}  // namespace cnndo
