#include "cnndo/runner.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "cnndo/checkpoint.hpp"
#include "cnndo/errors.hpp"
#include "cnndo/estimators.hpp"
#include "cnndo/exact.hpp"

namespace cnndo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kEvalStream = std::uint64_t{1} << 62;
constexpr std::size_t kMaxSampledSites = 63;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

fs::path prepare_dir(const RunConfig& cfg) {
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("output_dir", "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void guard_sampled_size(const Lattice& lat) {
  if (lat.n_sites() > kMaxSampledSites) {
    throw SizeGuardError("lattice " + lat.describe() + " exceeds the " + std::to_string(kMaxSampledSites) +
                         "-site limit of the sampled estimators");
  }
}

CnnEvaluator make_evaluator(const CnnNdo& model, const Lattice& lattice) {
  try {
    return CnnEvaluator(model, lattice);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("init_from", std::string("checkpoint does not fit the lattice: ") + e.what());
  }
}

json versions() {
  return {{"cnndo", std::string(kVersion)},
          {"compiler", __VERSION__},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

json observable_json(const ObservableEstimate& e) {
  return {{"value", e.value},
          {"std_error", e.std_error},
          {"imag", e.imag},
          {"imag_std_error", e.imag_std_error},
          {"mean_sign", e.mean_sign}};
}

json positivity_json(const PositivityReport& r) {
  return {{"min_eig_over_trace", r.min_eig_over_trace},
          {"trace", r.trace},
          {"trace_sign", r.trace_sign},
          {"hermiticity_defect", r.hermiticity_defect},
          {"sector_leakage", r.sector_leakage}};
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
  if (!opts.config) throw ConfigError("--config", "a config file is required");
  RunConfig cfg = load_config(*opts.config);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.sampler.seed = *opts.seed;
  }
  if (opts.output) cfg.output_dir = *opts.output;
  if (opts.init_from) cfg.init_from = *opts.init_from;
  if (opts.threads == 0) throw ConfigError("--threads", "must be positive");
  return cfg;
}

TrainSummary cmd_train(const RunConfig& cfg, unsigned threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const Lattice& lattice = cfg.model.lattice;
  guard_sampled_size(lattice);
  const Liouvillian liouv(cfg.model);

  CnnNdo init = init_params(cfg.architecture, cfg.seed, cfg.init_scale);
  if (cfg.init_from) {
    const Checkpoint ck = load_checkpoint(*cfg.init_from);
    if (!(ck.architecture == cfg.architecture)) {
      throw ConfigError("init_from", "checkpoint architecture differs from the architecture section");
    }
    init = ck.model();
    make_evaluator(init, lattice);
  }

  const fs::path dir = prepare_dir(cfg);
  std::ofstream trace(dir / "trace.csv", std::ios::binary);
  if (!trace) throw std::runtime_error("cannot write " + (dir / "trace.csv").string());
  trace << "# cnndo trace v1\n";
  trace << "iter,cost,stderr,step_size,acceptance,accepted";
  if (cfg.track.observable) trace << ',' << pauli_name(*cfg.track.observable);
  trace << '\n';

  RunOptions ro;
  ro.threads = threads;
  ro.tracked = cfg.track.observable;
  ro.track_every = cfg.track.every;
  ro.track_samples = cfg.track.n_samples;
  ro.stop_on_plateau = cfg.stop_on_plateau;
  ro.on_row = [&](const TraceRow& r) {
    trace << r.iter << ',' << fmt(r.cost) << ',' << fmt(r.std_error) << ',' << fmt(r.step_size) << ','
          << fmt(r.acceptance) << ',' << (r.accepted ? 1 : 0);
    if (cfg.track.observable) {
      trace << ',';
      if (r.observable) trace << fmt(*r.observable);
    }
    trace << '\n';
  };

  json meta;
  meta["config"] = config_to_json(cfg);
  meta["versions"] = versions();
  meta["threads"] = threads;
  meta["command"] = "train";

  RunResult result{init, {}, false, 0, 0};
  try {
    result = run(init, liouv, cfg.sampler, cfg.optimizer, ro);
  } catch (const std::exception& e) {
    trace.close();
    meta["status"] = "failed";
    meta["error"] = e.what();
    meta["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(dir / "run_meta.json", meta.dump(2) + "\n");
    throw;
  }
  trace.close();
  if (!trace) throw std::runtime_error("write failed: " + (dir / "trace.csv").string());

  const std::size_t tail = std::min<std::size_t>(result.trace.size(), 100);
  double tail_cost = 0.0;
  for (std::size_t i = result.trace.size() - tail; i < result.trace.size(); ++i) tail_cost += result.trace[i].cost;
  if (tail > 0) tail_cost /= static_cast<double>(tail);

  Checkpoint ck;
  ck.architecture = cfg.architecture;
  ck.theta.assign(result.model.theta().begin(), result.model.theta().end());
  ck.rng_state = {{"seed", cfg.seed}, {"next_stream", result.iterations}};
  ck.metadata = {{"model", model_to_json(cfg.model_type, cfg.model)},
                 {"iterations", result.iterations},
                 {"plateau", result.plateau},
                 {"rejections", result.rejections},
                 {"mean_cost_last_100", tail_cost},
                 {"init_from", cfg.init_from ? json(*cfg.init_from) : json(nullptr)}};
  save_checkpoint(dir / "checkpoint.json", ck);

  TrainSummary s;
  s.iterations = result.iterations;
  s.plateau = result.plateau;
  s.rejections = result.rejections;
  s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  meta["status"] = "ok";
  meta["iterations"] = s.iterations;
  meta["plateau"] = s.plateau;
  meta["rejections"] = s.rejections;
  meta["mean_cost_last_100"] = tail_cost;
  meta["wall_time_s"] = s.wall_seconds;
  write_text(dir / "run_meta.json", meta.dump(2) + "\n");
  return s;
}

json cmd_evaluate(const RunConfig& cfg, unsigned threads) {
  const Lattice& lattice = cfg.model.lattice;
  guard_sampled_size(lattice);
  const fs::path ck_path = cfg.init_from ? fs::path(*cfg.init_from) : fs::path(cfg.output_dir) / "checkpoint.json";
  const Checkpoint ck = load_checkpoint(ck_path);
  CnnEvaluator model = make_evaluator(ck.model(), lattice);

  SamplerConfig sc = cfg.sampler;
  sc.n_chains = cfg.eval.n_chains;
  sc.n_samples = cfg.eval.n_samples;
  if (sc.n_samples % sc.n_chains != 0) sc.n_samples += sc.n_chains - sc.n_samples % sc.n_chains;
  const auto diag = sample_diagonal(model, sc, lattice, kEvalStream, threads);
  const auto est = estimate_observables(model, cfg.eval.observables, diag, threads);

  json out;
  out["model"] = model_to_json(cfg.model_type, cfg.model);
  out["checkpoint"] = ck_path.string();
  out["n_samples"] = diag.size();
  out["n_chains"] = diag.n_chains;
  out["acceptance_rate"] = diag.acceptance_rate;
  out["seed"] = cfg.seed;
  json obs = json::object();
  for (const auto& e : est) obs[e.name] = observable_json(e);
  out["observables"] = obs;

  if (lattice.n_sites() <= kMaxEnumerationSites) {
    const auto rho = assemble_density_matrix(model, lattice.n_sites());
    const auto rep = positivity_report(rho);
    out["positivity"] = positivity_json(rep);
    json exact = json::object();
    const Eigen::MatrixXcd normalized = rho / rho.trace();
    for (Pauli p : cfg.eval.observables) {
      exact[std::string(pauli_name(p))] = site_averaged_expectation(normalized, p);
    }
    out["enumerated_observables"] = exact;
    const Liouvillian liouv(cfg.model);
    out["enumerated_cost"] = exact_cost(model, liouv);
  }

  const fs::path dir = prepare_dir(cfg);
  write_text(dir / "observables.json", out.dump(2) + "\n");
  std::string csv = "# cnndo observables v1\nobservable,value,std_error,imag,imag_std_error,mean_sign,n_samples\n";
  for (const auto& e : est) {
    csv += e.name + "," + fmt(e.value) + "," + fmt(e.std_error) + "," + fmt(e.imag) + "," + fmt(e.imag_std_error) +
           "," + fmt(e.mean_sign) + "," + std::to_string(diag.size()) + "\n";
  }
  write_text(dir / "observables.csv", csv);
  return out;
}

json cmd_exact(const RunConfig& cfg) {
  const std::size_t n = cfg.model.lattice.n_sites();
  const DenseNess ness = solve_ness(cfg.model);

  json out;
  out["model"] = model_to_json(cfg.model_type, cfg.model);
  json obs = json::object();
  std::string csv = "# cnndo ness_observables v1\nobservable,value\n";
  for (Pauli p : {Pauli::X, Pauli::Y, Pauli::Z}) {
    const double v = site_averaged_expectation(ness.rho, p);
    obs[std::string(pauli_name(p))] = v;
    csv += std::string(pauli_name(p)) + "," + fmt(v) + "\n";
  }
  out["observables"] = obs;
  out["residual_norm"] = ness.residual_norm;
  out["min_eigenvalue"] = ness.min_eigenvalue;
  out["uniqueness_gap"] = ness.uniqueness_gap;
  out["sector_leakage"] = sector_leakage(ness.rho, n);
  out["purity"] = (ness.rho * ness.rho).trace().real();
  out["sector_matrix_beta"] = cfg.sampler.beta;

  const auto order = magnetization_order(n);
  std::string mat = "# cnndo sector_matrix v1: |rho|^(2 beta), beta = " + fmt(cfg.sampler.beta) +
                    ", rows and columns in order of total magnetization\n# basis:";
  for (std::size_t i : order) mat += " " + std::to_string(i);
  mat += "\n";
  for (std::size_t r : order) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (k) mat += ",";
      mat += fmt(std::pow(std::abs(ness.rho(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(order[k]))),
                          2.0 * cfg.sampler.beta));
    }
    mat += "\n";
  }

  const fs::path dir = prepare_dir(cfg);
  write_text(dir / "ness_observables.json", out.dump(2) + "\n");
  write_text(dir / "ness_observables.csv", csv);
  write_text(dir / "sector_matrix.csv", mat);
  return out;
}

std::size_t cmd_count_params(const RunConfig& cfg) { return count_params(cfg.architecture); }

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    if (command != "train" && command != "evaluate" && command != "exact" && command != "count-params") {
      throw ConfigError("", "unknown command '" + command + "'");
    }
    const RunConfig cfg = resolve_config(opts);
    if (command == "count-params") {
      out << cmd_count_params(cfg) << '\n';
    } else if (command == "train") {
      const auto s = cmd_train(cfg, opts.threads);
      out << "iterations " << s.iterations << (s.plateau ? " (plateau)" : "") << ", rejections " << s.rejections
          << ", " << s.wall_seconds << " s -> " << cfg.output_dir << '\n';
    } else if (command == "evaluate") {
      const auto j = cmd_evaluate(cfg, opts.threads);
      for (auto it = j["observables"].begin(); it != j["observables"].end(); ++it) {
        out << it.key() << " = " << (*it)["value"].get<double>() << " +- " << (*it)["std_error"].get<double>() << '\n';
      }
    } else {
      const auto j = cmd_exact(cfg);
      for (auto it = j["observables"].begin(); it != j["observables"].end(); ++it) {
        out << it.key() << " = " << it->get<double>() << '\n';
      }
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const SizeGuardError& e) {
    err << "size guard: " << e.what() << '\n';
    return kExitSizeGuard;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace cnndo
