#include "cnndo/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "cnndo/errors.hpp"

namespace cnndo {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const char* type_name(const json& j) { return j.type_name(); }

class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, std::string("expected an object, got ") + type_name(j_));
  }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json* raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) return nullptr;
    const json& v = j_.at(key);
    return v.is_null() ? nullptr : &v;
  }

  std::string key_path(const std::string& key) const { return join(path_, key); }
  const std::string& path() const { return path_; }

  void number(const std::string& key, double& out) {
    if (const json* v = raw(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key), std::string("expected a number, got ") + type_name(*v));
      out = v->get<double>();
      if (!std::isfinite(out)) throw ConfigError(key_path(key), "must be finite");
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = raw(key)) out = to_unsigned<Int>(*v, key_path(key));
  }

  template <class Int>
  void integer(const std::string& key, std::optional<Int>& out) {
    if (const json* v = raw(key)) out = to_unsigned<Int>(*v, key_path(key));
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = raw(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key), std::string("expected a boolean, got ") + type_name(*v));
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = raw(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key), std::string("expected a string, got ") + type_name(*v));
      out = v->get<std::string>();
    }
  }

  void string(const std::string& key, std::optional<std::string>& out) {
    std::string s;
    if (has(key)) {
      string(key, s);
      out = s;
    } else {
      seen_.insert(key);
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

  template <class Int>
  static Int to_unsigned(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) {
      const auto u = v.get<std::uint64_t>();
      if (u > std::numeric_limits<Int>::max()) throw ConfigError(path, "out of range");
      return static_cast<Int>(u);
    }
    if (v.is_number_integer()) {
      const auto i = v.get<std::int64_t>();
      if (i < 0) throw ConfigError(path, "must be non-negative");
      if (static_cast<std::uint64_t>(i) > std::numeric_limits<Int>::max()) throw ConfigError(path, "out of range");
      return static_cast<Int>(i);
    }
    throw ConfigError(path, std::string("expected a non-negative integer, got ") + type_name(v));
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Pauli pauli_at(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected an operator name (sx, sy, sz, id)");
  try {
    return parse_pauli(v.get<std::string>());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

void parse_model(const json& j, RunConfig& cfg) {
  Section s(j, "model");
  std::string type;
  s.string("type", type);
  if (type.empty()) throw ConfigError("model.type", "required (tfi1d or heisenberg2d)");
  cfg.model_type = type;
  if (type == "tfi1d") {
    std::size_t n = 6;
    TfiParams p;
    s.integer("N", n);
    s.number("V", p.V);
    s.number("g", p.g);
    s.number("gamma", p.gamma);
    s.finish();
    if (n < 2) throw ConfigError("model.N", "must be at least 2");
    if (!(p.gamma > 0.0)) throw ConfigError("model.gamma", "must be positive");
    cfg.model = ModelSpec{Lattice({static_cast<int>(n)}), p};
  } else if (type == "heisenberg2d") {
    std::size_t lx = 2, ly = 2;
    HeisenbergParams p;
    s.integer("Lx", lx);
    s.integer("Ly", ly);
    s.number("Jx", p.Jx);
    s.number("Jy", p.Jy);
    s.number("Jz", p.Jz);
    s.number("gamma", p.gamma);
    s.finish();
    if (lx < 2) throw ConfigError("model.Lx", "must be at least 2");
    if (ly < 2) throw ConfigError("model.Ly", "must be at least 2");
    if (!(p.gamma > 0.0)) throw ConfigError("model.gamma", "must be positive");
    cfg.model = ModelSpec{Lattice({static_cast<int>(lx), static_cast<int>(ly)}), p};
  } else {
    throw ConfigError("model.type", "unknown model '" + type + "' (expected tfi1d or heisenberg2d)");
  }
}

ConvLayerSpec layer_from_json(const json& j, const std::string& path) {
  Section s(j, path);
  ConvLayerSpec l;
  const json* kernel = s.raw("kernel");
  if (!kernel) throw ConfigError(s.key_path("kernel"), "required");
  if (!kernel->is_array() || kernel->empty() || kernel->size() > 2) {
    throw ConfigError(s.key_path("kernel"), "expected [X] or [X, Y]");
  }
  l.kernel_x = static_cast<int>(Section::to_unsigned<std::uint32_t>((*kernel)[0], s.key_path("kernel") + "[0]"));
  l.kernel_y = kernel->size() > 1
                   ? static_cast<int>(Section::to_unsigned<std::uint32_t>((*kernel)[1], s.key_path("kernel") + "[1]"))
                   : 1;
  std::uint32_t c = 0, k = 0;
  if (!s.has("in_channels")) throw ConfigError(s.key_path("in_channels"), "required");
  if (!s.has("kernels")) throw ConfigError(s.key_path("kernels"), "required");
  s.integer("in_channels", c);
  s.integer("kernels", k);
  s.finish();
  l.in_channels = static_cast<int>(c);
  l.out_kernels = static_cast<int>(k);
  return l;
}

Architecture named_preset(const std::string& name, const std::string& path) {
  if (name == "chain") return Architecture::chain_preset();
  if (name == "square") return Architecture::square_preset();
  if (name == "toy") return Architecture::toy_preset();
  throw ConfigError(path, "unknown preset '" + name + "' (expected chain, square or toy)");
}

void parse_architecture(const json& j, RunConfig& cfg) {
  Section s(j, "architecture");
  std::string scale = cfg.init_scale == InitScale::FanIn ? "fan_in" : "layer_params";
  s.string("init_scale", scale);
  if (scale == "layer_params") {
    cfg.init_scale = InitScale::LayerParams;
  } else if (scale == "fan_in") {
    cfg.init_scale = InitScale::FanIn;
  } else {
    throw ConfigError("architecture.init_scale", "expected layer_params or fan_in");
  }
  if (s.has("preset")) {
    std::string name;
    s.string("preset", name);
    for (const char* k : {"conv_layers", "pooling", "fixed_dims", "leaky_slope"}) {
      if (j.contains(k)) throw ConfigError(s.key_path(k), "cannot be combined with a preset");
    }
    s.finish();
    cfg.architecture = named_preset(name, "architecture.preset");
    return;
  }
  json rest = j;
  rest.erase("init_scale");
  rest.erase("preset");
  cfg.architecture = architecture_from_json(rest, "architecture");
}

void parse_sampler(const json& j, SamplerConfig& sc) {
  Section s(j, "sampler");
  s.integer("n_samples", sc.n_samples);
  s.integer("n_chains", sc.n_chains);
  s.integer("burn_in", sc.burn_in);
  s.integer("thin", sc.thin);
  s.number("beta", sc.beta);
  s.boolean("sector_restricted", sc.sector_restricted);
  s.finish();
}

void parse_optimizer(const json& j, RunConfig& cfg) {
  Section s(j, "optimizer");
  auto& o = cfg.optimizer;
  s.number("momentum", o.momentum);
  s.number("eta0", o.eta0);
  s.number("eta_max", o.eta_max);
  s.number("eta_min", o.eta_min);
  s.number("eta_growth", o.eta_growth);
  s.number("backtrack_sigmas", o.backtrack_sigmas);
  s.integer("max_iters", o.max_iters);
  if (const json* p = s.raw("plateau")) {
    Section ps(*p, "optimizer.plateau");
    ps.integer("window", o.plateau_window);
    ps.number("rel_tol", o.plateau_rel_tol);
    ps.boolean("stop", cfg.stop_on_plateau);
    ps.finish();
  }
  s.finish();
}

void parse_track(const json& j, TrackConfig& t) {
  Section s(j, "track");
  if (j.contains("observable")) {
    const json& v = j.at("observable");
    t.observable = v.is_null() ? std::nullopt : std::optional<Pauli>(pauli_at(v, "track.observable"));
  }
  s.raw("observable");
  s.integer("every", t.every);
  s.integer("n_samples", t.n_samples);
  s.finish();
  if (t.every == 0) throw ConfigError("track.every", "must be positive");
  if (t.n_samples == 0) throw ConfigError("track.n_samples", "must be positive");
}

void parse_eval(const json& j, EvalConfig& e) {
  Section s(j, "eval");
  s.integer("n_samples_final", e.n_samples);
  s.integer("n_chains", e.n_chains);
  if (const json* ops = s.raw("observables")) {
    if (!ops->is_array() || ops->empty()) throw ConfigError("eval.observables", "expected a non-empty list");
    e.observables.clear();
    for (std::size_t i = 0; i < ops->size(); ++i) {
      e.observables.push_back(pauli_at((*ops)[i], "eval.observables[" + std::to_string(i) + "]"));
    }
  }
  s.finish();
  if (e.n_samples == 0) throw ConfigError("eval.n_samples_final", "must be positive");
  if (e.n_chains == 0) throw ConfigError("eval.n_chains", "must be positive");
}

json pauli_json(Pauli p) { return std::string(pauli_name(p)); }

ConfigError within(const std::string& section, const ConfigError& e) {
  const std::string what = e.what();
  const std::string msg = e.key_path().empty() ? what : what.substr(e.key_path().size() + 2);
  return ConfigError(join(section, e.key_path()), msg);
}

}  // namespace

Architecture architecture_from_json(const json& j, const std::string& path) {
  Section s(j, path);
  Architecture a;
  a.conv_layers.clear();
  const json* layers = s.raw("conv_layers");
  if (!layers) throw ConfigError(s.key_path("conv_layers"), "required");
  if (!layers->is_array()) throw ConfigError(s.key_path("conv_layers"), "expected a list of layers");
  for (std::size_t n = 0; n < layers->size(); ++n) {
    a.conv_layers.push_back(layer_from_json((*layers)[n], s.key_path("conv_layers") + "[" + std::to_string(n) + "]"));
  }
  s.boolean("pooling", a.pooling);
  if (const json* dims = s.raw("fixed_dims")) {
    if (!dims->is_array()) throw ConfigError(s.key_path("fixed_dims"), "expected a list of extents");
    for (std::size_t i = 0; i < dims->size(); ++i) {
      a.fixed_dims.push_back(static_cast<int>(
          Section::to_unsigned<std::uint32_t>((*dims)[i], s.key_path("fixed_dims") + "[" + std::to_string(i) + "]")));
    }
  }
  s.number("leaky_slope", a.leaky_slope);
  s.finish();
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
  return a;
}

json architecture_to_json(const Architecture& arch) {
  json layers = json::array();
  for (const auto& l : arch.conv_layers) {
    layers.push_back({{"kernel", {l.kernel_x, l.kernel_y}}, {"in_channels", l.in_channels}, {"kernels", l.out_kernels}});
  }
  return {{"conv_layers", layers},
          {"pooling", arch.pooling},
          {"fixed_dims", arch.fixed_dims},
          {"leaky_slope", arch.leaky_slope}};
}

json model_to_json(const std::string& type, const ModelSpec& model) {
  json m;
  m["type"] = type;
  const auto& lat = model.lattice;
  if (const auto* p = std::get_if<TfiParams>(&model.hamiltonian)) {
    m["N"] = lat.n_sites();
    m["V"] = p->V;
    m["g"] = p->g;
    m["gamma"] = p->gamma;
  } else {
    const auto& h = std::get<HeisenbergParams>(model.hamiltonian);
    m["Lx"] = lat.extent_x();
    m["Ly"] = lat.extent_y();
    m["Jx"] = h.Jx;
    m["Jy"] = h.Jy;
    m["Jz"] = h.Jz;
    m["gamma"] = h.gamma;
  }
  return m;
}

RunConfig parse_config(const json& j) {
  Section top(j, "");
  RunConfig cfg;
  const json* model = top.raw("model");
  if (!model) throw ConfigError("model", "required");
  parse_model(*model, cfg);
  if (cfg.model_type == "heisenberg2d") {
    cfg.architecture = Architecture::square_preset();
    cfg.sampler.beta = 0.2;
    cfg.sampler.sector_restricted = true;
  }
  if (const json* a = top.raw("architecture")) parse_architecture(*a, cfg);
  if (const json* s = top.raw("sampler")) parse_sampler(*s, cfg.sampler);
  if (const json* o = top.raw("optimizer")) parse_optimizer(*o, cfg);
  if (const json* t = top.raw("track")) parse_track(*t, cfg.track);
  if (const json* e = top.raw("eval")) parse_eval(*e, cfg.eval);
  top.integer("seed", cfg.seed);
  top.string("init_from", cfg.init_from);
  top.string("output_dir", cfg.output_dir);
  top.finish();

  cfg.sampler.seed = cfg.seed;
  try {
    cfg.sampler.validate();
  } catch (const ConfigError& e) {
    throw within("sampler", e);
  }
  try {
    cfg.optimizer.validate();
  } catch (const ConfigError& e) {
    throw within("optimizer", e);
  }
  if (cfg.output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  try {
    CnnNdo probe(cfg.architecture, std::vector<double>(count_params(cfg.architecture), 0.0));
    probe.check_lattice(cfg.model.lattice);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("architecture", e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("", path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["model"] = model_to_json(cfg.model_type, cfg.model);
  j["architecture"] = architecture_to_json(cfg.architecture);
  j["architecture"]["init_scale"] = cfg.init_scale == InitScale::FanIn ? "fan_in" : "layer_params";
  const auto& s = cfg.sampler;
  j["sampler"] = {{"n_samples", s.n_samples},
                  {"n_chains", s.n_chains},
                  {"burn_in", s.burn_in ? json(*s.burn_in) : json(nullptr)},
                  {"thin", s.thin ? json(*s.thin) : json(nullptr)},
                  {"beta", s.beta},
                  {"sector_restricted", s.sector_restricted}};
  const auto& o = cfg.optimizer;
  j["optimizer"] = {{"momentum", o.momentum},
                    {"eta0", o.eta0},
                    {"eta_max", o.eta_max},
                    {"eta_min", o.eta_min},
                    {"eta_growth", o.eta_growth},
                    {"backtrack_sigmas", o.backtrack_sigmas},
                    {"max_iters", o.max_iters},
                    {"plateau", {{"window", o.plateau_window}, {"rel_tol", o.plateau_rel_tol}, {"stop", cfg.stop_on_plateau}}}};
  j["track"] = {{"observable", cfg.track.observable ? pauli_json(*cfg.track.observable) : json(nullptr)},
                {"every", cfg.track.every},
                {"n_samples", cfg.track.n_samples}};
  json ops = json::array();
  for (Pauli p : cfg.eval.observables) ops.push_back(pauli_json(p));
  j["eval"] = {{"n_samples_final", cfg.eval.n_samples}, {"n_chains", cfg.eval.n_chains}, {"observables", ops}};
  j["seed"] = cfg.seed;
  j["init_from"] = cfg.init_from ? json(*cfg.init_from) : json(nullptr);
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace cnndo
