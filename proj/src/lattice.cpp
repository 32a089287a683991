#include "cnndo/lattice.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace cnndo {

SpinConfig::SpinConfig(std::vector<std::int8_t> spins) : spins_(std::move(spins)) {
  for (auto s : spins_) {
    if (s != 1 && s != -1) throw std::invalid_argument("spin values must be +1 or -1");
  }
}

SpinConfig SpinConfig::all(std::size_t n_sites, int value) {
  return SpinConfig(std::vector<std::int8_t>(n_sites, static_cast<std::int8_t>(value)));
}

SpinConfig SpinConfig::from_index(std::uint64_t index, std::size_t n_sites) {
  if (n_sites > 63) throw std::out_of_range("enumeration index supports at most 63 sites");
  std::vector<std::int8_t> spins(n_sites);
  for (std::size_t i = 0; i < n_sites; ++i) spins[i] = ((index >> i) & 1U) ? 1 : -1;
  return SpinConfig(std::move(spins));
}

std::uint64_t SpinConfig::index() const {
  if (spins_.size() > 63) throw std::out_of_range("enumeration index supports at most 63 sites");
  std::uint64_t idx = 0;
  for (std::size_t i = 0; i < spins_.size(); ++i) {
    if (spins_[i] > 0) idx |= std::uint64_t{1} << i;
  }
  return idx;
}

int SpinConfig::magnetization() const noexcept {
  return std::accumulate(spins_.begin(), spins_.end(), 0);
}

int SpinConfig::n_up() const noexcept {
  return static_cast<int>(std::count(spins_.begin(), spins_.end(), std::int8_t{1}));
}

SpinConfig SpinConfig::flipped(std::size_t site) const {
  if (site >= spins_.size()) throw std::out_of_range("flip: site index out of range");
  SpinConfig out = *this;
  out.flip_inplace(site);
  return out;
}

std::string SpinConfig::to_string() const {
  std::string s;
  s.reserve(spins_.size());
  for (auto v : spins_) s.push_back(v > 0 ? '+' : '-');
  return s;
}

SpinConfig flip(const SpinConfig& cfg, std::size_t site) { return cfg.flipped(site); }

Lattice::Lattice(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty() || dims_.size() > 2) {
    throw std::invalid_argument("lattice must have one or two dimensions");
  }
  n_sites_ = 1;
  for (int d : dims_) {
    if (d < 2) throw std::invalid_argument("every lattice extent must be >= 2");
    n_sites_ *= static_cast<std::size_t>(d);
  }
}

std::vector<int> Lattice::coords(std::size_t site) const {
  std::vector<int> c(dims_.size());
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    c[d] = static_cast<int>(site % static_cast<std::size_t>(dims_[d]));
    site /= static_cast<std::size_t>(dims_[d]);
  }
  return c;
}

std::size_t Lattice::site_index(std::span<const int> c) const {
  if (c.size() != dims_.size()) throw std::invalid_argument("coordinate rank mismatch");
  std::size_t idx = 0;
  for (std::size_t d = dims_.size(); d-- > 0;) {
    const int ext = dims_[d];
    const int v = ((c[d] % ext) + ext) % ext;
    idx = idx * static_cast<std::size_t>(ext) + static_cast<std::size_t>(v);
  }
  return idx;
}

std::size_t Lattice::translate(std::size_t site, std::span<const int> offset) const {
  if (offset.size() != dims_.size()) throw std::invalid_argument("offset rank mismatch");
  auto c = coords(site);
  for (std::size_t d = 0; d < c.size(); ++d) c[d] += offset[d];
  return site_index(c);
}

std::vector<std::size_t> Lattice::neighbors(std::size_t site) const {
  if (site >= n_sites_) throw std::out_of_range("neighbors: site index out of range");
  std::vector<std::size_t> out;
  std::vector<int> step(dims_.size(), 0);
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    for (int delta : {-1, 1}) {
      step[d] = delta;
      out.push_back(translate(site, step));
    }
    step[d] = 0;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> Lattice::bonds() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_sites_; ++i) {
    for (std::size_t j : neighbors(i)) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

SpinConfig Lattice::cyclic_shift(const SpinConfig& cfg, std::span<const int> offset) const {
  if (cfg.size() != n_sites_) throw std::invalid_argument("configuration does not match lattice");
  std::vector<std::int8_t> out(n_sites_);
  for (std::size_t s = 0; s < n_sites_; ++s) out[translate(s, offset)] = static_cast<std::int8_t>(cfg[s]);
  return SpinConfig(std::move(out));
}

JointConfig Lattice::cyclic_shift(const JointConfig& cfg, std::span<const int> offset) const {
  return {cyclic_shift(cfg.row, offset), cyclic_shift(cfg.col, offset)};
}

std::string Lattice::describe() const {
  std::string s;
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    if (d) s += "x";
    s += std::to_string(dims_[d]);
  }
  return s;
}

int sector_offset(const JointConfig& cfg) noexcept { return cfg.row.n_up() - cfg.col.n_up(); }

}  // namespace cnndo
