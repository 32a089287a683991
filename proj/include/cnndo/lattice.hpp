#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cnndo {

/// A configuration of S spin-1/2 sites in the sigma^z basis, stored as +1/-1.
///
/// Enumeration order (used by every dense routine): bit i of the integer
/// index is (1 + spins[i]) / 2, little-endian in the site index. The all-down
/// configuration therefore has index 0.
class SpinConfig {
 public:
  SpinConfig() = default;
  explicit SpinConfig(std::vector<std::int8_t> spins);
  static SpinConfig all(std::size_t n_sites, int value);
  static SpinConfig from_index(std::uint64_t index, std::size_t n_sites);

  std::size_t size() const noexcept { return spins_.size(); }
  int operator[](std::size_t site) const noexcept { return spins_[site]; }
  std::span<const std::int8_t> spins() const noexcept { return spins_; }

  std::uint64_t index() const;
  int magnetization() const noexcept;
  int n_up() const noexcept;

  /// Returns a copy with the spin at `site` negated. Throws std::out_of_range.
  SpinConfig flipped(std::size_t site) const;
  /// In-place variant of flipped(); no bounds check.
  void flip_inplace(std::size_t site) noexcept { spins_[site] = static_cast<std::int8_t>(-spins_[site]); }
  void set(std::size_t site, int value) noexcept { spins_[site] = static_cast<std::int8_t>(value); }

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;
  friend auto operator<=>(const SpinConfig&, const SpinConfig&) = default;

  std::string to_string() const;

 private:
  std::vector<std::int8_t> spins_;
};

SpinConfig flip(const SpinConfig& cfg, std::size_t site);

/// One density-matrix index pair (sigma, sigma').
struct JointConfig {
  SpinConfig row;
  SpinConfig col;

  JointConfig swapped() const { return {col, row}; }
  bool is_diagonal() const { return row == col; }

  friend bool operator==(const JointConfig&, const JointConfig&) = default;
  friend auto operator<=>(const JointConfig&, const JointConfig&) = default;
};

/// Hypercubic lattice (1D chain or 2D square) with periodic boundaries.
///
/// 2D sites are indexed row-major over (y, x): site = y * Lx + x, with
/// dims = {Lx, Ly}. A chain of N sites has dims = {N}.
class Lattice {
 public:
  explicit Lattice(std::vector<int> dims);

  std::span<const int> dims() const noexcept { return dims_; }
  std::size_t n_dims() const noexcept { return dims_.size(); }
  std::size_t n_sites() const noexcept { return n_sites_; }
  /// Extent along x and y; a chain reports extent_y() == 1.
  int extent_x() const noexcept { return dims_[0]; }
  int extent_y() const noexcept { return dims_.size() > 1 ? dims_[1] : 1; }

  /// Periodic nearest neighbors of `site`, sorted and de-duplicated.
  std::vector<std::size_t> neighbors(std::size_t site) const;
  /// Every unordered nearest-neighbor pair exactly once, as (i < j), sorted.
  std::vector<std::pair<std::size_t, std::size_t>> bonds() const;

  std::vector<int> coords(std::size_t site) const;
  std::size_t site_index(std::span<const int> coords) const;
  /// Site reached from `site` by the (wrapped) displacement `offset`.
  std::size_t translate(std::size_t site, std::span<const int> offset) const;

  /// new[translate(s, offset)] = old[s] for both row and column.
  JointConfig cyclic_shift(const JointConfig& cfg, std::span<const int> offset) const;
  SpinConfig cyclic_shift(const SpinConfig& cfg, std::span<const int> offset) const;

  friend bool operator==(const Lattice&, const Lattice&) = default;

  std::string describe() const;

 private:
  std::vector<int> dims_;
  std::size_t n_sites_ = 0;
};

/// Number of up spins in the row minus number of up spins in the column.
int sector_offset(const JointConfig& cfg) noexcept;
/// Sector predicate of the U(1)-symmetric models: the offset is even.
inline bool sector_allowed(const JointConfig& cfg) noexcept { return sector_offset(cfg) % 2 == 0; }

}  // namespace cnndo
