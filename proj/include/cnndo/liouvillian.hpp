#pragma once

#include <complex>
#include <cstddef>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cnndo/lattice.hpp"

namespace cnndo {

using Complex = std::complex<double>;

enum class Pauli { I, X, Y, Z };

Pauli parse_pauli(std::string_view name);
std::string_view pauli_name(Pauli p) noexcept;

/// H = V/4 sum_<jk> sz_j sz_k + g/2 sum_j sx_j, energies in units of gamma.
struct TfiParams {
  double V = 2.0;
  double g = 1.0;
  double gamma = 1.0;
};

/// H = sum_<jk> (Jx sx sx + Jy sy sy + Jz sz sz).
struct HeisenbergParams {
  double Jx = 0.9;
  double Jy = 1.0;
  double Jz = 1.0;
  double gamma = 1.0;
};

/// Lattice + Hamiltonian; the dissipator is one sigma^- jump per site at rate gamma.
struct ModelSpec {
  Lattice lattice;
  std::variant<TfiParams, HeisenbergParams> hamiltonian;

  double gamma() const;
};

/// coeff * prod_k P_k(site_k)
struct PauliTerm {
  Complex coeff;
  std::vector<std::pair<std::size_t, Pauli>> factors;
};

/// The Hamiltonian of `spec` as a list of Pauli strings; each bond appears once.
std::vector<PauliTerm> hamiltonian_terms(const ModelSpec& spec);

/// One nonzero entry of a superoperator or operator row.
struct ConnectedElement {
  JointConfig source;
  Complex amplitude;
};

struct OperatorElement {
  SpinConfig ket;
  Complex amplitude;
};

/// <sigma| P_site |sigma'> for every sigma' it connects to (exactly one).
OperatorElement pauli_element(Pauli p, std::size_t site, const SpinConfig& bra);

/// Row action of a single-site Pauli observable; throws std::out_of_range on a bad site.
std::vector<OperatorElement> observable_row(Pauli op, std::size_t site, const SpinConfig& row);
std::vector<OperatorElement> observable_row(std::string_view op_name, std::size_t site,
                                            const SpinConfig& row);

/// Sparse row access to the Lindblad superoperator
///   L rho = -i[H, rho] + gamma sum_j (s-_j rho s+_j - 1/2 {s+_j s-_j, rho}).
///
/// row(target) lists every (source, amplitude) with
///   (L rho)(target) = sum amplitude * rho(source).
class Liouvillian {
 public:
  explicit Liouvillian(ModelSpec spec);

  const ModelSpec& spec() const noexcept { return spec_; }
  const Lattice& lattice() const noexcept { return spec_.lattice; }
  double gamma() const noexcept { return gamma_; }
  const std::vector<PauliTerm>& hamiltonian() const noexcept { return terms_; }

  /// Duplicate sources are merged; entries with |amplitude| < 1e-15 dropped.
  /// Sources are sorted. Throws std::invalid_argument on lattice mismatch.
  std::vector<ConnectedElement> row(const JointConfig& target) const;
  void row(const JointConfig& target, std::vector<ConnectedElement>& out) const;

  /// <row| H |ket> for every ket with a nonzero element, merged and sorted.
  std::vector<OperatorElement> hamiltonian_row(const SpinConfig& bra) const;

 private:
  ModelSpec spec_;
  double gamma_;
  std::vector<PauliTerm> terms_;
};

inline std::vector<ConnectedElement> lindblad_row(const Liouvillian& l, const JointConfig& target) {
  return l.row(target);
}

}  // namespace cnndo
