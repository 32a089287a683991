#include "cnndo/liouvillian.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cnndo {

namespace {

constexpr double kDropThreshold = 1e-15;
constexpr Complex kI{0.0, 1.0};

template <typename Element, typename KeyLess, typename KeyEq>
void merge_sorted(std::vector<Element>& elems, KeyLess less, KeyEq eq) {
  std::sort(elems.begin(), elems.end(), less);
  std::size_t w = 0;
  for (std::size_t r = 0; r < elems.size();) {
    Element acc = std::move(elems[r]);
    std::size_t n = r + 1;
    while (n < elems.size() && eq(elems[n], acc)) {
      acc.amplitude += elems[n].amplitude;
      ++n;
    }
    if (std::abs(acc.amplitude) >= kDropThreshold) elems[w++] = std::move(acc);
    r = n;
  }
  elems.resize(w);
}

OperatorElement apply_term(const PauliTerm& term, const SpinConfig& bra) {
  OperatorElement e{bra, term.coeff};
  for (const auto& [site, p] : term.factors) {
    const double s = bra[site];
    switch (p) {
      case Pauli::I:
        break;
      case Pauli::X:
        e.ket.flip_inplace(site);
        break;
      case Pauli::Y:
        e.ket.flip_inplace(site);
        e.amplitude *= Complex(0.0, -s);
        break;
      case Pauli::Z:
        e.amplitude *= s;
        break;
    }
  }
  return e;
}

}  // namespace

Pauli parse_pauli(std::string_view name) {
  if (name == "sx" || name == "x" || name == "X") return Pauli::X;
  if (name == "sy" || name == "y" || name == "Y") return Pauli::Y;
  if (name == "sz" || name == "z" || name == "Z") return Pauli::Z;
  if (name == "id" || name == "identity" || name == "I") return Pauli::I;
  throw std::invalid_argument("unknown operator name '" + std::string(name) + "'");
}

std::string_view pauli_name(Pauli p) noexcept {
  switch (p) {
    case Pauli::I: return "id";
    case Pauli::X: return "sx";
    case Pauli::Y: return "sy";
    case Pauli::Z: return "sz";
  }
  return "?";
}

double ModelSpec::gamma() const {
  return std::visit([](const auto& p) { return p.gamma; }, hamiltonian);
}

std::vector<PauliTerm> hamiltonian_terms(const ModelSpec& spec) {
  std::vector<PauliTerm> terms;
  const auto bonds = spec.lattice.bonds();
  if (const auto* tfi = std::get_if<TfiParams>(&spec.hamiltonian)) {
    for (const auto& [j, k] : bonds) {
      terms.push_back({tfi->V / 4.0, {{j, Pauli::Z}, {k, Pauli::Z}}});
    }
    for (std::size_t j = 0; j < spec.lattice.n_sites(); ++j) {
      terms.push_back({tfi->g / 2.0, {{j, Pauli::X}}});
    }
  } else {
    const auto& h = std::get<HeisenbergParams>(spec.hamiltonian);
    for (const auto& [j, k] : bonds) {
      terms.push_back({h.Jx, {{j, Pauli::X}, {k, Pauli::X}}});
      terms.push_back({h.Jy, {{j, Pauli::Y}, {k, Pauli::Y}}});
      terms.push_back({h.Jz, {{j, Pauli::Z}, {k, Pauli::Z}}});
    }
  }
  std::erase_if(terms, [](const PauliTerm& t) { return t.coeff == Complex{}; });
  return terms;
}

OperatorElement pauli_element(Pauli p, std::size_t site, const SpinConfig& bra) {
  return apply_term(PauliTerm{1.0, {{site, p}}}, bra);
}

std::vector<OperatorElement> observable_row(Pauli op, std::size_t site, const SpinConfig& row) {
  if (site >= row.size()) throw std::out_of_range("observable_row: site index out of range");
  return {pauli_element(op, site, row)};
}

std::vector<OperatorElement> observable_row(std::string_view op_name, std::size_t site,
                                            const SpinConfig& row) {
  return observable_row(parse_pauli(op_name), site, row);
}

Liouvillian::Liouvillian(ModelSpec spec)
    : spec_(std::move(spec)), gamma_(spec_.gamma()), terms_(hamiltonian_terms(spec_)) {
  if (!(gamma_ > 0.0)) throw std::invalid_argument("dissipation rate gamma must be > 0");
}

std::vector<OperatorElement> Liouvillian::hamiltonian_row(const SpinConfig& bra) const {
  std::vector<OperatorElement> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back(apply_term(t, bra));
  merge_sorted(
      out, [](const OperatorElement& a, const OperatorElement& b) { return a.ket < b.ket; },
      [](const OperatorElement& a, const OperatorElement& b) { return a.ket == b.ket; });
  return out;
}

std::vector<ConnectedElement> Liouvillian::row(const JointConfig& target) const {
  std::vector<ConnectedElement> out;
  row(target, out);
  return out;
}

void Liouvillian::row(const JointConfig& target, std::vector<ConnectedElement>& out) const {
  const std::size_t n = spec_.lattice.n_sites();
  if (target.row.size() != n || target.col.size() != n) {
    throw std::invalid_argument("lindblad row: configuration does not match the model lattice");
  }
  out.clear();

  // -i H rho
  for (const auto& t : terms_) {
    auto e = apply_term(t, target.row);
    out.push_back({{std::move(e.ket), target.col}, -kI * e.amplitude});
  }
  // +i rho H, using H_{s~' s'} = conj(H_{s' s~'})
  for (const auto& t : terms_) {
    auto e = apply_term(t, target.col);
    out.push_back({{target.row, std::move(e.ket)}, kI * std::conj(e.amplitude)});
  }
  // -gamma/2 {s+s-, rho}: s+s- projects on spin up
  const double loss = -0.5 * gamma_ * (target.row.n_up() + target.col.n_up());
  out.push_back({target, loss});
  // gamma s- rho s+: the source has both sides raised at a site that is down on both
  for (std::size_t j = 0; j < n; ++j) {
    if (target.row[j] < 0 && target.col[j] < 0) {
      JointConfig src = target;
      src.row.flip_inplace(j);
      src.col.flip_inplace(j);
      out.push_back({std::move(src), gamma_});
    }
  }

  merge_sorted(
      out, [](const ConnectedElement& a, const ConnectedElement& b) { return a.source < b.source; },
      [](const ConnectedElement& a, const ConnectedElement& b) { return a.source == b.source; });
}

}  // namespace cnndo
