#include "cnndo/exact.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <unsupported/Eigen/KroneckerProduct>

#include "cnndo/errors.hpp"

namespace cnndo {

namespace {

constexpr Complex kI{0.0, 1.0};
// Bordered systems up to this many unknowns are factorized densely.
constexpr Eigen::Index kDenseSolveLimit = 4096;

void guard_sites(std::size_t n_sites, std::size_t limit, const char* what) {
  if (n_sites > limit) {
    throw SizeGuardError(std::string(what) + ": " + std::to_string(n_sites) + " sites exceed the limit of " +
                         std::to_string(limit) + " (dense size 4^S = " +
                         std::to_string(n_sites < 32 ? (std::uint64_t{1} << (2 * n_sites)) : 0) + ")");
  }
}

SparseMatrixC identity(std::size_t dim) {
  SparseMatrixC id(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  id.setIdentity();
  return id;
}

SparseMatrixC to_sparse(const Eigen::Matrix2cd& m) { return m.sparseView(); }

}  // namespace

Eigen::Matrix2cd pauli_matrix(Pauli p) {
  Eigen::Matrix2cd m;
  switch (p) {
    case Pauli::I:
      m << 1, 0, 0, 1;
      break;
    case Pauli::X:
      m << 0, 1, 1, 0;
      break;
    case Pauli::Y:
      // <down|sy|up> = i, <up|sy|down> = -i
      m << 0, kI, -kI, 0;
      break;
    case Pauli::Z:
      m << -1, 0, 0, 1;
      break;
  }
  return m;
}

SparseMatrixC site_operator(const Eigen::Matrix2cd& op, std::size_t site, std::size_t n_sites) {
  if (site >= n_sites) throw std::out_of_range("site_operator: site out of range");
  SparseMatrixC out = identity(1);
  for (std::size_t s = n_sites; s-- > 0;) {
    SparseMatrixC factor = s == site ? to_sparse(op) : identity(2);
    SparseMatrixC next = Eigen::kroneckerProduct(out, factor);
    out = std::move(next);
  }
  out.makeCompressed();
  return out;
}

SparseMatrixC build_hamiltonian_matrix(const ModelSpec& spec) {
  const std::size_t n = spec.lattice.n_sites();
  guard_sites(n, kMaxLiouvillianSites, "build_hamiltonian_matrix");
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
  SparseMatrixC h(dim, dim);
  std::vector<SparseMatrixC> x(n), y(n), z(n);
  for (std::size_t j = 0; j < n; ++j) {
    x[j] = site_operator(pauli_matrix(Pauli::X), j, n);
    y[j] = site_operator(pauli_matrix(Pauli::Y), j, n);
    z[j] = site_operator(pauli_matrix(Pauli::Z), j, n);
  }
  const auto bonds = spec.lattice.bonds();
  if (const auto* t = std::get_if<TfiParams>(&spec.hamiltonian)) {
    for (const auto& [j, k] : bonds) h += Complex(t->V / 4.0) * (z[j] * z[k]);
    for (std::size_t j = 0; j < n; ++j) h += Complex(t->g / 2.0) * x[j];
  } else {
    const auto& p = std::get<HeisenbergParams>(spec.hamiltonian);
    for (const auto& [j, k] : bonds) {
      h += Complex(p.Jx) * (x[j] * x[k]);
      h += Complex(p.Jy) * (y[j] * y[k]);
      h += Complex(p.Jz) * (z[j] * z[k]);
    }
  }
  h.prune(Complex(0.0), 1e-300);
  h.makeCompressed();
  return h;
}

SparseMatrixC build_liouvillian_matrix(const ModelSpec& spec) {
  const std::size_t n = spec.lattice.n_sites();
  guard_sites(n, kMaxLiouvillianSites, "build_liouvillian_matrix");
  const std::size_t dim = std::size_t{1} << n;
  const SparseMatrixC id = identity(dim);
  const SparseMatrixC h = build_hamiltonian_matrix(spec);
  const SparseMatrixC ht = h.transpose();
  SparseMatrixC kron_h_id = Eigen::kroneckerProduct(h, id);
  SparseMatrixC kron_id_ht = Eigen::kroneckerProduct(id, ht);
  SparseMatrixC liou = Complex(0.0, -1.0) * (kron_h_id - kron_id_ht);

  Eigen::Matrix2cd lower;
  lower << 0, 1, 0, 0;  // |down><up|
  const double gamma = spec.gamma();
  for (std::size_t j = 0; j < n; ++j) {
    const SparseMatrixC l = site_operator(lower, j, n);
    const SparseMatrixC lconj = l.conjugate();
    const SparseMatrixC ldl = SparseMatrixC(l.adjoint()) * l;
    const SparseMatrixC ldl_t = ldl.transpose();
    SparseMatrixC gain = Eigen::kroneckerProduct(l, lconj);
    SparseMatrixC loss_left = Eigen::kroneckerProduct(ldl, id);
    SparseMatrixC loss_right = Eigen::kroneckerProduct(id, ldl_t);
    liou += Complex(gamma) * (gain - Complex(0.5) * loss_left - Complex(0.5) * loss_right);
  }
  liou.prune(Complex(0.0), 1e-300);
  liou.makeCompressed();
  return liou;
}

Eigen::MatrixXcd build_dense_liouvillian(const ModelSpec& spec) {
  guard_sites(spec.lattice.n_sites(), 5, "build_dense_liouvillian");
  return Eigen::MatrixXcd(build_liouvillian_matrix(spec));
}

DenseNess solve_ness(const ModelSpec& spec) {
  return solve_ness(build_liouvillian_matrix(spec), spec.lattice.n_sites());
}

DenseNess solve_ness(const SparseMatrixC& liou, std::size_t n_sites) {
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_sites);
  const Eigen::Index n = dim * dim;
  if (liou.rows() != n || liou.cols() != n) throw std::invalid_argument("solve_ness: superoperator size mismatch");

  // Replace the (all-down, all-down) equation by the trace condition; the
  // diagonal rows of a trace-preserving generator are linearly dependent.
  std::vector<Eigen::Triplet<Complex>> trips;
  trips.reserve(static_cast<std::size_t>(liou.nonZeros()) + static_cast<std::size_t>(dim));
  for (Eigen::Index c = 0; c < liou.outerSize(); ++c) {
    for (SparseMatrixC::InnerIterator it(liou, c); it; ++it) {
      if (it.row() != 0) trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (Eigen::Index i = 0; i < dim; ++i) trips.emplace_back(0, static_cast<int>(i * dim + i), Complex(1.0));
  SparseMatrixC bordered(n, n);
  bordered.setFromTriplets(trips.begin(), trips.end());
  bordered.makeCompressed();

  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
  rhs(0) = 1.0;
  Eigen::VectorXcd x;
  // Uniqueness: the smallest singular value of the bordered system, by inverse
  // iteration on (B^dag B)^-1; small systems also get a full SVD of L.
  DenseNess out;
  auto inverse_iteration = [&](auto&& solve, auto&& solve_adjoint) {
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> nd;
    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = {nd(rng), nd(rng)};
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 40; ++it) {
      const Eigen::VectorXcd z = solve_adjoint(solve(v));
      lambda = z.norm();
      if (!(lambda > 0.0) || !std::isfinite(lambda)) return 0.0;
      v = z / lambda;
    }
    return 1.0 / std::sqrt(lambda);
  };
  if (n <= kDenseSolveLimit) {
    const Eigen::MatrixXcd dense_b(bordered);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(dense_b);
    x = lu.solve(rhs);
    out.uniqueness_gap = inverse_iteration([&](const Eigen::VectorXcd& b) { return Eigen::VectorXcd(lu.solve(b)); },
                                           [&](const Eigen::VectorXcd& b) { return Eigen::VectorXcd(lu.adjoint().solve(b)); });
  } else {
    Eigen::SparseLU<SparseMatrixC, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(bordered);
    if (lu.info() != Eigen::Success) {
      throw NumericError("solve_ness: bordered superoperator is singular, the steady state is not unique");
    }
    x = lu.solve(rhs);
    out.uniqueness_gap = inverse_iteration([&](const Eigen::VectorXcd& b) { return Eigen::VectorXcd(lu.solve(b)); },
                                           [&](const Eigen::VectorXcd& b) { return Eigen::VectorXcd(lu.adjoint().solve(b)); });
  }
  if (n <= 1024) {
    const Eigen::MatrixXcd dense_l(liou);
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(dense_l);
    const auto& s = svd.singularValues();
    out.uniqueness_gap = std::min(out.uniqueness_gap, s(n - 2));
  }
  if (!(out.uniqueness_gap > 1e-8)) {
    throw NumericError("solve_ness: degenerate steady state (gap " + std::to_string(out.uniqueness_gap) + ")");
  }

  Eigen::MatrixXcd rho(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) rho(i, j) = x(i * dim + j);
  }
  rho = (0.5 * (rho + rho.adjoint())).eval();
  rho /= rho.trace();
  out.rho = rho;

  Eigen::VectorXcd vec(n);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) vec(i * dim + j) = rho(i, j);
  }
  out.residual_norm = (liou * vec).norm() / vec.norm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = es.eigenvalues()(0);
  return out;
}

Complex expectation(const Eigen::MatrixXcd& rho, Pauli op, std::size_t site) {
  const auto dim = static_cast<std::size_t>(rho.rows());
  const std::size_t n_sites = static_cast<std::size_t>(std::countr_zero(dim));
  const SparseMatrixC o = site_operator(pauli_matrix(op), site, n_sites);
  Complex tr = 0.0;
  for (Eigen::Index c = 0; c < o.outerSize(); ++c) {
    for (SparseMatrixC::InnerIterator it(o, c); it; ++it) tr += it.value() * rho(it.col(), it.row());
  }
  return tr;
}

double site_averaged_expectation(const Eigen::MatrixXcd& rho, Pauli op) {
  const auto dim = static_cast<std::size_t>(rho.rows());
  const std::size_t n_sites = static_cast<std::size_t>(std::countr_zero(dim));
  double acc = 0.0;
  for (std::size_t j = 0; j < n_sites; ++j) acc += expectation(rho, op, j).real();
  return acc / static_cast<double>(n_sites);
}

Eigen::VectorXcd enumerate_rho(DensityModel& model, std::size_t n_sites) {
  guard_sites(n_sites, kMaxEnumerationSites, "enumerate_rho");
  const std::size_t dim = std::size_t{1} << n_sites;
  std::vector<SpinConfig> basis;
  basis.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) basis.push_back(SpinConfig::from_index(i, n_sites));
  Eigen::VectorXcd v(static_cast<Eigen::Index>(dim * dim));
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) v(static_cast<Eigen::Index>(i * dim + j)) = model.rho({basis[i], basis[j]});
  }
  return v;
}

Eigen::MatrixXcd assemble_density_matrix(DensityModel& model, std::size_t n_sites) {
  const auto v = enumerate_rho(model, n_sites);
  const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_sites);
  Eigen::MatrixXcd rho(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) rho(i, j) = v(i * dim + j);
  }
  return rho;
}

double dense_quadratic_cost(const SparseMatrixC& liou, const Eigen::VectorXcd& vec_rho) {
  const Eigen::VectorXcd r = liou * vec_rho;
  return r.squaredNorm() / vec_rho.squaredNorm();
}

ExactCostGrad exact_cost_and_grad(DensityModel& model, const Liouvillian& liouv) {
  const std::size_t n_sites = liouv.lattice().n_sites();
  guard_sites(n_sites, kMaxEnumerationSites, "exact_cost_and_grad");
  const std::size_t dim = std::size_t{1} << n_sites;
  const std::size_t n = dim * dim;

  std::vector<SpinConfig> basis;
  for (std::size_t i = 0; i < dim; ++i) basis.push_back(SpinConfig::from_index(i, n_sites));
  auto joint = [&](std::size_t x) { return JointConfig{basis[x / dim], basis[x % dim]}; };

  std::vector<Complex> rho(n);
  for (std::size_t x = 0; x < n; ++x) rho[x] = model.rho(joint(x));

  // r = L rho, u = L^dag r
  std::vector<Complex> r(n, 0.0), u(n, 0.0);
  std::vector<std::vector<std::pair<std::size_t, Complex>>> rows(n);
  std::vector<ConnectedElement> elems;
  for (std::size_t x = 0; x < n; ++x) {
    liouv.row(joint(x), elems);
    auto& row = rows[x];
    row.reserve(elems.size());
    Complex acc = 0.0;
    for (const auto& e : elems) {
      const std::size_t y = e.source.row.index() * dim + e.source.col.index();
      row.emplace_back(y, e.amplitude);
      acc += e.amplitude * rho[y];
    }
    r[x] = acc;
  }
  for (std::size_t x = 0; x < n; ++x) {
    for (const auto& [y, amp] : rows[x]) u[y] += std::conj(amp) * r[x];
  }
  double num = 0.0, den = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    num += std::norm(r[x]);
    den += std::norm(rho[x]);
  }
  if (!(den > 0.0)) throw NumericError("exact_cost_and_grad: the density matrix vanishes identically");

  ExactCostGrad out;
  out.cost = num / den;
  out.grad.assign(model.num_params(), 0.0);
  if (out.grad.empty()) return out;

  constexpr std::size_t kChunk = 512;
  std::vector<JointConfig> cfgs;
  std::vector<Complex> vals, kappa;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t stop = std::min(n, start + kChunk);
    cfgs.clear();
    kappa.clear();
    for (std::size_t x = start; x < stop; ++x) {
      cfgs.push_back(joint(x));
      kappa.push_back(2.0 * std::conj(u[x] - out.cost * rho[x]) / den);
    }
    vals.resize(cfgs.size());
    model.forward(cfgs, vals);
    model.backward(kappa, out.grad);
  }
  return out;
}

double exact_cost(DensityModel& model, const Liouvillian& liouv) {
  const std::size_t n_sites = liouv.lattice().n_sites();
  guard_sites(n_sites, kMaxEnumerationSites, "exact_cost");
  const std::size_t dim = std::size_t{1} << n_sites;
  std::vector<SpinConfig> basis;
  for (std::size_t i = 0; i < dim; ++i) basis.push_back(SpinConfig::from_index(i, n_sites));
  std::vector<Complex> rho(dim * dim);
  for (std::size_t x = 0; x < dim * dim; ++x) rho[x] = model.rho({basis[x / dim], basis[x % dim]});
  double num = 0.0, den = 0.0;
  std::vector<ConnectedElement> elems;
  for (std::size_t x = 0; x < dim * dim; ++x) {
    liouv.row({basis[x / dim], basis[x % dim]}, elems);
    Complex acc = 0.0;
    for (const auto& e : elems) acc += e.amplitude * rho[e.source.row.index() * dim + e.source.col.index()];
    num += std::norm(acc);
    den += std::norm(rho[x]);
  }
  return num / den;
}

double sector_leakage(const Eigen::MatrixXcd& rho, std::size_t n_sites) {
  (void)n_sites;
  double odd = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    for (Eigen::Index j = 0; j < rho.cols(); ++j) {
      const double w = std::norm(rho(i, j));
      total += w;
      const int off = std::popcount(static_cast<std::uint64_t>(i)) - std::popcount(static_cast<std::uint64_t>(j));
      if (off % 2 != 0) odd += w;
    }
  }
  return total > 0.0 ? odd / total : 0.0;
}

PositivityReport positivity_report(const Eigen::MatrixXcd& rho) {
  PositivityReport rep;
  rep.hermiticity_defect = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  rep.trace = rho.trace().real();
  rep.trace_sign = rep.trace > 0.0 ? 1 : (rep.trace < 0.0 ? -1 : 0);
  const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm, Eigen::EigenvaluesOnly);
  // Sign-normalize by the trace so an overall negative prefactor is not
  // reported as non-positivity.
  rep.min_eig_over_trace = rep.trace != 0.0
                               ? (rep.trace > 0.0 ? es.eigenvalues()(0) : -es.eigenvalues()(herm.rows() - 1)) /
                                     std::abs(rep.trace)
                               : -std::numeric_limits<double>::infinity();
  rep.sector_leakage = sector_leakage(rho, static_cast<std::size_t>(std::countr_zero(static_cast<std::uint64_t>(rho.rows()))));
  return rep;
}

PositivityReport positivity_report(DensityModel& model, const Lattice& lattice) {
  return positivity_report(assemble_density_matrix(model, lattice.n_sites()));
}

std::vector<std::size_t> magnetization_order(std::size_t n_sites) {
  const std::size_t dim = std::size_t{1} << n_sites;
  std::vector<std::size_t> order(dim);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [](std::size_t a, std::size_t b) {
    return std::popcount(static_cast<std::uint64_t>(a)) < std::popcount(static_cast<std::uint64_t>(b));
  });
  return order;
}

TableModel::TableModel(Eigen::MatrixXcd rho) : rho_(std::move(rho)) {
  if (rho_.rows() != rho_.cols() || !std::has_single_bit(static_cast<std::uint64_t>(rho_.rows()))) {
    throw std::invalid_argument("TableModel: matrix must be square with a power-of-two dimension");
  }
}

std::unique_ptr<DensityModel> TableModel::clone() const { return std::make_unique<TableModel>(*this); }

Complex TableModel::rho(const JointConfig& cfg) {
  return rho_(static_cast<Eigen::Index>(cfg.row.index()), static_cast<Eigen::Index>(cfg.col.index()));
}

void TableModel::forward(std::span<const JointConfig> cfgs, std::span<Complex> out) {
  for (std::size_t j = 0; j < cfgs.size(); ++j) out[j] = rho(cfgs[j]);
}

}  // namespace cnndo
