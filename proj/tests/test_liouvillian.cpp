#include <random>

#include "cnndo/exact.hpp"
#include "cnndo/liouvillian.hpp"
#include "doctest.h"

using namespace cnndo;

namespace {

ModelSpec tfi(int n, double V, double g, double gamma = 1.0) { return {Lattice({n}), TfiParams{V, g, gamma}}; }
ModelSpec heis(int lx, int ly, double jy) { return {Lattice({lx, ly}), HeisenbergParams{0.9, jy, 1.0, 1.0}}; }

JointConfig joint(std::size_t x, std::size_t n_sites) {
  const std::size_t dim = std::size_t{1} << n_sites;
  return {SpinConfig::from_index(x / dim, n_sites), SpinConfig::from_index(x % dim, n_sites)};
}

Eigen::MatrixXcd dense_from_rows(const Liouvillian& l) {
  const std::size_t s = l.lattice().n_sites();
  const std::size_t dim = std::size_t{1} << s;
  const auto n = static_cast<Eigen::Index>(dim * dim);
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (Eigen::Index x = 0; x < n; ++x) {
    for (const auto& e : l.row(joint(static_cast<std::size_t>(x), s))) {
      m(x, static_cast<Eigen::Index>(e.source.row.index() * dim + e.source.col.index())) += e.amplitude;
    }
  }
  return m;
}

Eigen::MatrixXcd random_hermitian(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd a(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = {nd(rng), nd(rng)};
  return a + a.adjoint();
}

Eigen::VectorXcd vec(const Eigen::MatrixXcd& m) {
  Eigen::VectorXcd v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(i * m.cols() + j) = m(i, j);
  return v;
}

Eigen::MatrixXcd unvec(const Eigen::VectorXcd& v, Eigen::Index dim) {
  Eigen::MatrixXcd m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = v(i * dim + j);
  return m;
}

}  // namespace

TEST_CASE("two-site TFI Hamiltonian matches the hand-enumerated matrix") {
  const double V = 2.0, g = 0.7;
  Eigen::Matrix4cd hand;
  hand << V / 4, g / 2, g / 2, 0,  //
      g / 2, -V / 4, 0, g / 2,     //
      g / 2, 0, -V / 4, g / 2,     //
      0, g / 2, g / 2, V / 4;
  const Eigen::MatrixXcd h = Eigen::MatrixXcd(build_hamiltonian_matrix(tfi(2, V, g)));
  CHECK((h - hand).norm() < 1e-14);

  // and the row action agrees with it
  Liouvillian l(tfi(2, V, g));
  for (std::uint64_t i = 0; i < 4; ++i) {
    Eigen::Vector4cd row = Eigen::Vector4cd::Zero();
    for (const auto& e : l.hamiltonian_row(SpinConfig::from_index(i, 2))) row(static_cast<Eigen::Index>(e.ket.index())) += e.amplitude;
    CHECK((row.transpose() - hand.row(static_cast<Eigen::Index>(i))).norm() < 1e-14);
  }
}

TEST_CASE("dark-state row of the two-site TFI chain") {
  Liouvillian l(tfi(2, 2.0, 0.0, 1.0));
  const JointConfig down{SpinConfig({-1, -1}), SpinConfig({-1, -1})};
  const auto row = l.row(down);
  REQUIRE(row.size() == 2);
  // sources (up,down|up,down) and (down,up|down,up), both gamma, sorted
  CHECK(row[0].source == JointConfig{SpinConfig({-1, 1}), SpinConfig({-1, 1})});
  CHECK(row[1].source == JointConfig{SpinConfig({1, -1}), SpinConfig({1, -1})});
  CHECK(row[0].amplitude == Complex(1.0, 0.0));
  CHECK(row[1].amplitude == Complex(1.0, 0.0));
}

TEST_CASE("TFI row locality bound") {
  std::mt19937_64 rng(3);
  for (int n : {3, 5, 8}) {
    Liouvillian l(tfi(n, 2.0, 1.3));
    std::uniform_int_distribution<std::uint64_t> pick(0, (std::uint64_t{1} << n) - 1);
    for (int t = 0; t < 50; ++t) {
      JointConfig c{SpinConfig::from_index(pick(rng), n), SpinConfig::from_index(pick(rng), n)};
      const auto row = l.row(c);
      CHECK(row.size() <= static_cast<std::size_t>(1 + 3 * n));
      for (const auto& e : row) CHECK(std::abs(e.amplitude) >= 1e-15);
    }
  }
}

TEST_CASE("row action equals the Kronecker superoperator, exhaustively") {
  for (const auto& spec : {tfi(2, 2.0, 1.0), tfi(3, 2.0, 1.5), tfi(3, -1.0, 0.4, 0.7), heis(2, 2, 1.0),
                           heis(2, 2, 1.7)}) {
    Liouvillian l(spec);
    const Eigen::MatrixXcd rows = dense_from_rows(l);
    const Eigen::MatrixXcd kron = build_dense_liouvillian(spec);
    CHECK((rows - kron).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("trace preservation and Hermiticity propagation") {
  std::mt19937_64 rng(11);
  for (const auto& spec : {tfi(3, 2.0, 2.0), heis(2, 2, 0.5)}) {
    const auto s = spec.lattice.n_sites();
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << s);
    const Eigen::MatrixXcd L = dense_from_rows(Liouvillian(spec));
    for (int t = 0; t < 5; ++t) {
      const Eigen::MatrixXcd rho = random_hermitian(dim, rng);
      const Eigen::MatrixXcd out = unvec(L * vec(rho), dim);
      CHECK(std::abs(out.trace()) < 1e-12);
      CHECK((out - out.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("exact steady state is annihilated by the row action") {
  for (const auto& spec : {tfi(3, 2.0, 2.0), tfi(4, 2.0, 1.0), heis(2, 2, 1.0)}) {
    const auto ness = solve_ness(spec);
    Liouvillian l(spec);
    const auto s = spec.lattice.n_sites();
    const std::size_t dim = std::size_t{1} << s;
    double num = 0.0, den = 0.0;
    for (std::size_t x = 0; x < dim * dim; ++x) {
      Complex acc = 0.0;
      for (const auto& e : l.row(joint(x, s))) {
        acc += e.amplitude * ness.rho(static_cast<Eigen::Index>(e.source.row.index()),
                                      static_cast<Eigen::Index>(e.source.col.index()));
      }
      num += std::norm(acc);
      den += std::norm(ness.rho(static_cast<Eigen::Index>(x / dim), static_cast<Eigen::Index>(x % dim)));
    }
    CHECK(std::sqrt(num / den) < 1e-10);
  }
}

TEST_CASE("Pauli observable rows") {
  const SpinConfig pp({1, 1}), pm({1, -1});
  auto z = observable_row("sz", 1, pm);
  REQUIRE(z.size() == 1);
  CHECK(z[0].ket == pm);
  CHECK(z[0].amplitude == Complex(-1.0));
  auto x = observable_row("sx", 0, pp);
  CHECK(x[0].ket == SpinConfig({-1, 1}));
  CHECK(x[0].amplitude == Complex(1.0));
  auto y = observable_row("sy", 0, pm);
  CHECK(y[0].ket == SpinConfig({-1, -1}));
  // dense 2x2 oracle: <up|sy|down>
  const auto sy = pauli_matrix(Pauli::Y);
  CHECK(y[0].amplitude == sy(1, 0));
  CHECK_THROWS_AS(observable_row("sw", 0, pm), std::invalid_argument);
  CHECK_THROWS_AS(observable_row("sx", 2, pm), std::out_of_range);
}

TEST_CASE("Heisenberg steady state lives in even sectors") {
  for (double jy : {0.5, 1.0, 2.0}) {
    const auto ness = solve_ness(heis(2, 2, jy));
    for (Eigen::Index i = 0; i < 16; ++i) {
      for (Eigen::Index j = 0; j < 16; ++j) {
        const JointConfig c{SpinConfig::from_index(static_cast<std::uint64_t>(i), 4),
                            SpinConfig::from_index(static_cast<std::uint64_t>(j), 4)};
        if (!sector_allowed(c)) CHECK(std::abs(ness.rho(i, j)) < 1e-12);
      }
    }
  }
  const JointConfig diag{SpinConfig({1, -1}), SpinConfig({1, -1})};
  CHECK(sector_offset(diag) == 0);
  CHECK(std::abs(sector_offset({diag.row.flipped(0), diag.col})) == 1);
}

TEST_CASE("lattice mismatch is rejected") {
  Liouvillian l(tfi(3, 2.0, 1.0));
  CHECK_THROWS_AS(l.row({SpinConfig::all(2, 1), SpinConfig::all(2, 1)}), std::invalid_argument);
  CHECK_THROWS_AS(Liouvillian(tfi(3, 2.0, 1.0, 0.0)), std::invalid_argument);
}
