#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <cstddef>
#include <vector>

#include "cnndo/density_model.hpp"
#include "cnndo/liouvillian.hpp"

namespace cnndo {

using SparseMatrixC = Eigen::SparseMatrix<Complex>;

/// Site limits of the exact routines. Dense density matrices need 4^S entries,
/// the superoperator 16^S (stored sparsely).
inline constexpr std::size_t kMaxLiouvillianSites = 7;
inline constexpr std::size_t kMaxEnumerationSites = 6;

/// 2x2 Pauli matrix in the basis {|down> = 0, |up> = 1}.
Eigen::Matrix2cd pauli_matrix(Pauli p);
/// The single-site operator `op` acting on `site` of an S-site register,
/// I (x) ... (x) op (x) ... (x) I with site 0 as the least significant factor.
SparseMatrixC site_operator(const Eigen::Matrix2cd& op, std::size_t site, std::size_t n_sites);

SparseMatrixC build_hamiltonian_matrix(const ModelSpec& spec);

/// -i(H (x) I - I (x) H^T) + sum_k gamma (L (x) conj(L) - 1/2 L^dag L (x) I - 1/2 I (x) (L^dag L)^T),
/// acting on row-major vec(rho): index(sigma, sigma') = idx(sigma) * 2^S + idx(sigma').
/// Throws SizeGuardError above kMaxLiouvillianSites.
SparseMatrixC build_liouvillian_matrix(const ModelSpec& spec);
Eigen::MatrixXcd build_dense_liouvillian(const ModelSpec& spec);

struct DenseNess {
  Eigen::MatrixXcd rho;
  double residual_norm = 0.0;      ///< ||L rho||_2 / ||rho||_2
  double min_eigenvalue = 0.0;
  double uniqueness_gap = 0.0;     ///< smallest singular value certifying a 1-dim null space
};

/// Null vector of the superoperator, Hermitized and trace-normalized.
/// Throws NumericError when the steady state is not unique.
DenseNess solve_ness(const SparseMatrixC& liouvillian, std::size_t n_sites);
DenseNess solve_ness(const ModelSpec& spec);

/// Tr(P_site rho).
Complex expectation(const Eigen::MatrixXcd& rho, Pauli op, std::size_t site);
/// Site-averaged Tr(P rho).
double site_averaged_expectation(const Eigen::MatrixXcd& rho, Pauli op);

/// Row-major vec(rho) from any density model, by full enumeration.
Eigen::VectorXcd enumerate_rho(DensityModel& model, std::size_t n_sites);
Eigen::MatrixXcd assemble_density_matrix(DensityModel& model, std::size_t n_sites);

/// Tr[rho^dag L^dag L rho] / Tr[rho^dag rho] by dense algebra.
double dense_quadratic_cost(const SparseMatrixC& liouvillian, const Eigen::VectorXcd& vec_rho);

struct ExactCostGrad {
  double cost = 0.0;
  std::vector<double> grad;
};

/// Cost and gradient by summing over every (sigma, sigma'), using the sparse
/// row action. Throws SizeGuardError above kMaxEnumerationSites.
ExactCostGrad exact_cost_and_grad(DensityModel& model, const Liouvillian& liouv);
double exact_cost(DensityModel& model, const Liouvillian& liouv);

struct PositivityReport {
  double min_eig_over_trace = 0.0;
  double trace = 0.0;
  int trace_sign = 0;
  double hermiticity_defect = 0.0;
  double sector_leakage = 0.0;  ///< fraction of sum |rho|^2 on odd sector offsets
};

PositivityReport positivity_report(DensityModel& model, const Lattice& lattice);
PositivityReport positivity_report(const Eigen::MatrixXcd& rho);

/// Fraction of sum |rho|^2 in entries whose sector offset is odd.
double sector_leakage(const Eigen::MatrixXcd& rho, std::size_t n_sites);

/// Basis indices ordered by total magnetization (ascending), ties by index.
std::vector<std::size_t> magnetization_order(std::size_t n_sites);

/// A density model that looks rho up in a fixed matrix; it has no parameters.
class TableModel final : public DensityModel {
 public:
  explicit TableModel(Eigen::MatrixXcd rho);

  std::unique_ptr<DensityModel> clone() const override;
  std::size_t num_params() const override { return 0; }
  Complex rho(const JointConfig& cfg) override;
  void forward(std::span<const JointConfig> cfgs, std::span<Complex> out) override;
  void backward(std::span<const Complex>, std::span<double>) override {}

 private:
  Eigen::MatrixXcd rho_;
};

}  // namespace cnndo
