#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "motifcnn/spinchain.hpp"

namespace motifcnn {

/// H = sum_{i=1}^{N} P_{i,i+1} on a ring. The diagonal counts like neighbors; each
/// unlike bond contributes a swap with amplitude +1, or -1 in the Marshall gauge.
class ExchangeHamiltonian {
 public:
  ExchangeHamiltonian(std::shared_ptr<const Basis> basis, bool marshall_gauge);

  const Basis& basis() const { return *basis_; }
  std::shared_ptr<const Basis> basis_ptr() const { return basis_; }
  bool gauged() const { return gauged_; }
  std::size_t dimension() const { return basis_->size(); }

  double diagonal(std::span<const Label> state) const;
  /// Off-diagonal images of a state with their amplitudes.
  std::vector<std::pair<SpinConfig, double>> action(const SpinConfig& s) const;

  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix_); }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return matrix_ * x; }

 private:
  std::shared_ptr<const Basis> basis_;
  bool gauged_;
  Eigen::SparseMatrix<double> matrix_;
};

struct GroundStateSolution {
  std::shared_ptr<const Basis> basis;
  bool gauged = false;
  double energy = 0.0;          // E0
  double first_excited = 0.0;   // E1
  double max_energy = 0.0;      // Emax
  Eigen::VectorXd amplitudes;   // unit norm
  std::string solver;           // "dense" or "lanczos"
  double residual = 0.0;        // ||H psi - E0 psi||
};

struct SolverOptions {
  std::size_t dense_limit = 1000;
  int krylov_dim = 120;
  int max_restarts = 200;
  double tolerance = 1e-11;
};

/// Lowest eigenpair of a symmetric operator by restarted Lanczos with full
/// reorthogonalization. The search stays orthogonal to `deflate`.
std::pair<double, Eigen::VectorXd> lanczos_lowest(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                                                  Eigen::Index dim, const std::vector<Eigen::VectorXd>& deflate,
                                                  const SolverOptions& opts = {});

GroundStateSolution ground_state(std::shared_ptr<const Basis> basis, bool marshall_gauge,
                                 const SolverOptions& opts = {});
GroundStateSolution ground_state(int sites, int species, bool marshall_gauge, const SolverOptions& opts = {});

/// rho_K on sites 0..K-1 over the full M^K product space (motif row order).
struct ReducedDensityMatrix {
  int kernel = 0;
  int species = 0;
  Eigen::MatrixXd rho;
};

ReducedDensityMatrix reduced_density_matrix(const GroundStateSolution& gs, int kernel);

/// Motif expectation values: probability = diag(rho_K), count = N * probability.
struct MevTable {
  int sites = 0;
  int species = 0;
  int kernel = 0;
  std::vector<double> probability;
  std::vector<double> count;
};

MevTable exact_mev(const GroundStateSolution& gs, int kernel);

/// -ln(lambda) for eigenvalues lambda > 1e-30, ascending.
std::vector<double> entanglement_spectrum(const ReducedDensityMatrix& rdm);

/// Smallest number of the largest weights whose sum reaches fraction * total.
std::size_t truncation_size(std::vector<double> weights, double fraction);
/// Same, with weights exp(-eps) from an entanglement spectrum.
std::size_t truncation_size_from_spectrum(const std::vector<double>& spectrum, double fraction);

/// H_K = sum_{i=1}^{K-1} i(K-i)/K P_{i,i+1} over the M^K product space.
Eigen::MatrixXd entanglement_hamiltonian(int kernel, int species = 2);

/// diag(exp(-beta H_K)) / Z in motif row order.
std::vector<double> cft_mev(int kernel, double beta, int species = 2);

struct BetaCalibration {
  double beta = 0.0;
  double objective = 0.0;  // sum of squared differences at beta
};

/// Golden-section search in ln(beta) over [lo, hi] minimizing the squared
/// distance between cft_mev and the reference probabilities.
BetaCalibration calibrate_beta(int kernel, const std::vector<double>& reference, int species = 2, double lo = 1e-2,
                               double hi = 1e2);

/// Total psi^2 per class, sorted descending.
std::vector<double> class_masses(const GroundStateSolution& gs, const EquivalenceClassPartition& part);

/// Smallest number of classes whose cumulative mass reaches `threshold`.
std::size_t cumulative_class_mass(const GroundStateSolution& gs, const EquivalenceClassPartition& part,
                                  double threshold);

/// (Emax - E0) / basis size.
double gap_estimate(const GroundStateSolution& gs);

}  // namespace motifcnn
