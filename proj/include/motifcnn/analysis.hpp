#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "motifcnn/ansatz.hpp"
#include "motifcnn/exact.hpp"
#include "motifcnn/motif.hpp"
#include "motifcnn/vmc.hpp"

namespace motifcnn {

/// Motif classes by equal value (within tol), sorted by descending value.
MotifClassTable mev_class_ordering(const std::vector<double>& probability, int kernel, int species = 2,
                                   double tol = 1e-9);

/// Window probabilities of a CNN state by full summation over the basis (weights psi^2).
std::vector<double> cnn_mev(const CnnParams& p, const Basis& basis, int kernel);
/// Window probabilities estimated from samples (all N cyclic windows of every sample).
std::vector<double> sampled_mev(const SampleSet& samples, int kernel);

/// Mean of the last `tail` recorded energies.
double estimated_energy(const TrainingTrajectory& traj, std::size_t tail = 10);

struct ErrorReport {
  double energy = 0.0;        // estimate
  double exact_energy = 0.0;  // E0
  double gap = 0.0;           // (Emax - E0) / basis size
  double delta_e = 0.0;       // estimate - E0
  double rel_delta_e = 0.0;   // delta_e / gap
  MotifClassTable classes;    // ordered by truth
  std::vector<double> class_errors;  // mean relative MEV error per class; NaN where truth is 0

  /// Error of the k-th class; rejects classes with zero truth.
  double class_error(std::size_t k) const;
};

ErrorReport error_report(double energy, const GroundStateSolution& gs, const MevTable& truth,
                         const std::vector<double>& model_probability);

struct MotifFeatures {
  int n_like = 0;  // adjacent like pairs inside the window (K-1 pairs, no wraparound)
  int d_neel = 0;  // Hamming distance to the nearer alternating motif
};

MotifFeatures motif_features(std::span<const Label> motif);
MotifFeatures motif_features(std::size_t motif, int kernel);

struct RegressionResult {
  std::vector<std::string> names;
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> z_scores;
  double r2 = 0.0;
  std::size_t observations = 0;
  double condition_number = 1.0;

  /// "***" at 99.9%, "**" at 99%, "*" at 95% (two-sided normal thresholds).
  std::string stars(std::size_t i) const;
  /// Coefficient, standard error in parentheses, stars; then R², observations, condition number.
  std::string table() const;
};

/// Ordinary least squares on the given design (add the intercept column
/// yourself, see with_intercept). Rank-deficient designs raise NumericalError.
RegressionResult ols_regress(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                             std::vector<std::string> names);

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& features);

/// MEV ~ d_Neel + n_like + d_Neel * n_like over all motifs of the table.
RegressionResult feature_regression(const std::vector<double>& probability, int kernel);

struct OutlierFilter {
  std::vector<std::size_t> kept;
  std::size_t removed = 0;
};

/// Drops observations with delta_E >= cutoff.
OutlierFilter outlier_filter(std::span<const double> rel_delta_e, double cutoff = 6.0);

struct GrowthFit {
  double linear_r2 = 0.0;
  double exponential_r2 = 0.0;  // y = a e^{bx} fitted on ln y, R² on the original scale
  double rate = 0.0;            // b
};

GrowthFit growth_fit(std::span<const double> x, std::span<const double> y);

}  // namespace motifcnn
