#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "motifcnn/motif.hpp"
#include "motifcnn/spinchain.hpp"

namespace motifcnn {

enum class Activation { ReLU, Identity };

/// Single-filter shallow CNN. Window i contributes
///   z_i = sum_j w[j][label(s_{i+j})] + b   (j < K, cyclic),
/// and ln psi(s) = v * sum_i sigma(z_i).
struct CnnParams {
  int kernel = 1;
  int species = 2;
  std::vector<double> w;  // row-major K x M
  double b = 0.0;
  double v = 0.0;

  static CnnParams zeros(int kernel, int species);

  double weight(int j, int label) const { return w[static_cast<std::size_t>(j * species + label)]; }
  double& weight(int j, int label) { return w[static_cast<std::size_t>(j * species + label)]; }

  /// Flat layout [v, w (row-major), b].
  std::size_t param_count() const { return w.size() + 2; }
  std::vector<double> flatten() const;
  void unflatten(std::span<const double> flat);
};

double window_preactivation(const CnnParams& p, std::span<const Label> state, int start);

double cnn_logpsi(const CnnParams& p, std::span<const Label> state, Activation act = Activation::ReLU);
double cnn_logpsi(const CnnParams& p, const SpinConfig& s, Activation act = Activation::ReLU);

/// sigma(w·s' + b) for every motif s' in row order.
std::vector<double> motif_activations(const CnnParams& p, Activation act = Activation::ReLU);

/// v * sum_{s'} sigma(w·s' + b) m_{s'}; counts must have M^K entries.
double cnn_logpsi_motif_form(const CnnParams& p, std::span<const std::int32_t> counts,
                             Activation act = Activation::ReLU);

/// ln psi = sum_{s'} C_{s'} m_{s'}(s).
struct CpsParams {
  int kernel = 1;
  int species = 2;
  std::vector<double> coefficients;  // motif row order
};

CpsParams cps_from_cnn(const CnnParams& p, Activation act = Activation::ReLU);
double cps_logpsi(const CpsParams& c, std::span<const std::int32_t> counts);

/// ln psi = sum_{s' in operators} lambda_{s'} m_{s'}(s) - ln Z, with P(s) = psi(s)^2.
struct MaxEntParams {
  int kernel = 1;
  int species = 2;
  std::vector<std::size_t> operators;  // motif indices
  std::vector<double> lambdas;
  double log_z = 0.0;
};

double maxent_logpsi(const MaxEntParams& m, std::span<const std::int32_t> counts);

/// Sets log_z so that sum over the basis of psi^2 is 1.
void normalize(MaxEntParams& m, const Basis& basis);

/// Multipliers on `operators` reproducing sum over all motifs of lambda_full * m
/// on every basis state (least squares over the basis; the fit is exact when the
/// remaining rows are combinations of the chosen ones).
std::vector<double> effective_multipliers(std::span<const double> lambda_full, const Basis& basis, int kernel,
                                          std::span<const std::size_t> operators);

/// sum(w) + 2b, M = 2 only.
double grandsum(const CnnParams& p);

/// w -= grandsum / (2K) elementwise.
CnnParams project_grandsum(const CnnParams& p);

/// d ln psi / d theta in the flat layout [v, w, b]; sigma'(0) = 0 for ReLU.
std::vector<double> logpsi_gradient(const CnnParams& p, std::span<const Label> state,
                                    Activation act = Activation::ReLU);

struct MaxEntOptions {
  int max_iter = 50;
  double tolerance = 1e-8;  // max-norm residual on expected counts
};

struct MaxEntFit {
  MaxEntParams params;
  int iterations = 0;
  double residual = 0.0;
  std::vector<double> fitted;  // expected counts under the fitted model
};

/// Matches expected counts <m_{s'}> (count convention, i.e. N times the window
/// probability) on the operator set by damped Newton on the convex dual
/// ln sum exp(theta·m) - theta·q with theta = 2 lambda. Directions of
/// zero curvature (operator combinations that are constant on the basis) are
/// dropped via the Hessian pseudo-inverse.
MaxEntFit fit_maxent(const Basis& basis, int kernel, std::span<const std::size_t> operators,
                     std::span<const double> target_counts, const MaxEntOptions& opts = {});

/// Expected counts of the operators under P ∝ exp(2 sum lambda m).
std::vector<double> maxent_expected_counts(const MaxEntParams& m, const Basis& basis);

/// Value that every state takes when sigma is the identity: N v grandsum(w~) / M, w~ = w + b/K.
double linear_activation_constant(const CnnParams& p, int sites);

}  // namespace motifcnn
