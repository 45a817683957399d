#include "motifcnn/ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "motifcnn/error.hpp"

namespace motifcnn {

namespace {

double activate(double z, Activation act) { return act == Activation::ReLU ? std::max(z, 0.0) : z; }

double activate_slope(double z, Activation act) {
  if (act == Activation::Identity) return 1.0;
  return z > 0.0 ? 1.0 : 0.0;
}

void require_binary(const CnnParams& p) {
  if (p.species != 2) throw InvalidArgument("grand sum is defined for M = 2");
}

void check_counts(std::size_t got, int species, int kernel) {
  if (got != motif_space_size(species, kernel))
    throw InvalidArgument("motif vector has " + std::to_string(got) + " entries, expected M^K");
}

}  // namespace

CnnParams CnnParams::zeros(int kernel, int species) {
  if (kernel < 1) throw InvalidArgument("kernel size K must be at least 1");
  if (species < 2) throw InvalidArgument("species count M must be at least 2");
  CnnParams p;
  p.kernel = kernel;
  p.species = species;
  p.w.assign(static_cast<std::size_t>(kernel * species), 0.0);
  return p;
}

std::vector<double> CnnParams::flatten() const {
  std::vector<double> out;
  out.reserve(param_count());
  out.push_back(v);
  out.insert(out.end(), w.begin(), w.end());
  out.push_back(b);
  return out;
}

void CnnParams::unflatten(std::span<const double> flat) {
  if (flat.size() != param_count()) throw InvalidArgument("parameter vector has the wrong length");
  v = flat.front();
  std::copy(flat.begin() + 1, flat.end() - 1, w.begin());
  b = flat.back();
}

double window_preactivation(const CnnParams& p, std::span<const Label> state, int start) {
  const int n = static_cast<int>(state.size());
  double z = p.b;
  for (int j = 0; j < p.kernel; ++j) z += p.weight(j, state[static_cast<std::size_t>((start + j) % n)]);
  return z;
}

double cnn_logpsi(const CnnParams& p, std::span<const Label> state, Activation act) {
  if (p.kernel > static_cast<int>(state.size())) throw InvalidArgument("kernel size exceeds the chain length");
  double sum = 0.0;
  for (int i = 0; i < static_cast<int>(state.size()); ++i) sum += activate(window_preactivation(p, state, i), act);
  return p.v * sum;
}

double cnn_logpsi(const CnnParams& p, const SpinConfig& s, Activation act) { return cnn_logpsi(p, s.sites(), act); }

std::vector<double> motif_activations(const CnnParams& p, Activation act) {
  const std::size_t n = motif_space_size(p.species, p.kernel);
  std::vector<double> out(n);
  for (std::size_t m = 0; m < n; ++m) {
    const auto labels = motif_labels(m, p.species, p.kernel);
    double z = p.b;
    for (int j = 0; j < p.kernel; ++j) z += p.weight(j, labels[static_cast<std::size_t>(j)]);
    out[m] = activate(z, act);
  }
  return out;
}

double cnn_logpsi_motif_form(const CnnParams& p, std::span<const std::int32_t> counts, Activation act) {
  check_counts(counts.size(), p.species, p.kernel);
  const auto a = motif_activations(p, act);
  double sum = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m)
    if (counts[m] != 0) sum += a[m] * counts[m];
  return p.v * sum;
}

CpsParams cps_from_cnn(const CnnParams& p, Activation act) {
  CpsParams c{p.kernel, p.species, motif_activations(p, act)};
  for (double& x : c.coefficients) x *= p.v;
  return c;
}

double cps_logpsi(const CpsParams& c, std::span<const std::int32_t> counts) {
  check_counts(counts.size(), c.species, c.kernel);
  double sum = 0.0;
  for (std::size_t m = 0; m < counts.size(); ++m) sum += c.coefficients[m] * counts[m];
  return sum;
}

double maxent_logpsi(const MaxEntParams& m, std::span<const std::int32_t> counts) {
  check_counts(counts.size(), m.species, m.kernel);
  if (m.lambdas.size() != m.operators.size()) throw InvalidArgument("one multiplier per operator required");
  double sum = -m.log_z;
  for (std::size_t i = 0; i < m.operators.size(); ++i) sum += m.lambdas[i] * counts[m.operators[i]];
  return sum;
}

namespace {

// Rows: basis states; columns: operator counts.
Eigen::MatrixXd operator_counts(const Basis& basis, int kernel, std::span<const std::size_t> operators) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(basis.size()), static_cast<Eigen::Index>(operators.size()));
  for (std::size_t s = 0; s < basis.size(); ++s) {
    const auto mv = motif_vector(basis.state(s), basis.species(), kernel);
    for (std::size_t k = 0; k < operators.size(); ++k)
      x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) = mv.at(operators[k]);
  }
  return x;
}

double log_sum_exp(const Eigen::VectorXd& a) {
  const double top = a.maxCoeff();
  return top + std::log((a.array() - top).exp().sum());
}

}  // namespace

void normalize(MaxEntParams& m, const Basis& basis) {
  const Eigen::MatrixXd x = operator_counts(basis, m.kernel, m.operators);
  const Eigen::Map<const Eigen::VectorXd> lam(m.lambdas.data(), static_cast<Eigen::Index>(m.lambdas.size()));
  m.log_z = 0.5 * log_sum_exp(2.0 * (x * lam));
}

std::vector<double> maxent_expected_counts(const MaxEntParams& m, const Basis& basis) {
  const Eigen::MatrixXd x = operator_counts(basis, m.kernel, m.operators);
  const Eigen::Map<const Eigen::VectorXd> lam(m.lambdas.data(), static_cast<Eigen::Index>(m.lambdas.size()));
  const Eigen::VectorXd a = 2.0 * (x * lam);
  Eigen::VectorXd p = (a.array() - log_sum_exp(a)).exp();
  const Eigen::VectorXd mean = x.transpose() * p;
  return {mean.data(), mean.data() + mean.size()};
}

std::vector<double> effective_multipliers(std::span<const double> lambda_full, const Basis& basis, int kernel,
                                          std::span<const std::size_t> operators) {
  check_counts(lambda_full.size(), basis.species(), kernel);
  const Eigen::MatrixXd x = operator_counts(basis, kernel, operators);
  Eigen::VectorXd y(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t s = 0; s < basis.size(); ++s) {
    const auto mv = motif_vector(basis.state(s), basis.species(), kernel);
    double acc = 0.0;
    for (std::size_t k = 0; k < mv.size(); ++k) acc += lambda_full[k] * mv[k];
    y(static_cast<Eigen::Index>(s)) = acc;
  }
  const Eigen::VectorXd lam = x.colPivHouseholderQr().solve(y);
  return {lam.data(), lam.data() + lam.size()};
}

double grandsum(const CnnParams& p) {
  require_binary(p);
  double s = 2.0 * p.b;
  for (double x : p.w) s += x;
  return s;
}

CnnParams project_grandsum(const CnnParams& p) {
  const double c = grandsum(p);
  CnnParams out = p;
  for (double& x : out.w) x -= c / (2.0 * p.kernel);
  return out;
}

std::vector<double> logpsi_gradient(const CnnParams& p, std::span<const Label> state, Activation act) {
  std::vector<double> g(p.param_count(), 0.0);
  const int n = static_cast<int>(state.size());
  double* gw = g.data() + 1;
  double& gb = g.back();
  for (int i = 0; i < n; ++i) {
    const double z = window_preactivation(p, state, i);
    g[0] += activate(z, act);
    const double slope = activate_slope(z, act);
    if (slope == 0.0) continue;
    gb += p.v * slope;
    for (int j = 0; j < p.kernel; ++j) gw[j * p.species + state[static_cast<std::size_t>((i + j) % n)]] += p.v * slope;
  }
  return g;
}

MaxEntFit fit_maxent(const Basis& basis, int kernel, std::span<const std::size_t> operators,
                     std::span<const double> target_counts, const MaxEntOptions& opts) {
  if (operators.empty()) throw InvalidArgument("operator set is empty");
  if (target_counts.size() != operators.size()) throw InvalidArgument("one target per operator required");
  const std::size_t nmotif = motif_space_size(basis.species(), kernel);
  for (std::size_t o : operators)
    if (o >= nmotif) throw InvalidArgument("operator index out of range");

  const Eigen::MatrixXd x = operator_counts(basis, kernel, operators);
  const Eigen::Map<const Eigen::VectorXd> q(target_counts.data(), static_cast<Eigen::Index>(target_counts.size()));
  const Eigen::Index d = x.cols();

  auto dual = [&](const Eigen::VectorXd& theta, Eigen::VectorXd* mean, Eigen::MatrixXd* cov) {
    const Eigen::VectorXd a = x * theta;
    const double lse = log_sum_exp(a);
    if (mean) {
      const Eigen::VectorXd p = (a.array() - lse).exp();
      *mean = x.transpose() * p;
      if (cov) {
        const Eigen::MatrixXd xc = x.rowwise() - mean->transpose();
        *cov = xc.transpose() * p.asDiagonal() * xc;
      }
    }
    return lse - theta.dot(q);
  };

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double f = dual(theta, &mean, &cov);
  double residual = (mean - q).cwiseAbs().maxCoeff();
  int iter = 0;
  while (residual > opts.tolerance && iter < opts.max_iter) {
    ++iter;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double cutoff = std::max(ev.maxCoeff(), 1e-300) * 1e-12;
    const Eigen::VectorXd grad = mean - q;
    Eigen::VectorXd coef = es.eigenvectors().transpose() * grad;
    for (Eigen::Index i = 0; i < d; ++i) coef(i) = ev(i) > cutoff ? coef(i) / ev(i) : 0.0;
    const Eigen::VectorXd step = -(es.eigenvectors() * coef);

    double t = 1.0;
    Eigen::VectorXd next;
    double fnext = 0.0;
    const double slope = grad.dot(step);
    for (int halving = 0; halving < 60; ++halving) {
      next = theta + t * step;
      fnext = dual(next, nullptr, nullptr);
      if (std::isfinite(fnext) && fnext <= f + 1e-4 * t * slope) break;
      t *= 0.5;
    }
    if (!std::isfinite(fnext) || fnext > f + 1e-12 * (1.0 + std::abs(f))) break;
    theta = next;
    f = dual(theta, &mean, &cov);
    residual = (mean - q).cwiseAbs().maxCoeff();
  }
  if (residual > opts.tolerance)
    throw NumericalError("MaxEnt fit did not converge after " + std::to_string(iter) +
                         " Newton steps; residual " + std::to_string(residual));

  MaxEntFit fit;
  fit.params.kernel = kernel;
  fit.params.species = basis.species();
  fit.params.operators.assign(operators.begin(), operators.end());
  fit.params.lambdas.resize(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) fit.params.lambdas[static_cast<std::size_t>(i)] = 0.5 * theta(i);
  normalize(fit.params, basis);
  fit.iterations = iter;
  fit.residual = residual;
  fit.fitted.assign(mean.data(), mean.data() + mean.size());
  return fit;
}

double linear_activation_constant(const CnnParams& p, int sites) {
  double gs = 0.0;
  for (double x : p.w) gs += x + p.b / p.kernel;
  return sites * p.v * gs / p.species;
}

}  // namespace motifcnn
