#include "motifcnn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "motifcnn/error.hpp"

namespace motifcnn {

MotifClassTable mev_class_ordering(const std::vector<double>& probability, int kernel, int species, double tol) {
  const std::size_t n = motif_space_size(species, kernel);
  if (probability.size() != n) throw InvalidArgument("MEV table has the wrong length");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probability[a] > probability[b]; });

  MotifClassTable table;
  table.species = species;
  table.kernel = kernel;
  table.class_of.assign(n, 0);
  for (std::size_t idx : order) {
    if (table.classes.empty() || probability[table.classes.back().front()] - probability[idx] > tol) {
      table.classes.push_back({idx});
    } else {
      table.classes.back().push_back(idx);
    }
    table.class_of[idx] = table.classes.size() - 1;
  }
  for (auto& members : table.classes) {
    double sum = 0.0;
    for (std::size_t m : members) sum += probability[m];
    table.value.push_back(sum / static_cast<double>(members.size()));
    std::sort(members.begin(), members.end());
  }
  return table;
}

std::vector<double> cnn_mev(const CnnParams& p, const Basis& basis, int kernel) {
  const std::size_t n = basis.size();
  std::vector<double> lp(n);
  for (std::size_t k = 0; k < n; ++k) lp[k] = cnn_logpsi(p, basis.state(k));
  const double top = *std::max_element(lp.begin(), lp.end());
  std::vector<double> prob(motif_space_size(basis.species(), kernel), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = std::exp(2.0 * (lp[k] - top));
    total += w;
    const auto mv = motif_vector(basis.state(k), basis.species(), kernel);
    for (std::size_t m = 0; m < mv.size(); ++m)
      if (mv[m] != 0) prob[m] += w * mv[m];
  }
  for (double& x : prob) x /= total * basis.sites();
  return prob;
}

std::vector<double> sampled_mev(const SampleSet& samples, int kernel) {
  if (samples.size() == 0) throw InvalidArgument("no samples");
  std::vector<double> prob(motif_space_size(samples.species, kernel), 0.0);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const auto mv = motif_vector(samples.state(k), samples.species, kernel);
    for (std::size_t m = 0; m < mv.size(); ++m) prob[m] += mv[m];
  }
  const double denom = static_cast<double>(samples.size()) * samples.sites;
  for (double& x : prob) x /= denom;
  return prob;
}

double estimated_energy(const TrainingTrajectory& traj, std::size_t tail) {
  if (traj.records.empty()) throw InvalidArgument("empty trajectory");
  const std::size_t n = std::min(std::max<std::size_t>(tail, 1), traj.records.size());
  double sum = 0.0;
  for (std::size_t i = traj.records.size() - n; i < traj.records.size(); ++i) sum += traj.records[i].energy;
  return sum / static_cast<double>(n);
}

double ErrorReport::class_error(std::size_t k) const {
  if (k >= class_errors.size()) throw InvalidArgument("class index out of range");
  if (std::isnan(class_errors[k])) throw InvalidArgument("class has zero ground-truth MEV");
  return class_errors[k];
}

ErrorReport error_report(double energy, const GroundStateSolution& gs, const MevTable& truth,
                         const std::vector<double>& model_probability) {
  if (model_probability.size() != truth.probability.size()) throw InvalidArgument("model and truth MEV tables differ in size");
  ErrorReport r;
  r.energy = energy;
  r.exact_energy = gs.energy;
  r.gap = gap_estimate(gs);
  r.delta_e = energy - gs.energy;
  r.rel_delta_e = r.delta_e / r.gap;
  r.classes = mev_class_ordering(truth.probability, truth.kernel, truth.species);
  for (const auto& members : r.classes.classes) {
    double sum = 0.0;
    bool zero = false;
    for (std::size_t m : members) {
      const double t = truth.probability[m];
      if (t == 0.0) zero = true;
      else sum += (model_probability[m] - t) / t;
    }
    r.class_errors.push_back(zero ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(members.size()));
  }
  return r;
}

MotifFeatures motif_features(std::span<const Label> motif) {
  MotifFeatures f;
  int d0 = 0;
  int d1 = 0;
  for (std::size_t i = 0; i < motif.size(); ++i) {
    if (motif[i] > 1) throw InvalidArgument("motif features are defined for M = 2");
    if (i + 1 < motif.size() && motif[i] == motif[i + 1]) ++f.n_like;
    d0 += motif[i] != static_cast<Label>(i % 2) ? 1 : 0;
    d1 += motif[i] != static_cast<Label>((i + 1) % 2) ? 1 : 0;
  }
  f.d_neel = std::min(d0, d1);
  return f;
}

MotifFeatures motif_features(std::size_t motif, int kernel) { return motif_features(motif_labels(motif, 2, kernel)); }

std::string RegressionResult::stars(std::size_t i) const {
  const double z = std::abs(z_scores.at(i));
  if (z >= 3.291) return "***";
  if (z >= 2.576) return "**";
  if (z >= 1.96) return "*";
  return "";
}

std::string RegressionResult::table() const {
  std::ostringstream out;
  std::size_t width = 12;
  for (const auto& n : names) width = std::max(width, n.size() + 2);
  out << std::left << std::setw(static_cast<int>(width)) << "" << "coefficient\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::ostringstream cell;
    cell << std::setprecision(4) << coefficients[i] << stars(i);
    std::ostringstream se;
    se << "(" << std::setprecision(4) << std::abs(std_errors[i]) << ")";
    out << std::left << std::setw(static_cast<int>(width)) << names[i] << cell.str() << "\n"
        << std::setw(static_cast<int>(width)) << "" << se.str() << "\n";
  }
  out << std::left << std::setw(static_cast<int>(width)) << "R2" << std::setprecision(4) << r2 << "\n"
      << std::setw(static_cast<int>(width)) << "Obs." << observations << "\n"
      << std::setw(static_cast<int>(width)) << "Cond. No." << std::setprecision(4) << condition_number << "\n";
  return out.str();
}

RegressionResult ols_regress(const Eigen::MatrixXd& design, const Eigen::VectorXd& target,
                             std::vector<std::string> names) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (p < 1 || n < p) throw InvalidArgument("regression needs at least as many rows as columns");
  if (target.size() != n) throw InvalidArgument("target length does not match the design");
  if (static_cast<Eigen::Index>(names.size()) != p) throw InvalidArgument("one name per design column required");
  if (!design.allFinite() || !target.allFinite()) throw InvalidArgument("design and target must be finite");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(design);
  const auto& sv = svd.singularValues();
  const double cond = sv(p - 1) > 0.0 ? sv(0) / sv(p - 1) : std::numeric_limits<double>::infinity();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-12);
  if (qr.rank() < p) {
    std::ostringstream msg;
    msg << "design matrix is rank deficient (rank " << qr.rank() << " of " << p << ", condition number " << cond << ")";
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd beta = qr.solve(target);
  const Eigen::VectorXd resid = target - design * beta;
  const double ssr = resid.squaredNorm();
  const double sst = (target.array() - target.mean()).matrix().squaredNorm();

  // (X^T X)^{-1} = P R^{-1} R^{-T} P^T from the pivoted QR factors.
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd perm = qr.colsPermutation();
  const Eigen::MatrixXd xtx_inv = perm * (rinv * rinv.transpose()) * perm.transpose();
  const double sigma2 = n > p ? ssr / static_cast<double>(n - p) : std::numeric_limits<double>::quiet_NaN();

  RegressionResult out;
  out.names = std::move(names);
  out.observations = static_cast<std::size_t>(n);
  out.condition_number = cond;
  out.r2 = sst > 0.0 ? std::clamp(1.0 - ssr / sst, 0.0, 1.0) : 1.0;
  for (Eigen::Index i = 0; i < p; ++i) {
    out.coefficients.push_back(beta(i));
    const double se = std::sqrt(sigma2 * xtx_inv(i, i));
    out.std_errors.push_back(se);
    out.z_scores.push_back(se > 0.0 ? beta(i) / se : (beta(i) == 0.0 ? 0.0 : std::numeric_limits<double>::infinity()));
  }
  return out;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& features) {
  Eigen::MatrixXd x(features.rows(), features.cols() + 1);
  x.col(0).setOnes();
  x.rightCols(features.cols()) = features;
  return x;
}

RegressionResult feature_regression(const std::vector<double>& probability, int kernel) {
  const std::size_t n = motif_space_size(2, kernel);
  if (probability.size() != n) throw InvalidArgument("MEV table has the wrong length");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t m = 0; m < n; ++m) {
    const auto f = motif_features(m, kernel);
    const auto row = static_cast<Eigen::Index>(m);
    x(row, 0) = f.d_neel;
    x(row, 1) = f.n_like;
    x(row, 2) = f.d_neel * f.n_like;
    y(row) = probability[m];
  }
  return ols_regress(with_intercept(x), y, {"Intercept", "d_Neel", "n_like", "d_Neel*n_like"});
}

OutlierFilter outlier_filter(std::span<const double> rel_delta_e, double cutoff) {
  OutlierFilter out;
  for (std::size_t i = 0; i < rel_delta_e.size(); ++i) {
    if (rel_delta_e[i] >= cutoff) ++out.removed;
    else out.kept.push_back(i);
  }
  return out;
}

GrowthFit growth_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw InvalidArgument("growth fit needs at least 3 paired points");
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd design(n, 1);
  Eigen::VectorXd ys(n);
  Eigen::VectorXd logy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = x[static_cast<std::size_t>(i)];
    ys(i) = y[static_cast<std::size_t>(i)];
    if (!(ys(i) > 0.0)) throw InvalidArgument("exponential fit needs positive values");
    logy(i) = std::log(ys(i));
  }
  const Eigen::MatrixXd xi = with_intercept(design);
  GrowthFit out;
  out.linear_r2 = ols_regress(xi, ys, {"Intercept", "x"}).r2;
  const auto lf = ols_regress(xi, logy, {"Intercept", "x"});
  out.rate = lf.coefficients[1];
  Eigen::VectorXd pred(n);
  for (Eigen::Index i = 0; i < n; ++i) pred(i) = std::exp(lf.coefficients[0] + lf.coefficients[1] * design(i, 0));
  const double ssr = (ys - pred).squaredNorm();
  const double sst = (ys.array() - ys.mean()).matrix().squaredNorm();
  out.exponential_r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;
  return out;
}

}  // namespace motifcnn
