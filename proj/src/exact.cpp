#include "motifcnn/exact.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "motifcnn/error.hpp"
#include "motifcnn/motif.hpp"

namespace motifcnn {

ExchangeHamiltonian::ExchangeHamiltonian(std::shared_ptr<const Basis> basis, bool marshall_gauge)
    : basis_(std::move(basis)), gauged_(marshall_gauge) {
  if (!basis_) throw InvalidArgument("null basis");
  if (gauged_ && basis_->species() != 2) throw InvalidArgument("Marshall gauge is defined for M = 2 only");
  const std::size_t dim = basis_->size();
  const int n = basis_->sites();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(dim * static_cast<std::size_t>(n + 1));
  std::vector<Label> work(static_cast<std::size_t>(n));
  for (std::size_t c = 0; c < dim; ++c) {
    const auto st = basis_->state(c);
    trips.emplace_back(static_cast<int>(c), static_cast<int>(c), diagonal(st));
    const int sign_c = gauged_ ? marshall_sign(st) : 1;
    for (int i = 0; i < n; ++i) {
      const auto a = static_cast<std::size_t>(i);
      const auto b = static_cast<std::size_t>((i + 1) % n);
      if (st[a] == st[b]) continue;
      std::copy(st.begin(), st.end(), work.begin());
      std::swap(work[a], work[b]);
      const std::size_t r = basis_->index_of(work);
      const double amp = gauged_ ? static_cast<double>(sign_c * marshall_sign(work)) : 1.0;
      trips.emplace_back(static_cast<int>(r), static_cast<int>(c), amp);
    }
  }
  matrix_.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  matrix_.setFromTriplets(trips.begin(), trips.end());
  matrix_.makeCompressed();
}

double ExchangeHamiltonian::diagonal(std::span<const Label> state) const {
  const std::size_t n = state.size();
  int like = 0;
  for (std::size_t i = 0; i < n; ++i) like += state[i] == state[(i + 1) % n] ? 1 : 0;
  return like;
}

std::vector<std::pair<SpinConfig, double>> ExchangeHamiltonian::action(const SpinConfig& s) const {
  std::vector<std::pair<SpinConfig, double>> out;
  const auto st = s.sites();
  const std::size_t n = st.size();
  const int sign_s = gauged_ ? marshall_sign(st) : 1;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = (i + 1) % n;
    if (st[i] == st[j]) continue;
    std::vector<Label> t(st.begin(), st.end());
    std::swap(t[i], t[j]);
    const double amp = gauged_ ? static_cast<double>(sign_s * marshall_sign(t)) : 1.0;
    out.emplace_back(SpinConfig(std::move(t), s.species()), amp);
  }
  return out;
}

std::pair<double, Eigen::VectorXd> lanczos_lowest(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                                                  Eigen::Index dim, const std::vector<Eigen::VectorXd>& deflate,
                                                  const SolverOptions& opts) {
  const Eigen::Index free_dim = dim - static_cast<Eigen::Index>(deflate.size());
  if (free_dim < 1) throw InvalidArgument("nothing left to search after deflation");
  auto project = [&](Eigen::VectorXd& x) {
    for (const auto& d : deflate) x -= d.dot(x) * d;
  };

  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::VectorXd v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = uni(rng);
  project(v);
  v.normalize();

  const Eigen::Index m = std::min<Eigen::Index>(opts.krylov_dim, free_dim);
  Eigen::MatrixXd basis(dim, m);
  double theta = 0.0;
  Eigen::VectorXd y;
  for (int restart = 0; restart < opts.max_restarts; ++restart) {
    std::vector<double> alpha;
    std::vector<double> beta;
    basis.col(0) = v;
    Eigen::Index k = 0;
    bool invariant = false;
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::VectorXd w = op(basis.col(j));
      project(w);
      const double a = basis.col(j).dot(w);
      alpha.push_back(a);
      w -= a * basis.col(j);
      if (j > 0) w -= beta.back() * basis.col(j - 1);
      for (int pass = 0; pass < 2; ++pass) {
        w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
        project(w);
      }
      k = j + 1;
      const double bnorm = w.norm();
      if (bnorm < 1e-12) {
        invariant = true;
        break;
      }
      if (j + 1 == m) break;
      beta.push_back(bnorm);
      basis.col(j + 1) = w / bnorm;
    }
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    theta = es.eigenvalues()(0);
    y = basis.leftCols(k) * es.eigenvectors().col(0);
    project(y);
    y.normalize();
    Eigen::VectorXd r = op(y) - theta * y;
    project(r);
    if (invariant || r.norm() < opts.tolerance * std::max(1.0, std::abs(theta))) return {theta, y};
    v = y;
  }
  throw NumericalError("Lanczos did not converge within the restart budget");
}

namespace {

// Marshall-signed amplitudes are all positive for the ground state; the overall
// sign is chosen so that the signed sum is positive (or, for M > 2, so that the
// largest-magnitude amplitude is positive).
void fix_sign(Eigen::VectorXd& psi, const Basis& basis, bool gauged) {
  double ref = 0.0;
  if (basis.species() == 2) {
    for (std::size_t i = 0; i < basis.size(); ++i)
      ref += (gauged ? 1 : marshall_sign(basis.state(i))) * psi(static_cast<Eigen::Index>(i));
  } else {
    Eigen::Index imax = 0;
    psi.cwiseAbs().maxCoeff(&imax);
    ref = psi(imax);
  }
  if (ref < 0) psi = -psi;
}

}  // namespace

GroundStateSolution ground_state(std::shared_ptr<const Basis> basis, bool marshall_gauge, const SolverOptions& opts) {
  const ExchangeHamiltonian h(basis, marshall_gauge);
  const auto dim = static_cast<Eigen::Index>(h.dimension());
  GroundStateSolution out;
  out.basis = basis;
  out.gauged = marshall_gauge;

  if (h.dimension() <= opts.dense_limit) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.dense());
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    out.energy = es.eigenvalues()(0);
    out.first_excited = dim > 1 ? es.eigenvalues()(1) : out.energy;
    out.max_energy = es.eigenvalues()(dim - 1);
    out.amplitudes = es.eigenvectors().col(0);
    out.solver = "dense";
  } else {
    const auto& mat = h.matrix();
    auto op = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return mat * x; };
    auto neg = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return -(mat * x); };
    auto [e0, psi] = lanczos_lowest(op, dim, {}, opts);
    auto [e1, psi1] = lanczos_lowest(op, dim, {psi}, opts);
    auto [emin_neg, top] = lanczos_lowest(neg, dim, {}, opts);
    (void)psi1;
    (void)top;
    out.energy = e0;
    out.first_excited = e1;
    out.max_energy = -emin_neg;
    out.amplitudes = psi;
    out.solver = "lanczos";
  }

  out.amplitudes.normalize();
  fix_sign(out.amplitudes, *basis, marshall_gauge);
  out.residual = (h.apply(out.amplitudes) - out.energy * out.amplitudes).norm();
  if (out.residual > 1e-9)
    throw NumericalError("ground state residual " + std::to_string(out.residual) + " exceeds 1e-9");
  if (basis->species() == 2 && out.first_excited - out.energy < 1e-10)
    throw NumericalError("ground state is degenerate (gap below 1e-10)");
  return out;
}

GroundStateSolution ground_state(int sites, int species, bool marshall_gauge, const SolverOptions& opts) {
  return ground_state(std::make_shared<const Basis>(sites, species), marshall_gauge, opts);
}

ReducedDensityMatrix reduced_density_matrix(const GroundStateSolution& gs, int kernel) {
  const Basis& basis = *gs.basis;
  const int n = basis.sites();
  const int m = basis.species();
  if (kernel < 1 || kernel > n) throw InvalidArgument("subsystem size must satisfy 1 <= K <= N");
  const std::size_t dim = motif_space_size(m, kernel);
  if (dim > 4096) throw CapacityError("reduced density matrix M^K exceeds 4096");
  if ((n - kernel) * std::log2(static_cast<double>(m)) > 62.0)
    throw CapacityError("environment index does not fit in 64 bits");

  std::unordered_map<std::uint64_t, std::vector<std::pair<std::size_t, double>>> groups;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto st = basis.state(i);
    const std::size_t a = motif_index(st.first(static_cast<std::size_t>(kernel)), m);
    std::uint64_t env = 0;
    for (int j = kernel; j < n; ++j) env = env * static_cast<std::uint64_t>(m) + st[static_cast<std::size_t>(j)];
    groups[env].emplace_back(a, gs.amplitudes(static_cast<Eigen::Index>(i)));
  }
  ReducedDensityMatrix out{kernel, m, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))};
  for (const auto& [env, entries] : groups) {
    (void)env;
    for (const auto& [a, pa] : entries)
      for (const auto& [b, pb] : entries) out.rho(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += pa * pb;
  }
  return out;
}

MevTable exact_mev(const GroundStateSolution& gs, int kernel) {
  const Basis& basis = *gs.basis;
  if (kernel < 1 || kernel > basis.sites()) throw InvalidArgument("motif size must satisfy 1 <= K <= N");
  MevTable out;
  out.sites = basis.sites();
  out.species = basis.species();
  out.kernel = kernel;
  out.probability.assign(motif_space_size(basis.species(), kernel), 0.0);
  // diag(rho_K)[a] = sum of psi^2 over states whose first K sites read a.
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const double amp = gs.amplitudes(static_cast<Eigen::Index>(i));
    out.probability[motif_index(basis.state(i).first(static_cast<std::size_t>(kernel)), basis.species())] += amp * amp;
  }
  out.count = out.probability;
  for (double& c : out.count) c *= basis.sites();
  return out;
}

std::vector<double> entanglement_spectrum(const ReducedDensityMatrix& rdm) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rdm.rho, Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (lam > 1e-30) out.push_back(-std::log(lam));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t truncation_size(std::vector<double> weights, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("fraction must lie in (0, 1]");
  for (double w : weights)
    if (!(w >= 0.0)) throw InvalidArgument("weights must be nonnegative");
  std::sort(weights.begin(), weights.end(), std::greater<>());
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double goal = fraction * total * (1.0 - 1e-12);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (acc >= goal) return i + 1;
  }
  return weights.size();
}

std::size_t truncation_size_from_spectrum(const std::vector<double>& spectrum, double fraction) {
  std::vector<double> w(spectrum.size());
  std::transform(spectrum.begin(), spectrum.end(), w.begin(), [](double e) { return std::exp(-e); });
  return truncation_size(std::move(w), fraction);
}

Eigen::MatrixXd entanglement_hamiltonian(int kernel, int species) {
  const std::size_t dim = motif_space_size(species, kernel);
  if (dim > 4096) throw CapacityError("entanglement Hamiltonian M^K exceeds 4096");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t a = 0; a < dim; ++a) {
    const auto labels = motif_labels(a, species, kernel);
    for (int i = 1; i < kernel; ++i) {
      const double weight = static_cast<double>(i * (kernel - i)) / kernel;
      const auto l = static_cast<std::size_t>(i - 1);
      if (labels[l] == labels[l + 1]) {
        h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) += weight;
      } else {
        auto swapped = labels;
        std::swap(swapped[l], swapped[l + 1]);
        h(static_cast<Eigen::Index>(motif_index(swapped, species)), static_cast<Eigen::Index>(a)) += weight;
      }
    }
  }
  return h;
}

std::vector<double> cft_mev(int kernel, double beta, int species) {
  if (!(beta > 0.0)) throw InvalidArgument("inverse temperature must be positive");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(entanglement_hamiltonian(kernel, species));
  const Eigen::VectorXd& ev = es.eigenvalues();
  const Eigen::VectorXd boltz = (-beta * (ev.array() - ev.minCoeff())).exp();
  const Eigen::VectorXd diag = es.eigenvectors().cwiseAbs2() * boltz;
  const double z = boltz.sum();
  std::vector<double> out(static_cast<std::size_t>(diag.size()));
  for (Eigen::Index i = 0; i < diag.size(); ++i) out[static_cast<std::size_t>(i)] = diag(i) / z;
  return out;
}

BetaCalibration calibrate_beta(int kernel, const std::vector<double>& reference, int species, double lo, double hi) {
  if (!(lo > 0.0 && hi > lo)) throw InvalidArgument("beta bracket must satisfy 0 < lo < hi");
  if (reference.size() != motif_space_size(species, kernel)) throw InvalidArgument("reference has the wrong length");
  auto objective = [&](double x) {
    const auto model = cft_mev(kernel, std::exp(x), species);
    double s = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) s += (model[i] - reference[i]) * (model[i] - reference[i]);
    return s;
  };
  double a = std::log(lo);
  double b = std::log(hi);

  double fmin = objective(a);
  double fmax = fmin;
  for (int i = 1; i <= 16; ++i) {
    const double f = objective(a + (b - a) * i / 16.0);
    fmin = std::min(fmin, f);
    fmax = std::max(fmax, f);
  }
  if (fmax - fmin <= 1e-14 * std::max(1.0, fmax)) throw NumericalError("beta calibration objective is flat");

  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > 1e-10) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = objective(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {std::exp(x), objective(x)};
}

std::vector<double> class_masses(const GroundStateSolution& gs, const EquivalenceClassPartition& part) {
  if (part.class_of.size() != gs.basis->size()) throw InvalidArgument("partition does not match the basis");
  std::vector<double> mass(part.size(), 0.0);
  for (std::size_t i = 0; i < part.class_of.size(); ++i) {
    const double a = gs.amplitudes(static_cast<Eigen::Index>(i));
    mass[part.class_of[i]] += a * a;
  }
  std::sort(mass.begin(), mass.end(), std::greater<>());
  return mass;
}

std::size_t cumulative_class_mass(const GroundStateSolution& gs, const EquivalenceClassPartition& part,
                                  double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InvalidArgument("threshold must lie in (0, 1]");
  const auto mass = class_masses(gs, part);
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    acc += mass[i];
    if (acc >= (threshold - 1e-12) * total) return i + 1;
  }
  return mass.size();
}

double gap_estimate(const GroundStateSolution& gs) {
  return (gs.max_energy - gs.energy) / static_cast<double>(gs.basis->size());
}

}  // namespace motifcnn
