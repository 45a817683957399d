#include "motifcnn/vmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "motifcnn/error.hpp"
#include "motifcnn/rng.hpp"

namespace motifcnn {

namespace {

double relu(double z) { return z > 0.0 ? z : 0.0; }

int wrap(int a, int n) {
  const int r = a % n;
  return r < 0 ? r + n : r;
}

// Window starts whose K-window contains any of the given sites.
void covering_windows(std::initializer_list<int> sites, int kernel, int n, std::vector<int>& out) {
  out.clear();
  for (int s : sites)
    for (int d = 0; d < kernel; ++d) out.push_back(wrap(s - d, n));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

void require_binary_chain(int species) {
  if (species != 2) throw InvalidArgument("local energy uses the Marshall gauge, defined for M = 2 only");
}

}  // namespace

MetropolisSampler::MetropolisSampler(const CnnParams& p, int sites, std::mt19937_64& rng, bool adjacent_only)
    : params_(p), rng_(&rng), adjacent_only_(adjacent_only) {
  if (sites % p.species != 0 || sites < p.species) throw InvalidArgument("site count N must be divisible by M");
  if (p.kernel > sites) throw InvalidArgument("kernel size exceeds the chain length");
  state_.reserve(static_cast<std::size_t>(sites));
  for (int l = 0; l < p.species; ++l)
    state_.insert(state_.end(), static_cast<std::size_t>(sites / p.species), static_cast<Label>(l));
  std::shuffle(state_.begin(), state_.end(), *rng_);
  z_.resize(static_cast<std::size_t>(sites));
  set_params(p);
}

void MetropolisSampler::set_params(const CnnParams& p) {
  params_ = p;
  logpsi_ = 0.0;
  for (int i = 0; i < static_cast<int>(state_.size()); ++i) {
    z_[static_cast<std::size_t>(i)] = window_preactivation(params_, state_, i);
    logpsi_ += relu(z_[static_cast<std::size_t>(i)]);
  }
  logpsi_ *= params_.v;
}

double MetropolisSampler::refresh_windows(std::span<const int> starts) {
  double delta = 0.0;
  for (int w : starts) {
    const auto k = static_cast<std::size_t>(w);
    const double z = window_preactivation(params_, state_, w);
    delta += relu(z) - relu(z_[k]);
    z_[k] = z;
  }
  return params_.v * delta;
}

bool MetropolisSampler::step() {
  const int n = static_cast<int>(state_.size());
  int i = 0;
  int j = 0;
  if (adjacent_only_) {
    i = std::uniform_int_distribution<int>(0, n - 1)(*rng_);
    j = (i + 1) % n;
    if (state_[static_cast<std::size_t>(i)] == state_[static_cast<std::size_t>(j)]) return false;
  } else {
    i = std::uniform_int_distribution<int>(0, n - 1)(*rng_);
    const Label li = state_[static_cast<std::size_t>(i)];
    const int unlike = n - n / params_.species;
    int r = std::uniform_int_distribution<int>(0, unlike - 1)(*rng_);
    for (j = 0; j < n; ++j) {
      if (state_[static_cast<std::size_t>(j)] == li) continue;
      if (r-- == 0) break;
    }
  }
  covering_windows({i, j}, params_.kernel, n, touched_);
  saved_.resize(touched_.size());
  for (std::size_t t = 0; t < touched_.size(); ++t) saved_[t] = z_[static_cast<std::size_t>(touched_[t])];
  std::swap(state_[static_cast<std::size_t>(i)], state_[static_cast<std::size_t>(j)]);
  const double delta = refresh_windows(touched_);
  const bool accept =
      delta >= 0.0 || std::uniform_real_distribution<double>(0.0, 1.0)(*rng_) < std::exp(2.0 * delta);
  if (accept) {
    logpsi_ += delta;
    return true;
  }
  std::swap(state_[static_cast<std::size_t>(i)], state_[static_cast<std::size_t>(j)]);
  for (std::size_t t = 0; t < touched_.size(); ++t) z_[static_cast<std::size_t>(touched_[t])] = saved_[t];
  return false;
}

SampleSet draw_samples(MetropolisSampler& chain, int sites, int species, const SamplerConfig& cfg) {
  if (cfg.n_samples < 1) throw InvalidArgument("n_samples must be at least 1");
  const int burn = cfg.burn_in < 0 ? 10 * sites : cfg.burn_in;
  const int thin = cfg.thinning < 0 ? sites : std::max(cfg.thinning, 1);
  SampleSet out;
  out.sites = sites;
  out.species = species;
  out.data.reserve(static_cast<std::size_t>(cfg.n_samples) * static_cast<std::size_t>(sites));
  std::size_t accepted = 0;
  std::size_t proposed = 0;
  for (int t = 0; t < burn; ++t) accepted += chain.step() ? 1 : 0;
  proposed += static_cast<std::size_t>(burn);
  for (int k = 0; k < cfg.n_samples; ++k) {
    for (int t = 0; t < thin; ++t) accepted += chain.step() ? 1 : 0;
    proposed += static_cast<std::size_t>(thin);
    const auto st = chain.state();
    out.data.insert(out.data.end(), st.begin(), st.end());
  }
  out.acceptance = proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  return out;
}

SampleSet metropolis_chain(const CnnParams& p, int sites, const SamplerConfig& cfg) {
  auto rng = substream(cfg.seed, "sampler");
  MetropolisSampler chain(p, sites, rng, cfg.adjacent_only);
  return draw_samples(chain, sites, p.species, cfg);
}

double local_energy(const CnnParams& p, std::span<const Label> state) {
  require_binary_chain(p.species);
  const int n = static_cast<int>(state.size());
  if (p.kernel > n) throw InvalidArgument("kernel size exceeds the chain length");
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = window_preactivation(p, state, i);

  std::vector<int> windows;
  double energy = 0.0;
  for (int i = 0; i < n; ++i) {
    const int a = i;
    const int b = (i + 1) % n;
    const Label la = state[static_cast<std::size_t>(a)];
    const Label lb = state[static_cast<std::size_t>(b)];
    if (la == lb) {
      energy += 1.0;
      continue;
    }
    covering_windows({a, b}, p.kernel, n, windows);
    double delta = 0.0;
    for (int w : windows) {
      double zn = p.b;
      for (int j = 0; j < p.kernel; ++j) {
        const int site = (w + j) % n;
        const Label l = site == a ? lb : site == b ? la : state[static_cast<std::size_t>(site)];
        zn += p.weight(j, l);
      }
      delta += relu(zn) - relu(z[static_cast<std::size_t>(w)]);
    }
    // Gauged off-diagonal element is -1.
    energy -= std::exp(p.v * delta);
  }
  return energy;
}

namespace {

EnergyEstimate covariance_estimate(const CnnParams& p, std::span<const double> energies,
                                   const std::vector<std::vector<double>>& grads, std::span<const double> w,
                                   bool exact) {
  const std::size_t n = energies.size();
  const std::size_t d = p.param_count();
  EnergyEstimate est;
  double mean_e = 0.0;
  std::vector<double> mean_o(d, 0.0);
  std::vector<double> mean_eo(d, 0.0);
  double sum_w2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mean_e += w[k] * energies[k];
    sum_w2 += w[k] * w[k];
    for (std::size_t q = 0; q < d; ++q) {
      mean_o[q] += w[k] * grads[k][q];
      mean_eo[q] += w[k] * energies[k] * grads[k][q];
    }
  }
  est.energy = mean_e;
  est.gradient.resize(d);
  for (std::size_t q = 0; q < d; ++q) est.gradient[q] = 2.0 * (mean_eo[q] - mean_e * mean_o[q]);
  if (!exact) {
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) var += w[k] * (energies[k] - mean_e) * (energies[k] - mean_e);
    const double ess = 1.0 / sum_w2;
    est.std_error = ess > 1.0 ? std::sqrt(var / (ess - 1.0)) : std::numeric_limits<double>::infinity();
  }
  return est;
}

}  // namespace

EnergyEstimate energy_gradient(const CnnParams& p, const SampleSet& samples, std::span<const double> weights) {
  const std::size_t n = samples.size();
  if (n < 2) throw InvalidArgument("energy gradient needs at least 2 samples");
  if (!weights.empty() && weights.size() != n) throw InvalidArgument("one weight per sample required");
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  if (!weights.empty()) {
    double total = 0.0;
    for (double x : weights) total += x;
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("sample weights do not normalize");
    for (std::size_t k = 0; k < n; ++k) w[k] = weights[k] / total;
  }
  std::vector<double> energies(n);
  std::vector<std::vector<double>> grads(n);
  for (std::size_t k = 0; k < n; ++k) {
    energies[k] = local_energy(p, samples.state(k));
    grads[k] = logpsi_gradient(p, samples.state(k));
  }
  return covariance_estimate(p, energies, grads, w, false);
}

EnergyEstimate exact_energy_gradient(const CnnParams& p, const Basis& basis) {
  const std::size_t n = basis.size();
  std::vector<double> lp(n);
  for (std::size_t k = 0; k < n; ++k) lp[k] = cnn_logpsi(p, basis.state(k));
  const double top = *std::max_element(lp.begin(), lp.end());
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += (w[k] = std::exp(2.0 * (lp[k] - top)));
  for (double& x : w) x /= total;
  std::vector<double> energies(n);
  std::vector<std::vector<double>> grads(n);
  for (std::size_t k = 0; k < n; ++k) {
    energies[k] = local_energy(p, basis.state(k));
    grads[k] = logpsi_gradient(p, basis.state(k));
  }
  return covariance_estimate(p, energies, grads, w, true);
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Original:
      return "original";
    case Algorithm::SymForceInit:
      return "symforce-init";
    case Algorithm::SymForceTraj:
      return "symforce-traj";
  }
  return "unknown";
}

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "original") return Algorithm::Original;
  if (name == "symforce-init") return Algorithm::SymForceInit;
  if (name == "symforce-traj") return Algorithm::SymForceTraj;
  throw InvalidArgument("unknown algorithm '" + std::string(name) + "'");
}

CnnParams random_init(int kernel, int species, std::mt19937_64& rng) {
  CnnParams p = CnnParams::zeros(kernel, species);
  std::uniform_real_distribution<double> small(-0.1, 0.1);
  std::uniform_real_distribution<double> out(0.5, 1.5);
  for (double& x : p.w) x = small(rng);
  p.b = small(rng);
  p.v = out(rng);
  return p;
}

namespace {

bool finite_params(const CnnParams& p) {
  if (!std::isfinite(p.v) || !std::isfinite(p.b)) return false;
  return std::all_of(p.w.begin(), p.w.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

TrainingTrajectory train(const TrainConfig& cfg, const SamplerConfig& sampler) {
  if (!(cfg.learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (cfg.n_opt < 1) throw InvalidArgument("n_opt must be at least 1");
  if (cfg.max_iter < 1) throw InvalidArgument("max_iter must be at least 1");
  require_binary_chain(cfg.species);

  auto init_rng = substream(cfg.seed, "init");
  auto sample_rng = substream(cfg.seed, "sampler");

  CnnParams p = cfg.initial ? *cfg.initial : random_init(cfg.kernel, cfg.species, init_rng);
  if (p.kernel != cfg.kernel || p.species != cfg.species) throw InvalidArgument("initial parameters do not match K, M");
  if (cfg.algorithm != Algorithm::Original) p = project_grandsum(p);

  TrainingTrajectory traj;
  traj.max_iter = cfg.max_iter;
  traj.initial_params = p;
  MetropolisSampler chain(p, cfg.sites, sample_rng, sampler.adjacent_only);
  const double limit = 1e3 * cfg.sites;

  auto update = [&](const EnergyEstimate& est) {
    auto flat = p.flatten();
    for (std::size_t q = 0; q < flat.size(); ++q) flat[q] -= cfg.learning_rate * est.gradient[q];
    p.unflatten(flat);
    if (cfg.algorithm == Algorithm::SymForceTraj) p = project_grandsum(p);
  };

  for (int it = 1; it <= cfg.max_iter; ++it) {
    chain.set_params(p);
    const SampleSet batch = draw_samples(chain, cfg.sites, cfg.species, sampler);
    std::vector<double> base(batch.size());
    for (std::size_t k = 0; k < batch.size(); ++k) base[k] = cnn_logpsi(p, batch.state(k));

    EnergyEstimate est = energy_gradient(p, batch);
    traj.records.push_back({it, est.energy, est.std_error, grandsum(p), batch.acceptance});
    if (!std::isfinite(est.energy) || std::abs(est.energy) > limit) {
      traj.diverged = true;
      traj.message = "energy estimate left the bound |E| <= 1e3 N at iteration " + std::to_string(it);
      break;
    }
    update(est);
    for (int step = 1; step < cfg.n_opt && finite_params(p); ++step) {
      std::vector<double> weights(batch.size());
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < batch.size(); ++k) {
        weights[k] = 2.0 * (cnn_logpsi(p, batch.state(k)) - base[k]);
        top = std::max(top, weights[k]);
      }
      for (double& x : weights) x = std::exp(x - top);
      est = energy_gradient(p, batch, weights);
      if (!std::isfinite(est.energy)) break;
      update(est);
    }
    if (!finite_params(p)) {
      traj.diverged = true;
      traj.message = "parameters became non-finite at iteration " + std::to_string(it);
      break;
    }
    if (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0) traj.checkpoints.emplace_back(it, p);
  }
  traj.final_params = p;
  return traj;
}

int convergence_iteration(std::span<const double> energies, int max_iter, int window, int lag, double tolerance) {
  if (window < 1 || lag < 1) throw InvalidArgument("window and lag must be positive");
  const int n = static_cast<int>(energies.size());
  // roll[t] = mean of energies t-window+1 .. t (1-based), defined for t >= window.
  std::vector<double> roll(static_cast<std::size_t>(n + 1), 0.0);
  double acc = 0.0;
  for (int t = 1; t <= n; ++t) {
    acc += energies[static_cast<std::size_t>(t - 1)];
    if (t > window) acc -= energies[static_cast<std::size_t>(t - 1 - window)];
    roll[static_cast<std::size_t>(t)] = acc / window;
  }
  for (int t = window + lag; t <= n; ++t) {
    const double now = roll[static_cast<std::size_t>(t)];
    const double before = roll[static_cast<std::size_t>(t - lag)];
    if (std::abs(now - before) < tolerance * std::abs(before)) return t;
  }
  return max_iter;
}

int convergence_iteration(const TrainingTrajectory& traj, int window, int lag, double tolerance) {
  std::vector<double> e;
  e.reserve(traj.records.size());
  for (const auto& r : traj.records) e.push_back(r.energy);
  return convergence_iteration(e, traj.max_iter, window, lag, tolerance);
}

DynamicsDeviation invariant_dynamics_check(const CnnParams& p, const Basis& basis) {
  if (basis.species() != 2) throw InvalidArgument("relabel pairs are checked for M = 2");
  const auto est = exact_energy_gradient(p, basis);
  std::vector<double> change(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const auto o = logpsi_gradient(p, basis.state(k));
    double d = 0.0;
    for (std::size_t q = 0; q < o.size(); ++q) d -= o[q] * est.gradient[q];
    change[k] = d;
  }
  const auto shift = SymmetryOp::translate(1);
  const auto swap = SymmetryOp::relabel({1, 0});
  std::vector<Label> img(static_cast<std::size_t>(basis.sites()));
  DynamicsDeviation dev;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    shift.apply(basis.state(k), img);
    dev.translation = std::max(dev.translation, std::abs(change[k] - change[basis.index_of(img)]));
    swap.apply(basis.state(k), img);
    dev.relabel = std::max(dev.relabel, std::abs(change[k] - change[basis.index_of(img)]));
  }
  return dev;
}

}  // namespace motifcnn
