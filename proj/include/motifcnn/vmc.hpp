#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "motifcnn/ansatz.hpp"
#include "motifcnn/spinchain.hpp"

namespace motifcnn {

struct SamplerConfig {
  int n_samples = 1000;
  int burn_in = -1;   // proposals; negative means 10 N
  int thinning = -1;  // proposals between samples; negative means N
  bool adjacent_only = false;
  std::uint64_t seed = 0;
};

/// Flat list of sampled states, n x N.
struct SampleSet {
  int sites = 0;
  int species = 0;
  std::vector<Label> data;
  double acceptance = 0.0;

  std::size_t size() const { return sites == 0 ? 0 : data.size() / static_cast<std::size_t>(sites); }
  std::span<const Label> state(std::size_t i) const {
    return {data.data() + i * static_cast<std::size_t>(sites), static_cast<std::size_t>(sites)};
  }
};

/// Metropolis chain over the zero-magnetization sector targeting psi^2. Each
/// proposal swaps two sites with different labels (or, with adjacent_only, the
/// two sites of a uniformly chosen bond), so the magnetization never changes.
class MetropolisSampler {
 public:
  MetropolisSampler(const CnnParams& p, int sites, std::mt19937_64& rng, bool adjacent_only = false);

  void set_params(const CnnParams& p);
  /// One proposal; returns true when accepted.
  bool step();
  std::span<const Label> state() const { return state_; }
  double logpsi() const { return logpsi_; }

 private:
  double refresh_windows(std::span<const int> starts);

  CnnParams params_;
  std::mt19937_64* rng_;
  bool adjacent_only_;
  std::vector<Label> state_;
  std::vector<double> z_;
  double logpsi_ = 0.0;
  std::vector<int> touched_;
  std::vector<double> saved_;
};

SampleSet metropolis_chain(const CnnParams& p, int sites, const SamplerConfig& cfg);
/// Continues an existing chain; used by the training loop.
SampleSet draw_samples(MetropolisSampler& chain, int sites, int species, const SamplerConfig& cfg);

/// n_like(s) - sum over unlike bonds of psi(swap_i s)/psi(s) (Marshall gauge, M = 2).
double local_energy(const CnnParams& p, std::span<const Label> state);

struct EnergyEstimate {
  double energy = 0.0;
  double std_error = 0.0;
  std::vector<double> gradient;  // flat layout [v, w, b]
};

/// 2 [mean(E O) - mean(E) mean(O)] with O = d ln psi; optional per-sample
/// weights (normalized internally) reweight samples drawn under other parameters.
EnergyEstimate energy_gradient(const CnnParams& p, const SampleSet& samples,
                               std::span<const double> weights = {});

/// Same estimator summed over the full basis with weights psi^2.
EnergyEstimate exact_energy_gradient(const CnnParams& p, const Basis& basis);

enum class Algorithm { Original, SymForceInit, SymForceTraj };

std::string to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);

struct TrainConfig {
  Algorithm algorithm = Algorithm::SymForceTraj;
  int sites = 16;
  int species = 2;
  int kernel = 4;
  double learning_rate = 0.01;
  int n_opt = 10;      // update steps per sampled batch
  int max_iter = 500;  // sampled batches
  std::uint64_t seed = 0;
  int checkpoint_every = 0;
  std::optional<CnnParams> initial;  // overrides the random initialization
};

struct IterationRecord {
  int iteration = 0;  // 1-based
  double energy = 0.0;
  double std_error = 0.0;
  double grandsum = 0.0;
  double acceptance = 0.0;
};

struct TrainingTrajectory {
  std::vector<IterationRecord> records;
  std::vector<std::pair<int, CnnParams>> checkpoints;
  CnnParams initial_params;
  CnnParams final_params;
  bool diverged = false;
  std::string message;
  int max_iter = 0;
};

/// w, b ~ U[-0.1, 0.1], v ~ U[0.5, 1.5].
CnnParams random_init(int kernel, int species, std::mt19937_64& rng);

/// One iteration draws n_samples states and takes n_opt gradient-descent steps on
/// them; steps after the first reweight the batch by psi_new^2 / psi_old^2.
/// SymForceInit projects once after initialization; SymForceTraj after every step.
TrainingTrajectory train(const TrainConfig& cfg, const SamplerConfig& sampler);

/// First 1-based iteration t at which the rolling mean over `window` energies
/// changed by less than `tolerance` relative to its value `lag` iterations
/// earlier; max_iter if that never happens.
int convergence_iteration(std::span<const double> energies, int max_iter, int window = 10, int lag = 5,
                          double tolerance = 1e-4);
int convergence_iteration(const TrainingTrajectory& traj, int window = 10, int lag = 5, double tolerance = 1e-4);

struct DynamicsDeviation {
  double translation = 0.0;
  double relabel = 0.0;
};

/// Applies one full-batch gradient step direction d ln psi(s) = -O(s)·g and
/// returns the largest difference between orbit partners (s, T s) and (s, L s).
DynamicsDeviation invariant_dynamics_check(const CnnParams& p, const Basis& basis);

}  // namespace motifcnn
