#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "motifcnn/error.hpp"
#include "motifcnn/exact.hpp"
#include "motifcnn/rng.hpp"
#include "motifcnn/vmc.hpp"

using namespace motifcnn;

namespace {

CnnParams draw(int k, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  CnnParams p = CnnParams::zeros(k, 2);
  for (double& x : p.w) x = u(rng);
  p.b = u(rng);
  p.v = 1.0 + u(rng);
  return p;
}

Eigen::VectorXd amplitudes(const CnnParams& p, const Basis& b) {
  Eigen::VectorXd psi(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) psi(static_cast<Eigen::Index>(i)) = std::exp(cnn_logpsi(p, b.state(i)));
  return psi;
}

double rayleigh(const CnnParams& p, const std::shared_ptr<const Basis>& b) {
  const ExchangeHamiltonian h(b, true);
  const Eigen::VectorXd psi = amplitudes(p, *b);
  return psi.dot(h.apply(psi)) / psi.squaredNorm();
}

}  // namespace

TEST_CASE("local energy on simple states") {
  const CnnParams flat = CnnParams::zeros(2, 2);
  CHECK(local_energy(flat, SpinConfig::from_string("0101", 2).sites()) == doctest::Approx(-4.0));
  CHECK(local_energy(flat, SpinConfig::from_string("0011", 2).sites()) == doctest::Approx(0.0));
  CHECK_THROWS_AS(local_energy(CnnParams::zeros(2, 3), SpinConfig::from_string("012012", 3).sites()), InvalidArgument);
}

TEST_CASE("local energy agrees with the matrix element ratio") {
  std::mt19937_64 rng(21);
  auto b = std::make_shared<const Basis>(8, 2);
  const ExchangeHamiltonian h(b, true);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = draw(1 + trial % 4, rng);
    const Eigen::VectorXd psi = amplitudes(p, *b);
    const Eigen::VectorXd hpsi = h.apply(psi);
    for (std::size_t i = 0; i < b->size(); ++i)
      CHECK(local_energy(p, b->state(i)) ==
            doctest::Approx(hpsi(static_cast<Eigen::Index>(i)) / psi(static_cast<Eigen::Index>(i))).epsilon(1e-11));
  }
}

TEST_CASE("full-basis estimator equals the Rayleigh quotient") {
  std::mt19937_64 rng(22);
  auto b = std::make_shared<const Basis>(8, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = draw(3, rng);
    CHECK(std::abs(exact_energy_gradient(p, *b).energy - rayleigh(p, b)) < 1e-10);
  }
}

TEST_CASE("exact gradient matches finite differences of the energy") {
  std::mt19937_64 rng(23);
  auto b = std::make_shared<const Basis>(8, 2);
  const double h = 1e-5;
  for (int trial = 0; trial < 3; ++trial) {
    const auto p = draw(3, rng);
    const auto g = exact_energy_gradient(p, *b).gradient;
    const auto flat = p.flatten();
    for (std::size_t q = 0; q < flat.size(); ++q) {
      auto up = flat;
      auto dn = flat;
      up[q] += h;
      dn[q] -= h;
      CnnParams pu = p;
      CnnParams pd = p;
      pu.unflatten(up);
      pd.unflatten(dn);
      const double fd = (rayleigh(pu, b) - rayleigh(pd, b)) / (2 * h);
      CHECK(std::abs(fd - g[q]) < 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("sampler preserves magnetization and matches psi squared") {
  std::mt19937_64 rng(24);
  const auto p = draw(2, rng, 0.8);
  const Basis b(6, 2);
  SamplerConfig cfg;
  cfg.n_samples = 40000;
  cfg.seed = 99;
  const auto samples = metropolis_chain(p, 6, cfg);
  REQUIRE(samples.size() == 40000);
  std::vector<double> counts(b.size(), 0.0);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    int ones = 0;
    for (Label l : samples.state(k)) ones += l;
    CHECK(ones == 3);
    counts[b.index_of(samples.state(k))] += 1.0;
  }
  const Eigen::VectorXd psi = amplitudes(p, b);
  const double norm = psi.squaredNorm();
  double chi2 = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double expected = samples.size() * psi(static_cast<Eigen::Index>(i)) * psi(static_cast<Eigen::Index>(i)) / norm;
    chi2 += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  // 19 degrees of freedom; thinning by N leaves weak autocorrelation.
  CHECK(chi2 < 60.0);
  CHECK(samples.acceptance > 0.0);
  CHECK(samples.acceptance <= 1.0);
}

TEST_CASE("sampled energy lies within error bars") {
  std::mt19937_64 rng(25);
  auto b = std::make_shared<const Basis>(8, 2);
  const auto p = draw(3, rng);
  SamplerConfig cfg;
  cfg.n_samples = 20000;
  cfg.seed = 5;
  const auto est = energy_gradient(p, metropolis_chain(p, 8, cfg));
  CHECK(std::abs(est.energy - rayleigh(p, b)) < 4 * est.std_error);
  CHECK(est.std_error > 0.0);
}

TEST_CASE("uniform reweighting leaves the estimate unchanged") {
  std::mt19937_64 rng(26);
  const auto p = draw(3, rng);
  SamplerConfig cfg;
  cfg.n_samples = 200;
  const auto s = metropolis_chain(p, 8, cfg);
  const auto a = energy_gradient(p, s);
  const auto c = energy_gradient(p, s, std::vector<double>(200, 3.5));
  CHECK(a.energy == doctest::Approx(c.energy));
  for (std::size_t q = 0; q < a.gradient.size(); ++q) CHECK(a.gradient[q] == doctest::Approx(c.gradient[q]));
  CHECK_THROWS_AS(energy_gradient(p, s, std::vector<double>(3, 1.0)), InvalidArgument);
}

TEST_CASE("convergence iteration") {
  const std::vector<double> constant(40, -5.0);
  CHECK(convergence_iteration(constant, 500) == 15);
  std::vector<double> ramp(100);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = -1.0 - static_cast<double>(i);
  CHECK(convergence_iteration(ramp, 500) == 500);
  std::vector<double> settle(60);
  for (std::size_t i = 0; i < settle.size(); ++i) settle[i] = i < 30 ? -static_cast<double>(i) : -30.0;
  // Rolling mean of the last 10 is constant from t = 40; t - 5 must also be >= 40.
  CHECK(convergence_iteration(settle, 500) == 45);
  CHECK(convergence_iteration(std::vector<double>(5, 1.0), 77) == 77);
}

TEST_CASE("zero initialization is stationary for SymForce training") {
  TrainConfig cfg;
  cfg.sites = 8;
  cfg.kernel = 2;
  cfg.max_iter = 3;
  cfg.n_opt = 2;
  CnnParams zero = CnnParams::zeros(2, 2);
  cfg.initial = zero;
  SamplerConfig s;
  s.n_samples = 100;
  const auto traj = train(cfg, s);
  CHECK(traj.final_params.flatten() == zero.flatten());
  const double exact = rayleigh(zero, std::make_shared<const Basis>(8, 2));
  for (const auto& r : traj.records) CHECK(std::abs(r.energy - exact) < 5 * r.std_error);
}

TEST_CASE("SymForce trajectory keeps the grand sum at zero") {
  TrainConfig cfg;
  cfg.sites = 8;
  cfg.kernel = 3;
  cfg.max_iter = 20;
  cfg.n_opt = 3;
  cfg.seed = 4;
  SamplerConfig s;
  s.n_samples = 200;
  const auto traj = train(cfg, s);
  REQUIRE(traj.records.size() == 20);
  for (const auto& r : traj.records) CHECK(std::abs(r.grandsum) < 1e-10);
  CHECK(std::abs(grandsum(traj.final_params)) < 1e-10);

  cfg.algorithm = Algorithm::Original;
  const auto orig = train(cfg, s);
  CHECK(std::abs(orig.records.front().grandsum) > 0.0);
}

TEST_CASE("training is reproducible from the seed") {
  TrainConfig cfg;
  cfg.sites = 8;
  cfg.kernel = 2;
  cfg.max_iter = 10;
  cfg.seed = 17;
  SamplerConfig s;
  s.n_samples = 100;
  const auto a = train(cfg, s);
  const auto b = train(cfg, s);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].energy == b.records[i].energy);
  CHECK(a.final_params.flatten() == b.final_params.flatten());
  cfg.seed = 18;
  CHECK(train(cfg, s).final_params.flatten() != a.final_params.flatten());
}

TEST_CASE("substreams are independent and deterministic") {
  auto a = substream(7, "init");
  auto b = substream(7, "init");
  auto c = substream(7, "sampler");
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("random initialization ranges") {
  auto rng = substream(1, "init");
  for (int t = 0; t < 100; ++t) {
    const auto p = random_init(4, 2, rng);
    for (double w : p.w) CHECK(std::abs(w) <= 0.1);
    CHECK(std::abs(p.b) <= 0.1);
    CHECK(p.v >= 0.5);
    CHECK(p.v <= 1.5);
  }
}

TEST_CASE("update directions respect the chain symmetries") {
  std::mt19937_64 rng(27);
  const Basis b(8, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = project_grandsum(draw(3, rng));
    const auto dev = invariant_dynamics_check(p, b);
    CHECK(dev.translation < 1e-9);
    CHECK(dev.relabel < 1e-9);
  }
}

TEST_CASE("algorithm names") {
  for (auto a : {Algorithm::Original, Algorithm::SymForceInit, Algorithm::SymForceTraj})
    CHECK(algorithm_from_string(to_string(a)) == a);
  CHECK_THROWS_AS(algorithm_from_string("sgd"), InvalidArgument);
}
