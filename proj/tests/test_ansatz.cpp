#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "motifcnn/ansatz.hpp"
#include "motifcnn/error.hpp"
#include "motifcnn/exact.hpp"

using namespace motifcnn;

namespace {

CnnParams random_params(int k, int m, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  CnnParams p = CnnParams::zeros(k, m);
  for (double& x : p.w) x = u(rng);
  p.b = u(rng);
  p.v = u(rng);
  return p;
}

// Direct evaluation from the one-hot layout, no shared helpers.
double naive_logpsi(const CnnParams& p, const std::vector<Label>& s) {
  const std::size_t n = s.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double z = p.b;
    for (int j = 0; j < p.kernel; ++j)
      for (int l = 0; l < p.species; ++l)
        z += p.w[static_cast<std::size_t>(j * p.species + l)] * (s[(i + static_cast<std::size_t>(j)) % n] == l ? 1.0 : 0.0);
    total += std::max(z, 0.0);
  }
  return p.v * total;
}

}  // namespace

TEST_CASE("flat parameter layout round-trips") {
  std::mt19937_64 rng(1);
  const auto p = random_params(3, 2, rng);
  const auto flat = p.flatten();
  REQUIRE(flat.size() == 8);
  CHECK(flat[0] == p.v);
  CHECK(flat[1] == p.w[0]);
  CHECK(flat[7] == p.b);
  CnnParams q = CnnParams::zeros(3, 2);
  q.unflatten(flat);
  CHECK(q.flatten() == flat);
}

TEST_CASE("CNN log amplitude") {
  std::mt19937_64 rng(2);
  const Basis b(8, 2);
  CnnParams zero_v = random_params(3, 2, rng);
  zero_v.v = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(cnn_logpsi(zero_v, b.state(i)) == 0.0);

  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(1 + trial % 5, 2, rng);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::vector<Label> s(b.state(i).begin(), b.state(i).end());
      CHECK(cnn_logpsi(p, s) == doctest::Approx(naive_logpsi(p, s)).epsilon(1e-12));
      for (int k = 1; k < 8; ++k) {
        const auto t = SymmetryOp::translate(k).apply(b.config(i));
        CHECK(std::abs(cnn_logpsi(p, t) - cnn_logpsi(p, s)) <= 1e-12 * (1.0 + std::abs(cnn_logpsi(p, s))));
      }
    }
  }
}

TEST_CASE("motif form equals the direct sum") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick_k(1, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = trial % 3 == 0 ? 3 : 2;
    const int n = m == 3 ? 9 : 12;
    const Basis b(n, m);
    const auto p = random_params(pick_k(rng), m, rng);
    const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, b.size() - 1)(rng);
    const double direct = cnn_logpsi(p, b.state(idx));
    const double form = cnn_logpsi_motif_form(p, motif_vector(b.state(idx), m, p.kernel));
    CHECK(std::abs(direct - form) <= 1e-10 * (1.0 + std::abs(direct)));
  }
  const auto p = random_params(3, 2, rng);
  CHECK(cnn_logpsi_motif_form(p, std::vector<std::int32_t>(8, 0)) == 0.0);
  std::vector<std::int32_t> single(8, 0);
  single[5] = 10;
  CHECK(cnn_logpsi_motif_form(p, single) == doctest::Approx(10 * p.v * motif_activations(p)[5]));
  CHECK_THROWS_AS(cnn_logpsi_motif_form(p, std::vector<std::int32_t>(4, 0)), InvalidArgument);
}

TEST_CASE("CPS embedding reproduces the CNN") {
  std::mt19937_64 rng(4);
  const Basis b(10, 2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_params(4, 2, rng);
    const auto cps = cps_from_cnn(p);
    for (std::size_t i = 0; i < b.size(); ++i) {
      const auto mv = motif_vector(b.state(i), 2, 4);
      CHECK(std::abs(cps_logpsi(cps, mv) - cnn_logpsi(p, b.state(i))) <= 1e-10 * (1.0 + std::abs(cnn_logpsi(p, b.state(i)))));
      auto doubled = mv;
      for (auto& x : doubled) x *= 2;
      CHECK(cps_logpsi(cps, doubled) == doctest::Approx(2 * cps_logpsi(cps, mv)));
    }
  }
  CpsParams zero{2, 2, std::vector<double>(4, 0.0)};
  CHECK(cps_logpsi(zero, std::vector<std::int32_t>{1, 2, 3, 4}) == 0.0);
}

TEST_CASE("MaxEnt evaluation") {
  const Basis b(8, 2);
  MaxEntParams m{2, 2, independent_operator_set(2), {0.0, 0.0}, 0.0};
  normalize(m, b);
  CHECK(m.log_z == doctest::Approx(std::log(std::sqrt(70.0))));
  double norm = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) norm += std::exp(2 * maxent_logpsi(m, motif_vector(b.state(i), 2, 2)));
  CHECK(norm == doctest::Approx(1.0));

  MaxEntParams q{3, 2, independent_operator_set(3), {0.3, -0.2, 0.5, 0.1}, 0.0};
  CpsParams c{3, 2, std::vector<double>(8, 0.0)};
  for (std::size_t i = 0; i < q.operators.size(); ++i) c.coefficients[q.operators[i]] = q.lambdas[i];
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto mv = motif_vector(b.state(i), 2, 3);
    CHECK(maxent_logpsi(q, mv) == doctest::Approx(cps_logpsi(c, mv)));
  }
}

TEST_CASE("effective multipliers for K = 2") {
  const Basis b(10, 2);
  const std::vector<double> full{0.7, -0.4, 0.25, 1.1};  // 00, 01, 10, 11
  const auto eff = effective_multipliers(full, b, 2, independent_operator_set(2));
  REQUIRE(eff.size() == 2);
  CHECK(eff[0] == doctest::Approx(0.7 + 1.1));
  CHECK(eff[1] == doctest::Approx(-0.4 + 0.25));
}

TEST_CASE("grand sum and its projection") {
  CnnParams p = CnnParams::zeros(3, 2);
  CHECK(grandsum(p) == 0.0);
  for (double& x : p.w) x = 1.0;
  p.b = -3.0;
  CHECK(grandsum(p) == 0.0);

  CnnParams q = CnnParams::zeros(2, 2);
  for (double& x : q.w) x = 1.0;
  CHECK(grandsum(q) == 4.0);
  const auto projected = project_grandsum(q);
  for (double x : projected.w) CHECK(x == 0.0);
  CHECK(project_grandsum(p).w == p.w);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto r = random_params(1 + trial % 6, 2, rng, 2.0);
    double naive = 2 * r.b;
    for (int j = 0; j < r.kernel; ++j)
      for (int l = 0; l < 2; ++l) naive += r.weight(j, l);
    CHECK(grandsum(r) == doctest::Approx(naive).epsilon(1e-14));
    const auto once = project_grandsum(r);
    CHECK(std::abs(grandsum(once)) < 1e-12);
    CHECK(once.b == r.b);
    CHECK(once.v == r.v);
    const auto twice = project_grandsum(once);
    for (std::size_t i = 0; i < once.w.size(); ++i) CHECK(twice.w[i] == doctest::Approx(once.w[i]).epsilon(1e-14));
  }
  CHECK_THROWS_AS(grandsum(CnnParams::zeros(2, 3)), InvalidArgument);
}

TEST_CASE("projected parameters give relabeling symmetry") {
  std::mt19937_64 rng(6);
  for (int n : {8, 12}) {
    const Basis b(n, 2);
    for (int trial = 0; trial < 10; ++trial) {
      const auto p = project_grandsum(random_params(1 + trial % 4, 2, rng));
      double worst = 0.0;
      std::vector<Label> img(static_cast<std::size_t>(n));
      for (std::size_t i = 0; i < b.size(); ++i) {
        SymmetryOp::relabel({1, 0}).apply(b.state(i), img);
        worst = std::max(worst, std::abs(cnn_logpsi(p, img) - cnn_logpsi(p, b.state(i))));
      }
      CHECK(worst < 1e-9);
    }
  }
}

TEST_CASE("log-amplitude gradient") {
  std::mt19937_64 rng(7);
  const Basis b(10, 2);
  CnnParams zero_v = random_params(3, 2, rng);
  zero_v.v = 0.0;
  const auto g0 = logpsi_gradient(zero_v, b.state(4));
  for (std::size_t q = 1; q < g0.size(); ++q) CHECK(g0[q] == 0.0);

  CnnParams dead = CnnParams::zeros(3, 2);
  for (double& x : dead.w) x = -1.0;
  dead.b = -0.5;
  dead.v = 0.8;
  for (double g : logpsi_gradient(dead, b.state(7))) CHECK(g == 0.0);

  int checked = 0;
  const double h = 1e-6;
  while (checked < 100) {
    const auto p = random_params(1 + checked % 5, 2, rng);
    const auto s = b.state(std::uniform_int_distribution<std::size_t>(0, b.size() - 1)(rng));
    bool near_kink = false;
    for (int i = 0; i < 10; ++i) near_kink = near_kink || std::abs(window_preactivation(p, s, i)) < 1e-3;
    if (near_kink) continue;
    const auto g = logpsi_gradient(p, s);
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
      const double fd = (cnn_logpsi(pu, s) - cnn_logpsi(pd, s)) / (2 * h);
      CHECK(std::abs(fd - g[q]) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
    ++checked;
  }
}

TEST_CASE("MaxEnt fit recovers the uniform distribution") {
  const Basis b(8, 2);
  const auto ops = independent_operator_set(3);
  std::vector<double> target(ops.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto mv = motif_vector(b.state(i), 2, 3);
    for (std::size_t k = 0; k < ops.size(); ++k) target[k] += mv[ops[k]] / 70.0;
  }
  const auto fit = fit_maxent(b, 3, ops, target);
  for (double l : fit.params.lambdas) CHECK(std::abs(l) < 1e-10);
  CHECK(fit.residual < 1e-8);
}

TEST_CASE("MaxEnt fit to exact motif expectations") {
  const auto gs = ground_state(8, 2, true);
  for (int k : {2, 3}) {
    const auto mev = exact_mev(gs, k);
    const auto ops = independent_operator_set(k);
    std::vector<double> target;
    for (std::size_t o : ops) target.push_back(mev.count[o]);
    const auto fit = fit_maxent(*gs.basis, k, ops, target);
    CHECK(fit.residual < 1e-8);
    CHECK(fit.params.operators.size() == (std::size_t{1} << (k - 1)));
    const auto again = maxent_expected_counts(fit.params, *gs.basis);
    for (std::size_t i = 0; i < ops.size(); ++i) CHECK(std::abs(again[i] - target[i]) < 1e-8);
  }
}

TEST_CASE("MaxEnt at K = N reproduces class probabilities") {
  const auto gs = ground_state(6, 2, true);
  const Basis& b = *gs.basis;
  const int k = 6;
  const auto c = motif_count_matrix(b, k);
  // Greedy selection of rows that raise the exact rank.
  std::vector<std::size_t> ops;
  std::size_t rank = 0;
  for (std::size_t r = 0; r < c.rows(); ++r) {
    auto trial = ops;
    trial.push_back(r);
    const std::size_t next = integer_rank(c, trial);
    if (next > rank) {
      ops = trial;
      rank = next;
    }
  }
  std::vector<double> target(ops.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double p = gs.amplitudes(static_cast<Eigen::Index>(i)) * gs.amplitudes(static_cast<Eigen::Index>(i));
    for (std::size_t o = 0; o < ops.size(); ++o) target[o] += p * c(ops[o], i);
  }
  const auto fit = fit_maxent(b, k, ops, target);
  CHECK(fit.residual < 1e-8);
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double model = std::exp(2 * maxent_logpsi(fit.params, motif_vector(b.state(i), 2, k)));
    const double exact = gs.amplitudes(static_cast<Eigen::Index>(i)) * gs.amplitudes(static_cast<Eigen::Index>(i));
    CHECK(model == doctest::Approx(exact).epsilon(1e-7));
  }
}

TEST_CASE("linear activation gives a constant") {
  std::mt19937_64 rng(8);
  for (int n : {6, 8}) {
    const Basis b(n, 2);
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = random_params(1 + trial % 4, 2, rng);
      const double expected = linear_activation_constant(p, n);
      double wt = 0.0;
      for (double x : p.w) wt += x + p.b / p.kernel;
      CHECK(expected == doctest::Approx(n * p.v * wt / 2));
      for (std::size_t i = 0; i < b.size(); ++i)
        CHECK(std::abs(cnn_logpsi(p, b.state(i), Activation::Identity) - expected) <= 1e-10 * (1.0 + std::abs(expected)));
    }
  }
  CnnParams p = CnnParams::zeros(2, 2);
  p.w = {0.5, 0.1, -0.2, -0.4};
  p.b = 0.0;
  p.v = 1.3;
  const Basis b6(6, 2);
  for (std::size_t i = 0; i < b6.size(); ++i) CHECK(std::abs(cnn_logpsi(p, b6.state(i), Activation::Identity)) < 1e-12);
}

TEST_CASE("two-site kernels are relabel symmetric without the grand-sum condition") {
  // In the balanced sector m_00 = m_11 and m_01 = m_10, so s and its relabeling share a motif vector.
  std::mt19937_64 rng(9);
  const Basis b(12, 2);
  std::vector<Label> img(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_params(2, 2, rng, 3.0);
    p.b += 1.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      SymmetryOp::relabel({1, 0}).apply(b.state(i), img);
      CHECK(motif_vector(img, 2, 2) == motif_vector(b.state(i), 2, 2));
      CHECK(std::abs(cnn_logpsi(p, img) - cnn_logpsi(p, b.state(i))) < 1e-12 * (1.0 + std::abs(cnn_logpsi(p, img))));
    }
  }
}
