#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "motifcnn/error.hpp"
#include "motifcnn/spinchain.hpp"

using namespace motifcnn;

namespace {

std::vector<std::vector<Label>> brute_force_sector(int n, int m) {
  std::vector<std::vector<Label>> out;
  std::vector<Label> s(static_cast<std::size_t>(n), 0);
  while (true) {
    std::vector<int> counts(static_cast<std::size_t>(m), 0);
    for (Label l : s) ++counts[l];
    if (std::all_of(counts.begin(), counts.end(), [&](int c) { return c == n / m; })) out.push_back(s);
    int i = n - 1;
    while (i >= 0 && s[static_cast<std::size_t>(i)] == m - 1) s[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
    ++s[static_cast<std::size_t>(i)];
  }
  return out;
}

// Orbit closure by breadth-first search over the three generators.
std::vector<std::set<std::vector<Label>>> orbit_closure(int n) {
  const auto states = brute_force_sector(n, 2);
  std::set<std::vector<Label>> seen;
  std::vector<std::set<std::vector<Label>>> orbits;
  for (const auto& s : states) {
    if (seen.count(s)) continue;
    std::set<std::vector<Label>> orbit{s};
    std::queue<std::vector<Label>> todo;
    todo.push(s);
    while (!todo.empty()) {
      const auto t = todo.front();
      todo.pop();
      std::vector<std::vector<Label>> next(3, std::vector<Label>(t.size()));
      for (int i = 0; i < n; ++i) {
        next[0][static_cast<std::size_t>((i + 1) % n)] = t[static_cast<std::size_t>(i)];
        next[1][static_cast<std::size_t>((n - i) % n)] = t[static_cast<std::size_t>(i)];
        next[2][static_cast<std::size_t>(i)] = static_cast<Label>(1 - t[static_cast<std::size_t>(i)]);
      }
      for (auto& u : next)
        if (orbit.insert(u).second) todo.push(u);
    }
    seen.insert(orbit.begin(), orbit.end());
    orbits.push_back(orbit);
  }
  return orbits;
}

}  // namespace

TEST_CASE("basis sizes and order") {
  CHECK(Basis(8, 2).size() == 70);
  const Basis two(2, 2);
  REQUIRE(two.size() == 2);
  CHECK(labels_to_string(two.state(0)) == "01");
  CHECK(labels_to_string(two.state(1)) == "10");

  const Basis three(6, 3);
  const auto oracle = brute_force_sector(6, 3);
  REQUIRE(three.size() == 90);
  REQUIRE(oracle.size() == 90);
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    CHECK(std::equal(oracle[i].begin(), oracle[i].end(), three.state(i).begin()));
    CHECK(three.index_of(oracle[i]) == i);
  }
}

TEST_CASE("index_of inverts enumeration") {
  for (auto [n, m] : {std::pair{10, 2}, std::pair{9, 3}, std::pair{8, 4}}) {
    const Basis b(n, m);
    for (std::size_t i = 0; i < b.size(); ++i) REQUIRE(b.index_of(b.state(i)) == i);
  }
}

TEST_CASE("invalid sizes are rejected") {
  CHECK_THROWS_AS(Basis(7, 2), InvalidArgument);
  CHECK_THROWS_AS(Basis(1, 1), InvalidArgument);
  CHECK_THROWS_AS(Basis(16, 2, 100), CapacityError);
  CHECK_THROWS_AS(SpinConfig::from_string("0001", 2), InvalidArgument);
  CHECK_THROWS_AS(SpinConfig::from_string("0120", 2), InvalidArgument);
}

TEST_CASE("generator actions") {
  const auto neel = SpinConfig::from_string("0101", 2);
  CHECK(apply_symmetry(SymmetryOp::translate(1), neel).str() == "1010");
  CHECK(apply_symmetry(SymmetryOp::relabel({1, 0}), SpinConfig::from_string("0011", 2)).str() == "1100");

  const auto s = SpinConfig::from_string("001011", 2);
  std::vector<Label> oracle(6);
  for (int i = 0; i < 6; ++i) oracle[static_cast<std::size_t>((6 - i) % 6)] = s[i];
  CHECK(apply_symmetry(SymmetryOp::reflect(0), s).str() == labels_to_string(oracle));
  CHECK(apply_symmetry(SymmetryOp::reflect(0), s).str() == "011010");

  const auto r2 = apply_symmetry(SymmetryOp::reflect(2), s);
  std::vector<Label> oracle2(6);
  for (int i = 0; i < 6; ++i) oracle2[static_cast<std::size_t>((4 - i + 6) % 6)] = s[i];
  CHECK(r2.str() == labels_to_string(oracle2));
}

TEST_CASE("inverses undo every generator") {
  const Basis b(6, 3);
  const std::vector<SymmetryOp> gens{SymmetryOp::translate(1), SymmetryOp::translate(4), SymmetryOp::reflect(0),
                                     SymmetryOp::reflect(3), SymmetryOp::relabel({1, 2, 0}),
                                     SymmetryOp::relabel({2, 1, 0})};
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto s = b.config(i);
    for (const auto& g : gens) CHECK(g.inverse().apply(g.apply(s)) == s);
    const Symmetry composite({gens[0], gens[2], gens[4]});
    CHECK(composite.inverse().apply(composite.apply(s)) == s);
  }
  const auto s = SpinConfig::from_string("001101", 2);
  CHECK(SymmetryOp::translate(6).apply(s) == s);
  CHECK(SymmetryOp::reflect(1).apply(SymmetryOp::reflect(1).apply(s)) == s);
}

TEST_CASE("symmetry group has 2 N M! elements") {
  CHECK(symmetry_group(8, 2).size() == 32);
  CHECK(symmetry_group(6, 3).size() == 72);
}

TEST_CASE("partition into classes") {
  const auto p4 = partition_classes(Basis(4, 2));
  REQUIRE(p4.size() == 2);
  CHECK(labels_to_string(Basis(4, 2).state(p4.representative[0])) == "0011");
  CHECK(labels_to_string(Basis(4, 2).state(p4.representative[1])) == "0101");
  CHECK(partition_classes(Basis(2, 2)).size() == 1);

  for (int n : {6, 8, 10}) {
    const Basis b(n, 2);
    const auto part = partition_classes(b);
    const auto oracle = orbit_closure(n);
    REQUIRE(part.size() == oracle.size());
    std::size_t covered = 0;
    for (const auto& members : part.members) {
      covered += members.size();
      CHECK(part.group_order % members.size() == 0);
      std::set<std::vector<Label>> as_set;
      for (std::size_t idx : members) as_set.insert(std::vector<Label>(b.state(idx).begin(), b.state(idx).end()));
      CHECK(std::find(oracle.begin(), oracle.end(), as_set) != oracle.end());
    }
    CHECK(covered == b.size());
  }
}

TEST_CASE("orbit membership is symmetric and transitive at N = 8") {
  const Basis b(8, 2);
  const auto part = partition_classes(b);
  for (std::size_t i = 0; i < b.size(); i += 3)
    for (std::size_t j = 0; j < b.size(); ++j) {
      const bool same = same_orbit(b.config(i), b.config(j));
      CHECK(same == same_orbit(b.config(j), b.config(i)));
      CHECK(same == (part.class_of[i] == part.class_of[j]));
    }
}

TEST_CASE("class count lower bound") {
  CHECK(class_count_lower_bound(8, 2) == mpq_class(35, 16));
  CHECK(class_count_lower_bound(8, 2).get_d() == doctest::Approx(2.1875));
  CHECK(class_count_lower_bound(2, 2) == mpq_class(1, 4));
  for (int n = 4; n <= 12; n += 2) {
    const auto part = partition_classes(Basis(n, 2));
    CHECK(mpq_class(static_cast<unsigned long>(part.size())) >= class_count_lower_bound(n, 2));
  }
}

TEST_CASE("Marshall sign") {
  CHECK(marshall_sign(SpinConfig::from_string("0101", 2)) == 1);
  CHECK(marshall_sign(SpinConfig::from_string("1010", 2)) == 1);
  CHECK(marshall_sign(SpinConfig::from_string("1001", 2)) == -1);
  CHECK_THROWS_AS(marshall_sign(SpinConfig::from_string("012012", 3)), InvalidArgument);
}
