#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

namespace motifcnn {

using Label = std::uint8_t;

/// One basis state: N sites, M species, every species appearing exactly N/M times.
class SpinConfig {
 public:
  SpinConfig(std::vector<Label> sites, int species);

  /// Parses a digit string such as "0101".
  static SpinConfig from_string(std::string_view digits, int species);

  int size() const { return static_cast<int>(sites_.size()); }
  int species() const { return species_; }
  Label operator[](int i) const { return sites_[static_cast<std::size_t>(i)]; }
  std::span<const Label> sites() const { return sites_; }
  std::string str() const;

  friend bool operator==(const SpinConfig&, const SpinConfig&) = default;
  friend auto operator<=>(const SpinConfig& a, const SpinConfig& b) { return a.sites_ <=> b.sites_; }

 private:
  std::vector<Label> sites_;
  int species_;
};

std::string labels_to_string(std::span<const Label> labels);

/// The zero-magnetization sector in lexicographic order, stored flat.
class Basis {
 public:
  static constexpr std::size_t kDefaultCap = 20'000'000;

  Basis(int sites, int species, std::size_t cap = kDefaultCap);

  int sites() const { return sites_; }
  int species() const { return species_; }
  std::size_t size() const { return size_; }

  std::span<const Label> state(std::size_t index) const {
    return {data_.data() + index * static_cast<std::size_t>(sites_), static_cast<std::size_t>(sites_)};
  }
  SpinConfig config(std::size_t index) const;

  /// Lexicographic rank of a valid state; O(N·M), no lookup table.
  std::size_t index_of(std::span<const Label> state) const;

 private:
  int sites_;
  int species_;
  std::size_t size_ = 0;
  std::vector<Label> data_;
};

Basis enumerate_basis(int sites, int species, std::size_t cap = Basis::kDefaultCap);

/// multinomial(N; N/M, ..., N/M) as an exact integer.
mpz_class sector_dimension(int sites, int species);

class SymmetryOp {
 public:
  enum class Kind { Translate, Reflect, Relabel };

  /// Site i moves to (i + k) mod N.
  static SymmetryOp translate(int shift);
  /// Site i moves to (2p - i) mod N.
  static SymmetryOp reflect(int pivot);
  /// Label l becomes perm[l].
  static SymmetryOp relabel(std::vector<Label> perm);

  Kind kind() const { return kind_; }
  SymmetryOp inverse() const;

  void apply(std::span<const Label> in, std::span<Label> out) const;
  SpinConfig apply(const SpinConfig& s) const;

 private:
  SymmetryOp(Kind kind, int param, std::vector<Label> perm)
      : kind_(kind), param_(param), perm_(std::move(perm)) {}

  Kind kind_;
  int param_;
  std::vector<Label> perm_;
};

/// Finite product of generators. factors()[0] acts first.
class Symmetry {
 public:
  Symmetry() = default;
  explicit Symmetry(std::vector<SymmetryOp> factors) : factors_(std::move(factors)) {}

  Symmetry then(SymmetryOp op) const;
  Symmetry inverse() const;
  const std::vector<SymmetryOp>& factors() const { return factors_; }

  void apply(std::span<const Label> in, std::span<Label> out) const;
  SpinConfig apply(const SpinConfig& s) const;

 private:
  std::vector<SymmetryOp> factors_;
};

SpinConfig apply_symmetry(const SymmetryOp& g, const SpinConfig& s);

/// Every element relabel∘reflect^r∘translate^k of the dihedral × S_M group: 2·N·M! entries.
std::vector<Symmetry> symmetry_group(int sites, int species);

/// Permutations of {0..M-1} in lexicographic order.
std::vector<std::vector<Label>> label_permutations(int species);

struct EquivalenceClassPartition {
  std::vector<std::size_t> class_of;                 // basis index -> class id
  std::vector<std::vector<std::size_t>> members;     // ascending basis indices
  std::vector<std::size_t> representative;           // lexicographic minimum
  std::size_t group_order = 0;

  std::size_t size() const { return members.size(); }
};

/// Orbits of the basis under translations, reflections, and all relabelings.
/// Class ids follow the order of their representatives.
EquivalenceClassPartition partition_classes(const Basis& basis);

/// True when t = g·s for some group element g.
bool same_orbit(const SpinConfig& s, const SpinConfig& t);

/// N! / (2N · M! · ((N/M)!)^M), exact.
mpq_class class_count_lower_bound(int sites, int species);

/// (-1)^(down spins on even sites) for M = 2, label 1 = down.
int marshall_sign(std::span<const Label> state);
int marshall_sign(const SpinConfig& s);

}  // namespace motifcnn
