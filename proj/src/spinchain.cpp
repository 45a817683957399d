#include "motifcnn/spinchain.hpp"

#include <algorithm>
#include <numeric>

#include "motifcnn/error.hpp"

namespace motifcnn {

namespace {

void check_sizes(int sites, int species) {
  if (species < 2) throw InvalidArgument("species count M must be at least 2");
  if (sites < species) throw InvalidArgument("site count N must be at least M");
  if (sites % species != 0) throw InvalidArgument("site count N must be divisible by M");
  if (species > 255) throw InvalidArgument("species count M must fit in one byte");
}

int mod(int a, int n) {
  int r = a % n;
  return r < 0 ? r + n : r;
}

}  // namespace

std::string labels_to_string(std::span<const Label> labels) {
  std::string out;
  out.reserve(labels.size());
  for (Label l : labels) out.push_back(static_cast<char>('0' + l));
  return out;
}

SpinConfig::SpinConfig(std::vector<Label> sites, int species) : sites_(std::move(sites)), species_(species) {
  const int n = static_cast<int>(sites_.size());
  check_sizes(n, species);
  std::vector<int> counts(static_cast<std::size_t>(species), 0);
  for (Label l : sites_) {
    if (l >= species) throw InvalidArgument("label out of range for M species");
    ++counts[l];
  }
  for (int c : counts)
    if (c != n / species) throw InvalidArgument("configuration is not in the zero-magnetization sector");
}

SpinConfig SpinConfig::from_string(std::string_view digits, int species) {
  std::vector<Label> labels;
  labels.reserve(digits.size());
  for (char c : digits) {
    if (c < '0' || c > '9') throw InvalidArgument("state strings use digits 0-9");
    labels.push_back(static_cast<Label>(c - '0'));
  }
  return SpinConfig(std::move(labels), species);
}

std::string SpinConfig::str() const { return labels_to_string(sites_); }

mpz_class sector_dimension(int sites, int species) {
  check_sizes(sites, species);
  mpz_class num;
  mpz_fac_ui(num.get_mpz_t(), static_cast<unsigned long>(sites));
  mpz_class part;
  mpz_fac_ui(part.get_mpz_t(), static_cast<unsigned long>(sites / species));
  for (int i = 0; i < species; ++i) num /= part;
  return num;
}

Basis::Basis(int sites, int species, std::size_t cap) : sites_(sites), species_(species) {
  const mpz_class dim = sector_dimension(sites, species);
  if (dim > mpz_class(static_cast<unsigned long>(cap)))
    throw CapacityError("basis of " + dim.get_str() + " states exceeds the cap of " + std::to_string(cap));
  size_ = dim.get_ui();

  std::vector<Label> current;
  current.reserve(static_cast<std::size_t>(sites));
  for (int l = 0; l < species; ++l) current.insert(current.end(), static_cast<std::size_t>(sites / species), static_cast<Label>(l));

  data_.reserve(size_ * static_cast<std::size_t>(sites));
  do {
    data_.insert(data_.end(), current.begin(), current.end());
  } while (std::next_permutation(current.begin(), current.end()));
}

SpinConfig Basis::config(std::size_t index) const {
  auto s = state(index);
  return SpinConfig(std::vector<Label>(s.begin(), s.end()), species_);
}

std::size_t Basis::index_of(std::span<const Label> state) const {
  // Rank among multiset permutations: arrangements(counts - e_l) = arrangements(counts) * c_l / n.
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(species_), static_cast<std::uint64_t>(sites_ / species_));
  std::uint64_t remaining = static_cast<std::uint64_t>(sites_);
  std::uint64_t arrangements = size_;
  std::uint64_t rank = 0;
  for (Label s : state) {
    for (Label l = 0; l < s; ++l)
      if (counts[l] > 0) rank += arrangements * counts[l] / remaining;
    arrangements = arrangements * counts[s] / remaining;
    --counts[s];
    --remaining;
  }
  return static_cast<std::size_t>(rank);
}

Basis enumerate_basis(int sites, int species, std::size_t cap) { return Basis(sites, species, cap); }

SymmetryOp SymmetryOp::translate(int shift) { return SymmetryOp(Kind::Translate, shift, {}); }

SymmetryOp SymmetryOp::reflect(int pivot) { return SymmetryOp(Kind::Reflect, pivot, {}); }

SymmetryOp SymmetryOp::relabel(std::vector<Label> perm) {
  std::vector<Label> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != i) throw InvalidArgument("relabeling must be a permutation of 0..M-1");
  return SymmetryOp(Kind::Relabel, 0, std::move(perm));
}

SymmetryOp SymmetryOp::inverse() const {
  switch (kind_) {
    case Kind::Translate:
      return translate(-param_);
    case Kind::Reflect:
      return *this;
    case Kind::Relabel: {
      std::vector<Label> inv(perm_.size());
      for (std::size_t i = 0; i < perm_.size(); ++i) inv[perm_[i]] = static_cast<Label>(i);
      return relabel(std::move(inv));
    }
  }
  return *this;
}

void SymmetryOp::apply(std::span<const Label> in, std::span<Label> out) const {
  const int n = static_cast<int>(in.size());
  switch (kind_) {
    case Kind::Translate:
      for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(mod(i + param_, n))] = in[static_cast<std::size_t>(i)];
      break;
    case Kind::Reflect:
      for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(mod(2 * param_ - i, n))] = in[static_cast<std::size_t>(i)];
      break;
    case Kind::Relabel:
      if (perm_.empty()) throw InvalidArgument("empty relabeling");
      for (int i = 0; i < n; ++i) {
        const Label l = in[static_cast<std::size_t>(i)];
        if (l >= perm_.size()) throw InvalidArgument("relabeling has fewer labels than the state");
        out[static_cast<std::size_t>(i)] = perm_[l];
      }
      break;
  }
}

SpinConfig SymmetryOp::apply(const SpinConfig& s) const {
  std::vector<Label> out(static_cast<std::size_t>(s.size()));
  apply(s.sites(), out);
  return SpinConfig(std::move(out), s.species());
}

SpinConfig apply_symmetry(const SymmetryOp& g, const SpinConfig& s) { return g.apply(s); }

Symmetry Symmetry::then(SymmetryOp op) const {
  auto f = factors_;
  f.push_back(std::move(op));
  return Symmetry(std::move(f));
}

Symmetry Symmetry::inverse() const {
  std::vector<SymmetryOp> inv;
  inv.reserve(factors_.size());
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) inv.push_back(it->inverse());
  return Symmetry(std::move(inv));
}

void Symmetry::apply(std::span<const Label> in, std::span<Label> out) const {
  std::vector<Label> a(in.begin(), in.end());
  std::vector<Label> b(in.size());
  for (const auto& f : factors_) {
    f.apply(a, b);
    std::swap(a, b);
  }
  std::copy(a.begin(), a.end(), out.begin());
}

SpinConfig Symmetry::apply(const SpinConfig& s) const {
  std::vector<Label> out(static_cast<std::size_t>(s.size()));
  apply(s.sites(), out);
  return SpinConfig(std::move(out), s.species());
}

std::vector<std::vector<Label>> label_permutations(int species) {
  std::vector<Label> p(static_cast<std::size_t>(species));
  std::iota(p.begin(), p.end(), Label{0});
  std::vector<std::vector<Label>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

std::vector<Symmetry> symmetry_group(int sites, int species) {
  std::vector<Symmetry> group;
  const auto perms = label_permutations(species);
  group.reserve(2 * static_cast<std::size_t>(sites) * perms.size());
  for (int k = 0; k < sites; ++k) {
    for (int r = 0; r < 2; ++r) {
      for (const auto& perm : perms) {
        std::vector<SymmetryOp> f{SymmetryOp::translate(k)};
        if (r == 1) f.push_back(SymmetryOp::reflect(0));
        f.push_back(SymmetryOp::relabel(perm));
        group.emplace_back(std::move(f));
      }
    }
  }
  return group;
}

namespace {

// Visits g·s for every group element without materializing Symmetry objects.
template <typename Visit>
void for_each_image(std::span<const Label> s, int species, const std::vector<std::vector<Label>>& perms, Visit&& visit) {
  const int n = static_cast<int>(s.size());
  std::vector<Label> img(s.size());
  for (int k = 0; k < n; ++k) {
    for (int r = 0; r < 2; ++r) {
      for (const auto& perm : perms) {
        for (int i = 0; i < n; ++i) {
          int j = mod(i + k, n);
          if (r == 1) j = mod(-j, n);
          img[static_cast<std::size_t>(j)] = perm[s[static_cast<std::size_t>(i)]];
        }
        visit(std::span<const Label>(img));
      }
    }
  }
  (void)species;
}

}  // namespace

EquivalenceClassPartition partition_classes(const Basis& basis) {
  EquivalenceClassPartition part;
  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  part.class_of.assign(basis.size(), kUnassigned);
  const auto perms = label_permutations(basis.species());
  part.group_order = 2 * static_cast<std::size_t>(basis.sites()) * perms.size();

  for (std::size_t idx = 0; idx < basis.size(); ++idx) {
    if (part.class_of[idx] != kUnassigned) continue;
    const std::size_t id = part.members.size();
    std::vector<std::size_t> orbit;
    for_each_image(basis.state(idx), basis.species(), perms, [&](std::span<const Label> img) {
      const std::size_t j = basis.index_of(img);
      if (part.class_of[j] == kUnassigned) {
        part.class_of[j] = id;
        orbit.push_back(j);
      }
    });
    std::sort(orbit.begin(), orbit.end());
    part.representative.push_back(orbit.front());
    part.members.push_back(std::move(orbit));
  }
  return part;
}

bool same_orbit(const SpinConfig& s, const SpinConfig& t) {
  if (s.size() != t.size() || s.species() != t.species()) return false;
  const auto perms = label_permutations(s.species());
  bool found = false;
  for_each_image(s.sites(), s.species(), perms, [&](std::span<const Label> img) {
    if (!found && std::equal(img.begin(), img.end(), t.sites().begin())) found = true;
  });
  return found;
}

mpq_class class_count_lower_bound(int sites, int species) {
  check_sizes(sites, species);
  mpz_class num;
  mpz_fac_ui(num.get_mpz_t(), static_cast<unsigned long>(sites));
  mpz_class m_fact;
  mpz_fac_ui(m_fact.get_mpz_t(), static_cast<unsigned long>(species));
  mpz_class part;
  mpz_fac_ui(part.get_mpz_t(), static_cast<unsigned long>(sites / species));
  mpz_class part_pow;
  mpz_pow_ui(part_pow.get_mpz_t(), part.get_mpz_t(), static_cast<unsigned long>(species));
  mpq_class q(num, mpz_class(2 * sites) * m_fact * part_pow);
  q.canonicalize();
  return q;
}

int marshall_sign(std::span<const Label> state) {
  int down_even = 0;
  for (std::size_t i = 0; i < state.size(); i += 2) {
    if (state[i] > 1) throw InvalidArgument("Marshall sign is defined for M = 2 only");
    down_even += state[i];
  }
  for (std::size_t i = 1; i < state.size(); i += 2)
    if (state[i] > 1) throw InvalidArgument("Marshall sign is defined for M = 2 only");
  return (down_even % 2 == 0) ? 1 : -1;
}

int marshall_sign(const SpinConfig& s) {
  if (s.species() != 2) throw InvalidArgument("Marshall sign is defined for M = 2 only");
  return marshall_sign(s.sites());
}

}  // namespace motifcnn
