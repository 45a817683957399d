#include "motifcnn/motif.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "motifcnn/error.hpp"

namespace motifcnn {

std::size_t motif_space_size(int species, int kernel) {
  if (kernel < 1) throw InvalidArgument("kernel size K must be at least 1");
  if (species < 1) throw InvalidArgument("species count M must be positive");
  std::size_t n = 1;
  for (int i = 0; i < kernel; ++i) {
    if (n > (std::size_t{1} << 40) / static_cast<std::size_t>(species))
      throw CapacityError("motif space M^K is too large");
    n *= static_cast<std::size_t>(species);
  }
  return n;
}

std::size_t motif_index(std::span<const Label> motif, int species) {
  std::size_t idx = 0;
  for (Label l : motif) idx = idx * static_cast<std::size_t>(species) + l;
  return idx;
}

std::vector<Label> motif_labels(std::size_t index, int species, int kernel) {
  std::vector<Label> out(static_cast<std::size_t>(kernel));
  for (int j = kernel - 1; j >= 0; --j) {
    out[static_cast<std::size_t>(j)] = static_cast<Label>(index % static_cast<std::size_t>(species));
    index /= static_cast<std::size_t>(species);
  }
  return out;
}

std::string motif_string(std::size_t index, int species, int kernel) {
  return labels_to_string(motif_labels(index, species, kernel));
}

std::size_t conjugate_motif(std::size_t index, int kernel) {
  return index ^ ((std::size_t{1} << kernel) - 1);
}

std::size_t reversed_motif(std::size_t index, int species, int kernel) {
  auto labels = motif_labels(index, species, kernel);
  std::reverse(labels.begin(), labels.end());
  return motif_index(labels, species);
}

std::vector<std::int32_t> motif_vector(std::span<const Label> state, int species, int kernel) {
  const int n = static_cast<int>(state.size());
  if (kernel < 1 || kernel > n) throw InvalidArgument("kernel size must satisfy 1 <= K <= N");
  std::vector<std::int32_t> counts(motif_space_size(species, kernel), 0);
  const std::size_t top = counts.size() / static_cast<std::size_t>(species);
  // Rolling index: drop the leading label, append the next one.
  std::size_t idx = 0;
  for (int j = 0; j < kernel; ++j) idx = idx * static_cast<std::size_t>(species) + state[static_cast<std::size_t>(j)];
  for (int i = 0; i < n; ++i) {
    ++counts[idx];
    const Label lead = state[static_cast<std::size_t>(i)];
    const Label next = state[static_cast<std::size_t>((i + kernel) % n)];
    idx = (idx - lead * top) * static_cast<std::size_t>(species) + next;
  }
  return counts;
}

std::vector<std::int32_t> motif_vector(const SpinConfig& s, int kernel) {
  return motif_vector(s.sites(), s.species(), kernel);
}

MotifCountMatrix::MotifCountMatrix(int sites, int species, int kernel, std::size_t cols)
    : sites_(sites),
      species_(species),
      kernel_(kernel),
      rows_(motif_space_size(species, kernel)),
      cols_(cols),
      data_(rows_ * cols_, 0) {}

std::vector<std::int32_t> MotifCountMatrix::column(std::size_t c) const {
  std::vector<std::int32_t> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

MotifCountMatrix motif_count_matrix(const Basis& basis, int kernel, std::size_t cap) {
  const std::size_t rows = motif_space_size(basis.species(), kernel);
  if (basis.size() != 0 && rows > cap / basis.size())
    throw CapacityError("motif count matrix M^K x basis exceeds the entry cap");
  MotifCountMatrix m(basis.sites(), basis.species(), kernel, basis.size());
  for (std::size_t c = 0; c < basis.size(); ++c) {
    const auto v = motif_vector(basis.state(c), basis.species(), kernel);
    for (std::size_t r = 0; r < rows; ++r)
      if (v[r] != 0) m(r, c) = v[r];
  }
  return m;
}

std::size_t fraction_free_rank(std::vector<std::vector<mpz_class>> a) {
  if (a.empty()) return 0;
  const std::size_t nrows = a.size();
  const std::size_t ncols = a.front().size();
  std::size_t rank = 0;
  mpz_class prev = 1;
  mpz_class t;
  for (std::size_t c = 0; c < ncols && rank < nrows; ++c) {
    std::size_t pivot = rank;
    while (pivot < nrows && a[pivot][c] == 0) ++pivot;
    if (pivot == nrows) continue;
    std::swap(a[pivot], a[rank]);
    const mpz_class& p = a[rank][c];
    for (std::size_t i = rank + 1; i < nrows; ++i) {
      const mpz_class f = a[i][c];
      for (std::size_t j = c + 1; j < ncols; ++j) {
        // a[i][j] = (p * a[i][j] - f * a[rank][j]) / prev, exact by Sylvester's identity
        t = p * a[i][j];
        t -= f * a[rank][j];
        mpz_divexact(a[i][j].get_mpz_t(), t.get_mpz_t(), prev.get_mpz_t());
      }
      a[i][c] = 0;
    }
    prev = p;
    ++rank;
  }
  return rank;
}

namespace {

std::size_t rank_of_rows(const MotifCountMatrix& m, std::span<const std::size_t> rows) {
  std::vector<std::size_t> kept;
  for (std::size_t r : rows) {
    auto row = m.row(r);
    if (std::any_of(row.begin(), row.end(), [](std::int32_t x) { return x != 0; })) kept.push_back(r);
  }
  if (kept.empty()) return 0;
  std::set<std::vector<std::int32_t>> unique_cols;
  std::vector<std::int32_t> col(kept.size());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (std::size_t i = 0; i < kept.size(); ++i) col[i] = m(kept[i], c);
    unique_cols.insert(col);
  }
  std::vector<std::vector<mpz_class>> a(kept.size(), std::vector<mpz_class>(unique_cols.size()));
  std::size_t j = 0;
  for (const auto& uc : unique_cols) {
    for (std::size_t i = 0; i < kept.size(); ++i) a[i][j] = uc[i];
    ++j;
  }
  return fraction_free_rank(std::move(a));
}

}  // namespace

std::size_t integer_rank(const MotifCountMatrix& matrix) {
  std::vector<std::size_t> all(matrix.rows());
  for (std::size_t r = 0; r < all.size(); ++r) all[r] = r;
  return rank_of_rows(matrix, all);
}

std::size_t integer_rank(const MotifCountMatrix& matrix, std::span<const std::size_t> rows) {
  for (std::size_t r : rows)
    if (r >= matrix.rows()) throw InvalidArgument("row index out of range");
  return rank_of_rows(matrix, rows);
}

CriticalKernel critical_kernel_size(int sites, int species) {
  const Basis basis(sites, species);
  const auto part = partition_classes(basis);
  CriticalKernel out{sites, species, part.size(), 0, {}};
  for (int k = 1; k <= sites; ++k) {
    const auto m = motif_count_matrix(basis, k);
    const std::size_t r = integer_rank(m);
    out.table.push_back({k, r});
    if (r >= part.size()) {
      out.kernel = k;
      return out;
    }
  }
  // The K = N matrix separates every translation orbit, so the scan always terminates above.
  throw NumericalError("no kernel size reaches the class count");
}

std::pair<SpinConfig, SpinConfig> ambiguous_pair(int sites, int species, int kernel) {
  if (kernel < 1) throw InvalidArgument("kernel size K must be at least 1");
  if (3 * kernel >= sites) throw InvalidArgument("ambiguous pair construction needs K < N/3");
  if (species < 2 || sites % species != 0) throw InvalidArgument("site count N must be divisible by M >= 2");

  // A cycles through the labels 0,1,...,M-1,0,...; for M = 2 it alternates.
  std::vector<Label> a(static_cast<std::size_t>(kernel - 1));
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = static_cast<Label>(i % static_cast<std::size_t>(species));

  std::vector<int> need(static_cast<std::size_t>(species), sites / species);
  for (Label l : a) need[l] -= 3;
  for (int c : need)
    if (c < 0) throw InvalidArgument("segment A leaves no room to restore zero magnetization");
  const int free_len = sites - 3 * (kernel - 1);

  // Lexicographically ordered fillings with the required label counts.
  std::vector<Label> fill;
  for (int l = 0; l < species; ++l) fill.insert(fill.end(), static_cast<std::size_t>(need[l]), static_cast<Label>(l));

  auto assemble = [&](std::span<const Label> x, std::span<const Label> y, std::span<const Label> z) {
    std::vector<Label> s;
    s.reserve(static_cast<std::size_t>(sites));
    for (auto seg : {x, y, z}) {
      s.insert(s.end(), a.begin(), a.end());
      s.insert(s.end(), seg.begin(), seg.end());
    }
    return SpinConfig(std::move(s), species);
  };

  for (int lx = 1; lx <= free_len - 2; ++lx) {
    for (int ly = 1; lx + ly <= free_len - 1; ++ly) {
      std::vector<Label> f = fill;
      do {
        std::span<const Label> x(f.data(), static_cast<std::size_t>(lx));
        std::span<const Label> y(f.data() + lx, static_cast<std::size_t>(ly));
        std::span<const Label> z(f.data() + lx + ly, f.size() - static_cast<std::size_t>(lx + ly));
        if (std::equal(x.begin(), x.end(), y.begin(), y.end())) continue;
        SpinConfig first = assemble(x, y, z);
        SpinConfig second = assemble(y, x, z);
        if (!same_orbit(first, second)) return {std::move(first), std::move(second)};
      } while (std::next_permutation(f.begin(), f.end()));
    }
  }
  throw InvalidArgument("no symmetry-inequivalent pair exists for this (N, M, K)");
}

std::vector<std::size_t> independent_operator_set(int kernel, int species) {
  if (species != 2) throw InvalidArgument("independent operator selection is defined for M = 2");
  const std::size_t half = motif_space_size(2, kernel) / 2;
  std::vector<std::size_t> out(half);
  for (std::size_t i = 0; i < half; ++i) out[i] = i;  // leading label 0
  return out;
}

mpq_class class_averaged_count(const Basis& basis, std::span<const std::size_t> members, std::size_t motif,
                               int kernel) {
  if (members.empty()) throw InvalidArgument("empty equivalence class");
  if (motif >= motif_space_size(basis.species(), kernel)) throw InvalidArgument("motif index out of range");
  mpz_class total = 0;
  for (std::size_t idx : members) total += motif_vector(basis.state(idx), basis.species(), kernel)[motif];
  mpq_class q(total, mpz_class(static_cast<unsigned long>(members.size())));
  q.canonicalize();
  return q;
}

MotifClassTable motif_symmetry_classes(int species, int kernel) {
  const std::size_t n = motif_space_size(species, kernel);
  const auto perms = label_permutations(species);
  MotifClassTable table;
  table.species = species;
  table.kernel = kernel;
  constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
  table.class_of.assign(n, kUnassigned);
  for (std::size_t m = 0; m < n; ++m) {
    if (table.class_of[m] != kUnassigned) continue;
    const std::size_t id = table.classes.size();
    std::vector<std::size_t> members;
    const auto labels = motif_labels(m, species, kernel);
    for (int r = 0; r < 2; ++r) {
      auto base = labels;
      if (r == 1) std::reverse(base.begin(), base.end());
      for (const auto& perm : perms) {
        std::vector<Label> img(base.size());
        for (std::size_t i = 0; i < base.size(); ++i) img[i] = perm[base[i]];
        const std::size_t j = motif_index(img, species);
        if (table.class_of[j] == kUnassigned) {
          table.class_of[j] = id;
          members.push_back(j);
        }
      }
    }
    std::sort(members.begin(), members.end());
    table.classes.push_back(std::move(members));
  }
  return table;
}

}  // namespace motifcnn
