#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <gmpxx.h>

#include "motifcnn/spinchain.hpp"

namespace motifcnn {

// Motifs are indexed lexicographically over label sequences, first label most
// significant: for M = 2, K = 3 the order is 000, 001, 010, ..., 111.

/// M^K, rejecting values that do not fit in memory-addressable sizes.
std::size_t motif_space_size(int species, int kernel);

std::size_t motif_index(std::span<const Label> motif, int species);
std::vector<Label> motif_labels(std::size_t index, int species, int kernel);
std::string motif_string(std::size_t index, int species, int kernel);

/// Label-swapped partner of a binary motif.
std::size_t conjugate_motif(std::size_t index, int kernel);
/// Motif read backwards (reflection about the window center).
std::size_t reversed_motif(std::size_t index, int species, int kernel);

/// Cyclic K-window counts; entries sum to N.
std::vector<std::int32_t> motif_vector(std::span<const Label> state, int species, int kernel);
std::vector<std::int32_t> motif_vector(const SpinConfig& s, int kernel);

/// M^K rows (motifs) by basis-size columns (states, basis order).
class MotifCountMatrix {
 public:
  static constexpr std::size_t kDefaultCap = 200'000'000;

  MotifCountMatrix(int sites, int species, int kernel, std::size_t cols);

  int sites() const { return sites_; }
  int species() const { return species_; }
  int kernel() const { return kernel_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::int32_t operator()(std::size_t row, std::size_t col) const { return data_[row * cols_ + col]; }
  std::int32_t& operator()(std::size_t row, std::size_t col) { return data_[row * cols_ + col]; }
  std::span<const std::int32_t> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<std::int32_t> column(std::size_t c) const;

 private:
  int sites_;
  int species_;
  int kernel_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<std::int32_t> data_;
};

MotifCountMatrix motif_count_matrix(const Basis& basis, int kernel,
                                    std::size_t cap = MotifCountMatrix::kDefaultCap);

/// Exact rank over Q by fraction-free (Bareiss) elimination on big integers.
std::size_t fraction_free_rank(std::vector<std::vector<mpz_class>> rows);

/// Rank of the count matrix. Duplicate columns and zero rows are dropped first;
/// neither changes the rank.
std::size_t integer_rank(const MotifCountMatrix& matrix);

/// Rank of the submatrix formed by the given rows.
std::size_t integer_rank(const MotifCountMatrix& matrix, std::span<const std::size_t> rows);

struct KernelRankRow {
  int kernel;
  std::size_t rank;
};

struct CriticalKernel {
  int sites;
  int species;
  std::size_t class_count;
  int kernel;                        // smallest K with rank >= class_count
  std::vector<KernelRankRow> table;  // K = 1..kernel
};

CriticalKernel critical_kernel_size(int sites, int species);

/// Two states A-x-A-y-A-z and A-y-A-x-A-z in different symmetry orbits with
/// identical K-motif vectors. Requires 3K < N.
std::pair<SpinConfig, SpinConfig> ambiguous_pair(int sites, int species, int kernel);

/// One motif from each conjugate pair (the one with leading label 0), M = 2 only.
std::vector<std::size_t> independent_operator_set(int kernel, int species = 2);

/// Exact mean count of `motif` over the given class members.
mpq_class class_averaged_count(const Basis& basis, std::span<const std::size_t> members, std::size_t motif,
                               int kernel);

/// Partition of the motifs into classes, ordered by descending value.
struct MotifClassTable {
  int species = 0;
  int kernel = 0;
  std::vector<std::vector<std::size_t>> classes;
  std::vector<double> value;           // per class
  std::vector<std::size_t> class_of;   // per motif

  std::size_t size() const { return classes.size(); }
  std::size_t representative(std::size_t k) const { return classes[k].front(); }
};

/// Orbits of the motifs under relabeling and reflection about the window
/// center. `value` is left empty; class order follows the smallest member.
MotifClassTable motif_symmetry_classes(int species, int kernel);

}  // namespace motifcnn
