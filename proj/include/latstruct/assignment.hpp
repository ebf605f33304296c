#pragma once

#include <utility>
#include <vector>

#include "latstruct/domain.hpp"
#include "latstruct/tensor.hpp"

namespace latstruct {

// One-to-one assignment between two size-m sets. Parts are the m*m pairs,
// row-major: index = i*m + j. Valid structures are permutation matrices.
// Marginal inference is intentionally absent (#P-complete).
class AssignmentDomain : public StructDomain {
 public:
  explicit AssignmentDomain(int m);

  std::string name() const override { return "assignment"; }
  int part_count() const override { return m_ * m_; }
  bool enumerable() const override { return true; }

  int set_size() const { return m_; }

  Structure from_permutation(const std::vector<int>& perm) const;
  std::vector<int> to_permutation(const Structure& z) const;

  bool is_valid(const Structure& z) const override;
  Structure map_oracle(const Vec& scores) const override;
  double structure_count() const override;
  std::vector<Structure> enumerate_unsorted() const override;

 private:
  int m_;
};

// Maximum-scoring perfect matching by the O(m^3) dual-potential algorithm.
// Returns (column assigned to each row, total score).
std::pair<std::vector<int>, double> kuhn_munkres(const Tensor& scores);

}  // namespace latstruct
