#pragma once

#include <string>
#include <vector>

#include "latstruct/domain.hpp"

namespace latstruct {

// Binary trees over N leaves encoded as shift-reduce action sequences of
// length 2N-1: bit 1 = shift (add a leaf), bit 0 = reduce (merge the two most
// recent nodes). Valid sequences keep shifts strictly ahead of reduces at
// every prefix and use exactly N shifts; |Z| = Catalan(N-1).
// Oracles are enumeration-backed (cap N <= 12).
class BinaryTreeSRDomain : public StructDomain {
 public:
  explicit BinaryTreeSRDomain(int leaves);

  std::string name() const override { return "binary_tree_sr"; }
  int part_count() const override { return 2 * leaves_ - 1; }
  bool enumerable() const override { return true; }

  int leaf_count() const { return leaves_; }

  bool is_valid(const Structure& z) const override;
  Structure map_oracle(const Vec& scores) const override;
  double structure_count() const override;  // Catalan(N-1)
  std::vector<Structure> enumerate_unsorted() const override;

  // Nested bracketing with 1-based leaf labels, e.g. "((1 2) 3)".
  std::string bracketing(const Structure& z) const;

 private:
  int leaves_;
};

// Exact distribution over binary trees induced by choosing shift with
// probability p_shift whenever both actions are admissible (probability is
// renormalized to the single admissible action otherwise), by exhaustive
// traversal of action sequences.
SparseDist sr_tree_distribution(int leaves, double p_shift);

}  // namespace latstruct
