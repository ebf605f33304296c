#pragma once

#include <utility>
#include <vector>

#include "latstruct/domain.hpp"

namespace latstruct {

// Spanning arborescences over words 1..n rooted at node 0. Parts are arcs
// head -> modifier laid out row-major as a (n+1) x n matrix:
//   index = head*n + (modifier-1),  head in 0..n, modifier in 1..n.
// Slots with head == modifier are padding: scores there are ignored, bits are
// always 0 and marginals 0.
class ArborescenceDomain : public StructDomain {
 public:
  explicit ArborescenceDomain(int n);

  std::string name() const override { return "arborescence"; }
  int part_count() const override { return (n_ + 1) * n_; }
  bool has_marginals() const override { return true; }
  bool enumerable() const override { return true; }

  int word_count() const { return n_; }

  static int part_index(int head, int modifier, int n) {
    return head * n + (modifier - 1);
  }

  // heads[m-1] = head of modifier m.
  Structure from_heads(const std::vector<int>& heads) const;
  std::vector<int> to_heads(const Structure& z) const;

  bool is_valid(const Structure& z) const override;
  Structure map_oracle(const Vec& scores) const override;  // Chu-Liu-Edmonds
  double structure_count() const override;
  std::vector<Structure> enumerate_unsorted() const override;
  std::pair<Vec, double> marginals(const Vec& scores) const override;
  DiffVec diff_marginals(const Vec& scores) const override;

 private:
  int n_;
};

// Maximum-scoring arborescence; returns heads[m-1] per modifier m.
std::vector<int> chu_liu_edmonds(const Vec& arc_scores, int n);

// Arc marginals and logZ via the Kirchhoff determinant construction on the
// root-augmented Laplacian, in ordinary space with score max-subtraction.
// Throws on a numerically degenerate Laplacian (condition estimate > 1e12).
std::pair<Vec, double> matrix_tree_marginals(const Vec& arc_scores, int n);

}  // namespace latstruct
