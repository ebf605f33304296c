#include "latstruct/treesr.hpp"

#include <cmath>
#include <stdexcept>

namespace latstruct {

namespace {

// Depth-first traversal over admissible action sequences. At a prefix with
// `shifts` shifts taken and `stack` nodes on the stack, shift is admissible
// while shifts < N and reduce while stack >= 2.
void walk_sequences(int leaves, int shifts, int stack,
                    std::vector<std::uint8_t>& prefix, double logp,
                    double log_pshift, double log_preduce,
                    std::vector<Structure>& out, Vec* probs) {
  const int total = 2 * leaves - 1;
  if (static_cast<int>(prefix.size()) == total) {
    out.push_back(Structure{prefix});
    if (probs) probs->push_back(std::exp(logp));
    return;
  }
  bool can_shift = shifts < leaves;
  bool can_reduce = stack >= 2;
  if (can_shift) {
    double lp = can_reduce ? log_pshift : 0.0;
    prefix.push_back(1);
    walk_sequences(leaves, shifts + 1, stack + 1, prefix, logp + lp,
                   log_pshift, log_preduce, out, probs);
    prefix.pop_back();
  }
  if (can_reduce) {
    double lp = can_shift ? log_preduce : 0.0;
    prefix.push_back(0);
    walk_sequences(leaves, shifts, stack - 1, prefix, logp + lp, log_pshift,
                   log_preduce, out, probs);
    prefix.pop_back();
  }
}

}  // namespace

BinaryTreeSRDomain::BinaryTreeSRDomain(int leaves) : leaves_(leaves) {
  if (leaves < 2) throw std::invalid_argument("BinaryTreeSRDomain: N < 2");
  if (leaves > 12)
    throw std::invalid_argument(
        "BinaryTreeSRDomain: N > 12 exceeds the enumeration-backed cap");
}

bool BinaryTreeSRDomain::is_valid(const Structure& z) const {
  if (static_cast<int>(z.bits.size()) != part_count()) return false;
  int shifts = 0, reduces = 0;
  for (int k = 0; k < part_count(); ++k) {
    if (z.bits[k])
      ++shifts;
    else
      ++reduces;
    // Prefix shifts must strictly outnumber reduces.
    if (shifts <= reduces) return false;
  }
  return shifts == leaves_;
}

Structure BinaryTreeSRDomain::map_oracle(const Vec& scores) const {
  check_scores(scores);
  std::vector<Structure> all = enumerate_structures(*this);
  double best = -std::numeric_limits<double>::infinity();
  const Structure* arg = nullptr;
  for (const Structure& z : all) {
    double v = score_of(z, scores);
    if (v > best) {
      best = v;
      arg = &z;
    }
  }
  return *arg;
}

double BinaryTreeSRDomain::structure_count() const {
  // Catalan(N-1)
  double c = 1.0;
  for (int i = 0; i < leaves_ - 1; ++i)
    c = c * 2.0 * (2.0 * i + 1.0) / (i + 2.0);
  return std::round(c);
}

std::vector<Structure> BinaryTreeSRDomain::enumerate_unsorted() const {
  std::vector<Structure> all;
  std::vector<std::uint8_t> prefix;
  walk_sequences(leaves_, 0, 0, prefix, 0.0, 0.0, 0.0, all, nullptr);
  return all;
}

std::string BinaryTreeSRDomain::bracketing(const Structure& z) const {
  if (!is_valid(z)) throw std::invalid_argument("bracketing: invalid tree");
  std::vector<std::string> stack;
  int leaf = 0;
  for (int k = 0; k < part_count(); ++k) {
    if (z.bits[k]) {
      stack.push_back(std::to_string(++leaf));
    } else {
      std::string right = stack.back();
      stack.pop_back();
      std::string left = stack.back();
      stack.pop_back();
      stack.push_back("(" + left + " " + right + ")");
    }
  }
  return stack.back();
}

SparseDist sr_tree_distribution(int leaves, double p_shift) {
  if (leaves < 2) throw std::invalid_argument("sr_tree_distribution: N < 2");
  if (!(p_shift > 0.0 && p_shift <= 1.0))
    throw std::invalid_argument("sr_tree_distribution: p_shift not in (0,1]");
  BinaryTreeSRDomain domain(leaves);  // enforces the cap
  SparseDist dist;
  std::vector<std::uint8_t> prefix;
  double lp = std::log(p_shift);
  double lq = p_shift < 1.0 ? std::log1p(-p_shift)
                            : -std::numeric_limits<double>::infinity();
  walk_sequences(leaves, 0, 0, prefix, 0.0, lp, lq, dist.support,
                 &dist.weights);
  // p_shift = 1 leaves zero-probability trees in the traversal; drop them.
  SparseDist clean;
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    if (dist.weights[i] > 0.0) {
      clean.support.push_back(dist.support[i]);
      clean.weights.push_back(dist.weights[i]);
    }
  }
  return clean;
}

}  // namespace latstruct
