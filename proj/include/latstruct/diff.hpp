#pragma once

#include <functional>
#include <string>
#include <vector>

#include "latstruct/tensor.hpp"

namespace latstruct {

// A vector value paired with a vector-Jacobian-product closure. `exact` is
// false for surrogate layers, whose pullback is a construction rather than a
// derivative; gradient-check tooling skips those.
struct DiffVec {
  Vec value;
  std::function<Vec(const Vec&)> pullback;
  bool exact = true;
};

// Pullback from one cotangent to one cotangent per parent.
using MultiPullback = std::function<std::vector<Vec>(const Vec&)>;

// Per-computation, append-only composition tape at the layer level.
// Nodes are recorded in evaluation order; backprop applies pullbacks in
// reverse, accumulating cotangents at every node.
class LayerGraph {
 public:
  int input(Vec value);
  int apply(std::vector<int> parents, Vec value, MultiPullback pullback,
            bool exact = true);
  // Convenience for single-input layers.
  int apply1(int parent, const DiffVec& layer);

  const Vec& value(int node) const { return nodes_[node].value; }
  bool exact(int node) const { return nodes_[node].exact; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds `out` with `seed` and returns the cotangent at every node.
  // Throws on any shape mismatch between seeds, values, and pullback results.
  std::vector<Vec> backprop(int out, const Vec& seed) const;

 private:
  struct Node {
    Vec value;
    std::vector<int> parents;
    MultiPullback pullback;  // empty for inputs
    bool exact = true;
  };
  std::vector<Node> nodes_;
};

}  // namespace latstruct
