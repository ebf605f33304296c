#include "latstruct/diff.hpp"

#include <stdexcept>

namespace latstruct {

int LayerGraph::input(Vec value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr, true});
  return static_cast<int>(nodes_.size()) - 1;
}

int LayerGraph::apply(std::vector<int> parents, Vec value,
                      MultiPullback pullback, bool exact) {
  for (int p : parents)
    if (p < 0 || p >= static_cast<int>(nodes_.size()))
      throw std::invalid_argument("LayerGraph::apply: bad parent index");
  nodes_.push_back(
      Node{std::move(value), std::move(parents), std::move(pullback), exact});
  return static_cast<int>(nodes_.size()) - 1;
}

int LayerGraph::apply1(int parent, const DiffVec& layer) {
  auto pb = layer.pullback;
  return apply(
      {parent}, layer.value,
      [pb](const Vec& v) { return std::vector<Vec>{pb(v)}; }, layer.exact);
}

std::vector<Vec> LayerGraph::backprop(int out, const Vec& seed) const {
  if (out < 0 || out >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("backprop: output index out of range");
  if (seed.size() != nodes_[out].value.size())
    throw std::invalid_argument("backprop: seed shape does not match output");

  std::vector<Vec> cot(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    cot[i] = Vec(nodes_[i].value.size(), 0.0);
  cot[out] = seed;

  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (n.parents.empty()) continue;
    bool live = false;
    for (double x : cot[i])
      if (x != 0.0) live = true;
    if (!live) continue;
    std::vector<Vec> parent_cots = n.pullback(cot[i]);
    if (parent_cots.size() != n.parents.size())
      throw std::runtime_error("backprop: pullback arity mismatch");
    for (std::size_t k = 0; k < n.parents.size(); ++k) {
      Vec& dst = cot[n.parents[k]];
      if (parent_cots[k].size() != dst.size())
        throw std::runtime_error("backprop: pullback shape mismatch");
      for (std::size_t j = 0; j < dst.size(); ++j)
        dst[j] += parent_cots[k][j];
    }
  }
  return cot;
}

}  // namespace latstruct
