#include "latstruct/tape.hpp"

namespace latstruct {

std::vector<double> Tape::gradient_multi(
    const std::vector<std::pair<int, double>>& seeds) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  for (const auto& [idx, seed] : seeds) {
    if (idx < 0 || idx >= static_cast<int>(nodes_.size()))
      throw std::invalid_argument("Tape::gradient: seed index out of range");
    adj[idx] += seed;
  }
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    double a = adj[i];
    if (a == 0.0) continue;
    const Node& n = nodes_[i];
    if (n.a >= 0) adj[n.a] += a * n.da;
    if (n.b >= 0) adj[n.b] += a * n.db;
  }
  return adj;
}

}  // namespace latstruct
