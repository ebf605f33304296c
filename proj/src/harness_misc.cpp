#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <cmath>
#include <sstream>

#include "latstruct/assignment.hpp"
#include "latstruct/csv.hpp"
#include "latstruct/harness.hpp"
#include "latstruct/relax.hpp"
#include "latstruct/rng.hpp"
#include "latstruct/sparsemap.hpp"
#include "latstruct/treesr.hpp"

namespace latstruct {

namespace {

using nlohmann::json;

int write_text(const CommonConfig& common, const std::string& text,
               const char* who) {
  if (common.out_path.empty()) {
    std::cout << text;
    return kExitOk;
  }
  std::ofstream out(common.out_path, std::ios::binary);
  if (!out) {
    std::cerr << who << ": cannot open " << common.out_path << "\n";
    return kExitConfigError;
  }
  out << text;
  return kExitOk;
}

json matrix_json(const Tensor& t) {
  json rows = json::array();
  for (int i = 0; i < t.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < t.cols(); ++j) row.push_back(t.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

int cmd_treeskew(const TreeSkewConfig& config) {
  SparseDist dist = sr_tree_distribution(config.leaves, config.p_shift);
  BinaryTreeSRDomain domain(config.leaves);

  std::ostringstream buf;
  CsvWriter csv(buf);
  csv.row({"tree", "actions", "probability"});
  for (std::size_t i = 0; i < dist.support.size(); ++i) {
    std::string actions;
    for (auto b : dist.support[i].bits) actions += b ? 'S' : 'R';
    csv.row({domain.bracketing(dist.support[i]), actions,
             CsvWriter::num(dist.weights[i])});
  }
  return write_text(config.common, buf.str(), "treeskew");
}

MatchResult run_match(const MatchConfig& config) {
  int m = config.size;
  std::vector<Vec> a, b;
  if (!config.embeddings_path.empty()) {
    std::ifstream in(config.embeddings_path);
    if (!in)
      throw std::invalid_argument("match: cannot read " +
                                  config.embeddings_path);
    json j = json::parse(in);
    a = j.at("a").get<std::vector<Vec>>();
    b = j.at("b").get<std::vector<Vec>>();
    if (a.size() != b.size() || a.empty())
      throw std::invalid_argument("match: embedding lists must be non-empty "
                                  "and of equal length");
    for (const Vec& row : a)
      if (row.size() != a[0].size())
        throw std::invalid_argument("match: ragged embedding rows");
    for (const Vec& row : b)
      if (row.size() != a[0].size())
        throw std::invalid_argument("match: ragged embedding rows");
    m = static_cast<int>(a.size());
  } else {
    Rng rng(config.common.seed ^ 0x2545f491u);
    double scale = 1.0 / std::sqrt(static_cast<double>(config.embed_dim));
    a.assign(m, Vec(config.embed_dim));
    b.assign(m, Vec(config.embed_dim));
    for (auto& row : a)
      for (double& x : row) x = scale * rng.gaussian();
    for (auto& row : b)
      for (double& x : row) x = scale * rng.gaussian();
  }

  MatchResult result;
  result.scores = Tensor::matrix(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) result.scores.at(i, j) = dot(a[i], b[j]);

  SinkhornResult sk = sinkhorn(result.scores, config.gamma, 1e-9, 10000);
  result.sinkhorn_matrix = sk.transport;
  result.sinkhorn_converged = sk.converged;

  AssignmentDomain domain(m);
  SparseMapResult sm = sparsemap(domain, result.scores.data);
  result.sparsemap_matrix = Tensor({m, m}, sm.mu);
  result.sparsemap_support = static_cast<int>(sm.active_set.support.size());

  auto [perm, value] = kuhn_munkres(result.scores);
  (void)value;
  result.hard_permutation = perm;
  return result;
}

int cmd_match(const MatchConfig& config) {
  MatchResult result = run_match(config);

  json j;
  j["schema_version"] = 1;
  j["scores"] = matrix_json(result.scores);
  j["sinkhorn"] = matrix_json(result.sinkhorn_matrix);
  j["sinkhorn_converged"] = result.sinkhorn_converged;
  j["sparsemap"] = matrix_json(result.sparsemap_matrix);
  j["sparsemap_support_size"] = result.sparsemap_support;
  j["hard_match"] = result.hard_permutation;
  return write_text(config.common, j.dump(2) + "\n", "match");
}

}  // namespace latstruct
