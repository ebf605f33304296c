#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "latstruct/diff.hpp"
#include "latstruct/rng.hpp"
#include "latstruct/tensor.hpp"

namespace latstruct {

// Binary indicator vector over a domain's parts; a vertex of the marginal
// polytope.
struct Structure {
  std::vector<std::uint8_t> bits;

  bool operator==(const Structure& o) const { return bits == o.bits; }
  bool operator<(const Structure& o) const { return bits < o.bits; }
};

Vec to_vec(const Structure& z);
double score_of(const Structure& z, const Vec& s);

// Finite-support distribution over structures; weights on the simplex.
struct SparseDist {
  std::vector<Structure> support;
  Vec weights;
};

struct UnsupportedCapability : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EnumerationCapExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A part-factored structured domain: structures score as <z, s>.
class StructDomain {
 public:
  virtual ~StructDomain() = default;

  virtual std::string name() const = 0;
  virtual int part_count() const = 0;

  virtual bool has_marginals() const { return false; }
  virtual bool has_sampler() const { return false; }
  virtual bool has_topk() const { return false; }
  virtual bool enumerable() const { return false; }

  virtual bool is_valid(const Structure& z) const = 0;

  // Maximizer of <z, s> over the domain; deterministic tie-break.
  virtual Structure map_oracle(const Vec& scores) const = 0;

  // |Z| (used for enumeration-cap refusal). Unlimited domains return +inf.
  virtual double structure_count() const = 0;

  // All valid structures, unordered; only when enumerable().
  virtual std::vector<Structure> enumerate_unsorted() const;

  // (part marginals, logZ) under the Gibbs distribution; only when
  // has_marginals().
  virtual std::pair<Vec, double> marginals(const Vec& scores) const;

  // Marginals with an exact pullback (reverse mode through the inference
  // recursions); only when has_marginals().
  virtual DiffVec diff_marginals(const Vec& scores) const;

  // Exact Gibbs sample; only when has_sampler().
  virtual Structure sample_gibbs(const Vec& scores, Rng& rng) const;

  // d log Pr(z | s) / ds = z - E[Z]; only when has_marginals().
  Vec logprob_grad(const Vec& scores, const Structure& z) const;

 protected:
  void check_scores(const Vec& scores) const;
};

// All valid structures, each exactly once, in lexicographic bit order.
// Refuses (with a size estimate) when |Z| exceeds the cap.
std::vector<Structure> enumerate_structures(const StructDomain& domain,
                                            std::size_t cap = 1000000);

// Maximizer of <z, s>; validates score length first.
Structure argmax_oracle(const StructDomain& domain, const Vec& scores);

// Exact normalized Gibbs distribution over all structures, by enumeration.
SparseDist gibbs_enum(const StructDomain& domain, const Vec& scores,
                      std::size_t cap = 1000000);

// log sum_z exp<z, s> by enumeration.
double gibbs_enum_logz(const StructDomain& domain, const Vec& scores,
                       std::size_t cap = 1000000);

// Exactly one of K parts on.
class OneOfKDomain : public StructDomain {
 public:
  explicit OneOfKDomain(int k);
  std::string name() const override { return "one_of_k"; }
  int part_count() const override { return k_; }
  bool has_marginals() const override { return true; }
  bool has_sampler() const override { return true; }
  bool has_topk() const override { return true; }
  bool enumerable() const override { return true; }
  bool is_valid(const Structure& z) const override;
  Structure map_oracle(const Vec& scores) const override;
  double structure_count() const override { return k_; }
  std::vector<Structure> enumerate_unsorted() const override;
  std::pair<Vec, double> marginals(const Vec& scores) const override;
  DiffVec diff_marginals(const Vec& scores) const override;
  Structure sample_gibbs(const Vec& scores, Rng& rng) const override;

 private:
  int k_;
};

// Unconstrained bit vector; coordinates are independent under Gibbs.
class BitVectorDomain : public StructDomain {
 public:
  explicit BitVectorDomain(int d);
  std::string name() const override { return "bit_vector"; }
  int part_count() const override { return d_; }
  bool has_marginals() const override { return true; }
  bool has_sampler() const override { return true; }
  bool enumerable() const override { return true; }
  bool is_valid(const Structure& z) const override;
  Structure map_oracle(const Vec& scores) const override;
  double structure_count() const override;
  std::vector<Structure> enumerate_unsorted() const override;
  std::pair<Vec, double> marginals(const Vec& scores) const override;
  DiffVec diff_marginals(const Vec& scores) const override;
  Structure sample_gibbs(const Vec& scores, Rng& rng) const override;

 private:
  int d_;
};

}  // namespace latstruct
