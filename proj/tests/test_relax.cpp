#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "latstruct/arborescence.hpp"
#include "latstruct/assignment.hpp"
#include "latstruct/chain.hpp"
#include "latstruct/gradcheck.hpp"
#include "latstruct/relax.hpp"
#include "latstruct/simplex.hpp"
#include "latstruct/sparsemap.hpp"
#include "oracles.hpp"

using namespace latstruct;

namespace {

Vec random_scores(Rng& rng, int n, double scale = 1.0) {
  Vec s(n);
  for (double& v : s) v = scale * rng.gaussian();
  return s;
}

std::vector<Vec> vertices_of(const StructDomain& dom) {
  std::vector<Vec> verts;
  for (const Structure& z : enumerate_structures(dom))
    verts.push_back(to_vec(z));
  return verts;
}

}  // namespace

TEST_CASE("marginal layer values and pullbacks") {
  // One-of-K: the marginal map is softmax.
  OneOfKDomain oneofk(5);
  Rng rng(200);
  Vec s = random_scores(rng, 5, 1.5);
  DiffVec layer = marginal_layer(oneofk, s);
  Vec sm = softmax(s);
  for (int i = 0; i < 5; ++i) CHECK(layer.value[i] == doctest::Approx(sm[i]));

  // Chain with zero scores: uniform marginals.
  LinearChainDomain chain(3, 2);
  DiffVec uniform = marginal_layer(chain, Vec(8, 0.0));
  for (double m : uniform.value) CHECK(m == doctest::Approx(0.25));

  // Pullbacks match finite differences on every supported domain.
  for (int t = 0; t < 10; ++t) {
    Vec x = random_scores(rng, 5, 1.5);
    CHECK(jacobian_check([&](const Vec& p) {
            return marginal_layer(oneofk, p);
          }, x) < 1e-4);
  }
  BitVectorDomain bits(4);
  for (int t = 0; t < 10; ++t) {
    Vec x = random_scores(rng, 4, 1.5);
    CHECK(jacobian_check([&](const Vec& p) {
            return marginal_layer(bits, p);
          }, x) < 1e-4);
  }
  for (int t = 0; t < 10; ++t) {
    Vec x = random_scores(rng, 8, 1.0);
    CHECK(jacobian_check([&](const Vec& p) {
            return marginal_layer(chain, p);
          }, x) < 1e-4);
  }
  ArborescenceDomain arb(3);
  for (int t = 0; t < 10; ++t) {
    Vec x = random_scores(rng, arb.part_count(), 1.0);
    CHECK(jacobian_check([&](const Vec& p) {
            return marginal_layer(arb, p);
          }, x) < 1e-4);
  }

  // Tape-based marginals agree with the plain oracle.
  Vec xa = random_scores(rng, arb.part_count(), 1.0);
  DiffVec diff = marginal_layer(arb, xa);
  auto [plain, logz] = arb.marginals(xa);
  (void)logz;
  for (int p = 0; p < arb.part_count(); ++p)
    CHECK(diff.value[p] == doctest::Approx(plain[p]).epsilon(1e-10));

  AssignmentDomain assign(3);
  CHECK_THROWS_AS(marginal_layer(assign, Vec(9, 0.0)), UnsupportedCapability);
}

TEST_CASE("marginal outputs live in the marginal polytope") {
  Rng rng(201);
  LinearChainDomain chain(2, 2);
  ArborescenceDomain arb(2);
  for (int t = 0; t < 5; ++t) {
    Vec sc = random_scores(rng, 4, 1.5);
    Vec mu = marginal_layer(chain, sc).value;
    CHECK(testoracle::hull_residual(vertices_of(chain), mu) < 1e-6);
    Vec sa = random_scores(rng, arb.part_count(), 1.5);
    Vec mua = marginal_layer(arb, sa).value;
    CHECK(testoracle::hull_residual(vertices_of(arb), mua) < 1e-6);
  }
}

TEST_CASE("sinkhorn") {
  // Zero scores: the uniform doubly stochastic matrix.
  SinkhornResult flat = sinkhorn(Tensor::matrix(4, 4, 0.0), 1.0);
  CHECK(flat.converged);
  for (double x : flat.transport.data) CHECK(x == doctest::Approx(0.25));

  // Row and column sums are 1 within tolerance on random matrices.
  Rng rng(202);
  for (int t = 0; t < 5; ++t) {
    Tensor s = Tensor::matrix(5, 5);
    for (double& x : s.data) x = rng.gaussian();
    SinkhornResult res = sinkhorn(s, 0.7, 1e-9, 2000);
    CHECK(res.converged);
    for (int i = 0; i < 5; ++i) {
      double rs = 0.0, cs = 0.0;
      for (int j = 0; j < 5; ++j) {
        rs += res.transport.at(i, j);
        cs += res.transport.at(j, i);
      }
      CHECK(std::fabs(rs - 1.0) < 1e-7);
      CHECK(std::fabs(cs - 1.0) < 1e-7);
    }
  }

  // Dominant diagonal at low temperature approaches the identity.
  Tensor diag = Tensor::matrix(3, 3, 0.0);
  for (int i = 0; i < 3; ++i) diag.at(i, i) = 10.0;
  SinkhornResult hard = sinkhorn(diag, 0.1, 1e-9, 5000);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(std::fabs(hard.transport.at(i, j) - (i == j ? 1.0 : 0.0)) < 1e-3);

  // Adding a constant to one full row changes nothing after convergence.
  Tensor base = Tensor::matrix(4, 4);
  for (double& x : base.data) x = rng.gaussian();
  Tensor shifted = base;
  for (int j = 0; j < 4; ++j) shifted.at(2, j) += 3.21;
  SinkhornResult a = sinkhorn(base, 1.0, 1e-12, 5000);
  SinkhornResult b = sinkhorn(shifted, 1.0, 1e-12, 5000);
  for (int i = 0; i < 16; ++i)
    CHECK(std::fabs(a.transport.data[i] - b.transport.data[i]) < 1e-7);

  // Hitting max_iter flags the result as unconverged.
  Tensor hard_scores = Tensor::matrix(4, 4);
  for (double& x : hard_scores.data) x = rng.gaussian();
  SinkhornResult cut = sinkhorn(hard_scores, 0.05, 1e-15, 2);
  CHECK_FALSE(cut.converged);
  CHECK(cut.iterations == 2);

  // Pullback matches finite differences through the unrolled iterations.
  for (int t = 0; t < 3; ++t) {
    Vec flat_scores = random_scores(rng, 9, 1.0);
    double err = jacobian_check(
        [](const Vec& p) {
          SinkhornResult res = sinkhorn(Tensor({3, 3}, p), 1.0, 1e-12, 2000);
          auto pb = res.pullback;
          return DiffVec{res.transport.data,
                         [pb](const Vec& v) {
                           return pb(Tensor({3, 3}, v)).data;
                         },
                         true};
        },
        flat_scores);
    CHECK(err < 1e-6);
  }

  CHECK_THROWS_AS(sinkhorn(Tensor::matrix(3, 3, 0.0), 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(sinkhorn(Tensor({2, 3}, Vec(6, 0.0)), 1.0),
                  std::invalid_argument);
}

TEST_CASE("sparsemap") {
  // One-of-K: mu equals sparsemax.
  OneOfKDomain oneofk(6);
  Rng rng(203);
  for (int t = 0; t < 20; ++t) {
    Vec s = random_scores(rng, 6, 1.5);
    SparseMapResult res = sparsemap(oneofk, s);
    CHECK(res.converged);
    Vec sx = sparsemax(s).probs;
    for (int i = 0; i < 6; ++i) CHECK(std::fabs(res.mu[i] - sx[i]) < 1e-9);
  }

  // Large-margin scores land exactly on the MAP vertex.
  LinearChainDomain chain(2, 2);
  Vec margin(4, 0.0);
  margin[LinearChainDomain::part_index(1, 1, 0, 2)] = 10.0;
  SparseMapResult vertex = sparsemap(chain, margin);
  CHECK(vertex.active_set.support.size() == 1);
  CHECK(score_of(vertex.active_set.support[0], margin) == 10.0);
  for (double x : vertex.mu) CHECK((x == 0.0 || x == 1.0));

  // Chain solutions match the brute-force QP over the enumerated hull.
  std::vector<Vec> verts = vertices_of(chain);
  for (int t = 0; t < 20; ++t) {
    Vec s = random_scores(rng, 4, 1.5);
    SparseMapResult res = sparsemap(chain, s);
    Vec oracle = testoracle::hull_qp(verts, s);
    for (int i = 0; i < 4; ++i) CHECK(std::fabs(res.mu[i] - oracle[i]) < 1e-6);

    // Witness distribution reproduces mu.
    Vec recomposed(4, 0.0);
    for (std::size_t k = 0; k < res.active_set.support.size(); ++k) {
      Vec zv = to_vec(res.active_set.support[k]);
      for (int i = 0; i < 4; ++i)
        recomposed[i] += res.active_set.weights[k] * zv[i];
    }
    for (int i = 0; i < 4; ++i)
      CHECK(std::fabs(recomposed[i] - res.mu[i]) < 1e-7);

    // Support size within the dimension bound.
    CHECK(res.active_set.support.size() <= 5);

    // Objective is non-decreasing over outer iterations.
    for (std::size_t k = 1; k < res.objective_trace.size(); ++k)
      CHECK(res.objective_trace[k] >= res.objective_trace[k - 1] - 1e-12);

    // The solution stays inside the polytope.
    CHECK(testoracle::hull_residual(verts, res.mu) < 1e-6);
  }

  // Arborescence domain exercises a non-trivial oracle inside the solver.
  ArborescenceDomain arb(3);
  std::vector<Vec> arb_verts = vertices_of(arb);
  for (int t = 0; t < 5; ++t) {
    Vec s = random_scores(rng, arb.part_count(), 1.0);
    SparseMapResult res = sparsemap(arb, s);
    Vec oracle = testoracle::hull_qp(arb_verts, s);
    for (int i = 0; i < arb.part_count(); ++i)
      CHECK(std::fabs(res.mu[i] - oracle[i]) < 1e-5);
  }

  // Pullback solves the active-set KKT system; compare to finite
  // differences at support-stable points.
  int done = 0;
  while (done < 5) {
    Vec s = random_scores(rng, 4, 1.5);
    auto support_of = [&](const Vec& x) {
      auto sup = sparsemap(chain, x).active_set.support;
      std::sort(sup.begin(), sup.end());
      return sup;
    };
    auto base = support_of(s);
    bool stable = true;
    for (int i = 0; i < 4 && stable; ++i)
      for (double d : {2e-6, -2e-6}) {
        Vec x = s;
        x[i] += d;
        if (support_of(x) != base) stable = false;
      }
    if (!stable) continue;
    double err = jacobian_check(
        [&](const Vec& p) {
          SparseMapResult res = sparsemap(chain, p);
          return DiffVec{res.mu, res.pullback, true};
        },
        s);
    CHECK(err < 1e-4);
    ++done;
  }
}

TEST_CASE("perturbed argmax") {
  OneOfKDomain oneofk(4);
  Rng rng(204);
  Vec s = random_scores(rng, 4, 1.0);

  // Zero noise: the MAP vertex with zero variance and a zero pullback.
  PerturbedArgmax map0 = perturbed_argmax(oneofk, s, 0.0, 50, rng);
  Vec z0 = to_vec(argmax_oracle(oneofk, s));
  for (int i = 0; i < 4; ++i) CHECK(map0.mean[i] == z0[i]);
  Vec pb0 = map0.pullback({1.0, -2.0, 0.5, 0.0});
  for (double x : pb0) CHECK(x == 0.0);

  // Gumbel noise, scale 1: the mean approaches softmax(s).
  PerturbedArgmax smooth =
      perturbed_argmax(oneofk, s, 1.0, 100000, rng, NoiseKind::kGumbel);
  Vec sm = softmax(s);
  for (int i = 0; i < 4; ++i) CHECK(std::fabs(smooth.mean[i] - sm[i]) < 0.01);

  // Monte Carlo error shrinks like 1/sqrt(M): the RMS l2 error ratio between
  // M=100 and M=10000 concentrates near 10 over repeated trials.
  double err_small = 0.0, err_big = 0.0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    PerturbedArgmax a = perturbed_argmax(oneofk, s, 1.0, 100, rng);
    PerturbedArgmax b = perturbed_argmax(oneofk, s, 1.0, 10000, rng);
    double e1 = 0.0, e2 = 0.0;
    for (int i = 0; i < 4; ++i) {
      e1 += (a.mean[i] - sm[i]) * (a.mean[i] - sm[i]);
      e2 += (b.mean[i] - sm[i]) * (b.mean[i] - sm[i]);
    }
    err_small += e1 / trials;
    err_big += e2 / trials;
  }
  double ratio = std::sqrt(err_small / err_big);
  CHECK(ratio > 5.0);
  CHECK(ratio < 20.0);

  // Structured domain: the mean stays in the marginal polytope.
  LinearChainDomain chain(2, 2);
  Vec cs = random_scores(rng, 4, 1.0);
  PerturbedArgmax pc = perturbed_argmax(chain, cs, 1.0, 2000, rng);
  CHECK(testoracle::hull_residual(vertices_of(chain), pc.mean) < 1e-6);

  // Gaussian noise pullback has the right sign structure on a peaked
  // coordinate (sanity of the noise-correlation estimator).
  PerturbedArgmax pg =
      perturbed_argmax(oneofk, s, 1.0, 50000, rng, NoiseKind::kGaussian);
  Vec seed(4, 0.0);
  int best = 0;
  for (int i = 1; i < 4; ++i)
    if (s[i] > s[best]) best = i;
  seed[best] = 1.0;
  Vec corr = pg.pullback(seed);
  CHECK(corr[best] > 0.0);  // raising the winner's score raises its mean
}
