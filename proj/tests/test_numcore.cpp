#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "latstruct/diff.hpp"
#include "latstruct/gradcheck.hpp"
#include "latstruct/rng.hpp"
#include "latstruct/simplex.hpp"
#include "latstruct/tape.hpp"
#include "latstruct/tensor.hpp"

using namespace latstruct;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("logsumexp") {
  CHECK(logsumexp({0.0, 0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(logsumexp({1000.0, 1000.0}) ==
        doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
  CHECK(logsumexp({-3.25}) == doctest::Approx(-3.25));
  CHECK(logsumexp({-kInf, -kInf}) == -kInf);
  CHECK(logsumexp({-kInf, 2.0}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(logsumexp({}), std::invalid_argument);
}

TEST_CASE("tensor shape checks") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), std::invalid_argument);
  Tensor t = Tensor::matrix(2, 3, 1.5);
  CHECK(t.at(1, 2) == 1.5);
  t.at(0, 1) = std::nan("");
  CHECK_THROWS_AS(t.check_entries("test"), std::invalid_argument);
  t.at(0, 1) = -kInf;
  CHECK_NOTHROW(t.check_entries("test"));
}

TEST_CASE("rng determinism and splitting") {
  Rng a(42), b(42);
  for (int i = 0; i < 200; ++i) {
    CHECK(a.next_u64() == b.next_u64());
    CHECK(a.gaussian() == b.gaussian());
    CHECK(a.gumbel() == b.gumbel());
  }
  Rng parent(7);
  Rng c1 = parent.split();
  Rng c2 = parent.split();
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (c1.next_u64() == c2.next_u64()) ++same;
  CHECK(same == 0);

  Rng u(3);
  for (int i = 0; i < 1000; ++i) {
    double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    double y = u.uniform_pos();
    CHECK(y > 0.0);
    CHECK(y < 1.0);
  }
}

TEST_CASE("rng categorical") {
  Rng rng(11);
  std::vector<long> counts(3, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++counts[rng.categorical({1.0, 2.0, 1.0})];
  CHECK(std::fabs(counts[1] / double(n) - 0.5) < 0.02);
  CHECK_THROWS_AS(rng.categorical({}), std::invalid_argument);
  CHECK_THROWS_AS(rng.categorical({0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("scalar tape: values and gradients") {
  Tape t;
  int x = t.leaf(0.7), y = t.leaf(-1.2);
  TVar vx(t, x), vy(t, y);
  TVar f = exp(vx * vy) + log(vx + 2.0) * vy;
  double fx = std::exp(0.7 * -1.2) + std::log(2.7) * -1.2;
  CHECK(f.value() == doctest::Approx(fx).epsilon(1e-12));

  std::vector<double> adj = t.gradient(f.i);
  // d/dx = y exp(xy) + y/(x+2); d/dy = x exp(xy) + log(x+2)
  double gx = -1.2 * std::exp(0.7 * -1.2) + (-1.2) / 2.7;
  double gy = 0.7 * std::exp(0.7 * -1.2) + std::log(2.7);
  CHECK(adj[x] == doctest::Approx(gx).epsilon(1e-10));
  CHECK(adj[y] == doctest::Approx(gy).epsilon(1e-10));
}

TEST_CASE("scalar tape: logaddexp and stop_gradient") {
  Tape t;
  int a = t.leaf(800.0), b = t.leaf(802.0);
  int l = t.logaddexp(a, b);
  CHECK(t.val(l) == doctest::Approx(802.0 + std::log1p(std::exp(-2.0))));
  std::vector<double> adj = t.gradient(l);
  double w = std::exp(800.0 - t.val(l));
  CHECK(adj[a] == doctest::Approx(w).epsilon(1e-10));
  CHECK(adj[b] == doctest::Approx(1.0 - w).epsilon(1e-10));

  Tape t2;
  int x = t2.leaf(3.0);
  int sg = t2.stop_gradient(x);
  int y = t2.mul(sg, x);  // value x^2, gradient only via the live factor
  CHECK(t2.val(y) == 9.0);
  std::vector<double> adj2 = t2.gradient(y);
  CHECK(adj2[x] == doctest::Approx(3.0));
}

TEST_CASE("tape pullback linearity") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Vec s(4);
    for (double& v : s) v = rng.gaussian();
    DiffVec layer = softmax_layer(s);
    Vec v1(4), v2(4);
    for (double& v : v1) v = rng.gaussian();
    for (double& v : v2) v = rng.gaussian();
    double a = rng.gaussian(), b = rng.gaussian();
    Vec combo(4);
    for (int i = 0; i < 4; ++i) combo[i] = a * v1[i] + b * v2[i];
    Vec lhs = layer.pullback(combo);
    Vec p1 = layer.pullback(v1), p2 = layer.pullback(v2);
    for (int i = 0; i < 4; ++i)
      CHECK(lhs[i] ==
            doctest::Approx(a * p1[i] + b * p2[i]).epsilon(1e-10));
  }
}

TEST_CASE("layer graph: identity chain and linear pullback") {
  LayerGraph g;
  int x = g.input({1.0, 2.0, 3.0});
  auto identity = [](const Vec& v) { return std::vector<Vec>{v}; };
  int h = g.apply({x}, g.value(x), identity);
  int y = g.apply({h}, g.value(h), identity);
  Vec seed{0.3, -0.7, 2.0};
  auto cot = g.backprop(y, seed);
  for (int i = 0; i < 3; ++i) CHECK(cot[x][i] == seed[i]);

  // y = W x with W fixed: pullback is W^T v.
  std::vector<Vec> W = {{1.0, -2.0, 0.5}, {0.0, 3.0, 1.0}};
  LayerGraph g2;
  int x2 = g2.input({0.2, -1.0, 0.7});
  Vec yv(2, 0.0);
  for (int r = 0; r < 2; ++r) yv[r] = dot(W[r], g2.value(x2));
  int y2 = g2.apply({x2}, yv, [W](const Vec& v) {
    Vec out(3, 0.0);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c) out[c] += W[r][c] * v[r];
    return std::vector<Vec>{out};
  });
  Vec seed2{1.0, -1.0};
  auto cot2 = g2.backprop(y2, seed2);
  for (int c = 0; c < 3; ++c)
    CHECK(cot2[x2][c] == doctest::Approx(W[0][c] - W[1][c]));

  CHECK_THROWS_AS(g2.backprop(y2, Vec{1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("two-layer composition matches finite differences") {
  // softmax followed by a fixed quadratic-ish smooth map.
  std::vector<Vec> W = {{0.5, -1.0, 2.0, 0.1}, {1.5, 0.3, -0.2, 0.7}};
  auto full = [&](const Vec& s) {
    Vec z = softmax(s);
    Vec out(2);
    for (int r = 0; r < 2; ++r) out[r] = std::tanh(dot(W[r], z));
    return out;
  };
  auto layered = [&](const Vec& s) {
    LayerGraph g;
    int in = g.input(s);
    DiffVec sm = softmax_layer(s);
    int mid = g.apply1(in, sm);
    Vec z = g.value(mid);
    Vec out(2);
    Vec pre(2);
    for (int r = 0; r < 2; ++r) {
      pre[r] = dot(W[r], z);
      out[r] = std::tanh(pre[r]);
    }
    int top = g.apply({mid}, out, [W, pre](const Vec& v) {
      Vec back(4, 0.0);
      for (int r = 0; r < 2; ++r) {
        double d = (1.0 - std::tanh(pre[r]) * std::tanh(pre[r])) * v[r];
        for (int c = 0; c < 4; ++c) back[c] += W[r][c] * d;
      }
      return std::vector<Vec>{back};
    });
    return std::make_tuple(std::move(g), in, top);
  };

  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Vec s(4);
    for (double& v : s) v = rng.gaussian();
    Tensor fd = finite_diff_jacobian(full, s, 1e-6);
    auto [g, in, top] = layered(s);
    for (int r = 0; r < 2; ++r) {
      Vec seed(2, 0.0);
      seed[r] = 1.0;
      auto cot = g.backprop(top, seed);
      for (int c = 0; c < 4; ++c) {
        double denom = std::max(1.0, std::fabs(fd.at(r, c)));
        CHECK(std::fabs(cot[in][c] - fd.at(r, c)) / denom < 1e-5);
      }
    }
  }
}

TEST_CASE("finite_diff_jacobian basics") {
  auto ident = [](const Vec& v) { return v; };
  Tensor j = finite_diff_jacobian(ident, {0.3, -0.2, 1.1}, 1e-6);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      CHECK(std::fabs(j.at(r, c) - (r == c ? 1.0 : 0.0)) < 1e-10);

  // softmax at the zero vector: (1/K) I - (1/K^2) 11^T.
  const int k = 4;
  auto sm = [](const Vec& v) { return softmax(v); };
  Tensor js = finite_diff_jacobian(sm, Vec(k, 0.0), 1e-6);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      double expect = (r == c ? 1.0 / k : 0.0) - 1.0 / (k * k);
      CHECK(std::fabs(js.at(r, c) - expect) < 1e-6);
    }

  // sparsemax with support {0, 1}: closed-form pullback agrees.
  Vec point{0.8, 0.4, -0.2};
  auto sx = [](const Vec& v) { return sparsemax(v).probs; };
  Tensor jx = finite_diff_jacobian(sx, point, 1e-6);
  EntmaxSolution sol = sparsemax(point);
  for (int r = 0; r < 3; ++r) {
    Vec seed(3, 0.0);
    seed[r] = 1.0;
    Vec row = entmax_pullback(sol, seed);
    for (int c = 0; c < 3; ++c) CHECK(std::fabs(jx.at(r, c) - row[c]) < 1e-6);
  }

  auto bad = [](const Vec& v) {
    Vec out = v;
    out[1] = std::log(v[0]);  // NaN for negative input
    return out;
  };
  bool threw = false;
  try {
    finite_diff_jacobian(bad, {-1.0, 0.0}, 1e-6);
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
  }
  CHECK(threw);
}
