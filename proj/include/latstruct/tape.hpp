#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "latstruct/tensor.hpp"

namespace latstruct {

// Append-only scalar reverse-mode tape. A tape is confined to one computation;
// values are immutable once recorded. Each node stores its local partials, so
// the backward sweep is a single reverse pass accumulating adjoints.
class Tape {
 public:
  struct Node {
    double val;
    int a = -1, b = -1;
    double da = 0.0, db = 0.0;
  };

  int leaf(double v) { return push(v); }

  int add(int a, int b) { return push(val(a) + val(b), a, 1.0, b, 1.0); }
  int sub(int a, int b) { return push(val(a) - val(b), a, 1.0, b, -1.0); }
  int mul(int a, int b) {
    return push(val(a) * val(b), a, val(b), b, val(a));
  }
  int div(int a, int b) {
    double vb = val(b);
    return push(val(a) / vb, a, 1.0 / vb, b, -val(a) / (vb * vb));
  }
  int neg(int a) { return push(-val(a), a, -1.0); }
  int add_c(int a, double c) { return push(val(a) + c, a, 1.0); }
  int mul_c(int a, double c) { return push(val(a) * c, a, c); }
  int exp_(int a) {
    double e = std::exp(val(a));
    return push(e, a, e);
  }
  int log_(int a) { return push(std::log(val(a)), a, 1.0 / val(a)); }

  // Stable log(exp(a) + exp(b)); partials are the softmax weights.
  // -inf operands denote masked-out terms.
  int logaddexp(int a, int b) {
    double va = val(a), vb = val(b);
    if (is_neg_inf(va) && is_neg_inf(vb))
      return push(-std::numeric_limits<double>::infinity(), a, 0.0, b, 0.0);
    double m = std::max(va, vb);
    double ea = std::exp(va - m), eb = std::exp(vb - m);
    double s = ea + eb;
    return push(m + std::log(s), a, ea / s, b, eb / s);
  }

  // Forward value passes through; backward contributes nothing.
  int stop_gradient(int a) { return push(val(a), a, 0.0); }

  double val(int i) const { return nodes_[i].val; }
  std::size_t size() const { return nodes_.size(); }

  // Reverse sweep seeded with `seed` at node `out`; adjoint per node.
  std::vector<double> gradient(int out, double seed = 1.0) const {
    return gradient_multi({{out, seed}});
  }

  // Vector-Jacobian product: several seeded outputs at once.
  std::vector<double> gradient_multi(
      const std::vector<std::pair<int, double>>& seeds) const;

 private:
  int push(double v, int a = -1, double da = 0.0, int b = -1,
           double db = 0.0) {
    nodes_.push_back(Node{v, a, b, da, db});
    return static_cast<int>(nodes_.size()) - 1;
  }

  std::vector<Node> nodes_;
};

// Handle giving tape variables value-like syntax; lets the inference
// recursions be written once and instantiated with double or TVar.
struct TVar {
  Tape* tape = nullptr;
  int i = -1;

  TVar() = default;
  TVar(Tape& t, int idx) : tape(&t), i(idx) {}

  double value() const { return tape->val(i); }
};

inline TVar operator+(TVar a, TVar b) { return {*a.tape, a.tape->add(a.i, b.i)}; }
inline TVar operator-(TVar a, TVar b) { return {*a.tape, a.tape->sub(a.i, b.i)}; }
inline TVar operator*(TVar a, TVar b) { return {*a.tape, a.tape->mul(a.i, b.i)}; }
inline TVar operator/(TVar a, TVar b) { return {*a.tape, a.tape->div(a.i, b.i)}; }
inline TVar operator-(TVar a) { return {*a.tape, a.tape->neg(a.i)}; }
inline TVar operator+(TVar a, double c) { return {*a.tape, a.tape->add_c(a.i, c)}; }
inline TVar operator-(TVar a, double c) { return {*a.tape, a.tape->add_c(a.i, -c)}; }
inline TVar operator*(TVar a, double c) { return {*a.tape, a.tape->mul_c(a.i, c)}; }
inline TVar operator*(double c, TVar a) { return a * c; }
inline TVar exp(TVar a) { return {*a.tape, a.tape->exp_(a.i)}; }
inline TVar log(TVar a) { return {*a.tape, a.tape->log_(a.i)}; }
inline TVar logaddexp(TVar a, TVar b) {
  return {*a.tape, a.tape->logaddexp(a.i, b.i)};
}
inline double value_of(TVar a) { return a.value(); }

inline double logaddexp(double a, double b) {
  if (is_neg_inf(a) && is_neg_inf(b)) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
inline double value_of(double a) { return a; }
// Unqualified exp/log in generic code must resolve for double too.
inline double exp(double a) { return std::exp(a); }
inline double log(double a) { return std::log(a); }

}  // namespace latstruct
