#pragma once

#include <vector>

#include "impulsim/expr.hpp"
#include "impulsim/numeric.hpp"

namespace impulsim {

/// n expression components over a shared variable environment.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(std::vector<Expr> components)
      : components_(std::move(components)) {}

  int dim() const { return static_cast<int>(components_.size()); }
  const std::vector<Expr>& components() const { return components_; }

  void eval_into(const EvalEnv& env, Vec& out) const {
    out.resize(components_.size());
    for (std::size_t i = 0; i < components_.size(); ++i)
      out[i] = components_[i].eval(env);
  }
  Vec eval(const EvalEnv& env) const {
    Vec out;
    eval_into(env, out);
    return out;
  }

 private:
  std::vector<Expr> components_;
};

/// Right-hand side data of dx = f(t,x,u,v) dt + sum_a g_a(x) du_a.
/// The g_a depend on x only; the guard aborts integration when |x|_inf
/// exceeds it (the built-in growth hypothesis proxy).
struct Dynamics {
  int n = 0, m = 0, l = 0;
  VectorField drift;                // n components over (t, x, u, v)
  std::vector<VectorField> g;       // m fields, n components over x
  double growth_guard = 1e8;

  /// Checks dimension consistency and that every g_a references x only.
  /// Throws ConfigError on violation.
  void validate() const;
};

}  // namespace impulsim
