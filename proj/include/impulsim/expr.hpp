#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "impulsim/errors.hpp"

namespace impulsim {

/// Which family a variable belongs to: time t, state x_i, impulsive control
/// u_i, ordinary control v_i, or the free sequence parameter k.
enum class VarKind { T, X, U, V, K };

struct Variable {
  VarKind kind = VarKind::T;
  int index = 0;  // 1-based for X/U/V, unused for T/K

  bool operator==(const Variable& o) const {
    return kind == o.kind && index == o.index;
  }
  std::string name() const;
};

/// Dimensions a parsed expression is validated against. Zero means the
/// corresponding variable family is not admitted.
struct ExprDims {
  int n = 0;  // x1..xn
  int m = 0;  // u1..um
  int l = 0;  // v1..vl
  bool allow_t = true;
  bool allow_k = true;
};

/// Variable assignment for evaluation. Spans must cover the indices the
/// expression uses.
struct EvalEnv {
  double t = 0.0;
  double k = 0.0;
  std::span<const double> x{};
  std::span<const double> u{};
  std::span<const double> v{};

  double lookup(const Variable& var) const;
};

namespace detail {
struct ExprNode;
}

/// Immutable arithmetic expression tree over t, x_i, u_i, v_i and k.
/// Cheap to copy (shared handle); evaluation is reentrant and thread-safe.
class Expr {
 public:
  Expr() = default;  // empty handle; evaluating it is a usage error

  static Expr literal(double value);
  static Expr variable(Variable var);

  bool empty() const { return node_ == nullptr; }

  /// IEEE-double value of the tree. Throws EvalError on division by zero,
  /// log/sqrt of a negative argument, or any non-finite intermediate.
  double eval(const EvalEnv& env) const;

  /// Symbolic derivative with respect to var. Throws
  /// UnsupportedDerivativeError when an abs node depends on var.
  Expr derivative(const Variable& var) const;

  /// Whether var appears anywhere in the tree.
  bool contains(const Variable& var) const;

  /// New tree with variable k replaced by the constant value (folded).
  Expr substitute_k(double value) const;

  /// Text form that parses back to a structurally equal tree.
  std::string str() const;

  /// Structural equality (same shape, same variables, bit-equal literals).
  bool equals(const Expr& other) const;

  // Expression algebra; results are constant-folded and 0/1-simplified.
  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  static Expr pow(const Expr& base, const Expr& exponent);
  static Expr sin(const Expr& a);
  static Expr cos(const Expr& a);
  static Expr exp(const Expr& a);
  static Expr log(const Expr& a);
  static Expr abs(const Expr& a);
  static Expr sqrt(const Expr& a);

  /// Variables used by the tree, without duplicates.
  std::vector<Variable> variables() const;

 private:
  explicit Expr(std::shared_ptr<const detail::ExprNode> node)
      : node_(std::move(node)) {}
  std::shared_ptr<const detail::ExprNode> node_;
  friend struct detail::ExprNode;
  friend class Parser;
};

/// Parses source against the grammar
///   expr    := term (('+'|'-') term)*
///   term    := unary (('*'|'/') unary)*
///   unary   := '-' unary | power
///   power   := atom ('^' unary)?          (right associative)
///   atom    := number | ident | ident '(' expr ')' | '(' expr ')'
/// Identifiers: t, k, x<i>, u<i>, v<i>, sin, cos, exp, log, abs, sqrt.
/// Throws ParseError (with position) on syntax errors, unknown identifiers
/// or arity mismatches; variable indices are validated against dims.
Expr parse_expression(std::string_view source, const ExprDims& dims);

}  // namespace impulsim
