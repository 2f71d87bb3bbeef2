#include "impulsim/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "impulsim/numeric.hpp"

namespace impulsim {

std::string Variable::name() const {
  switch (kind) {
    case VarKind::T: return "t";
    case VarKind::K: return "k";
    case VarKind::X: return "x" + std::to_string(index);
    case VarKind::U: return "u" + std::to_string(index);
    case VarKind::V: return "v" + std::to_string(index);
  }
  return "?";
}

double EvalEnv::lookup(const Variable& var) const {
  switch (var.kind) {
    case VarKind::T: return t;
    case VarKind::K: return k;
    case VarKind::X:
      if (var.index < 1 || static_cast<std::size_t>(var.index) > x.size())
        throw EvalError("variable " + var.name() + " not assigned");
      return x[var.index - 1];
    case VarKind::U:
      if (var.index < 1 || static_cast<std::size_t>(var.index) > u.size())
        throw EvalError("variable " + var.name() + " not assigned");
      return u[var.index - 1];
    case VarKind::V:
      if (var.index < 1 || static_cast<std::size_t>(var.index) > v.size())
        throw EvalError("variable " + var.name() + " not assigned");
      return v[var.index - 1];
  }
  throw EvalError("bad variable");
}

namespace detail {

enum class Op {
  Lit, Var,
  Neg, Sin, Cos, Exp, Log, Abs, Sqrt,
  Add, Sub, Mul, Div, Pow
};

struct ExprNode {
  Op op;
  double value = 0.0;   // Lit
  Variable var{};       // Var
  Expr a, b;            // children

  static Expr make_lit(double v) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Lit;
    n->value = v;
    return Expr(std::move(n));
  }
  static Expr make_var(Variable var) {
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Var;
    n->var = var;
    return Expr(std::move(n));
  }
  static Expr make_unary(Op op, Expr a);
  static Expr make_binary(Op op, Expr a, Expr b);
  static const ExprNode* get(const Expr& e) { return e.node_.get(); }
};

const ExprNode* node_of(const Expr& e);

inline bool is_lit(const Expr& e, double* out = nullptr) {
  const ExprNode* n = node_of(e);
  if (n == nullptr || n->op != Op::Lit) return false;
  if (out != nullptr) *out = n->value;
  return true;
}

double apply_unary(Op op, double x) {
  double r = 0.0;
  switch (op) {
    case Op::Neg: r = -x; break;
    case Op::Sin: r = std::sin(x); break;
    case Op::Cos: r = std::cos(x); break;
    case Op::Exp: r = std::exp(x); break;
    case Op::Log:
      if (x <= 0.0) throw EvalError("log of non-positive value");
      r = std::log(x);
      break;
    case Op::Abs: r = std::abs(x); break;
    case Op::Sqrt:
      if (x < 0.0) throw EvalError("sqrt of negative value");
      r = std::sqrt(x);
      break;
    default: throw EvalError("bad unary op");
  }
  if (!std::isfinite(r)) throw EvalError("non-finite result");
  return r;
}

double apply_binary(Op op, double x, double y) {
  double r = 0.0;
  switch (op) {
    case Op::Add: r = x + y; break;
    case Op::Sub: r = x - y; break;
    case Op::Mul: r = x * y; break;
    case Op::Div:
      if (y == 0.0) throw EvalError("division by zero");
      r = x / y;
      break;
    case Op::Pow:
      r = std::pow(x, y);
      break;
    default: throw EvalError("bad binary op");
  }
  if (!std::isfinite(r)) throw EvalError("non-finite result");
  return r;
}

Expr ExprNode::make_unary(Op op, Expr a) {
  double av = 0.0;
  if (is_lit(a, &av)) return make_lit(apply_unary(op, av));
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  return Expr(std::move(n));
}

Expr ExprNode::make_binary(Op op, Expr a, Expr b) {
  double av = 0.0, bv = 0.0;
  const bool la = is_lit(a, &av), lb = is_lit(b, &bv);
  if (la && lb) return make_lit(apply_binary(op, av, bv));
  // 0/1 identities only; no deeper rewriting.
  switch (op) {
    case Op::Add:
      if (la && av == 0.0) return b;
      if (lb && bv == 0.0) return a;
      break;
    case Op::Sub:
      if (lb && bv == 0.0) return a;
      if (la && av == 0.0) return make_unary(Op::Neg, std::move(b));
      break;
    case Op::Mul:
      if (la && av == 0.0) return make_lit(0.0);
      if (lb && bv == 0.0) return make_lit(0.0);
      if (la && av == 1.0) return b;
      if (lb && bv == 1.0) return a;
      break;
    case Op::Div:
      if (la && av == 0.0) return make_lit(0.0);
      if (lb && bv == 1.0) return a;
      break;
    case Op::Pow:
      if (lb && bv == 1.0) return a;
      if (lb && bv == 0.0) return make_lit(1.0);
      break;
    default: break;
  }
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return Expr(std::move(n));
}

const ExprNode* node_of(const Expr& e) { return ExprNode::get(e); }

}  // namespace detail

using detail::ExprNode;
using detail::Op;

Expr Expr::literal(double value) { return ExprNode::make_lit(value); }
Expr Expr::variable(Variable var) { return ExprNode::make_var(var); }

Expr operator+(const Expr& a, const Expr& b) { return ExprNode::make_binary(Op::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return ExprNode::make_binary(Op::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return ExprNode::make_binary(Op::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return ExprNode::make_binary(Op::Div, a, b); }
Expr operator-(const Expr& a) { return ExprNode::make_unary(Op::Neg, a); }
Expr Expr::pow(const Expr& a, const Expr& b) { return ExprNode::make_binary(Op::Pow, a, b); }
Expr Expr::sin(const Expr& a) { return ExprNode::make_unary(Op::Sin, a); }
Expr Expr::cos(const Expr& a) { return ExprNode::make_unary(Op::Cos, a); }
Expr Expr::exp(const Expr& a) { return ExprNode::make_unary(Op::Exp, a); }
Expr Expr::log(const Expr& a) { return ExprNode::make_unary(Op::Log, a); }
Expr Expr::abs(const Expr& a) { return ExprNode::make_unary(Op::Abs, a); }
Expr Expr::sqrt(const Expr& a) { return ExprNode::make_unary(Op::Sqrt, a); }

double Expr::eval(const EvalEnv& env) const {
  if (node_ == nullptr) throw EvalError("empty expression");
  const ExprNode& n = *node_;
  switch (n.op) {
    case Op::Lit: return n.value;
    case Op::Var: return env.lookup(n.var);
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow:
      return detail::apply_binary(n.op, n.a.eval(env), n.b.eval(env));
    default:
      return detail::apply_unary(n.op, n.a.eval(env));
  }
}

bool Expr::contains(const Variable& var) const {
  if (node_ == nullptr) return false;
  const ExprNode& n = *node_;
  switch (n.op) {
    case Op::Lit: return false;
    case Op::Var: return n.var == var;
    default:
      if (n.a.contains(var)) return true;
      return !n.b.empty() && n.b.contains(var);
  }
}

Expr Expr::derivative(const Variable& var) const {
  if (node_ == nullptr) throw UnsupportedDerivativeError("empty expression");
  if (!contains(var)) return literal(0.0);
  const ExprNode& n = *node_;
  switch (n.op) {
    case Op::Lit: return literal(0.0);
    case Op::Var: return literal(n.var == var ? 1.0 : 0.0);
    case Op::Neg: return -n.a.derivative(var);
    case Op::Sin: return cos(n.a) * n.a.derivative(var);
    case Op::Cos: return -(sin(n.a) * n.a.derivative(var));
    case Op::Exp: return exp(n.a) * n.a.derivative(var);
    case Op::Log: return n.a.derivative(var) / n.a;
    case Op::Sqrt:
      return n.a.derivative(var) / (literal(2.0) * sqrt(n.a));
    case Op::Abs:
      throw UnsupportedDerivativeError("abs is not differentiable");
    case Op::Add: return n.a.derivative(var) + n.b.derivative(var);
    case Op::Sub: return n.a.derivative(var) - n.b.derivative(var);
    case Op::Mul:
      return n.a.derivative(var) * n.b + n.a * n.b.derivative(var);
    case Op::Div:
      return (n.a.derivative(var) * n.b - n.a * n.b.derivative(var)) /
             (n.b * n.b);
    case Op::Pow: {
      double ev = 0.0;
      if (detail::is_lit(n.b, &ev)) {
        // d(a^c) = c * a^(c-1) * a'
        return n.b * pow(n.a, literal(ev - 1.0)) * n.a.derivative(var);
      }
      // General a^b = exp(b log a).
      Expr self = *this;
      return self * (n.b.derivative(var) * log(n.a) +
                     n.b * n.a.derivative(var) / n.a);
    }
  }
  throw UnsupportedDerivativeError("bad node");
}

Expr Expr::substitute_k(double value) const {
  if (node_ == nullptr) return *this;
  const ExprNode& n = *node_;
  switch (n.op) {
    case Op::Lit: return *this;
    case Op::Var:
      return n.var.kind == VarKind::K ? literal(value) : *this;
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow:
      return ExprNode::make_binary(n.op, n.a.substitute_k(value),
                                   n.b.substitute_k(value));
    default:
      return ExprNode::make_unary(n.op, n.a.substitute_k(value));
  }
}

bool Expr::equals(const Expr& other) const {
  if (node_ == other.node_) return true;
  if (node_ == nullptr || other.node_ == nullptr) return false;
  const ExprNode &a = *node_, &b = *other.node_;
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Lit:
      return a.value == b.value ||
             (std::isnan(a.value) && std::isnan(b.value));
    case Op::Var: return a.var == b.var;
    default:
      if (!a.a.equals(b.a)) return false;
      if (a.b.empty() != b.b.empty()) return false;
      return a.b.empty() || a.b.equals(b.b);
  }
}

namespace {

// Serialization precedence levels; higher binds tighter.
int precedence(Op op) {
  switch (op) {
    case Op::Add: case Op::Sub: return 1;
    case Op::Mul: case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

void serialize(const Expr& e, std::string& out, int parent_prec);

void serialize_child(const Expr& e, std::string& out, int prec) {
  const ExprNode* n = detail::node_of(e);
  const int child_prec = precedence(n->op);
  const bool parens = child_prec < prec;
  if (parens) out += '(';
  serialize(e, out, 0);
  if (parens) out += ')';
}

void serialize(const Expr& e, std::string& out, int) {
  const ExprNode* n = detail::node_of(e);
  switch (n->op) {
    case Op::Lit: {
      if (n->value < 0.0 || (n->value == 0.0 && std::signbit(n->value))) {
        out += '(';
        out += double_to_string(n->value);
        out += ')';
      } else {
        out += double_to_string(n->value);
      }
      return;
    }
    case Op::Var: out += n->var.name(); return;
    case Op::Neg:
      out += '-';
      serialize_child(n->a, out, precedence(Op::Neg) + 1);
      return;
    case Op::Sin: case Op::Cos: case Op::Exp:
    case Op::Log: case Op::Abs: case Op::Sqrt: {
      switch (n->op) {
        case Op::Sin: out += "sin"; break;
        case Op::Cos: out += "cos"; break;
        case Op::Exp: out += "exp"; break;
        case Op::Log: out += "log"; break;
        case Op::Abs: out += "abs"; break;
        default: out += "sqrt"; break;
      }
      out += '(';
      serialize(n->a, out, 0);
      out += ')';
      return;
    }
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div: case Op::Pow: {
      const int prec = precedence(n->op);
      char sym = '+';
      switch (n->op) {
        case Op::Sub: sym = '-'; break;
        case Op::Mul: sym = '*'; break;
        case Op::Div: sym = '/'; break;
        case Op::Pow: sym = '^'; break;
        default: break;
      }
      // Left-associative ops need parens on an equal-precedence right child;
      // '^' is right-associative so the asymmetry flips.
      if (n->op == Op::Pow) {
        serialize_child(n->a, out, prec + 1);
        out += sym;
        serialize_child(n->b, out, prec);
      } else {
        serialize_child(n->a, out, prec);
        out += sym;
        serialize_child(n->b, out, prec + 1);
      }
      return;
    }
  }
}

}  // namespace

std::string Expr::str() const {
  if (node_ == nullptr) return "";
  std::string out;
  serialize(*this, out, 0);
  return out;
}

std::vector<Variable> Expr::variables() const {
  std::vector<Variable> vars;
  struct Walker {
    std::vector<Variable>& vars;
    void walk(const Expr& e) {
      const ExprNode* n = detail::node_of(e);
      if (n == nullptr) return;
      if (n->op == Op::Var) {
        for (const Variable& v : vars)
          if (v == n->var) return;
        vars.push_back(n->var);
        return;
      }
      if (!n->a.empty()) walk(n->a);
      if (!n->b.empty()) walk(n->b);
    }
  } w{vars};
  w.walk(*this);
  return vars;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
 public:
  Parser(std::string_view src, const ExprDims& dims) : src_(src), dims_(dims) {}

  Expr parse() {
    Expr e = parse_expr();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  std::string_view src_;
  ExprDims dims_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  Expr parse_expr() {
    Expr e = parse_term();
    for (;;) {
      if (eat('+')) e = e + parse_term();
      else if (eat('-')) e = e - parse_term();
      else return e;
    }
  }

  Expr parse_term() {
    Expr e = parse_unary();
    for (;;) {
      if (eat('*')) e = e * parse_unary();
      else if (eat('/')) e = e / parse_unary();
      else return e;
    }
  }

  Expr parse_unary() {
    if (eat('-')) {
      Expr e = parse_unary();
      double v = 0.0;
      if (detail::is_lit(e, &v)) return Expr::literal(-v);
      return -e;
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (eat('^')) {
      // Right associative; allow a signed exponent.
      Expr exponent = parse_unary();
      return Expr::pow(base, exponent);
    }
    return base;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  Expr parse_number() {
    const char* begin = src_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("malformed number", pos_);
    pos_ += static_cast<std::size_t>(end - begin);
    return Expr::literal(v);
  }

  Expr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_'))
      ++pos_;
    const std::string_view ident = src_.substr(start, pos_ - start);

    static const struct {
      std::string_view name;
      Expr (*fn)(const Expr&);
    } kFunctions[] = {
        {"sin", &Expr::sin}, {"cos", &Expr::cos}, {"exp", &Expr::exp},
        {"log", &Expr::log}, {"abs", &Expr::abs}, {"sqrt", &Expr::sqrt},
    };
    for (const auto& f : kFunctions) {
      if (ident == f.name) {
        if (!eat('(')) throw ParseError("expected '(' after function name", pos_);
        Expr arg = parse_expr();
        if (eat(','))
          throw ParseError("function takes exactly one argument", pos_ - 1);
        if (!eat(')')) throw ParseError("expected ')'", pos_);
        return f.fn(arg);
      }
    }

    if (ident == "t") {
      if (!dims_.allow_t) throw ParseError("variable t not admitted here", start);
      return Expr::variable({VarKind::T, 0});
    }
    if (ident == "k") {
      if (!dims_.allow_k) throw ParseError("variable k not admitted here", start);
      return Expr::variable({VarKind::K, 0});
    }
    if (ident.size() >= 2 && (ident[0] == 'x' || ident[0] == 'u' || ident[0] == 'v')) {
      int index = 0;
      for (std::size_t i = 1; i < ident.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(ident[i]))) {
          throw ParseError("unknown identifier '" + std::string(ident) + "'", start);
        }
        index = index * 10 + (ident[i] - '0');
      }
      const int limit = ident[0] == 'x' ? dims_.n : (ident[0] == 'u' ? dims_.m : dims_.l);
      const VarKind kind = ident[0] == 'x'   ? VarKind::X
                           : ident[0] == 'u' ? VarKind::U
                                             : VarKind::V;
      if (index < 1 || index > limit)
        throw ParseError("variable index out of range: " + std::string(ident), start);
      return Expr::variable({kind, index});
    }
    throw ParseError("unknown identifier '" + std::string(ident) + "'", start);
  }
};

Expr parse_expression(std::string_view source, const ExprDims& dims) {
  return Parser(source, dims).parse();
}

}  // namespace impulsim
