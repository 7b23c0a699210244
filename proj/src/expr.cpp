#include "ccharts/expr.hpp"

#include <cctype>
#include <cmath>
#include <utility>
#include <vector>

namespace ccharts {
namespace detail {

enum class Op {
  kConst, kVar,
  kAdd, kSub, kMul, kDiv, kPow,   // kPow: integer exponent in `ipow`
  kNeg, kSin, kCos, kExp, kLog, kSqrt, kAbs, kSign,
};

struct ExprNode {
  Op op;
  double value = 0.0;  // kConst
  int var = 0;         // kVar, 1-based
  long ipow = 0;       // kPow
  std::shared_ptr<const ExprNode> a, b;
};

using NodePtr = std::shared_ptr<const ExprNode>;

namespace {

NodePtr make_const(double c) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::kConst;
  n->value = c;
  return n;
}

NodePtr make_var(int idx) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::kVar;
  n->var = idx;
  return n;
}

bool is_const(const NodePtr& n, double v) {
  return n->op == Op::kConst && n->value == v;
}

NodePtr make_bin(Op op, NodePtr a, NodePtr b) {
  // Constant folding and identity pruning keep derivative trees small.
  if (a->op == Op::kConst && b->op == Op::kConst) {
    switch (op) {
      case Op::kAdd: return make_const(a->value + b->value);
      case Op::kSub: return make_const(a->value - b->value);
      case Op::kMul: return make_const(a->value * b->value);
      default: break;  // division kept symbolic so 1/0 errors at eval time
    }
  }
  switch (op) {
    case Op::kAdd:
      if (is_const(a, 0)) return b;
      if (is_const(b, 0)) return a;
      break;
    case Op::kSub:
      if (is_const(b, 0)) return a;
      break;
    case Op::kMul:
      if (is_const(a, 0) || is_const(b, 0)) return make_const(0);
      if (is_const(a, 1)) return b;
      if (is_const(b, 1)) return a;
      break;
    case Op::kDiv:
      if (is_const(a, 0) && !is_const(b, 0)) return make_const(0);
      if (is_const(b, 1)) return a;
      break;
    default:
      break;
  }
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_pow(NodePtr base, long k) {
  if (k == 0) return make_const(1);
  if (k == 1) return base;
  auto n = std::make_shared<ExprNode>();
  n->op = Op::kPow;
  n->a = std::move(base);
  n->ipow = k;
  return n;
}

NodePtr make_un(Op op, NodePtr a) {
  if (op == Op::kNeg) {
    if (a->op == Op::kConst) return make_const(-a->value);
    if (a->op == Op::kNeg) return a->a;
  }
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = std::move(a);
  return n;
}

double ipow_eval(double x, long k) {
  if (k < 0) {
    if (x == 0.0) throw DomainError("0 raised to a negative power");
    return 1.0 / ipow_eval(x, -k);
  }
  double r = 1.0, p = x;
  for (long e = k; e > 0; e >>= 1) {
    if (e & 1) r *= p;
    p *= p;
  }
  return r;
}

double eval_node(const ExprNode& n, std::span<const double> x) {
  switch (n.op) {
    case Op::kConst: return n.value;
    case Op::kVar: return x[static_cast<std::size_t>(n.var - 1)];
    case Op::kAdd: return eval_node(*n.a, x) + eval_node(*n.b, x);
    case Op::kSub: return eval_node(*n.a, x) - eval_node(*n.b, x);
    case Op::kMul: return eval_node(*n.a, x) * eval_node(*n.b, x);
    case Op::kDiv: {
      double d = eval_node(*n.b, x);
      if (d == 0.0) throw DomainError("division by zero");
      return eval_node(*n.a, x) / d;
    }
    case Op::kPow: return ipow_eval(eval_node(*n.a, x), n.ipow);
    case Op::kNeg: return -eval_node(*n.a, x);
    case Op::kSin: return std::sin(eval_node(*n.a, x));
    case Op::kCos: return std::cos(eval_node(*n.a, x));
    case Op::kExp: return std::exp(eval_node(*n.a, x));
    case Op::kLog: {
      double v = eval_node(*n.a, x);
      if (v <= 0.0) throw DomainError("log of non-positive value");
      return std::log(v);
    }
    case Op::kSqrt: {
      double v = eval_node(*n.a, x);
      if (v < 0.0) throw DomainError("sqrt of negative value");
      return std::sqrt(v);
    }
    case Op::kAbs: return std::abs(eval_node(*n.a, x));
    case Op::kSign: {
      double v = eval_node(*n.a, x);
      if (v == 0.0) throw DomainError("sign(0): abs not differentiable at 0");
      return v > 0.0 ? 1.0 : -1.0;
    }
  }
  throw Error("corrupt expression node");
}

NodePtr diff_node(const NodePtr& n, int k) {
  switch (n->op) {
    case Op::kConst: return make_const(0);
    case Op::kVar: return make_const(n->var == k ? 1 : 0);
    case Op::kAdd: return make_bin(Op::kAdd, diff_node(n->a, k), diff_node(n->b, k));
    case Op::kSub: return make_bin(Op::kSub, diff_node(n->a, k), diff_node(n->b, k));
    case Op::kMul:
      return make_bin(Op::kAdd, make_bin(Op::kMul, diff_node(n->a, k), n->b),
                      make_bin(Op::kMul, n->a, diff_node(n->b, k)));
    case Op::kDiv:
      // (a/b)' = a'/b - a b'/b^2
      return make_bin(
          Op::kSub, make_bin(Op::kDiv, diff_node(n->a, k), n->b),
          make_bin(Op::kDiv, make_bin(Op::kMul, n->a, diff_node(n->b, k)),
                   make_pow(n->b, 2)));
    case Op::kPow:
      // (u^m)' = m u^(m-1) u'
      return make_bin(Op::kMul, make_const(static_cast<double>(n->ipow)),
                      make_bin(Op::kMul, make_pow(n->a, n->ipow - 1),
                               diff_node(n->a, k)));
    case Op::kNeg: return make_un(Op::kNeg, diff_node(n->a, k));
    case Op::kSin: return make_bin(Op::kMul, make_un(Op::kCos, n->a), diff_node(n->a, k));
    case Op::kCos:
      return make_un(Op::kNeg, make_bin(Op::kMul, make_un(Op::kSin, n->a),
                                        diff_node(n->a, k)));
    case Op::kExp: return make_bin(Op::kMul, make_un(Op::kExp, n->a), diff_node(n->a, k));
    case Op::kLog: return make_bin(Op::kDiv, diff_node(n->a, k), n->a);
    case Op::kSqrt:
      return make_bin(Op::kDiv, diff_node(n->a, k),
                      make_bin(Op::kMul, make_const(2), make_un(Op::kSqrt, n->a)));
    case Op::kAbs:
      // sign(u)·u'; sign errors at u == 0 when evaluated
      return make_bin(Op::kMul, make_un(Op::kSign, n->a), diff_node(n->a, k));
    case Op::kSign: return make_const(0);  // a.e.; the jump is a domain error anyway
  }
  throw Error("corrupt expression node");
}

int precedence_of(Op op) {
  switch (op) {
    case Op::kAdd: case Op::kSub: return 1;
    case Op::kMul: case Op::kDiv: return 2;
    case Op::kNeg: return 3;
    case Op::kPow: return 4;
    default: return 5;
  }
}

void print_node(const ExprNode& n, std::string& out, int parent_prec) {
  int prec = precedence_of(n.op);
  bool paren = prec < parent_prec;
  auto open = [&] { if (paren) out += '('; };
  auto close = [&] { if (paren) out += ')'; };
  switch (n.op) {
    case Op::kConst: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n.value);
      if (n.value < 0) { out += '('; out += buf; out += ')'; }
      else out += buf;
      return;
    }
    case Op::kVar: out += "x" + std::to_string(n.var); return;
    case Op::kAdd: case Op::kSub: case Op::kMul: case Op::kDiv: {
      open();
      print_node(*n.a, out, prec);
      out += (n.op == Op::kAdd ? "+" : n.op == Op::kSub ? "-"
              : n.op == Op::kMul ? "*" : "/");
      print_node(*n.b, out, prec + 1);  // left-associative
      close();
      return;
    }
    case Op::kPow:
      open();
      print_node(*n.a, out, prec + 1);
      out += "^" + std::to_string(n.ipow);
      close();
      return;
    case Op::kNeg:
      open();
      out += "-";
      print_node(*n.a, out, prec);
      close();
      return;
    default: {
      const char* name =
          n.op == Op::kSin ? "sin" : n.op == Op::kCos ? "cos"
          : n.op == Op::kExp ? "exp" : n.op == Op::kLog ? "log"
          : n.op == Op::kSqrt ? "sqrt" : n.op == Op::kAbs ? "abs" : "sign";
      out += name;
      out += '(';
      print_node(*n.a, out, 0);
      out += ')';
      return;
    }
  }
}

// --- recursive descent parser ---

struct Parser {
  const std::string& s;
  std::size_t pos = 0;
  int n_vars;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) { ++pos; return true; }
    return false;
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+')) lhs = make_bin(Op::kAdd, lhs, parse_term());
      else if (eat('-')) lhs = make_bin(Op::kSub, lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (eat('*')) lhs = make_bin(Op::kMul, lhs, parse_unary());
      else if (eat('/')) lhs = make_bin(Op::kDiv, lhs, parse_unary());
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    if (eat('-')) return make_un(Op::kNeg, parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr lhs = parse_atom();
    while (eat('^')) {
      skip_ws();
      long sign = 1;
      if (eat('-')) sign = -1;
      skip_ws();
      std::size_t start = pos;
      long k = 0;
      while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
        k = k * 10 + (s[pos] - '0');
        ++pos;
      }
      if (pos == start)
        throw ParseError("exponent must be a constant integer", pos);
      lhs = make_pow(lhs, sign * k);
    }
    return lhs;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos >= s.size()) throw ParseError("unexpected end of input", pos);
    char c = s[pos];
    if (c == '(') {
      ++pos;
      NodePtr e = parse_sum();
      if (!eat(')')) throw ParseError("expected ')'", pos);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos);
  }

  NodePtr parse_number() {
    std::size_t start = pos;
    const char* begin = s.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("malformed number", start);
    pos += static_cast<std::size_t>(end - begin);
    return make_const(v);
  }

  NodePtr parse_ident() {
    std::size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    std::string name = s.substr(start, pos - start);
    if (name.size() >= 2 && name[0] == 'x' &&
        std::isdigit(static_cast<unsigned char>(name[1]))) {
      int idx = 0;
      for (std::size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i])))
          throw ParseError("unknown identifier '" + name + "'", start);
        idx = idx * 10 + (name[i] - '0');
      }
      if (idx < 1 || idx > n_vars)
        throw ParseError("variable " + name + " out of range for dimension " +
                             std::to_string(n_vars),
                         start);
      return make_var(idx);
    }
    if (name == "pi") return make_const(3.14159265358979323846);
    Op fn;
    if (name == "sin") fn = Op::kSin;
    else if (name == "cos") fn = Op::kCos;
    else if (name == "exp") fn = Op::kExp;
    else if (name == "log") fn = Op::kLog;
    else if (name == "sqrt") fn = Op::kSqrt;
    else if (name == "abs") fn = Op::kAbs;
    else if (name == "sign") fn = Op::kSign;
    else throw ParseError("unknown identifier '" + name + "'", start);
    if (!eat('(')) throw ParseError("expected '(' after function name", pos);
    NodePtr arg = parse_sum();
    if (!eat(')')) throw ParseError("expected ')'", pos);
    return make_un(fn, arg);
  }
};

}  // namespace
}  // namespace detail

using detail::ExprNode;
using detail::Op;

Expr Expr::parse(const std::string& text, int n_vars) {
  if (text.empty()) throw ParseError("empty expression", 0);
  if (n_vars < 0) throw Error("negative dimension");
  detail::Parser p{text, 0, n_vars};
  auto node = p.parse_sum();
  p.skip_ws();
  if (p.pos != text.size())
    throw ParseError("trailing characters after expression", p.pos);
  return Expr(std::move(node), n_vars);
}

Expr Expr::constant(double c) { return Expr(detail::make_const(c), 0); }

Expr Expr::variable(int index_1based, int n_vars) {
  if (index_1based < 1 || index_1based > n_vars)
    throw Error("variable index out of range");
  return Expr(detail::make_var(index_1based), n_vars);
}

double Expr::eval(std::span<const double> x) const {
  if (!node_) throw Error("empty expression");
  if (static_cast<int>(x.size()) < n_vars_)
    throw Error("point has fewer coordinates than expression dimension");
  double v = detail::eval_node(*node_, x);
  if (!std::isfinite(v)) throw DomainError("non-finite result");
  return v;
}

Expr Expr::differentiate(int var_1based) const {
  if (!node_) throw Error("empty expression");
  if (var_1based < 1 || (n_vars_ > 0 && var_1based > n_vars_))
    throw Error("differentiation index out of range");
  return Expr(detail::diff_node(node_, var_1based), n_vars_);
}

std::string Expr::print() const {
  if (!node_) return "";
  std::string out;
  detail::print_node(*node_, out, 0);
  return out;
}

bool Expr::is_zero() const {
  return node_ && node_->op == Op::kConst && node_->value == 0.0;
}

bool Expr::is_constant(double* out) const {
  if (node_ && node_->op == Op::kConst) {
    if (out) *out = node_->value;
    return true;
  }
  return false;
}

static int merged_dim(const Expr& a, const Expr& b) {
  return std::max(a.dimension(), b.dimension());
}

Expr Expr::operator+(const Expr& rhs) const {
  return Expr(detail::make_bin(Op::kAdd, node_, rhs.node_), merged_dim(*this, rhs));
}
Expr Expr::operator-(const Expr& rhs) const {
  return Expr(detail::make_bin(Op::kSub, node_, rhs.node_), merged_dim(*this, rhs));
}
Expr Expr::operator*(const Expr& rhs) const {
  return Expr(detail::make_bin(Op::kMul, node_, rhs.node_), merged_dim(*this, rhs));
}
Expr Expr::operator-() const { return Expr(detail::make_un(Op::kNeg, node_), n_vars_); }

Expr Expr::scaled(const Expr& e, double c) {
  return Expr(detail::make_bin(Op::kMul, detail::make_const(c), e.node_),
              e.dimension());
}

}  // namespace ccharts
