#ifndef CCHARTS_EXPR_HPP
#define CCHARTS_EXPR_HPP

#include <memory>
#include <span>
#include <stdexcept>
#include <string>

namespace ccharts {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Evaluation hit a singular input (log(x<=0), 1/0, sqrt(x<0), sign(0)).
struct DomainError : Error {
  using Error::Error;
};

/// Malformed source text; `offset` is the byte position of the problem.
struct ParseError : Error {
  std::size_t offset;
  ParseError(const std::string& msg, std::size_t off)
      : Error(msg + " (at byte " + std::to_string(off) + ")"), offset(off) {}
};

namespace detail {
struct ExprNode;
}

/// Immutable arithmetic expression over variables x1..xn.
///
/// Grammar: + - * / with usual precedence, ^ with a constant integer
/// exponent binding tightest, unary minus between ^ and * /, and the
/// functions sin cos exp log sqrt abs sign. Thread-safe to share.
class Expr {
 public:
  Expr() = default;  // empty; only assignable

  static Expr parse(const std::string& text, int n_vars);
  static Expr constant(double c);
  static Expr variable(int index_1based, int n_vars);

  double eval(std::span<const double> x) const;
  Expr differentiate(int var_1based) const;
  std::string print() const;

  int dimension() const { return n_vars_; }
  bool is_zero() const;            // structurally the literal 0
  bool is_constant(double* out = nullptr) const;

  Expr operator+(const Expr& rhs) const;
  Expr operator-(const Expr& rhs) const;
  Expr operator*(const Expr& rhs) const;
  Expr operator-() const;
  static Expr scaled(const Expr& e, double c);

  explicit operator bool() const { return node_ != nullptr; }

 private:
  explicit Expr(std::shared_ptr<const detail::ExprNode> n, int nv)
      : node_(std::move(n)), n_vars_(nv) {}
  std::shared_ptr<const detail::ExprNode> node_;
  int n_vars_ = 0;
  friend struct detail::ExprNode;
  friend class ExprBuilder;
};

}  // namespace ccharts

#endif  // CCHARTS_EXPR_HPP
