#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

namespace mmm {

enum class Op { Const, Dist, Mark, Add, Mul, ExpNeg, Min, Inv1p };

/// Expression tree over the entries of a k x k distance matrix and the
/// coordinates of k marks. Only bounded continuous building blocks are
/// offered so that boundedness can be certified by interval evaluation.
class Expr {
 public:
  static Expr constant(double value);
  /// Distance between the i-th and j-th sampled atoms.
  static Expr dist(std::size_t i, std::size_t j);
  /// Coordinate c of the mark of the i-th sampled atom.
  static Expr mark(std::size_t i, std::size_t c);
  static Expr add(std::vector<Expr> terms);
  static Expr mul(std::vector<Expr> factors);
  /// t -> exp(-lambda t), lambda >= 0.
  static Expr exp_neg(double lambda, Expr arg);
  /// t -> min(t, c).
  static Expr min(Expr arg, double c);
  /// t -> 1 / (1 + t).
  static Expr inv1p(Expr arg);

  Op op() const noexcept { return op_; }
  double param() const noexcept { return param_; }
  std::size_t i() const noexcept { return i_; }
  std::size_t j() const noexcept { return j_; }
  const std::vector<Expr>& args() const noexcept { return args_; }

  /// Access must provide dist(i, j) and mark(i, c).
  template <class Access>
  double eval(const Access& at) const;

  friend bool operator==(const Expr&, const Expr&) = default;

 private:
  Expr(Op op, double param, std::size_t i, std::size_t j, std::vector<Expr> args)
      : op_(op), param_(param), i_(i), j_(j), args_(std::move(args)) {}

  Op op_ = Op::Const;
  double param_ = 0.0;
  std::size_t i_ = 0;
  std::size_t j_ = 0;
  std::vector<Expr> args_;
};

Expr operator+(Expr a, Expr b);
Expr operator*(Expr a, Expr b);

template <class Access>
double Expr::eval(const Access& at) const {
  switch (op_) {
    case Op::Const:
      return param_;
    case Op::Dist:
      return at.dist(i_, j_);
    case Op::Mark:
      return at.mark(i_, j_);
    case Op::Add: {
      double s = 0.0;
      for (const auto& a : args_) s += a.eval(at);
      return s;
    }
    case Op::Mul: {
      double p = 1.0;
      for (const auto& a : args_) p *= a.eval(at);
      return p;
    }
    case Op::ExpNeg:
      return std::exp(-param_ * args_[0].eval(at));
    case Op::Min:
      return std::min(args_[0].eval(at), param_);
    case Op::Inv1p:
      return 1.0 / (1.0 + args_[0].eval(at));
  }
  return 0.0;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool bounded() const noexcept {
    return lo > -std::numeric_limits<double>::infinity() &&
           hi < std::numeric_limits<double>::infinity();
  }
  double magnitude() const noexcept { return std::max(std::abs(lo), std::abs(hi)); }
};

/// Result of interval evaluation with distances in [0, inf) and marks in R.
struct ExprAnalysis {
  Interval range;
  /// Lipschitz constant w.r.t. max_ij |dD_ij| + max_i |de_i| (inf if unknown).
  double lipschitz = 0.0;
  /// False when a primitive is applied outside its continuity domain.
  bool continuous = true;
  std::size_t arity = 0;     ///< 1 + largest atom index used (0 if none)
  std::size_t mark_dim = 0;  ///< 1 + largest mark coordinate used
};

ExprAnalysis analyze(const Expr& e);

std::string to_string(const Expr& e);

/// phi of a monomial: an expression of arity k with a certified bound.
class TestFunction {
 public:
  /// The constant function 1 of the given arity.
  static TestFunction one(std::size_t arity);

  /// Throws UnboundedTestFunction if the expression is not certifiably
  /// bounded and continuous, or if `declared_bound` is below the certified
  /// bound. A NaN bound means "use the certified one".
  TestFunction(std::size_t arity, Expr expr,
               double declared_bound = std::numeric_limits<double>::quiet_NaN());

  std::size_t arity() const noexcept { return arity_; }
  const Expr& expr() const noexcept { return expr_; }
  double bound() const noexcept { return bound_; }
  double lipschitz() const noexcept { return analysis_.lipschitz; }
  std::size_t required_mark_dim() const noexcept { return analysis_.mark_dim; }
  const ExprAnalysis& analysis() const noexcept { return analysis_; }

  template <class Access>
  double operator()(const Access& at) const {
    return expr_.eval(at);
  }

 private:
  std::size_t arity_;
  Expr expr_;
  double bound_;
  ExprAnalysis analysis_;
};

// Expression JSON, e.g. {"op": "exp_neg", "lambda": 1.0, "arg": {"op": "dist", "i": 0, "j": 1}}
nlohmann::json to_json(const Expr& e);
Expr expr_from_json(const nlohmann::json& j);

// {"arity": k, "bound": B, "expr": {...}}; a bare expression is also accepted.
nlohmann::json to_json(const TestFunction& f);
TestFunction test_function_from_json(const nlohmann::json& j);

}  // namespace mmm
