#pragma once
// Scalar-field expression trees: parse, evaluate, differentiate exactly.
//
// Grammar, tightest binding first:
//   ^ (integer exponents only)  >  unary -  >  * /  >  + -
// plus parentheses and function calls  exp sin cos sinh cosh sqrt log.
// Whitespace is insignificant.
//
// Trees are immutable and shared (shared_ptr); differentiation returns new
// trees aliasing unchanged subtrees.  Constant subtrees fold on construction
// (0*x -> 0, x+0 -> x, ...); no other simplification is attempted, so
// correctness is defined by evaluation, not canonical form.
//
// Domain faults (log of <=0, sqrt of <0, division by zero) raise EvalError
// naming the function and the point instead of producing NaN.

#include <array>
#include <deque>
#include <memory>
#include <mutex>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace hyptwist::expr {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Op { Constant, Variable, Neg, Add, Sub, Mul, Div, PowInt, Func };
enum class Fn { Exp, Sin, Cos, Sinh, Cosh, Sqrt, Log };

struct Node;
using NodeRef = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Constant;
  double value = 0.0;  // Constant
  int var = -1;        // Variable
  int expn = 0;        // PowInt exponent
  Fn fn = Fn::Exp;     // Func
  NodeRef a, b;
};

// Smart constructors; these do the constant folding.
NodeRef constant(double v);
NodeRef variable(int index);
NodeRef neg(NodeRef x);
NodeRef add(NodeRef x, NodeRef y);
NodeRef sub(NodeRef x, NodeRef y);
NodeRef mul(NodeRef x, NodeRef y);
NodeRef div(NodeRef x, NodeRef y);
NodeRef powi(NodeRef x, int n);
NodeRef call(Fn f, NodeRef x);

// Variable sets.  Metric components live on the x-chart; the product-chart
// fields of the petean module use (p,q,r,s,u,v).
const std::vector<std::string>& chart_vars();    // x1 x2 x3 x4
const std::vector<std::string>& product_vars();  // p q r s u v

NodeRef parse(const std::string& text, const std::vector<std::string>& vars);
double eval(const Node* n, const double* xs, int nvars);
NodeRef diff(const NodeRef& n, int var);
std::string print(const NodeRef& n, const std::vector<std::string>& vars);
bool depends_on(const NodeRef& n, int var);

// An expression plus a lazily grown cache of partial derivatives.  The cache
// is mutex-guarded so parsed fields can be shared across threads.
class ScalarField {
 public:
  ScalarField();  // the zero field on the x-chart
  ScalarField(NodeRef ast, int nvars);

  static ScalarField parse_chart(const std::string& text);
  static ScalarField parse_product(const std::string& text);

  const NodeRef& ast() const { return ast_; }
  int nvars() const { return nvars_; }

  double operator()(const double* xs) const { return eval(ast_.get(), xs, nvars_); }
  template <std::size_t N>
  double at(const std::array<double, N>& xs) const {
    static_assert(N >= 1);
    return eval(ast_.get(), xs.data(), nvars_);
  }

  // Exact symbolic partial; results are cached per variable and reused.
  const ScalarField& partial(int var) const;

  std::string text(const std::vector<std::string>& vars) const { return print(ast_, vars); }

 private:
  NodeRef ast_;
  int nvars_ = 4;
  // deque keeps addresses stable while the cache grows
  mutable std::mutex mu_;
  mutable std::map<int, std::size_t> cache_index_;
  mutable std::deque<ScalarField> cache_;
};

}  // namespace hyptwist::expr
