#include "hyptwist/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hyptwist::expr {

ParseError::ParseError(const std::string& msg, std::size_t offset)
    : std::runtime_error(msg + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

NodeRef make(Node n) { return std::make_shared<const Node>(std::move(n)); }

bool is_const(const NodeRef& n, double v) {
  return n->op == Op::Constant && n->value == v;
}

[[noreturn]] void domain_fault(const char* what, const double* xs, int nvars) {
  std::ostringstream os;
  os << what << " at (";
  for (int i = 0; i < nvars; ++i) os << (i ? "," : "") << xs[i];
  os << ")";
  throw EvalError(os.str());
}

double pow_int(double base, int n, const double* xs, int nvars) {
  if (n < 0) {
    if (base == 0.0) domain_fault("zero base with negative exponent", xs, nvars);
    return 1.0 / pow_int(base, -n, xs, nvars);
  }
  double r = 1.0, b = base;
  while (n > 0) {
    if (n & 1) r *= b;
    b *= b;
    n >>= 1;
  }
  return r;
}

const char* fn_name(Fn f) {
  switch (f) {
    case Fn::Exp: return "exp";
    case Fn::Sin: return "sin";
    case Fn::Cos: return "cos";
    case Fn::Sinh: return "sinh";
    case Fn::Cosh: return "cosh";
    case Fn::Sqrt: return "sqrt";
    case Fn::Log: return "log";
  }
  return "?";
}

}  // namespace

NodeRef constant(double v) {
  Node n;
  n.op = Op::Constant;
  n.value = v;
  return make(n);
}

NodeRef variable(int index) {
  Node n;
  n.op = Op::Variable;
  n.var = index;
  return make(n);
}

NodeRef neg(NodeRef x) {
  if (x->op == Op::Constant) return constant(-x->value);
  if (x->op == Op::Neg) return x->a;
  Node n;
  n.op = Op::Neg;
  n.a = std::move(x);
  return make(n);
}

NodeRef add(NodeRef x, NodeRef y) {
  if (x->op == Op::Constant && y->op == Op::Constant) return constant(x->value + y->value);
  if (is_const(x, 0)) return y;
  if (is_const(y, 0)) return x;
  Node n;
  n.op = Op::Add;
  n.a = std::move(x);
  n.b = std::move(y);
  return make(n);
}

NodeRef sub(NodeRef x, NodeRef y) {
  if (x->op == Op::Constant && y->op == Op::Constant) return constant(x->value - y->value);
  if (is_const(y, 0)) return x;
  if (is_const(x, 0)) return neg(std::move(y));
  Node n;
  n.op = Op::Sub;
  n.a = std::move(x);
  n.b = std::move(y);
  return make(n);
}

NodeRef mul(NodeRef x, NodeRef y) {
  if (x->op == Op::Constant && y->op == Op::Constant) return constant(x->value * y->value);
  if (is_const(x, 0) || is_const(y, 0)) return constant(0);
  if (is_const(x, 1)) return y;
  if (is_const(y, 1)) return x;
  if (is_const(x, -1)) return neg(std::move(y));
  if (is_const(y, -1)) return neg(std::move(x));
  Node n;
  n.op = Op::Mul;
  n.a = std::move(x);
  n.b = std::move(y);
  return make(n);
}

NodeRef div(NodeRef x, NodeRef y) {
  if (is_const(x, 0)) return constant(0);
  if (is_const(y, 1)) return x;
  if (x->op == Op::Constant && y->op == Op::Constant && y->value != 0.0)
    return constant(x->value / y->value);
  Node n;
  n.op = Op::Div;
  n.a = std::move(x);
  n.b = std::move(y);
  return make(n);
}

NodeRef powi(NodeRef x, int e) {
  if (e == 0) return constant(1);
  if (e == 1) return x;
  if (x->op == Op::Constant) {
    double dummy = 0;
    return constant(pow_int(x->value, e, &dummy, 0));
  }
  Node n;
  n.op = Op::PowInt;
  n.expn = e;
  n.a = std::move(x);
  return make(n);
}

NodeRef call(Fn f, NodeRef x) {
  // fold only where the value is unconditionally defined
  if (x->op == Op::Constant) {
    double v = x->value;
    switch (f) {
      case Fn::Exp: return constant(std::exp(v));
      case Fn::Sin: return constant(std::sin(v));
      case Fn::Cos: return constant(std::cos(v));
      case Fn::Sinh: return constant(std::sinh(v));
      case Fn::Cosh: return constant(std::cosh(v));
      case Fn::Sqrt:
        if (v >= 0) return constant(std::sqrt(v));
        break;
      case Fn::Log:
        if (v > 0) return constant(std::log(v));
        break;
    }
  }
  Node n;
  n.op = Op::Func;
  n.fn = f;
  n.a = std::move(x);
  return make(n);
}

const std::vector<std::string>& chart_vars() {
  static const std::vector<std::string> v = {"x1", "x2", "x3", "x4"};
  return v;
}

const std::vector<std::string>& product_vars() {
  static const std::vector<std::string> v = {"p", "q", "r", "s", "u", "v"};
  return v;
}

// ---------------------------------------------------------------------------
// parser

namespace {

struct Parser {
  const std::string& text;
  const std::vector<std::string>& vars;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  NodeRef parse_sum() {
    NodeRef lhs = parse_term();
    for (;;) {
      if (eat('+')) lhs = add(lhs, parse_term());
      else if (eat('-')) lhs = sub(lhs, parse_term());
      else return lhs;
    }
  }

  NodeRef parse_term() {
    NodeRef lhs = parse_unary();
    for (;;) {
      if (eat('*')) lhs = mul(lhs, parse_unary());
      else if (eat('/')) lhs = div(lhs, parse_unary());
      else return lhs;
    }
  }

  NodeRef parse_unary() {
    if (eat('-')) return neg(parse_unary());
    if (eat('+')) return parse_unary();
    return parse_power();
  }

  NodeRef parse_power() {
    NodeRef base = parse_primary();
    if (eat('^')) {
      std::size_t at = pos;
      // allow a signed/parenthesised exponent; it must fold to an integer
      NodeRef e = (peek() == '-' || peek() == '+') ? parse_unary() : parse_power();
      if (e->op != Op::Constant)
        throw ParseError("exponent must be an integer constant", at);
      double v = e->value;
      if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ParseError("non-integer exponent", at);
      return powi(base, static_cast<int>(v));
    }
    return base;
  }

  NodeRef parse_primary() {
    skip_ws();
    if (pos >= text.size()) throw ParseError("unexpected end of expression", pos);
    char c = text[pos];
    if (c == '(') {
      ++pos;
      NodeRef e = parse_sum();
      skip_ws();
      if (!eat(')')) throw ParseError("unbalanced parenthesis", pos);
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    throw ParseError(std::string("unexpected character '") + c + "'", pos);
  }

  NodeRef parse_number() {
    std::size_t start = pos;
    const char* begin = text.c_str() + pos;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("malformed number", start);
    pos += static_cast<std::size_t>(end - begin);
    return constant(v);
  }

  NodeRef parse_ident() {
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    std::string name = text.substr(start, pos - start);
    static const std::pair<const char*, Fn> fns[] = {
        {"exp", Fn::Exp},   {"sin", Fn::Sin},   {"cos", Fn::Cos}, {"sinh", Fn::Sinh},
        {"cosh", Fn::Cosh}, {"sqrt", Fn::Sqrt}, {"log", Fn::Log}};
    for (auto& [nm, f] : fns) {
      if (name == nm) {
        if (!eat('(')) throw ParseError("expected '(' after function name", pos);
        NodeRef arg = parse_sum();
        if (!eat(')')) throw ParseError("unbalanced parenthesis", pos);
        return call(f, arg);
      }
    }
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == name) return variable(static_cast<int>(i));
    throw ParseError("unknown identifier '" + name + "'", start);
  }
};

}  // namespace

NodeRef parse(const std::string& text, const std::vector<std::string>& vars) {
  Parser p{text, vars};
  NodeRef e = p.parse_sum();
  p.skip_ws();
  if (p.pos != text.size()) throw ParseError("trailing input", p.pos);
  return e;
}

// ---------------------------------------------------------------------------
// evaluation

double eval(const Node* n, const double* xs, int nvars) {
  switch (n->op) {
    case Op::Constant: return n->value;
    case Op::Variable: return xs[n->var];
    case Op::Neg: return -eval(n->a.get(), xs, nvars);
    case Op::Add: return eval(n->a.get(), xs, nvars) + eval(n->b.get(), xs, nvars);
    case Op::Sub: return eval(n->a.get(), xs, nvars) - eval(n->b.get(), xs, nvars);
    case Op::Mul: return eval(n->a.get(), xs, nvars) * eval(n->b.get(), xs, nvars);
    case Op::Div: {
      double num = eval(n->a.get(), xs, nvars);
      double den = eval(n->b.get(), xs, nvars);
      if (den == 0.0) domain_fault("division by zero", xs, nvars);
      return num / den;
    }
    case Op::PowInt: return pow_int(eval(n->a.get(), xs, nvars), n->expn, xs, nvars);
    case Op::Func: {
      double v = eval(n->a.get(), xs, nvars);
      switch (n->fn) {
        case Fn::Exp: return std::exp(v);
        case Fn::Sin: return std::sin(v);
        case Fn::Cos: return std::cos(v);
        case Fn::Sinh: return std::sinh(v);
        case Fn::Cosh: return std::cosh(v);
        case Fn::Sqrt:
          if (v < 0) domain_fault("sqrt of negative argument", xs, nvars);
          return std::sqrt(v);
        case Fn::Log:
          if (v <= 0) domain_fault("log of non-positive argument", xs, nvars);
          return std::log(v);
      }
      return 0;
    }
  }
  return 0;
}

// ---------------------------------------------------------------------------
// differentiation

NodeRef diff(const NodeRef& n, int var) {
  switch (n->op) {
    case Op::Constant: return constant(0);
    case Op::Variable: return constant(n->var == var ? 1 : 0);
    case Op::Neg: return neg(diff(n->a, var));
    case Op::Add: return add(diff(n->a, var), diff(n->b, var));
    case Op::Sub: return sub(diff(n->a, var), diff(n->b, var));
    case Op::Mul:
      return add(mul(diff(n->a, var), n->b), mul(n->a, diff(n->b, var)));
    case Op::Div:
      // (u/v)' = u'/v - u v'/v^2
      return sub(div(diff(n->a, var), n->b),
                 div(mul(n->a, diff(n->b, var)), powi(n->b, 2)));
    case Op::PowInt:
      // (u^k)' = k u^(k-1) u'
      return mul(mul(constant(n->expn), powi(n->a, n->expn - 1)), diff(n->a, var));
    case Op::Func: {
      NodeRef da = diff(n->a, var);
      switch (n->fn) {
        case Fn::Exp: return mul(call(Fn::Exp, n->a), da);
        case Fn::Sin: return mul(call(Fn::Cos, n->a), da);
        case Fn::Cos: return neg(mul(call(Fn::Sin, n->a), da));
        case Fn::Sinh: return mul(call(Fn::Cosh, n->a), da);
        case Fn::Cosh: return mul(call(Fn::Sinh, n->a), da);
        case Fn::Sqrt: return div(da, mul(constant(2), call(Fn::Sqrt, n->a)));
        case Fn::Log: return div(da, n->a);
      }
      return constant(0);
    }
  }
  return constant(0);
}

bool depends_on(const NodeRef& n, int var) {
  switch (n->op) {
    case Op::Constant: return false;
    case Op::Variable: return n->var == var;
    case Op::Neg:
    case Op::PowInt:
    case Op::Func: return depends_on(n->a, var);
    default: return depends_on(n->a, var) || depends_on(n->b, var);
  }
}

// ---------------------------------------------------------------------------
// printing (fully parenthesised; %.17g constants round-trip exactly)

std::string print(const NodeRef& n, const std::vector<std::string>& vars) {
  switch (n->op) {
    case Op::Constant: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", n->value);
      std::string s = buf;
      if (n->value < 0) return "(" + s + ")";
      return s;
    }
    case Op::Variable: return vars.at(static_cast<std::size_t>(n->var));
    case Op::Neg: return "(-" + print(n->a, vars) + ")";
    case Op::Add: return "(" + print(n->a, vars) + "+" + print(n->b, vars) + ")";
    case Op::Sub: return "(" + print(n->a, vars) + "-" + print(n->b, vars) + ")";
    case Op::Mul: return "(" + print(n->a, vars) + "*" + print(n->b, vars) + ")";
    case Op::Div: return "(" + print(n->a, vars) + "/" + print(n->b, vars) + ")";
    case Op::PowInt:
      return "(" + print(n->a, vars) + "^(" + std::to_string(n->expn) + "))";
    case Op::Func: return std::string(fn_name(n->fn)) + "(" + print(n->a, vars) + ")";
  }
  return "0";
}

// ---------------------------------------------------------------------------
// ScalarField

ScalarField::ScalarField() : ast_(constant(0)), nvars_(4) {}

ScalarField::ScalarField(NodeRef ast, int nvars) : ast_(std::move(ast)), nvars_(nvars) {}

ScalarField ScalarField::parse_chart(const std::string& text) {
  return ScalarField(parse(text, chart_vars()), 4);
}

ScalarField ScalarField::parse_product(const std::string& text) {
  return ScalarField(parse(text, product_vars()), 6);
}

const ScalarField& ScalarField::partial(int var) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = cache_index_.find(var);
  if (it != cache_index_.end()) return cache_[it->second];
  cache_.emplace_back(diff(ast_, var), nvars_);
  cache_index_[var] = cache_.size() - 1;
  return cache_.back();
}

}  // namespace hyptwist::expr
