#include "dgopt/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

namespace dgopt {

struct Expression::Node {
  Kind kind = Kind::Constant;
  double value = 0.0;
  int index = 0;  // variable index or Pow exponent
  std::vector<Expression> args;
};

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Constant;
  n->value = value;
  return Expression(std::move(n));
}

Expression Expression::variable(int index) {
  if (index < 0) throw InputError("variable index must be nonnegative");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Variable;
  n->index = index;
  return Expression(std::move(n));
}

Expression Expression::unary(Kind kind, Expression arg) {
  switch (kind) {
    case Kind::Neg:
    case Kind::Exp:
    case Kind::Log:
    case Kind::Abs:
    case Kind::Sign:
      break;
    default:
      throw std::logic_error("Expression::unary: not a unary kind");
  }
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args = {std::move(arg)};
  return Expression(std::move(n));
}

Expression Expression::binary(Kind kind, Expression lhs, Expression rhs) {
  switch (kind) {
    case Kind::Add:
    case Kind::Sub:
    case Kind::Mul:
    case Kind::Div:
    case Kind::Max:
      break;
    default:
      throw std::logic_error("Expression::binary: not a binary kind");
  }
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->args = {std::move(lhs), std::move(rhs)};
  return Expression(std::move(n));
}

Expression Expression::power(Expression base, int exponent) {
  if (exponent < 1) throw InputError("power exponent must be a positive integer");
  auto n = std::make_shared<Node>();
  n->kind = Kind::Pow;
  n->index = exponent;
  n->args = {std::move(base)};
  return Expression(std::move(n));
}

Expression Expression::kink_select(Expression cond, Expression if_pos, Expression if_neg) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::KinkSelect;
  n->args = {std::move(cond), std::move(if_pos), std::move(if_neg)};
  return Expression(std::move(n));
}

Expression::Kind Expression::kind() const { return node_->kind; }
double Expression::value() const { return node_->value; }
int Expression::index() const { return node_->index; }
int Expression::exponent() const { return node_->index; }
const std::vector<Expression>& Expression::args() const { return node_->args; }

namespace {

double least_norm_of_segment(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

std::string format_number(double v) {
  char buf[64];
  for (int precision : {15, 17}) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

const char* kind_name(Expression::Kind k) {
  using K = Expression::Kind;
  switch (k) {
    case K::Add: return "Add";
    case K::Sub: return "Sub";
    case K::Mul: return "Mul";
    case K::Div: return "Div";
    case K::Neg: return "Neg";
    case K::Pow: return "Pow";
    case K::Exp: return "Exp";
    case K::Log: return "Log";
    case K::Abs: return "Abs";
    case K::Max: return "Max";
    case K::Sign: return "Sign";
    case K::KinkSelect: return "KinkSelect";
    default: return "?";
  }
}

}  // namespace

double Expression::evaluate(std::span<const double> x) const {
  const auto& a = node_->args;
  switch (node_->kind) {
    case Kind::Constant:
      return node_->value;
    case Kind::Variable:
      if (static_cast<std::size_t>(node_->index) >= x.size())
        throw InputError("expression references x[" + std::to_string(node_->index) +
                         "] but the point has dimension " + std::to_string(x.size()));
      return x[node_->index];
    case Kind::Add: return a[0].evaluate(x) + a[1].evaluate(x);
    case Kind::Sub: return a[0].evaluate(x) - a[1].evaluate(x);
    case Kind::Mul: return a[0].evaluate(x) * a[1].evaluate(x);
    case Kind::Div: return a[0].evaluate(x) / a[1].evaluate(x);
    case Kind::Neg: return -a[0].evaluate(x);
    case Kind::Pow: {
      const double base = a[0].evaluate(x);
      double out = 1.0;
      for (int k = 0; k < node_->index; ++k) out *= base;
      return out;
    }
    case Kind::Exp: return std::exp(a[0].evaluate(x));
    case Kind::Log: {
      const double u = a[0].evaluate(x);
      if (!(u > 0.0)) throw DomainError("log of non-positive value " + format_number(u));
      return std::log(u);
    }
    case Kind::Abs: return std::abs(a[0].evaluate(x));
    case Kind::Max: return std::max(a[0].evaluate(x), a[1].evaluate(x));
    case Kind::Sign: {
      const double u = a[0].evaluate(x);
      return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0);
    }
    case Kind::KinkSelect: {
      const double c = a[0].evaluate(x);
      if (c > 0.0) return a[1].evaluate(x);
      if (c < 0.0) return a[2].evaluate(x);
      return least_norm_of_segment(a[1].evaluate(x), a[2].evaluate(x));
    }
  }
  throw std::logic_error("Expression::evaluate: unknown node");
}

std::string Expression::to_string() const {
  switch (node_->kind) {
    case Kind::Constant:
      return format_number(node_->value);
    case Kind::Variable:
      return node_->index == 0 ? "x" : "x[" + std::to_string(node_->index) + "]";
    case Kind::Pow:
      return "Pow(" + node_->args[0].to_string() + "," + std::to_string(node_->index) + ")";
    default: {
      std::string out = kind_name(node_->kind);
      out += '(';
      for (std::size_t i = 0; i < node_->args.size(); ++i) {
        if (i) out += ',';
        out += node_->args[i].to_string();
      }
      return out + ')';
    }
  }
}

bool Expression::is_smooth() const {
  switch (node_->kind) {
    case Kind::Abs:
    case Kind::Max:
    case Kind::Sign:
    case Kind::KinkSelect:
      return false;
    default:
      for (const auto& arg : node_->args)
        if (!arg.is_smooth()) return false;
      return true;
  }
}

int Expression::max_variable_index() const {
  int best = node_->kind == Kind::Variable ? node_->index : -1;
  for (const auto& arg : node_->args) best = std::max(best, arg.max_variable_index());
  return best;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expression parse() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError("empty expression", pos_);
    Expression e = parse_sum();
    skip_ws();
    if (pos_ != src_.size())
      throw ParseError("unexpected '" + std::string(1, src_[pos_]) + "'", pos_);
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      const std::string found =
          pos_ < src_.size() ? "'" + std::string(1, src_[pos_]) + "'" : "end of input";
      throw ParseError("expected '" + std::string(1, c) + "' but found " + found, pos_);
    }
  }

  Expression parse_sum() {
    Expression lhs = parse_product();
    for (;;) {
      if (accept('+'))
        lhs = lhs + parse_product();
      else if (accept('-'))
        lhs = lhs - parse_product();
      else
        return lhs;
    }
  }

  Expression parse_product() {
    Expression lhs = parse_unary();
    for (;;) {
      if (accept('*'))
        lhs = lhs * parse_unary();
      else if (accept('/'))
        lhs = lhs / parse_unary();
      else
        return lhs;
    }
  }

  Expression parse_unary() {
    if (accept('-')) return -parse_unary();
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_primary();
    skip_ws();
    if (!accept('^')) return base;
    skip_ws();
    const std::size_t at = pos_;
    // Right associative: the exponent may itself be a power.
    const Expression exponent = parse_unary();
    if (exponent.max_variable_index() >= 0)
      throw ParseError("exponent must be a constant positive integer", at);
    const double v = simplify(exponent).value();
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e6)
      throw ParseError("exponent must be a positive integer, got " + exponent.to_string(), at);
    return Expression::power(base, static_cast<int>(v));
  }

  Expression parse_primary() {
    skip_ws();
    if (pos_ == src_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      Expression inner = parse_sum();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
    throw ParseError("unexpected '" + std::string(1, c) + "'", pos_);
  }

  Expression parse_number() {
    const std::size_t start = pos_;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), value);
    if (ec != std::errc()) throw ParseError("malformed number", start);
    pos_ = static_cast<std::size_t>(ptr - src_.data());
    return Expression::constant(value);
  }

  Expression parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string name(src_.substr(start, pos_ - start));

    if (name == "x") {
      if (!accept('[')) return Expression::variable(0);
      skip_ws();
      const std::size_t at = pos_;
      int index = 0;
      const auto [ptr, ec] = std::from_chars(src_.data() + pos_, src_.data() + src_.size(), index);
      if (ec != std::errc() || index < 0) throw ParseError("expected a component index", at);
      pos_ = static_cast<std::size_t>(ptr - src_.data());
      expect(']');
      return Expression::variable(index);
    }

    using K = Expression::Kind;
    K kind;
    int arity = 1;
    if (name == "exp") {
      kind = K::Exp;
    } else if (name == "log") {
      kind = K::Log;
    } else if (name == "abs") {
      kind = K::Abs;
    } else if (name == "max") {
      kind = K::Max;
      arity = 2;
    } else {
      throw ParseError("unknown identifier '" + name + "'", start);
    }

    expect('(');
    std::vector<Expression> args;
    args.push_back(parse_sum());
    while (accept(',')) args.push_back(parse_sum());
    const std::size_t close = pos_;
    expect(')');
    if (static_cast<int>(args.size()) != arity)
      throw ParseError(name + " takes " + std::to_string(arity) + " argument(s), got " +
                           std::to_string(args.size()),
                       close);
    return arity == 1 ? Expression::unary(kind, args[0])
                      : Expression::binary(kind, args[0], args[1]);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression parse_expression(std::string_view src) { return Parser(src).parse(); }

// ---------------------------------------------------------------------------
// Simplification and differentiation

namespace {

bool is_const(const Expression& e, double v) {
  return e.kind() == Expression::Kind::Constant && e.value() == v;
}

bool is_const(const Expression& e) { return e.kind() == Expression::Kind::Constant; }

}  // namespace

Expression simplify(const Expression& e) {
  using K = Expression::Kind;
  if (e.kind() == K::Constant || e.kind() == K::Variable) return e;

  std::vector<Expression> args;
  args.reserve(e.args().size());
  bool all_const = true;
  for (const auto& a : e.args()) {
    args.push_back(simplify(a));
    all_const = all_const && is_const(args.back());
  }

  auto rebuild = [&]() -> Expression {
    switch (e.kind()) {
      case K::Pow: return Expression::power(args[0], e.exponent());
      case K::KinkSelect: return Expression::kink_select(args[0], args[1], args[2]);
      case K::Neg:
      case K::Exp:
      case K::Log:
      case K::Abs:
      case K::Sign:
        return Expression::unary(e.kind(), args[0]);
      default:
        return Expression::binary(e.kind(), args[0], args[1]);
    }
  };

  Expression out = rebuild();
  if (all_const) {
    try {
      const double v = out.evaluate(std::span<const double>{});
      if (std::isfinite(v)) return Expression::constant(v);
    } catch (const DomainError&) {
      // leave unfolded; evaluation reports it at the point of use
    }
    return out;
  }

  switch (e.kind()) {
    case K::Add:
      if (is_const(args[0], 0.0)) return args[1];
      if (is_const(args[1], 0.0)) return args[0];
      break;
    case K::Sub:
      if (is_const(args[1], 0.0)) return args[0];
      if (is_const(args[0], 0.0)) return simplify(-args[1]);
      break;
    case K::Mul:
      if (is_const(args[0], 0.0) || is_const(args[1], 0.0)) return Expression::constant(0.0);
      if (is_const(args[0], 1.0)) return args[1];
      if (is_const(args[1], 1.0)) return args[0];
      break;
    case K::Div:
      if (is_const(args[0], 0.0)) return Expression::constant(0.0);
      if (is_const(args[1], 1.0)) return args[0];
      break;
    case K::Neg:
      if (args[0].kind() == K::Neg) return args[0].args()[0];
      break;
    case K::Pow:
      if (e.exponent() == 1) return args[0];
      break;
    case K::KinkSelect:
      if (args[1].to_string() == args[2].to_string()) return args[1];
      break;
    default:
      break;
  }
  return out;
}

namespace {

Expression derive(const Expression& e, int var) {
  using K = Expression::Kind;
  const auto& a = e.args();
  switch (e.kind()) {
    case K::Constant:
      return Expression::constant(0.0);
    case K::Variable:
      return Expression::constant(e.index() == var ? 1.0 : 0.0);
    case K::Add:
      return derive(a[0], var) + derive(a[1], var);
    case K::Sub:
      return derive(a[0], var) - derive(a[1], var);
    case K::Mul:
      return derive(a[0], var) * a[1] + a[0] * derive(a[1], var);
    case K::Div:
      return (derive(a[0], var) * a[1] - a[0] * derive(a[1], var)) / Expression::power(a[1], 2);
    case K::Neg:
      return -derive(a[0], var);
    case K::Pow: {
      const int k = e.exponent();
      const Expression lower = k == 1 ? Expression::constant(1.0) : Expression::power(a[0], k - 1);
      return Expression::constant(k) * lower * derive(a[0], var);
    }
    case K::Exp:
      return e * derive(a[0], var);
    case K::Log:
      return derive(a[0], var) / a[0];
    case K::Abs:
      return Expression::unary(K::Sign, a[0]) * derive(a[0], var);
    case K::Max:
      return Expression::kink_select(a[0] - a[1], derive(a[0], var), derive(a[1], var));
    case K::Sign:
      return Expression::constant(0.0);
    case K::KinkSelect:
      return Expression::kink_select(a[0], derive(a[1], var), derive(a[2], var));
  }
  throw std::logic_error("differentiate: unsupported node");
}

}  // namespace

Expression differentiate(const Expression& e, int var) {
  if (var < 0) throw InputError("differentiation variable index must be nonnegative");
  return simplify(derive(e, var));
}

}  // namespace dgopt
