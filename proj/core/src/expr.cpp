#include "tunnelshock/expr.hpp"

#include <cctype>
#include <cmath>
#include <numbers>
#include <vector>

#include <fmt/format.h>

#include "tunnelshock/errors.hpp"

namespace tunnelshock {

namespace {

enum class Op : std::uint8_t {
  constant, var_x, var_t, var_u,
  neg, add, sub, mul, div, pow,
  exp, log, sin, cos, tanh, sech, abs,
  min, max,
};

struct Node {
  Op op;
  double value = 0.0;
  int lhs = -1;
  int rhs = -1;
};

struct FunctionInfo {
  std::string_view name;
  Op op;
  int arity;
};

constexpr FunctionInfo kFunctions[] = {
    {"exp", Op::exp, 1},   {"log", Op::log, 1},   {"sin", Op::sin, 1},
    {"cos", Op::cos, 1},   {"tanh", Op::tanh, 1}, {"sech", Op::sech, 1},
    {"abs", Op::abs, 1},   {"min", Op::min, 2},   {"max", Op::max, 2},
};

[[noreturn]] void domain_error(const char* what) { throw NumericalError(Failure::domain, what); }

inline double checked(double v, const char* what) {
  if (!std::isfinite(v)) domain_error(what);
  return v;
}

}  // namespace

struct Expression::Program {
  std::string source;
  std::vector<Node> nodes;
  int root = -1;
  std::uint8_t used = 0;

  double eval(int i, const Bindings& b) const {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    switch (n.op) {
      case Op::constant: return n.value;
      case Op::var_x: return b.x;
      case Op::var_t: return b.t;
      case Op::var_u: return b.u;
      case Op::neg: return -eval(n.lhs, b);
      case Op::add: return checked(eval(n.lhs, b) + eval(n.rhs, b), "overflow in +");
      case Op::sub: return checked(eval(n.lhs, b) - eval(n.rhs, b), "overflow in -");
      case Op::mul: return checked(eval(n.lhs, b) * eval(n.rhs, b), "overflow in *");
      case Op::div: {
        const double num = eval(n.lhs, b);
        const double den = eval(n.rhs, b);
        if (den == 0.0) domain_error("division by zero");
        return checked(num / den, "overflow in /");
      }
      case Op::pow: return checked(std::pow(eval(n.lhs, b), eval(n.rhs, b)), "invalid power");
      case Op::exp: return checked(std::exp(eval(n.lhs, b)), "exp overflow");
      case Op::log: {
        const double a = eval(n.lhs, b);
        if (!(a > 0.0)) domain_error("log of non-positive argument");
        return std::log(a);
      }
      case Op::sin: return std::sin(eval(n.lhs, b));
      case Op::cos: return std::cos(eval(n.lhs, b));
      case Op::tanh: return std::tanh(eval(n.lhs, b));
      case Op::sech: return 1.0 / std::cosh(eval(n.lhs, b));
      case Op::abs: return std::fabs(eval(n.lhs, b));
      case Op::min: return std::fmin(eval(n.lhs, b), eval(n.rhs, b));
      case Op::max: return std::fmax(eval(n.lhs, b), eval(n.rhs, b));
    }
    return 0.0;
  }

  std::string render(int i) const {
    const Node& n = nodes[static_cast<std::size_t>(i)];
    auto binary = [&](const char* sym) {
      return fmt::format("({} {} {})", render(n.lhs), sym, render(n.rhs));
    };
    switch (n.op) {
      case Op::constant: return n.value < 0 ? fmt::format("({:.17g})", n.value) : fmt::format("{:.17g}", n.value);
      case Op::var_x: return "x";
      case Op::var_t: return "t";
      case Op::var_u: return "u";
      case Op::neg: return fmt::format("(-{})", render(n.lhs));
      case Op::add: return binary("+");
      case Op::sub: return binary("-");
      case Op::mul: return binary("*");
      case Op::div: return binary("/");
      case Op::pow: return binary("^");
      case Op::min: return fmt::format("min({}, {})", render(n.lhs), render(n.rhs));
      case Op::max: return fmt::format("max({}, {})", render(n.lhs), render(n.rhs));
      default: break;
    }
    for (const auto& f : kFunctions) {
      if (f.op == n.op) return fmt::format("{}({})", f.name, render(n.lhs));
    }
    return "?";
  }
};

namespace {

class Parser {
 public:
  Parser(std::string_view src, VariableSet allowed, Expression::Program& prog)
      : src_(src), allowed_(allowed), prog_(prog) {}

  int parse() {
    skip_ws();
    const int root = expression();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input", {"operator", "end of input"});
    return root;
  }

 private:
  int add(Node n) {
    prog_.nodes.push_back(n);
    return static_cast<int>(prog_.nodes.size() - 1);
  }

  [[noreturn]] void fail(const std::string& msg, std::vector<std::string> expected) const {
    std::string exp;
    for (std::size_t i = 0; i < expected.size(); ++i) exp += (i ? ", " : "") + expected[i];
    throw ParseError(fmt::format("syntax error at offset {}: {} (expected {})", pos_, msg, exp), pos_,
                     std::move(expected));
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      skip_ws();
      return true;
    }
    return false;
  }

  int expression() {
    int lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = add({Op::add, 0.0, lhs, term()});
      } else if (accept('-')) {
        lhs = add({Op::sub, 0.0, lhs, term()});
      } else {
        return lhs;
      }
    }
  }

  int term() {
    int lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = add({Op::mul, 0.0, lhs, unary()});
      } else if (accept('/')) {
        lhs = add({Op::div, 0.0, lhs, unary()});
      } else {
        return lhs;
      }
    }
  }

  int unary() {
    if (accept('-')) return add({Op::neg, 0.0, unary(), -1});
    if (accept('+')) return unary();
    return power();
  }

  int power() {
    const int base = primary();
    if (accept('^')) return add({Op::pow, 0.0, base, unary()});
    return base;
  }

  int primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input", {"number", "identifier", "(", "-"});
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      const int inner = expression();
      if (!accept(')')) fail("unbalanced parenthesis", {")"});
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(fmt::format("unexpected character '{}'", c), {"number", "identifier", "(", "-"});
  }

  int number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < src_.size() && (src_[look] == '+' || src_[look] == '-')) ++look;
      if (look < src_.size() && std::isdigit(static_cast<unsigned char>(src_[look]))) {
        pos_ = look;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
      }
    }
    const std::string text(src_.substr(start, pos_ - start));
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(text, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != text.size()) {
      pos_ = start;
      fail(fmt::format("malformed number '{}'", text), {"number"});
    }
    skip_ws();
    return add({Op::constant, value});
  }

  int identifier() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    const std::string_view name = src_.substr(start, pos_ - start);
    skip_ws();

    for (const auto& f : kFunctions) {
      if (f.name != name) continue;
      if (!accept('(')) fail(fmt::format("function '{}' needs an argument list", name), {"("});
      const int a = expression();
      int b = -1;
      if (f.arity == 2) {
        if (!accept(',')) fail(fmt::format("function '{}' takes two arguments", name), {","});
        b = expression();
      }
      if (!accept(')')) fail("unbalanced parenthesis", {")"});
      return add({f.op, 0.0, a, b});
    }

    auto variable = [&](Variable v, Op op) {
      if (!allowed_.contains(v)) {
        throw ParseError(fmt::format("unknown identifier '{}' at offset {}", name, start), start, {});
      }
      prog_.used |= static_cast<std::uint8_t>(v);
      return add({op});
    };
    if (name == "x") return variable(Variable::x, Op::var_x);
    if (name == "t") return variable(Variable::t, Op::var_t);
    if (name == "u") return variable(Variable::u, Op::var_u);
    if (name == "pi") return add({Op::constant, std::numbers::pi});
    throw ParseError(fmt::format("unknown identifier '{}' at offset {}", name, start), start, {});
  }

  std::string_view src_;
  VariableSet allowed_;
  Expression::Program& prog_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression::Expression() : Expression(constant(0.0)) {}

Expression::Expression(std::shared_ptr<const Program> program) : program_(std::move(program)) {}

Expression Expression::parse(std::string_view source, VariableSet allowed) {
  auto prog = std::make_shared<Program>();
  prog->source = std::string(source);
  bool blank = true;
  for (char c : source) blank = blank && std::isspace(static_cast<unsigned char>(c));
  if (blank) throw ParseError("empty expression", 0, {"number", "identifier", "(", "-"});
  Parser parser(source, allowed, *prog);
  prog->root = parser.parse();
  return Expression(std::move(prog));
}

Expression Expression::constant(double value) {
  auto prog = std::make_shared<Program>();
  prog->nodes.push_back({Op::constant, value});
  prog->root = 0;
  prog->source = fmt::format("{:.17g}", value);
  return Expression(std::move(prog));
}

double Expression::eval(const Bindings& b) const {
  return checked(program_->eval(program_->root, b), "non-finite result");
}

const std::string& Expression::source() const { return program_->source; }

std::string Expression::to_string() const { return program_->render(program_->root); }

bool Expression::uses(Variable v) const { return (program_->used & static_cast<std::uint8_t>(v)) != 0; }

bool Expression::is_constant() const { return program_->used == 0; }

double derivative_x(const Expression& e, double x, double t, double step) {
  return (e(x + step, t) - e(x - step, t)) / (2.0 * step);
}

double second_derivative_x(const Expression& e, double x, double t, double step) {
  return (e(x + step, t) - 2.0 * e(x, t) + e(x - step, t)) / (step * step);
}

}  // namespace tunnelshock
