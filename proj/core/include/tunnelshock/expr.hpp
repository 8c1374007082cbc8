#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

namespace tunnelshock {

/// Free variables an expression may reference.
enum class Variable : std::uint8_t { x = 1, t = 2, u = 4 };

/// Set of allowed variables, passed to Expression::parse.
class VariableSet {
 public:
  constexpr VariableSet() = default;
  constexpr VariableSet(std::initializer_list<Variable> vars) {
    for (auto v : vars) bits_ |= static_cast<std::uint8_t>(v);
  }
  constexpr bool contains(Variable v) const { return (bits_ & static_cast<std::uint8_t>(v)) != 0; }
  constexpr std::uint8_t bits() const { return bits_; }

  static constexpr VariableSet space_time() { return {Variable::x, Variable::t}; }
  static constexpr VariableSet space_velocity() { return {Variable::x, Variable::t, Variable::u}; }

 private:
  std::uint8_t bits_ = 0;
};

struct Bindings {
  double x = 0.0;
  double t = 0.0;
  double u = 0.0;
};

/// Immutable scalar expression over x, t (and optionally u).
///
/// Grammar: numbers, the variables, `pi`, binary + - * / ^, unary -, the
/// functions exp log sin cos tanh sech abs (one argument) and min max (two
/// arguments), parentheses. `^` binds tighter than unary minus, which binds
/// tighter than * and /. `^` is right associative, the rest left associative.
///
/// Evaluation never returns a non-finite value: log of a non-positive number,
/// division by zero and overflow raise NumericalError(Failure::domain).
/// Copies share the parsed tree, so passing expressions by value is cheap and
/// evaluating one expression from several threads is safe.
class Expression {
 public:
  /// The constant 0.
  Expression();

  static Expression parse(std::string_view source, VariableSet allowed = VariableSet::space_time());
  static Expression constant(double value);

  double eval(const Bindings& b) const;
  double operator()(double x, double t = 0.0) const { return eval(Bindings{x, t, 0.0}); }

  /// Text the expression was parsed from (or a rendering, for constants).
  const std::string& source() const;

  /// Fully parenthesised rendering that parses back to an equivalent tree.
  std::string to_string() const;

  bool uses(Variable v) const;
  bool is_constant() const;

  struct Program;

 private:
  explicit Expression(std::shared_ptr<const Program> program);
  std::shared_ptr<const Program> program_;
};

/// Central difference d/dx with the given absolute step.
double derivative_x(const Expression& e, double x, double t, double step);

/// Second central difference d2/dx2 with the given absolute step.
double second_derivative_x(const Expression& e, double x, double t, double step);

}  // namespace tunnelshock
