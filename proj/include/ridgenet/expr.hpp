#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ridgenet/error.hpp"
#include "ridgenet/jet.hpp"

namespace ridgenet::expr {

enum class Op { Const, Pi, Var, Neg, Exp, Sin, Cos, Atan, Sqrt, Abs, Add, Sub, Mul, Div, Pow, Bump };

struct Node {
  Op op = Op::Const;
  int lhs = -1;  // operand indices into Ast::nodes (always smaller than this node's)
  int rhs = -1;
  double value = 0.0;  // constant value, or bump radius
  int index = 0;       // variable index (0-based) or integer exponent

  bool operator==(const Node&) const = default;
};

/// Flat expression tree in topological order; the root is the last node.
struct Ast {
  int dim = 1;
  std::vector<Node> nodes;

  int root() const { return static_cast<int>(nodes.size()) - 1; }
  bool operator==(const Ast&) const = default;
};

/// Grammar (whitespace-insensitive):
///   expr    := term { ('+' | '-') term }
///   term    := unary { ('*' | '/') unary }
///   unary   := ('-' | '+') unary | power
///   power   := primary [ '^' exponent ]
///   exponent:= ['-' | '+'] integer | '(' ['-' | '+'] integer ')'
///   primary := number | 'pi' | 'x1'..'x9' | func '(' expr ')' | 'bump' '(' number ')' | '(' expr ')'
///   func    := 'exp' | 'sin' | 'cos' | 'atan' | 'sqrt' | 'abs'
/// Throws ParseError carrying the byte offset of the failure.
Ast parse(std::string_view text, int dim);

/// Canonical fully parenthesized form; parse(print(a), a.dim) == a.
std::string print(const Ast& ast);

/// Longest root-to-leaf path, counted in edges.
int depth(const Ast& ast);

/// Radius outside which the expression is provably zero, if any.
std::optional<double> support_radius(const Ast& ast);

/// Number of continuous derivatives guaranteed everywhere: 0 when abs or
/// sqrt occur (kinks or infinite slopes possible), otherwise unbounded.
int smoothness(const Ast& ast);
inline constexpr int kSmooth = 1 << 20;

/// Point evaluation. Throws DomainError on division by zero or sqrt of a
/// negative number.
template <class T>
T eval(const Ast& ast, std::span<const T> x);

/// Taylor jet of t -> f(x0 + t v) at t = 0 to the given order.
Jet eval_jet(const Ast& ast, std::span<const double> x0, std::span<const double> v, int order);

/// Same, reusing `scratch` (resized as needed) to avoid allocation.
Jet eval_jet(const Ast& ast, std::span<const double> x0, std::span<const double> v, int order,
             std::vector<Jet>& scratch);

/// Reusable evaluator that keeps its scratch buffer between calls. Not
/// thread-safe; use one per worker.
class JetEvaluator {
 public:
  explicit JetEvaluator(const Ast& ast) : ast_(&ast), scratch_(ast.nodes.size()) {}
  Jet operator()(std::span<const double> x0, std::span<const double> v, int order);

 private:
  const Ast* ast_;
  std::vector<Jet> scratch_;
};

}  // namespace ridgenet::expr
