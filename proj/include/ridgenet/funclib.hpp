#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ridgenet/expr.hpp"
#include "ridgenet/jet.hpp"

namespace ridgenet {

/// Univariate target with exact first and second derivatives. d2 may be
/// undefined on the finite `exceptional` set (spline knots).
struct Scalar1D {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::vector<double> exceptional;
  std::optional<double> support;  // f vanishes for |x| > support
  std::vector<std::string> tags;

  double operator()(double x) const { return f(x); }
  bool has_tag(const std::string& t) const;
  /// Breakpoints for quadrature of f'': exceptional points and support ends.
  std::vector<double> kinks() const;
};

/// A * g, keeping support and exceptional set.
Scalar1D scaled(const Scalar1D& g, double a);
/// Identically zero function.
Scalar1D zero_function();

/// Compactly supported multivariate target with a jet evaluator along lines.
struct FieldND {
  std::string name;
  int dim = 2;
  std::function<Jet(std::span<const double> x0, std::span<const double> v, int order)> jet;
  double support_radius = 1.0;
  int smoothness = expr::kSmooth;

  double value(std::span<const double> x) const;
};

/// "gaussian", "bump1", "cauchy", "cubic_bspline", "atan", "xatan",
/// "linear", "const" are Scalar1D; "bump2", "bump3" are FieldND.
std::variant<Scalar1D, FieldND> builtin(const std::string& name);
Scalar1D scalar_builtin(const std::string& name);
FieldND field_builtin(const std::string& name);
std::vector<std::string> builtin_names();

/// Wraps a parsed expression (dim 1). Derivatives come from jets.
Scalar1D scalar_from_expr(std::shared_ptr<const expr::Ast> ast, std::string name = "expr");
/// Wraps a parsed expression (dim 2 or 3). Throws RefusalError when no
/// compact support can be established.
FieldND field_from_expr(std::shared_ptr<const expr::Ast> ast, std::string name = "expr");

/// Reads CSV with header x,f[,f1[,f2]] (ascending x). Missing derivative
/// columns are taken from a natural cubic spline and the result is tagged
/// "approximate". Outside the sampled interval the function is zero.
Scalar1D scalar_from_csv(std::istream& in, std::string name = "csv");

enum class WVerdict { in_W, not_in_W, inconclusive };
const char* to_string(WVerdict v);

struct WMembership {
  WVerdict verdict = WVerdict::inconclusive;
  double f_at_R = 0.0;       // max |f(+-R)|
  double xf1_at_R = 0.0;     // max |R f'(+-R)|
  double f_limit = 0.0;      // extrapolated lim |f|
  double xf1_limit = 0.0;    // extrapolated lim |x f'|
  double integral = 0.0;     // tail-corrected int |f''| sqrt(1+x^2) dx at R
  double integral_change = 0.0;  // |E(2R) - E(R)|
  bool integral_converged = false;
  std::string reason;
};

/// Heuristic test of lim f = lim x f' = 0 and int |f''| sqrt(1+x^2) < inf.
WMembership check_w_membership(const Scalar1D& f, double R = 30.0, double tol = 1e-6);

}  // namespace ridgenet
