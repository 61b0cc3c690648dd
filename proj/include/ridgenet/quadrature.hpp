#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace ridgenet::quad {

struct Options {
  double abs_tol = 1e-10;
  double rel_tol = 0.0;
  std::size_t max_panels = std::size_t{1} << 16;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  std::size_t panels = 0;
};

struct VectorResult {
  std::vector<double> value;
  double error = 0.0;
  std::size_t panels = 0;
};

using Integrand = std::function<double(double)>;
/// Vector integrand: writes `out.size()` components for abscissa x.
using VectorIntegrand = std::function<void(double x, std::span<double> out)>;

/// Globally adaptive 7/15-point Gauss-Kronrod quadrature over the pieces
/// [points[0], points[1]], [points[1], points[2]], ... . Panels are bisected
/// in order of decreasing error estimate until the summed estimate meets
/// max(abs_tol, rel_tol * |value|). Throws QuadratureError when max_panels
/// is exhausted.
Result integrate(const Integrand& f, std::span<const double> points, const Options& opts = {});
Result integrate(const Integrand& f, double a, double b, const Options& opts = {});

/// Vector-valued variant; the error is the max-norm over components.
VectorResult integrate(const VectorIntegrand& f, std::size_t n, std::span<const double> points,
                       const Options& opts = {});

/// Integral over the whole real line. With `support` the domain is cut to
/// [-support, support]; otherwise z = scale * tan(theta) maps R onto
/// (-pi/2, pi/2). Breakpoints (kinks of the integrand) are preserved in
/// either chart.
Result integrate_real_line(const Integrand& f, std::span<const double> breakpoints,
                           std::optional<double> support, const Options& opts = {},
                           double scale = 1.0);

/// Sorted, deduplicated breakpoints inside (a, b), framed by a and b.
std::vector<double> pieces(double a, double b, std::span<const double> interior);

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on the Legendre recurrence).
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
Rule gauss_legendre(std::size_t n);

/// Abscissae of the 15-point Kronrod rule on [a, b], in evaluation order.
std::vector<double> kronrod_abscissae(double a, double b);

}  // namespace ridgenet::quad
