#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ridgenet/funclib.hpp"

namespace ridgenet {

/// Coefficients of the four special terms. Which side they live on depends
/// on the caller: CircleWeight::trig holds weight-side multipliers of
/// cos, sin, |cos|, s; decompose() returns function-side multipliers of
/// x, 1, x atan x + 1, atan x.
struct DecompCoeffs {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double eta = 0.0;
};

/// s(phi) = sin(phi) on [-pi/2, pi/2), extended with period pi.
double s_phi(double phi);

/// Weight function on the circle (phi parameterizes (cos phi, sin phi)):
///   c(phi) = f''(z) / (2|cos^3 phi|) + k''(z) / (2 cos^3 phi)
///          + alpha cos phi + beta sin phi + gamma |cos phi| + eta s(phi)
///          + raw(phi),                           z = -tan(phi).
struct CircleWeight {
  std::optional<Scalar1D> sym;   // f: even part under phi -> phi + pi
  std::optional<Scalar1D> anti;  // k: odd part
  DecompCoeffs trig;
  std::function<double(double)> raw;
  std::vector<double> raw_kinks;  // phi-locations where raw is not smooth

  double operator()(double phi) const;
  /// Everything except the sym/anti parts.
  double extra(double phi) const;
  bool has_extra() const;
  bool has_structured() const { return sym.has_value() || anti.has_value(); }
  /// Union of the exceptional sets of f'' and k'' (z-chart).
  std::vector<double> z_kinks() const;
  /// Common support radius of the structured parts, if both are compact.
  std::optional<double> z_support() const;
};

/// Externally supplied weight phi -> c(phi).
CircleWeight raw_weight(std::function<double(double)> c, std::vector<double> kinks = {});

/// c_f(phi) = f''(-tan phi) / (2 |cos phi|^3). Refuses f outside W(R)
/// unless force is set.
CircleWeight least_l1_weight(const Scalar1D& f, bool force = false);

/// General representing weight with sym part f, anti part k and weight-side
/// trig coefficients.
CircleWeight weight_family(const Scalar1D& f, const Scalar1D& k, const DecompCoeffs& trig,
                           bool force = false);

/// int_0^{2 pi} c(phi) relu(x cos phi + sin phi) dphi.
double forward(const CircleWeight& c, double x, double tol = 1e-10);
/// First derivative of forward(c, .) in x.
double forward_d1(const CircleWeight& c, double x, double tol = 1e-10);
/// Second derivative of forward(c, .) in x: (c(-atan x) + c(pi - atan x)) / (1+x^2)^{3/2}.
double forward_d2(const CircleWeight& c, double x);
/// forward(c, .) packaged as a target function.
Scalar1D represented_function(const CircleWeight& c, double tol = 1e-10);

/// Half-circle moments
///   m1 = int c(phi) cos,  m2 = int c(phi + pi) cos,
///   m3 = int c(phi) sin,  m4 = int c(phi + pi) sin   over (-pi/2, pi/2).
struct Moments {
  std::array<double, 4> m{};
  bool vanish = false;
};
Moments moment_conditions(const CircleWeight& c, double tol = 1e-7, double quad_tol = 1e-11);

/// Function-side coefficients: forward(c) - (alpha x + beta + gamma (x atan x + 1)
/// + eta atan x) lies in W(R).
DecompCoeffs decompose(const CircleWeight& c, double tol = 1e-11);

/// int_0^{2 pi} |c(phi)| dphi.
double eval_l1_norm(const CircleWeight& c, double tol = 1e-10);

/// phi -> c(phi) + c(phi + pi) = f''(-tan phi) (1 + tan^2 phi)^{3/2}.
std::function<double(double)> reconstruct_weight_from_f(const Scalar1D& f);

/// CSV "phi,c" on n uniform nodes of [0, 2 pi).
void write_weight_csv(std::ostream& out, const CircleWeight& c, std::size_t n);

struct DecompositionReport {
  DecompCoeffs coeffs;
  Moments moments;
  double l1_norm = 0.0;
};
DecompositionReport decomposition_report(const CircleWeight& c, double moment_tol = 1e-7);
/// key=value lines, values at 17 significant digits.
void write_report(std::ostream& out, const DecompositionReport& r);

}  // namespace ridgenet
