#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ridgenet/funclib.hpp"

namespace ridgenet {

/// Quadrature on S^{d-1}: nodes (flat, dim per node) and weights.
struct DirectionRule {
  int dim = 2;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::string name;

  std::size_t size() const { return weights.size(); }
  std::span<const double> node(std::size_t i) const { return {nodes.data() + i * dim, static_cast<std::size_t>(dim)}; }
  /// Index of the node -alpha_i, if the rule is antipodally symmetric there.
  std::optional<std::size_t> antipode(std::size_t i) const;
};

/// {+1, -1} with unit weights (counting measure on S^0).
DirectionRule point_pair();
/// n equispaced nodes on the circle.
DirectionRule circle_rule(std::size_t n);
/// Gauss-Legendre in cos(theta) times n_phi equispaced azimuths.
DirectionRule product_sphere_rule(std::size_t n_theta, std::size_t n_phi);
/// Lebedev rules with 6, 14, 26, 38 or 50 nodes (polynomial degree 3, 5, 7, 9, 11).
DirectionRule lebedev_rule(std::size_t n);
/// Default rule per dimension: 1 -> point pair, 2 -> 64-node circle,
/// 3 -> 14 x 28 product rule (exact to degree 27).
DirectionRule default_rule(int dim);

/// Offset derivatives of the Radon transform on a uniform beta-grid.
/// layers[k][i * n_offsets + j] = d^{deriv + k}/dbeta^{deriv + k} of the
/// stored quantity at (alpha_i, beta_j). The stored quantity is R[f] or,
/// after hilbert_offset, its Hilbert transform in beta. `far[k][i]` holds
/// far-field moments of the pre-transform row when the transformed row does
/// not vanish beyond the grid.
struct RadonGrid {
  int dim = 2;
  DirectionRule dirs;
  double B = 0.0;
  double h = 0.0;
  std::size_t n_offsets = 0;
  int deriv = 0;
  bool hilbert = false;
  std::vector<std::vector<double>> layers;
  std::vector<std::vector<std::vector<double>>> far;

  double beta(std::size_t j) const { return -B + static_cast<double>(j) * h; }
  int deriv_order_available() const { return deriv + static_cast<int>(layers.size()) - 1; }
  double at(std::size_t i, std::size_t j, std::size_t k = 0) const { return layers[k][i * n_offsets + j]; }
  std::span<const double> row(std::size_t i, std::size_t k = 0) const {
    return {layers[k].data() + i * n_offsets, n_offsets};
  }
};

void write_radon_grid(std::ostream& out, const RadonGrid& g);
RadonGrid read_radon_grid(std::istream& in);

struct RadonOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  int n_theta = 24;  // azimuthal trapezoid nodes on plane sections (d = 3)
  bool allow_coarse = false;  // skip the h <= support_radius/32 check (plain sampling only)
};

/// d^k/dbeta^k R[f](alpha, beta) for k = 0..max_order; alpha need not be
/// normalized (positive homogeneity).
std::vector<double> radon_value(const FieldND& f, std::span<const double> alpha, double beta, int max_order = 0,
                                const RadonOptions& opt = {});

/// Radon transform and offset derivatives up to max_order (analytic, via
/// jets along -alpha) on the grid beta_j = -B + j h, j = 0..round(2B/h).
RadonGrid radon_transform(const FieldND& f, const DirectionRule& dirs, double B, double h, int max_order = 0,
                          const RadonOptions& opt = {});

enum class DerivMode { analytic, finite_difference };

/// Analytic mode: recomputes with jets. Finite-difference mode: 13-point
/// central stencils (one-sided near the ends) applied to layer 0 of `grid`.
RadonGrid offset_derivative(const RadonGrid& grid, int k, DerivMode mode, const FieldND* f = nullptr,
                            const RadonOptions& opt = {});

/// Fornberg weights for the k-th derivative at x0 from the given nodes.
std::vector<double> fornberg_weights(int k, double x0, std::span<const double> nodes);

struct HilbertOptions {
  double edge_tol = 1e-10;  // required decay at the grid ends
  int far_terms = 40;
};

/// Discrete Hilbert transform in beta, applied to every layer. Rows whose
/// input carries far-field moments pick up the exterior contribution.
RadonGrid hilbert_offset(const RadonGrid& grid, const HilbertOptions& opt = {});

enum class Kernel { relu, heaviside };

/// Weight on S^{d-1} x R in the (alpha, beta) chart, either sampled on a
/// uniform beta-grid per direction (degree-5 local interpolation, with an
/// optional far field) or given analytically per direction.
struct ChartWeight {
  int dim = 2;
  Kernel kernel = Kernel::relu;
  DirectionRule dirs;
  double B = 0.0;
  double h = 0.0;
  std::size_t n_offsets = 0;
  std::vector<double> rows;
  std::vector<std::vector<double>> far;  // far[i][m]: w ~ (1/(pi beta)) sum_m far[i][m] (B/beta)^m
  // analytic form (used for d = 1)
  std::function<double(std::size_t i, double beta)> analytic;
  std::vector<std::vector<double>> kinks;  // per direction, analytic form only
  std::optional<double> support;           // analytic form: w vanishes for |beta| > support

  double operator()(std::size_t i, double beta) const;
  double beta(std::size_t j) const { return -B + static_cast<double>(j) * h; }
  bool sampled() const { return !analytic; }
};

/// Dimension constant of the chart weight for d = 1, 2, 3 (sign calibrated).
double chart_constant(int d);

struct ChartOptions {
  std::optional<DirectionRule> dirs;
  std::optional<double> B;
  std::optional<double> h;
  DerivMode mode = DerivMode::analytic;
  RadonOptions radon;
  HilbertOptions hilbert;
};

/// Chart weight whose ReLU integral reproduces f:
///   w = K_d d^{d+1}_beta R[f]          (d odd)
///   w = K_d H[d^{d+1}_beta R[f]]       (d even)
ChartWeight relu_chart_weight(const FieldND& f, const ChartOptions& opt = {});
/// d = 1: w(+-1, beta) = f''(-+beta) / 2.
ChartWeight relu_chart_weight(const Scalar1D& f);
/// Heaviside-kernel counterpart: w = -K_d d^d_beta R[f] (with H for even d).
ChartWeight heaviside_weight(const FieldND& f, const ChartOptions& opt = {});

/// Both weights from a single Radon computation.
struct ChartPair {
  ChartWeight relu;
  ChartWeight heaviside;
};
ChartPair chart_weights(const FieldND& f, const ChartOptions& opt = {});

/// sum_i weight_i int w(alpha_i, beta) kernel(alpha_i . x + beta) dbeta.
double reconstruct(const ChartWeight& w, std::span<const double> x);
/// Heaviside reconstruction of f at x (builds the weight internally).
double heaviside_reconstruct(const FieldND& f, std::span<const double> x, const ChartOptions& opt = {});

/// sum_i weight_i int |w(alpha_i, beta)| dbeta.
double chart_l1_norm(const ChartWeight& w);

/// The integral of F over S^d via spherical coordinates and via the
/// (alpha, beta) chart. F takes (a, b) with a in R^d.
struct SphereIntegrals {
  double spherical = 0.0;
  double chart = 0.0;
};
SphereIntegrals sphere_change_of_variables(const std::function<double(std::span<const double> a, double b)>& F,
                                           int d, double tol = 1e-12);

/// Probe points used for end-to-end checks: 27 points inside the unit ball.
std::vector<std::vector<double>> probe_points(int dim);

}  // namespace ridgenet
