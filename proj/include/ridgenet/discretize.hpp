#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ridgenet/multidim.hpp"
#include "ridgenet/univariate.hpp"

namespace ridgenet {

/// One hidden unit c * relu(a . x + b), stored with |a|^2 + b^2 = 1.
struct NetNode {
  std::vector<double> a;
  double b = 0.0;
  double c = 0.0;
};

/// Normalizes (a, b) onto the unit sphere, rescaling c so the unit is unchanged.
NetNode normalized_node(std::span<const double> a, double b, double c);

struct ShallowNet {
  int dim = 1;
  std::string activation = "relu";
  std::vector<NetNode> nodes;
  std::vector<std::string> warnings;
};

/// sum_j c_j relu(a_j . x + b_j), summed in node order.
double eval_net(const ShallowNet& net, std::span<const double> x);
std::vector<double> eval_net(const ShallowNet& net, const std::vector<std::vector<double>>& xs);

/// Deterministic network from composite 4-point Gauss-Legendre in the
/// z-chart (d = 1) or the (alpha, beta) chart. Outer weights include the
/// quadrature weights. m is the target node count; circle weights use
/// 2 floor(m/2) nodes, chart weights max(4, round(m / directions)) per direction
/// (plus 8 far-field nodes per direction when present).
ShallowNet quadrature_net(const CircleWeight& w, std::size_t m);
ShallowNet quadrature_net(const ChartWeight& w, std::size_t m);

/// Importance-sampled network: nodes drawn with density proportional to |w|,
/// outer weights sign(w) * |w|_1 / m. Same seed, same network.
ShallowNet monte_carlo_net(const CircleWeight& w, std::size_t m, std::uint64_t seed);
ShallowNet monte_carlo_net(const ChartWeight& w, std::size_t m, std::uint64_t seed);

/// Uniform tensor grid [lo, hi]^dim with n points per axis.
struct GridSpec {
  double lo = -5.0;
  double hi = 5.0;
  std::size_t n = 201;
};
/// Parses "lo:hi:n".
GridSpec parse_grid(const std::string& spec);
std::vector<std::vector<double>> grid_points(const GridSpec& g, int dim);

struct NetReport {
  double sup_error = 0.0;
  double l2_error = 0.0;  // root mean square over the probe points
  double l1_outer = 0.0;
  std::size_t node_count = 0;
  std::vector<std::string> warnings;
};

NetReport error_report(const ShallowNet& net, const std::function<double(std::span<const double>)>& f,
                       const std::vector<std::vector<double>>& points);
/// key=value lines.
void write_net_report(std::ostream& out, const NetReport& r);

/// Text export; see docs/net_format.md. Import reproduces eval_net bitwise.
void write_net(std::ostream& out, const ShallowNet& net);
ShallowNet read_net(std::istream& in);

}  // namespace ridgenet
