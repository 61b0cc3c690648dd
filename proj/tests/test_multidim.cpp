#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ridgenet/error.hpp"
#include "ridgenet/funclib.hpp"
#include "ridgenet/multidim.hpp"
#include "ridgenet/univariate.hpp"

using namespace ridgenet;
using std::numbers::pi;

namespace {

// int_0^t exp(-1/u) du
double bump_primitive(double t) {
  if (t <= 0.0) return 0.0;
  return t * std::exp(-1.0 / t) - boost::math::expint(1, 1.0 / t);
}

// Radon transform of bump3 on the plane at signed distance beta
double radon_bump3(double beta) { return pi * bump_primitive(1.0 - beta * beta); }

double bump2(double x, double y) {
  const double u = 1.0 - x * x - y * y;
  return u > 0.0 ? std::exp(-1.0 / u) : 0.0;
}

double gk(const std::function<double(double)>& f, double a, double b, double tol = 1e-14) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, tol);
}

// exact int over S^2 of x^a y^b z^c
double sphere_monomial(int a, int b, int c) {
  if (a % 2 || b % 2 || c % 2) return 0.0;
  using boost::math::tgamma;
  return 2.0 * tgamma((a + 1) / 2.0) * tgamma((b + 1) / 2.0) * tgamma((c + 1) / 2.0) /
         tgamma((a + b + c + 3) / 2.0);
}

double rule_monomial(const DirectionRule& r, int a, int b, int c) {
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const auto n = r.node(i);
    s += r.weights[i] * std::pow(n[0], a) * std::pow(n[1], b) * std::pow(n[2], c);
  }
  return s;
}

int max_exact_degree(const DirectionRule& r, int limit) {
  for (int deg = 0; deg <= limit; ++deg)
    for (int a = 0; a <= deg; ++a)
      for (int b = 0; a + b <= deg; ++b) {
        const int c = deg - a - b;
        if (std::abs(rule_monomial(r, a, b, c) - sphere_monomial(a, b, c)) > 1e-12) return deg - 1;
      }
  return limit;
}

const FieldND& bump2f() {
  static const FieldND f = field_builtin("bump2");
  return f;
}
const FieldND& bump3f() {
  static const FieldND f = field_builtin("bump3");
  return f;
}

const ChartPair& bump2_weights() {
  static const ChartPair p = chart_weights(bump2f());
  return p;
}
const ChartPair& bump3_weights() {
  static const ChartPair p = chart_weights(bump3f());
  return p;
}

// Single-row grid holding g on [-B, B].
RadonGrid row_grid(const std::function<double(double)>& g, double B, double h) {
  RadonGrid r;
  r.dim = 2;
  r.dirs = circle_rule(4);
  r.dirs.nodes.resize(2);
  r.dirs.weights.resize(1);
  r.B = B;
  r.h = h;
  r.n_offsets = static_cast<std::size_t>(std::llround(2.0 * B / h)) + 1;
  r.layers.assign(1, std::vector<double>(r.n_offsets));
  for (std::size_t j = 0; j < r.n_offsets; ++j) r.layers[0][j] = g(r.beta(j));
  return r;
}

}  // namespace

TEST_CASE("direction rules integrate polynomials to their design degree") {
  CHECK(max_exact_degree(lebedev_rule(6), 14) == 3);
  CHECK(max_exact_degree(lebedev_rule(14), 14) == 5);
  CHECK(max_exact_degree(lebedev_rule(26), 14) == 7);
  CHECK(max_exact_degree(lebedev_rule(38), 14) == 9);
  CHECK(max_exact_degree(lebedev_rule(50), 14) == 11);
  const auto prod = product_sphere_rule(14, 28);
  CHECK(max_exact_degree(prod, 27) == 27);
  CHECK_THROWS_AS(lebedev_rule(7), InputError);

  const auto c = circle_rule(64);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    s += c.weights[i];
    s2 += c.weights[i] * std::pow(c.node(i)[0], 20);
  }
  CHECK(s == doctest::Approx(2.0 * pi).epsilon(1e-14));
  // int cos^20 over the circle = 2 pi C(20,10) / 2^20
  CHECK(s2 == doctest::Approx(2.0 * pi * 184756.0 / 1048576.0).epsilon(1e-13));

  for (const auto& r : {circle_rule(64), prod, lebedev_rule(26)})
    for (std::size_t i = 0; i < r.size(); ++i) {
      auto j = r.antipode(i);
      REQUIRE(j.has_value());
      for (int k = 0; k < r.dim; ++k) CHECK(r.node(*j)[k] == doctest::Approx(-r.node(i)[k]).epsilon(1e-14));
    }
}

TEST_CASE("Radon transform of bump3 matches the closed form") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (double beta : {0.0, 0.2, -0.45, 0.7, 0.9, 0.97}) {
    double lo = 1e300, hi = -1e300;
    for (int t = 0; t < 16; ++t) {
      double a[3] = {nd(rng), nd(rng), nd(rng)};
      const double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
      for (double& v : a) v /= n;
      const auto r = radon_value(bump3f(), a, beta, 2);
      lo = std::min(lo, r[0]);
      hi = std::max(hi, r[0]);
      CHECK(r[0] == doctest::Approx(radon_bump3(beta)).epsilon(1e-9));
      // R' = -2 pi beta e(beta), R'' = -2 pi e (1 - 2 beta^2 / (1 - beta^2)^2)
      const double q = 1.0 - beta * beta;
      const double e = std::exp(-1.0 / q);
      CHECK(r[1] == doctest::Approx(-2.0 * pi * beta * e).epsilon(1e-8).scale(1.0));
      CHECK(r[2] == doctest::Approx(-2.0 * pi * e * (1.0 - 2.0 * beta * beta / (q * q))).epsilon(1e-8).scale(1.0));
    }
    CHECK(hi - lo <= 1e-8);
  }
  const double a[3] = {0.0, 0.0, 1.0};
  CHECK(radon_value(bump3f(), a, 1.0)[0] == 0.0);
  CHECK(radon_value(bump3f(), a, -1.5)[0] == 0.0);
}

TEST_CASE("Radon transform of bump2 matches line integrals") {
  for (double beta : {0.0, 0.3, -0.6, 0.95}) {
    const double a[2] = {1.0, 0.0};
    const double L = std::sqrt(1.0 - beta * beta);
    const double want = gk([&](double s) { return bump2(-beta, s); }, -L, L);
    CHECK(radon_value(bump2f(), a, beta)[0] == doctest::Approx(want).epsilon(1e-10));
    const double t = 0.7;
    const double b[2] = {std::cos(t), std::sin(t)};
    // line alpha.x + beta = 0 through -beta alpha, direction perpendicular to alpha
    const double want2 = gk(
        [&](double s) { return bump2(-beta * b[0] - s * b[1], -beta * b[1] + s * b[0]); }, -L, L);
    CHECK(radon_value(bump2f(), b, beta)[0] == doctest::Approx(want2).epsilon(1e-10));
  }
}

TEST_CASE("Radon transform is positively homogeneous") {
  const double a[2] = {0.6, 0.8};
  const double la[2] = {2.5 * 0.6, 2.5 * 0.8};
  const auto r = radon_value(bump2f(), a, 0.35, 3);
  const auto s = radon_value(bump2f(), la, 2.5 * 0.35, 3);
  for (int k = 0; k <= 3; ++k) CHECK(s[k] * std::pow(2.5, k) == doctest::Approx(r[k]).epsilon(1e-12));
}

TEST_CASE("Radon grid: exterior zeros and antipodal symmetry") {
  const auto dirs = circle_rule(16);
  const auto g = radon_transform(bump2f(), dirs, 1.25, 1.0 / 64.0, 2);
  CHECK(g.deriv_order_available() == 2);
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = 0; j < g.n_offsets; ++j)
      if (std::abs(g.beta(j)) >= 1.0)
        for (std::size_t k = 0; k < 3; ++k) CHECK(g.at(i, j, k) == 0.0);
  // rows filled by symmetry agree with direct evaluation
  for (std::size_t i : {9u, 12u, 15u})
    for (std::size_t j : {20u, 64u, 100u}) {
      const auto r = radon_value(bump2f(), dirs.node(i), g.beta(j), 2);
      for (std::size_t k = 0; k < 3; ++k) CHECK(g.at(i, j, k) == doctest::Approx(r[k]).epsilon(1e-9).scale(1.0));
    }
  CHECK_THROWS_AS(radon_transform(bump2f(), dirs, 0.9, 1.0 / 64.0), RefusalError);
  CHECK_THROWS_AS(radon_transform(bump2f(), dirs, 2.0, 0.25), RefusalError);
  CHECK_THROWS_AS(radon_transform(bump3f(), dirs, 2.0, 1.0 / 64.0), InputError);
}

TEST_CASE("Radon grid round-trips through text") {
  const auto g = hilbert_offset(radon_transform(bump2f(), circle_rule(6), 1.5, 1.0 / 40.0, 1));
  std::stringstream a;
  write_radon_grid(a, g);
  const auto back = read_radon_grid(a);
  std::stringstream b;
  write_radon_grid(b, back);
  CHECK(a.str() == b.str());
  CHECK(back.layers == g.layers);
  CHECK(back.far == g.far);
  CHECK(back.dirs.nodes == g.dirs.nodes);
  std::istringstream bad("# ridgenet radon grid\ndim=2\n");
  CHECK_THROWS_AS(read_radon_grid(bad), InputError);
}

TEST_CASE("Fornberg weights") {
  const double x3[3] = {-1.0, 0.0, 1.0};
  const auto w = fornberg_weights(2, 0.0, x3);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(-2.0));
  CHECK(w[2] == doctest::Approx(1.0));
  // exact on polynomials of degree < n
  std::vector<double> x(13);
  for (int m = 0; m < 13; ++m) x[m] = m;
  for (double x0 : {6.0, 2.0, 0.0}) {
    const auto w4 = fornberg_weights(4, x0, x);
    for (int p = 0; p < 13; ++p) {
      double s = 0.0, mag = 0.0;
      for (int m = 0; m < 13; ++m) {
        s += w4[m] * std::pow(x[m], p);
        mag += std::abs(w4[m] * std::pow(x[m], p));
      }
      const double want = p < 4 ? 0.0 : std::tgamma(p + 1.0) / std::tgamma(p - 3.0) * std::pow(x0, p - 4);
      CHECK(std::abs(s - want) <= 1e-13 * std::max(1.0, mag));
    }
  }
  CHECK_THROWS_AS(fornberg_weights(3, 0.0, x3), RefusalError);
}

TEST_CASE("offset derivatives: analytic and finite-difference modes agree") {
  RadonOptions tight;
  tight.abs_tol = 1e-15;
  tight.rel_tol = 1e-15;
  const auto dirs = product_sphere_rule(4, 8);
  const auto g = radon_transform(bump3f(), dirs, 1.125, 1.0 / 128.0, 0, tight);
  const auto fd = offset_derivative(g, 4, DerivMode::finite_difference);
  const auto an = offset_derivative(g, 4, DerivMode::analytic, &bump3f());
  CHECK(fd.deriv == 4);
  CHECK(an.deriv == 4);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::size_t> di(0, dirs.size() - 1);
  int checked = 0;
  while (checked < 10) {
    const std::size_t i = di(rng);
    const std::size_t j = std::uniform_int_distribution<std::size_t>(0, g.n_offsets - 1)(rng);
    if (std::abs(g.beta(j)) > 0.85) continue;
    CHECK(fd.at(i, j) == doctest::Approx(an.at(i, j)).epsilon(1e-5).scale(1.0));
    ++checked;
  }
  CHECK_THROWS_AS(offset_derivative(g, 4, DerivMode::analytic), InputError);

  const auto g2 = radon_transform(bump2f(), circle_rule(8), 1.5, 1.0 / 128.0, 3, tight);
  const auto fd2 = offset_derivative(g2, 3, DerivMode::finite_difference);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < g2.n_offsets; j += 7)
      if (std::abs(g2.beta(j)) <= 0.85) CHECK(fd2.at(i, j) == doctest::Approx(g2.at(i, j, 3)).epsilon(1e-5).scale(1.0));
}

TEST_CASE("Hilbert transform of 1/(1+beta^2)") {
  const double B = 1e5, h = 0.2;
  const auto g = row_grid([](double b) { return 1.0 / (1.0 + b * b); }, B, h);
  const auto H = hilbert_offset(g);
  double err = 0.0;
  for (std::size_t j = 0; j < g.n_offsets; ++j) {
    const double b = g.beta(j);
    if (std::abs(b) <= B / 2) err = std::max(err, std::abs(H.at(0, j) - b / (1.0 + b * b)));
  }
  CHECK(err <= 1e-6);
  const auto HH = hilbert_offset(H);
  double err2 = 0.0;
  for (std::size_t j = 0; j < g.n_offsets; ++j)
    if (std::abs(g.beta(j)) <= B / 2) err2 = std::max(err2, std::abs(HH.at(0, j) + g.at(0, j)));
  CHECK(err2 <= 1e-6);
  const auto slow = row_grid([](double b) { return 1.0 / (1.0 + b * b); }, 50.0, 0.2);
  CHECK_THROWS_AS(hilbert_offset(slow), RefusalError);
}

TEST_CASE("Hilbert transform of Radon rows matches principal-value quadrature") {
  const auto dirs = circle_rule(4);
  const auto g = radon_transform(bump2f(), dirs, 2.0, 1.0 / 256.0, 0);
  const auto H = hilbert_offset(g);
  const double a[2] = {1.0, 0.0};
  auto R = [&](double b) { return std::abs(b) < 1.0 ? radon_value(bump2f(), a, b)[0] : 0.0; };
  for (std::size_t j : {100u, 300u, 700u}) {
    const double b = g.beta(j);
    double want;
    if (std::abs(b) < 1.0) {
      const double Rb = R(b);
      want = (gk([&](double z) { return z == b ? 0.0 : (R(z) - Rb) / (b - z); }, -1.0, b, 1e-11) +
              gk([&](double z) { return z == b ? 0.0 : (R(z) - Rb) / (b - z); }, b, 1.0, 1e-11) +
              Rb * std::log((1.0 + b) / (1.0 - b))) /
             pi;
    } else {
      want = gk([&](double z) { return R(z) / (b - z); }, -1.0, 1.0, 1e-11) / pi;
    }
    CHECK(H.at(0, j) == doctest::Approx(want).epsilon(1e-8).scale(1e-8));
  }
  // twice gives minus the input on the interior half-grid
  const auto HH = hilbert_offset(H);
  double err = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = 0; j < g.n_offsets; ++j)
      if (std::abs(g.beta(j)) <= g.B / 2) err = std::max(err, std::abs(HH.at(i, j) + g.at(i, j)));
  CHECK(err <= 1e-6);
}

TEST_CASE("sphere integral: spherical and chart routes agree") {
  auto one = [](std::span<const double>, double) { return 1.0; };
  const auto s1 = sphere_change_of_variables(one, 1);
  CHECK(s1.spherical == doctest::Approx(2.0 * pi).epsilon(1e-10));
  CHECK(s1.chart == doctest::Approx(2.0 * pi).epsilon(1e-10));
  const auto s2 = sphere_change_of_variables(one, 2);
  CHECK(s2.chart == doctest::Approx(4.0 * pi).epsilon(1e-10));
  const auto s3 = sphere_change_of_variables(one, 3);
  CHECK(s3.chart == doctest::Approx(2.0 * pi * pi).epsilon(1e-10));
  const auto b2 = sphere_change_of_variables([](std::span<const double>, double b) { return b * b; }, 2);
  CHECK(b2.spherical == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-10));
  CHECK(b2.chart == doctest::Approx(4.0 * pi / 3.0).epsilon(1e-10));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int d = 1; d <= 3; ++d)
    for (int t = 0; t < 10; ++t) {
      double c[4];
      for (double& v : c) v = u(rng);
      auto F = [&](std::span<const double> a, double b) {
        double s = c[3] * b;
        for (std::size_t k = 0; k < a.size(); ++k) s += c[k] * a[k];
        return std::exp(s) * std::cos(2.0 * c[0] * b + a[0]);
      };
      const auto r = sphere_change_of_variables(F, d);
      CHECK(r.chart == doctest::Approx(r.spherical).epsilon(1e-7));
    }
}

TEST_CASE("chart constant sign is calibrated") {
  const double origin2[2] = {0.0, 0.0};
  const double origin3[3] = {0.0, 0.0, 0.0};
  const double f0 = std::exp(-1.0);
  // the reconstruction is linear in K_d, so the opposite sign yields -f0
  const double r2 = reconstruct(bump2_weights().relu, origin2);
  const double r3 = reconstruct(bump3_weights().relu, origin3);
  CHECK(r2 == doctest::Approx(f0).epsilon(1e-3));
  CHECK(r3 == doctest::Approx(f0).epsilon(1e-3));
  CHECK(std::abs(-r2 - f0) > 0.5);
  CHECK(std::abs(-r3 - f0) > 0.5);
  CHECK(chart_constant(1) == 0.5);
  CHECK(chart_constant(2) > 0.0);
  CHECK(chart_constant(3) < 0.0);
}

TEST_CASE("chart reconstruction of the bump fields") {
  for (int d : {2, 3}) {
    const FieldND& f = d == 2 ? bump2f() : bump3f();
    const ChartPair& w = d == 2 ? bump2_weights() : bump3_weights();
    double worst = 0.0, agree = 0.0;
    for (const auto& x : probe_points(d)) {
      const double want = f.value(x);
      const double r = reconstruct(w.relu, x);
      const double rh = reconstruct(w.heaviside, x);
      worst = std::max(worst, std::abs(r - want) / std::abs(want));
      agree = std::max(agree, std::abs(r - rh) / std::abs(r));
    }
    INFO("d = " << d);
    CHECK(worst <= 1e-2);
    CHECK(agree <= 1e-3);
  }
}

TEST_CASE("finite-difference chart weights reconstruct as well") {
  ChartOptions o;
  o.mode = DerivMode::finite_difference;
  o.radon.abs_tol = 1e-15;
  o.radon.rel_tol = 1e-15;
  o.dirs = circle_rule(32);
  const auto w = chart_weights(bump2f(), o);
  for (const auto& x : probe_points(2)) {
    const double want = bump2f().value(x);
    CHECK(reconstruct(w.relu, x) == doctest::Approx(want).epsilon(1e-2));
  }
}

TEST_CASE("chart weight integrability is stable under grid refinement") {
  ChartOptions o;
  o.dirs = product_sphere_rule(4, 8);
  o.h = 1.0 / 128.0;
  o.B = 1.0 + 8.0 / 128.0;
  const double n1 = chart_l1_norm(relu_chart_weight(bump3f(), o));
  o.h = 1.0 / 256.0;
  const double n2 = chart_l1_norm(relu_chart_weight(bump3f(), o));
  CHECK(std::isfinite(n1));
  CHECK(n1 > 0.0);
  CHECK(n2 == doctest::Approx(n1).epsilon(1e-3));
}

TEST_CASE("zero field and exterior behaviour") {
  FieldND zero;
  zero.name = "zero";
  zero.dim = 2;
  zero.support_radius = 1.0;
  zero.jet = [](std::span<const double>, std::span<const double>, int order) { return Jet(order); };
  const auto w = chart_weights(zero);
  for (double v : w.relu.rows) CHECK(v == 0.0);
  const double x[2] = {0.2, -0.1};
  CHECK(reconstruct(w.relu, x) == 0.0);
  CHECK(reconstruct(w.heaviside, x) == 0.0);
  const auto g = radon_transform(zero, circle_rule(8), 1.5, 1.0 / 64.0, 0);
  const auto fd = offset_derivative(g, 4, DerivMode::finite_difference);
  for (double v : fd.layers[0]) CHECK(v == 0.0);

  // outside the support the bump2 reconstruction nearly vanishes
  for (double r : {1.1, 1.4}) {
    const double p[2] = {r * 0.6, r * 0.8};
    CHECK(std::abs(reconstruct(bump2_weights().relu, p)) <= 2e-2 * std::exp(-1.0));
  }
  // on the support boundary both kernels agree
  const double edge[3] = {0.0, 0.6, 0.8};
  CHECK(std::abs(reconstruct(bump3_weights().relu, edge) - reconstruct(bump3_weights().heaviside, edge)) <=
        2e-2 * std::exp(-1.0));
  // bump2 derivatives beyond the support are exactly zero
  const auto g2 = radon_transform(bump2f(), circle_rule(8), 1.5, 1.0 / 64.0, 3);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < g2.n_offsets; ++j)
      if (std::abs(g2.beta(j)) > 1.0) CHECK(g2.at(i, j, 3) == 0.0);

  auto rough = field_from_expr(std::make_shared<const expr::Ast>(expr::parse("abs(x1)*bump(1)", 2)));
  CHECK_THROWS_AS(chart_weights(rough), RefusalError);
  auto bad = circle_rule(8);
  bad.nodes[0] = 1.1;
  CHECK_THROWS_AS(radon_transform(bump2f(), bad, 1.5, 1.0 / 64.0), InputError);
}

TEST_CASE("one-dimensional chart weight agrees with the circle weight") {
  const Scalar1D g = scalar_builtin("gaussian");
  const auto w = relu_chart_weight(g);
  const auto c = least_l1_weight(g);
  for (double beta : {-2.0, -0.3, 0.0, 0.8, 3.0}) {
    CHECK(w(0, beta) == doctest::Approx(0.5 * g.d2(-beta)));
    CHECK(w(1, beta) == doctest::Approx(0.5 * g.d2(beta)));
    // (alpha, beta) / rho is the circle point, w = c_f * rho^-3
    const double rho = std::sqrt(1.0 + beta * beta);
    CHECK(w(0, beta) == doctest::Approx(c(std::atan2(beta, 1.0)) / std::pow(rho, 3)).epsilon(1e-12));
    CHECK(w(1, beta) == doctest::Approx(c(std::atan2(beta, -1.0)) / std::pow(rho, 3)).epsilon(1e-12));
  }
  for (double x : {-1.5, 0.0, 0.4, 2.0}) {
    const double xs[1] = {x};
    CHECK(reconstruct(w, xs) == doctest::Approx(g(x)).epsilon(1e-8));
  }
}
