#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ridgenet/error.hpp"
#include "ridgenet/univariate.hpp"

using namespace ridgenet;
constexpr double kPi = std::numbers::pi;

namespace {

const char* kW[] = {"gaussian", "cauchy", "cubic_bspline", "bump1"};

CircleWeight raw_cos() {
  return raw_weight([](double p) { return std::cos(p); });
}
CircleWeight raw_sin() {
  return raw_weight([](double p) { return std::sin(p); });
}
CircleWeight raw_abscos() {
  return raw_weight([](double p) { return std::abs(std::cos(p)); }, {kPi / 2, 3 * kPi / 2});
}
CircleWeight raw_s() {
  return raw_weight([](double p) { return s_phi(p); }, {kPi / 2, 3 * kPi / 2});
}

// Sign changes of f'' in closed form, used to split the oracle integrals.
std::vector<double> d2_roots(const std::string& n) {
  if (n == "gaussian") return {-std::sqrt(0.5), std::sqrt(0.5)};
  if (n == "cauchy") return {-1 / std::sqrt(3.0), 1 / std::sqrt(3.0)};
  if (n == "cubic_bspline") return {-2.0, -1.0, -2.0 / 3, 0.0, 2.0 / 3, 1.0, 2.0};
  if (n == "bump1") return {-1.0, -std::pow(3.0, -0.25), std::pow(3.0, -0.25), 1.0};
  return {};
}

// int |f''(z)| sqrt(1+z^2) dz by Boost Gauss-Kronrod, split at the roots.
double norm_oracle(const Scalar1D& f, const std::vector<double>& roots) {
  auto h = [&](double z) { return std::abs(f.d2(z)) * std::sqrt(1.0 + z * z); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pts{-inf};
  pts.insert(pts.end(), roots.begin(), roots.end());
  pts.push_back(inf);
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) s += GK::integrate(h, pts[i], pts[i + 1], 15, 1e-13);
  return s;
}

struct Pair {
  Scalar1D f, k;
};

std::vector<Pair> random_pairs(int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 3);
  std::uniform_real_distribution<double> amp(-2.0, 2.0);
  std::vector<Pair> out;
  while (static_cast<int>(out.size()) < count) {
    const double a = amp(rng), b = amp(rng);
    if (std::abs(b) < 1e-3) continue;  // k must not vanish
    out.push_back({scaled(scalar_builtin(kW[pick(rng)]), a), scaled(scalar_builtin(kW[pick(rng)]), b)});
  }
  return out;
}

}  // namespace

TEST_CASE("golden identities of the four special weights") {
  for (double x : {-2.0, 0.0, 1.0, 3.5}) {
    CHECK(std::abs(forward(raw_cos(), x) - kPi / 2 * x) <= 1e-9);
    CHECK(std::abs(forward(raw_sin(), x) - kPi / 2) <= 1e-9);
    CHECK(std::abs(forward(raw_abscos(), x) - (x * std::atan(x) + 1)) <= 1e-9);
    CHECK(std::abs(forward(raw_s(), x) - std::atan(x)) <= 1e-9);
    // the same through the structured trig coefficients
    CircleWeight t;
    t.trig = {1.0, -0.5, 2.0, 0.25};
    const double expect =
        kPi / 2 * x - 0.5 * kPi / 2 + 2.0 * (x * std::atan(x) + 1) + 0.25 * std::atan(x);
    CHECK(std::abs(forward(t, x) - expect) <= 1e-12);
  }
  CHECK(std::abs(forward(raw_s(), 1.0) - kPi / 4) <= 1e-9);
  CHECK(std::abs(forward(raw_abscos(), 0.0) - 1.0) <= 1e-9);
}

TEST_CASE("least-L1 weight examples") {
  const CircleWeight g = least_l1_weight(scalar_builtin("gaussian"));
  CHECK(g(0.0) == doctest::Approx(-1.0));
  const CircleWeight z = least_l1_weight(zero_function());
  for (double p : {0.0, 1.0, 2.0, 4.0}) CHECK(z(p) == 0.0);
  const CircleWeight b = least_l1_weight(scalar_builtin("cubic_bspline"));
  // f''(-1) = 2 - |-1| = 1 from the outer spline piece; |cos(pi/4)|^3 = 2^{-3/2}
  CHECK(b(kPi / 4) == doctest::Approx(1.0 * std::pow(2.0, 1.5) / 2).epsilon(1e-14));
  CHECK(b(kPi / 4) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));

  CHECK_THROWS_AS(least_l1_weight(scalar_builtin("linear")), RefusalError);
  CHECK_THROWS_AS(least_l1_weight(scalar_builtin("xatan")), RefusalError);
  CHECK_NOTHROW(least_l1_weight(scalar_builtin("xatan"), true));
}

TEST_CASE("reconstruction of W-class builtins") {
  for (const char* n : kW) {
    const Scalar1D f = scalar_builtin(n);
    const CircleWeight c = least_l1_weight(f);
    double worst = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double x = -6.0 + 12.0 * i / 200;
      worst = std::max(worst, std::abs(forward(c, x) - f(x)));
    }
    CHECK_MESSAGE(worst <= 1e-6, n, " worst=", worst);
  }
}

TEST_CASE("weight family examples") {
  const Scalar1D g = scalar_builtin("gaussian"), c = scalar_builtin("cauchy");
  const CircleWeight a = weight_family(g, zero_function(), {});
  const CircleWeight l = least_l1_weight(g);
  for (double p : {0.1, 1.0, 2.5, 4.0, 5.5}) CHECK(a(p) == l(p));
  CHECK(std::abs(forward(weight_family(g, c, {}), 0.7) - forward(l, 0.7)) <= 1e-8);
  const CircleWeight pure = weight_family(zero_function(), g, {});
  for (double x : {-3.0, -0.4, 0.0, 1.2, 5.0}) CHECK(std::abs(forward(pure, x)) <= 1e-9);
}

TEST_CASE("structured weights respect the half-turn symmetry") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  const Scalar1D f = scalar_builtin("cauchy"), k = scaled(scalar_builtin("gaussian"), 0.7);
  const CircleWeight w = weight_family(f, k, {});
  const CircleWeight ws = least_l1_weight(f);
  const CircleWeight wk = weight_family(zero_function(), k, {});
  for (int i = 0; i < 64; ++i) {
    const double p = u(rng);
    CHECK(ws(p + kPi) == doctest::Approx(ws(p)).epsilon(1e-12));
    CHECK(wk(p + kPi) == doctest::Approx(-wk(p)).epsilon(1e-12));
    const double z = -std::tan(p);
    const double j = std::pow(1 + z * z, 1.5);
    CHECK(w(p) + w(p + kPi) == doctest::Approx(f.d2(z) * j).epsilon(1e-9));
    const double sg = std::cos(p) > 0 ? 1.0 : -1.0;
    CHECK(sg * (w(p) - w(p + kPi)) == doctest::Approx(k.d2(z) * j).epsilon(1e-9));
  }
}

TEST_CASE("representation invariance and least-L1 optimality") {
  for (const Pair& p : random_pairs(20, 99)) {
    const CircleWeight least = least_l1_weight(p.f);
    const CircleWeight fam = weight_family(p.f, p.k, {});
    double worst = 0.0;
    for (int i = 0; i <= 60; ++i) {
      const double x = -6.0 + 12.0 * i / 60;
      worst = std::max(worst, std::abs(forward(fam, x) - forward(least, x)));
    }
    CHECK_MESSAGE(worst <= 1e-6, p.f.name, " + ", p.k.name);
    CHECK(eval_l1_norm(fam) >= eval_l1_norm(least) - 1e-9);
  }
}

TEST_CASE("norm identity against an independent oracle") {
  for (const char* n : kW) {
    const Scalar1D f = scalar_builtin(n);
    const double ours = eval_l1_norm(least_l1_weight(f));
    const double ref = norm_oracle(f, d2_roots(n));
    CHECK_MESSAGE(std::abs(ours - ref) <= 1e-8, n, " ours=", ours, " ref=", ref);
  }
  CHECK(eval_l1_norm(least_l1_weight(zero_function())) == 0.0);
  CHECK(eval_l1_norm(CircleWeight{}) == 0.0);
}

TEST_CASE("norm matches kink-aware brute-force phi trapezoid") {
  const CircleWeight c = least_l1_weight(scalar_builtin("gaussian"));
  const std::size_t n = std::size_t{1} << 20;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += std::abs(c(2 * kPi * (j + 0.5) / n));
  s *= 2 * kPi / n;
  CHECK(std::abs(s - eval_l1_norm(c)) <= 1e-5);
}

TEST_CASE("norm is stable under refinement and works in the phi domain") {
  const CircleWeight c = least_l1_weight(scalar_builtin("cauchy"));
  const double a = eval_l1_norm(c, 1e-7), b = eval_l1_norm(c, 1e-12);
  CHECK(std::abs(a - b) <= 1e-6 * b);
  // |cos| has norm 4; the trig path integrates in phi
  CircleWeight t;
  t.trig.gamma = 1.0;
  CHECK(std::abs(eval_l1_norm(t) - 4.0) <= 1e-9);
  CHECK(std::abs(eval_l1_norm(raw_cos()) - 4.0) <= 1e-9);
  // mixed structured + trig weight against a brute-force phi sum
  CircleWeight m = least_l1_weight(scalar_builtin("gaussian"));
  m.trig = {0.3, -0.2, 0.1, 0.4};
  const std::size_t n = std::size_t{1} << 20;
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += std::abs(m(2 * kPi * (j + 0.5) / n));
  s *= 2 * kPi / n;
  CHECK(std::abs(s - eval_l1_norm(m)) <= 1e-5);
}

TEST_CASE("moment conditions") {
  for (const char* n : kW) {
    const Moments m = moment_conditions(least_l1_weight(scalar_builtin(n)), 1e-7);
    CHECK_MESSAGE(m.vanish, n);
    for (double v : m.m) CHECK(std::abs(v) <= 1e-8);
  }
  const Moments c = moment_conditions(raw_cos(), 1e-7);
  CHECK(!c.vanish);
  // int_{-pi/2}^{pi/2} cos^2 = pi/2, and c(phi + pi) = -cos(phi)
  CHECK(std::abs(c.m[0] - kPi / 2) <= 1e-10);
  CHECK(std::abs(c.m[1] + kPi / 2) <= 1e-10);
  CHECK(std::abs(c.m[2]) <= 1e-10);
  CHECK(std::abs(c.m[3]) <= 1e-10);
  const Moments zero = moment_conditions(CircleWeight{}, 1e-7);
  for (double v : zero.m) CHECK(v == 0.0);
  CHECK(zero.vanish);
  // converse spot check
  CHECK(check_w_membership(represented_function(raw_cos())).verdict == WVerdict::not_in_W);
}

TEST_CASE("decompose") {
  DecompCoeffs d = decompose(raw_cos());
  CHECK(std::abs(d.alpha - kPi / 2) <= 1e-10);
  CHECK(std::abs(d.beta) <= 1e-10);
  CHECK(std::abs(d.gamma) <= 1e-10);
  CHECK(std::abs(d.eta) <= 1e-10);
  d = decompose(raw_abscos());
  CHECK(std::abs(d.gamma - 1.0) <= 1e-10);
  CHECK(std::abs(d.alpha) + std::abs(d.beta) + std::abs(d.eta) <= 1e-10);
  d = decompose(raw_sin());
  CHECK(std::abs(d.beta - kPi / 2) <= 1e-10);
  d = decompose(raw_s());
  CHECK(std::abs(d.eta - 1.0) <= 1e-10);
  d = decompose(least_l1_weight(scalar_builtin("gaussian")));
  CHECK(std::abs(d.alpha) + std::abs(d.beta) + std::abs(d.gamma) + std::abs(d.eta) <= 1e-8);
  // the defining weight of xatan is |cos|, and of atan is s
  d = decompose(least_l1_weight(scalar_builtin("xatan"), true));
  CHECK(std::abs(d.gamma - 1.0) <= 1e-9);
  d = decompose(least_l1_weight(scalar_builtin("atan"), true));
  CHECK(std::abs(d.eta - 1.0) <= 1e-9);
  CHECK(std::abs(d.gamma) <= 1e-9);
}

TEST_CASE("decompose leaves a W-class remainder") {
  CircleWeight c = weight_family(scalar_builtin("cauchy"), scaled(scalar_builtin("gaussian"), 0.5), {});
  c.trig = {0.7, -1.1, 0.4, 0.9};
  const DecompCoeffs d = decompose(c);
  CHECK(std::abs(d.alpha - 0.7 * kPi / 2) <= 1e-9);
  CHECK(std::abs(d.beta + 1.1 * kPi / 2) <= 1e-9);
  CHECK(std::abs(d.gamma - 0.4) <= 1e-9);
  CHECK(std::abs(d.eta - 0.9) <= 1e-9);
  const Scalar1D f = represented_function(c);
  Scalar1D g;
  g.name = "remainder";
  g.f = [=](double x) {
    return f(x) - (d.alpha * x + d.beta + d.gamma * (x * std::atan(x) + 1) + d.eta * std::atan(x));
  };
  g.d1 = [=](double x) {
    const double q = 1 + x * x;
    return f.d1(x) - (d.alpha + d.gamma * (std::atan(x) + x / q) + d.eta / q);
  };
  g.d2 = [=](double x) {
    const double q = 1 + x * x;
    return f.d2(x) - (2 * d.gamma / (q * q) - 2 * d.eta * x / (q * q));
  };
  const auto w = check_w_membership(g);
  CHECK_MESSAGE(w.verdict == WVerdict::in_W, w.reason, " flim=", w.f_limit, " xflim=", w.xf1_limit);
  CHECK(check_w_membership(f).verdict == WVerdict::not_in_W);
}

TEST_CASE("represented function derivatives") {
  CircleWeight c = least_l1_weight(scalar_builtin("gaussian"));
  c.trig = {0.2, 0.3, -0.4, 0.5};
  c.raw = [](double p) { return std::sin(2 * p) * std::cos(p); };
  const Scalar1D f = represented_function(c);
  for (double x : {-1.3, 0.2, 2.0}) {
    const double h = 1e-4;
    CHECK(f.d1(x) == doctest::Approx((f(x + h) - f(x - h)) / (2 * h)).epsilon(1e-6));
    CHECK(f.d2(x) == doctest::Approx((f.d1(x + h) - f.d1(x - h)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("reconstruct weight from f") {
  const Scalar1D g = scalar_builtin("gaussian");
  const CircleWeight c = least_l1_weight(g);
  const auto rec = reconstruct_weight_from_f(represented_function(c));
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2 * kPi);
  for (int i = 0; i < 64; ++i) {
    const double p = u(rng);
    CHECK(std::abs(rec(p) - (c(p) + c(p + kPi))) <= 1e-7 * std::max(1.0, std::abs(c(p))));
  }
  CHECK(reconstruct_weight_from_f(zero_function())(0.3) == 0.0);
  // cubic B-spline: kinks of the recovered part sit at phi = -atan(knot)
  const auto b = reconstruct_weight_from_f(scalar_builtin("cubic_bspline"));
  for (double knot : {-1.0, 0.0, 1.0}) {
    const double p = -std::atan(knot), e = 1e-6;
    const double left = (b(p) - b(p - e)) / e, right = (b(p + e) - b(p)) / e;
    CHECK(std::abs(left - right) > 1.0);
  }
  const double p = -std::atan(0.5), e = 1e-5;
  CHECK(std::abs((b(p) - b(p - e)) / e - (b(p + e) - b(p)) / e) < 1e-3);
}

TEST_CASE("non-uniqueness for convex targets") {
  const Scalar1D f = scalar_builtin("xatan");
  const double least = eval_l1_norm(least_l1_weight(f, true));
  CHECK(std::abs(least - 4.0) <= 1e-9);
  const double fam = eval_l1_norm(weight_family(f, scaled(f, 0.5), {}, true));
  CHECK(std::abs(fam - least) <= 1e-8);
  // any k with |k''| <= f'' also keeps the norm
  const Scalar1D k = scaled(scalar_builtin("gaussian"), 0.2);
  for (int i = -400; i <= 400; ++i) REQUIRE(std::abs(k.d2(i * 0.02)) <= f.d2(i * 0.02));
  const double fam2 = eval_l1_norm(weight_family(f, k, {}, true));
  CHECK(std::abs(fam2 - least) <= 1e-8);
}

TEST_CASE("weight export and report") {
  std::ostringstream csv, rep;
  const CircleWeight c = least_l1_weight(scalar_builtin("gaussian"));
  write_weight_csv(csv, c, 8);
  CHECK(csv.str().rfind("phi,c\n0,-1\n", 0) == 0);
  write_report(rep, decomposition_report(c));
  CHECK(rep.str().find("moments_vanish=true") != std::string::npos);
  CHECK(rep.str().find("l1_norm=") != std::string::npos);
}
