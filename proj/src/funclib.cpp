#include "ridgenet/funclib.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_spline.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <sstream>

#include "ridgenet/error.hpp"
#include "ridgenet/quadrature.hpp"

namespace ridgenet {

bool Scalar1D::has_tag(const std::string& t) const {
  return std::find(tags.begin(), tags.end(), t) != tags.end();
}

std::vector<double> Scalar1D::kinks() const {
  std::vector<double> k = exceptional;
  if (support) {
    k.push_back(-*support);
    k.push_back(*support);
  }
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

Scalar1D scaled(const Scalar1D& g, double a) {
  Scalar1D s = g;
  s.name = g.name + "*" + std::to_string(a);
  s.f = [f = g.f, a](double x) { return a * f(x); };
  s.d1 = [f = g.d1, a](double x) { return a * f(x); };
  s.d2 = [f = g.d2, a](double x) { return a * f(x); };
  if (a == 0.0) s.support = 0.0;
  return s;
}

Scalar1D zero_function() {
  Scalar1D z;
  z.name = "zero";
  z.f = z.d1 = z.d2 = [](double) { return 0.0; };
  z.support = 0.0;
  z.tags = {"compact", "W-class", "zero"};
  return z;
}

double FieldND::value(std::span<const double> x) const {
  const std::vector<double> v(x.size(), 0.0);
  return jet(x, v, 0)[0];
}

namespace {

Scalar1D make(std::string name, std::function<double(double)> f, std::function<double(double)> d1,
              std::function<double(double)> d2, std::vector<std::string> tags) {
  Scalar1D s;
  s.name = name;
  s.f = std::move(f);
  s.d1 = std::move(d1);
  s.d2 = std::move(d2);
  s.tags = std::move(tags);
  s.tags.push_back(std::move(name));
  return s;
}

Scalar1D bump1() {
  // f = exp(g), g = -1/u, u = 1 - x^2
  auto f = [](double x) {
    const double u = 1.0 - x * x;
    return u > 0.0 ? std::exp(-1.0 / u) : 0.0;
  };
  auto d1 = [](double x) {
    const double u = 1.0 - x * x;
    if (u <= 0.0) return 0.0;
    return std::exp(-1.0 / u) * (-2.0 * x / (u * u));
  };
  auto d2 = [](double x) {
    const double u = 1.0 - x * x;
    if (u <= 0.0) return 0.0;
    const double g1 = -2.0 * x / (u * u);
    const double g2 = -2.0 / (u * u) - 8.0 * x * x / (u * u * u);
    return std::exp(-1.0 / u) * (g1 * g1 + g2);
  };
  Scalar1D s = make("bump1", f, d1, d2, {"compact", "W-class"});
  s.support = 1.0;
  return s;
}

Scalar1D cubic_bspline() {
  auto f = [](double x) {
    const double a = std::abs(x);
    if (a <= 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
    if (a <= 2.0) return (2.0 - a) * (2.0 - a) * (2.0 - a) / 6.0;
    return 0.0;
  };
  auto d1 = [](double x) {
    const double a = std::abs(x);
    if (a <= 1.0) return -2.0 * x + 1.5 * x * a;
    if (a <= 2.0) return -0.5 * (2.0 - a) * (2.0 - a) * (x > 0 ? 1.0 : -1.0);
    return 0.0;
  };
  auto d2 = [](double x) {
    const double a = std::abs(x);
    if (a <= 1.0) return -2.0 + 3.0 * a;
    if (a <= 2.0) return 2.0 - a;
    return 0.0;
  };
  Scalar1D s = make("cubic_bspline", f, d1, d2, {"compact", "W-class", "spline"});
  s.support = 2.0;
  s.exceptional = {-2.0, -1.0, 0.0, 1.0, 2.0};
  return s;
}

FieldND bump_field(int dim) {
  auto ast = std::make_shared<const expr::Ast>(expr::parse("bump(1)", dim));
  return field_from_expr(ast, "bump" + std::to_string(dim));
}

const std::vector<std::string>& names() {
  static const std::vector<std::string> n = {"gaussian", "bump1", "bump2",  "bump3",  "cauchy",
                                             "cubic_bspline", "atan", "xatan", "linear", "const"};
  return n;
}

}  // namespace

std::vector<std::string> builtin_names() { return names(); }

std::variant<Scalar1D, FieldND> builtin(const std::string& name) {
  if (name == "gaussian") {
    return make(
        name, [](double x) { return std::exp(-x * x); }, [](double x) { return -2.0 * x * std::exp(-x * x); },
        [](double x) { return (4.0 * x * x - 2.0) * std::exp(-x * x); }, {"W-class"});
  }
  if (name == "bump1") return bump1();
  if (name == "bump2") return bump_field(2);
  if (name == "bump3") return bump_field(3);
  if (name == "cauchy") {
    return make(
        name, [](double x) { return 1.0 / (1.0 + x * x); },
        [](double x) {
          const double q = 1.0 + x * x;
          return -2.0 * x / (q * q);
        },
        [](double x) {
          const double q = 1.0 + x * x;
          return (6.0 * x * x - 2.0) / (q * q * q);
        },
        {"W-class"});
  }
  if (name == "cubic_bspline") return cubic_bspline();
  if (name == "atan") {
    return make(
        name, [](double x) { return std::atan(x); }, [](double x) { return 1.0 / (1.0 + x * x); },
        [](double x) {
          const double q = 1.0 + x * x;
          return -2.0 * x / (q * q);
        },
        {"special"});
  }
  if (name == "xatan") {
    return make(
        name, [](double x) { return x * std::atan(x) + 1.0; },
        [](double x) { return std::atan(x) + x / (1.0 + x * x); },
        [](double x) {
          const double q = 1.0 + x * x;
          return 2.0 / (q * q);
        },
        {"special", "convex"});
  }
  if (name == "linear") {
    return make(
        name, [](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; }, {"special"});
  }
  if (name == "const") {
    return make(
        name, [](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }, {"special"});
  }
  throw InputError("unknown builtin '" + name + "'");
}

Scalar1D scalar_builtin(const std::string& name) {
  auto b = builtin(name);
  if (auto* s = std::get_if<Scalar1D>(&b)) return *s;
  throw InputError("builtin '" + name + "' is multivariate");
}

FieldND field_builtin(const std::string& name) {
  auto b = builtin(name);
  if (auto* s = std::get_if<FieldND>(&b)) return *s;
  throw InputError("builtin '" + name + "' is univariate");
}

Scalar1D scalar_from_expr(std::shared_ptr<const expr::Ast> ast, std::string name) {
  if (ast->dim != 1) throw InputError("univariate target needs dim 1");
  auto jet_at = [ast](double x, int order) {
    thread_local std::vector<Jet> scratch;
    const double x0[] = {x}, v[] = {1.0};
    return expr::eval_jet(*ast, x0, v, order, scratch);
  };
  Scalar1D s;
  s.name = std::move(name);
  s.f = [ast](double x) { return expr::eval<double>(*ast, std::span<const double>(&x, 1)); };
  s.d1 = [jet_at](double x) { return jet_at(x, 1).derivative(1); };
  s.d2 = [jet_at](double x) { return jet_at(x, 2).derivative(2); };
  s.support = expr::support_radius(*ast);
  s.tags = {"expr"};
  if (s.support) s.tags.push_back("compact");
  return s;
}

FieldND field_from_expr(std::shared_ptr<const expr::Ast> ast, std::string name) {
  if (ast->dim < 2 || ast->dim > 3) throw InputError("multivariate target needs dim 2 or 3");
  const auto radius = expr::support_radius(*ast);
  if (!radius) throw RefusalError("cannot establish compact support of the expression (use bump(r) factors)");
  FieldND f;
  f.name = std::move(name);
  f.dim = ast->dim;
  f.support_radius = *radius;
  f.smoothness = expr::smoothness(*ast);
  f.jet = [ast](std::span<const double> x0, std::span<const double> v, int order) {
    thread_local std::vector<Jet> scratch;
    return expr::eval_jet(*ast, x0, v, order, scratch);
  };
  return f;
}

namespace {

struct Spline {
  std::vector<double> x, y;
  std::shared_ptr<gsl_spline> s;
  Spline(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)) {
    s.reset(gsl_spline_alloc(gsl_interp_cspline, x.size()), gsl_spline_free);
    if (gsl_spline_init(s.get(), x.data(), y.data(), x.size()) != GSL_SUCCESS)
      throw InputError("spline construction failed (x must be strictly increasing)");
  }
  bool inside(double t) const { return t >= x.front() && t <= x.back(); }
  double operator()(double t, int deriv) const {
    if (!inside(t)) return 0.0;
    // A null accelerator keeps evaluation reentrant.
    switch (deriv) {
      case 0: return gsl_spline_eval(s.get(), t, nullptr);
      case 1: return gsl_spline_eval_deriv(s.get(), t, nullptr);
      default: return gsl_spline_eval_deriv2(s.get(), t, nullptr);
    }
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

Scalar1D scalar_from_csv(std::istream& in, std::string name) {
  gsl_set_error_handler_off();
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty CSV");
  const auto header = split_csv(line);
  auto col = [&](const std::string& h) -> int {
    const auto it = std::find(header.begin(), header.end(), h);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int cx = col("x"), cf = col("f"), c1 = col("f1"), c2 = col("f2");
  if (cx < 0 || cf < 0) throw InputError("CSV header must contain x and f");
  std::vector<double> xs, fs, f1s, f2s;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    auto num = [&](int c) {
      if (c >= static_cast<int>(cells.size())) throw InputError("short row at line " + std::to_string(lineno));
      char* end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (end == cells[c].c_str() || *end != '\0' || !std::isfinite(v))
        throw InputError("bad number at line " + std::to_string(lineno));
      return v;
    };
    xs.push_back(num(cx));
    fs.push_back(num(cf));
    if (c1 >= 0) f1s.push_back(num(c1));
    if (c2 >= 0) f2s.push_back(num(c2));
  }
  if (xs.size() < 4) throw InputError("CSV needs at least 4 samples");
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (!(xs[i] > xs[i - 1])) throw InputError("x must be strictly increasing");

  const auto sf = std::make_shared<Spline>(xs, fs);
  Scalar1D s;
  s.name = std::move(name);
  s.f = [sf](double t) { return (*sf)(t, 0); };
  if (c1 >= 0) {
    const auto s1 = std::make_shared<Spline>(xs, f1s);
    s.d1 = [s1](double t) { return (*s1)(t, 0); };
  } else {
    s.d1 = [sf](double t) { return (*sf)(t, 1); };
  }
  if (c2 >= 0) {
    const auto s2 = std::make_shared<Spline>(xs, f2s);
    s.d2 = [s2](double t) { return (*s2)(t, 0); };
  } else {
    s.d2 = [sf](double t) { return (*sf)(t, 2); };
  }
  s.support = std::max(std::abs(xs.front()), std::abs(xs.back()));
  s.exceptional = {xs.front(), xs.back()};
  s.tags = {"sampled"};
  if (c1 < 0 || c2 < 0) s.tags.push_back("approximate");
  return s;
}

const char* to_string(WVerdict v) {
  switch (v) {
    case WVerdict::in_W: return "in_W";
    case WVerdict::not_in_W: return "not_in_W";
    default: return "inconclusive";
  }
}

namespace {

// Limit of a sampled sequence a0, a1, a2 (taken at R, 2R, 4R): the last
// value if the magnitude does not decrease, otherwise an Aitken estimate.
double extrapolated_limit(double a0, double a1, double a2) {
  const double m0 = std::abs(a0), m1 = std::abs(a1), m2 = std::abs(a2);
  if (m2 >= m1 && m1 >= m0) return m2;
  if (!(m2 <= m1 && m1 <= m0)) return m2;
  const double d1 = a1 - a0, d2 = a2 - a1, den = d2 - d1;
  if (den == 0.0 || !std::isfinite(den)) return m2;
  const double lim = std::abs(a2 - d2 * d2 / den);
  return std::isfinite(lim) && lim <= m0 ? lim : m2;
}

}  // namespace

WMembership check_w_membership(const Scalar1D& fn, double R, double tol) {
  WMembership w;
  try {
    const double sides[] = {1.0, -1.0};
    for (double s : sides) {
      double fv[3], xv[3];
      for (int i = 0; i < 3; ++i) {
        const double x = s * R * (1 << i);
        fv[i] = fn.f(x);
        xv[i] = x * fn.d1(x);
      }
      w.f_at_R = std::max(w.f_at_R, std::abs(fv[0]));
      w.xf1_at_R = std::max(w.xf1_at_R, std::abs(xv[0]));
      w.f_limit = std::max(w.f_limit, extrapolated_limit(fv[0], fv[1], fv[2]));
      w.xf1_limit = std::max(w.xf1_limit, extrapolated_limit(xv[0], xv[1], xv[2]));
    }

    auto h = [&](double x) { return std::abs(fn.d2(x)) * std::sqrt(1.0 + x * x); };
    quad::Options o;
    o.abs_tol = std::min(1e-10, 1e-3 * tol);
    o.rel_tol = 1e-12;
    const auto kinks = fn.kinks();
    auto piece = [&](double a, double b) {
      return quad::integrate(h, std::span<const double>(quad::pieces(a, b, kinks)), o).value;
    };
    // Power-law tail beyond |x| = r on one side, from h(r) and h(2r).
    bool divergent = false;
    auto tail = [&](double r) {
      const double h1 = h(r), h2 = h(2 * r);
      if (h1 <= 1e-300) return 0.0;
      if (h2 <= 1e-300) return 0.0;
      const double p = std::log2(h1 / h2);
      if (!(p > 1.0)) {
        divergent = true;
        return 0.0;
      }
      return std::abs(r) * h1 / (p - 1.0);
    };
    const double core = piece(-R, R);
    const double e1 = core + tail(R) + tail(-R);
    const double core2 = core + piece(R, 2 * R) + piece(-2 * R, -R);
    const double e2 = core2 + tail(2 * R) + tail(-2 * R);
    w.integral = e1;
    w.integral_change = std::abs(e2 - e1);
    w.integral_converged = !divergent && std::isfinite(e2) && w.integral_change <= tol * std::max(1.0, e1);
  } catch (const Error& e) {
    w.verdict = WVerdict::inconclusive;
    w.reason = e.what();
    return w;
  }

  if (w.f_limit > tol) {
    w.verdict = WVerdict::not_in_W;
    w.reason = "f does not decay at infinity";
  } else if (w.xf1_limit > tol) {
    w.verdict = WVerdict::not_in_W;
    w.reason = "x f'(x) does not decay at infinity";
  } else if (w.integral_converged) {
    w.verdict = WVerdict::in_W;
  } else {
    w.verdict = WVerdict::inconclusive;
    w.reason = "weighted integral of |f''| did not settle under doubling";
  }
  return w;
}

}  // namespace ridgenet
