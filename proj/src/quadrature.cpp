#include "ridgenet/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>

#include "ridgenet/error.hpp"

namespace ridgenet::quad {

namespace {

// QUADPACK qk15 tables. Gauss nodes are xgk[1], xgk[3], xgk[5], xgk[7].
constexpr std::array<double, 8> xgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> wgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Abscissa order: centre, then (-, +) pairs for j = 0..6.
void abscissae(double a, double b, std::array<double, 15>& x) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  x[0] = c;
  for (int j = 0; j < 7; ++j) {
    x[1 + 2 * j] = c - h * xgk[j];
    x[2 + 2 * j] = c + h * xgk[j];
  }
}

// QUADPACK error heuristic from the raw Kronrod/Gauss samples. `floor` is
// the roundoff level below which bisection cannot help.
double error_estimate(double h, double resk, double resg, double resabs, double resasc, double& floor) {
  double err = std::abs((resk - resg) * h);
  resasc *= std::abs(h);
  resabs *= std::abs(h);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  floor = 50.0 * kEps * resabs;
  if (resabs > std::numeric_limits<double>::min() / (50.0 * kEps)) err = std::max(floor, err);
  return err;
}

// Applies the 15-point rule to samples fx (ordered as in abscissae()).
void rule(double h, const double* fx, std::size_t stride, double& value, double& err, double& floor) {
  const double fc = fx[0];
  double resk = fc * wgk[7];
  double resg = fc * wg[3];
  double resabs = std::abs(resk);
  for (int j = 0; j < 7; ++j) {
    const double f1 = fx[(1 + 2 * j) * stride];
    const double f2 = fx[(2 + 2 * j) * stride];
    resk += wgk[j] * (f1 + f2);
    resabs += wgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += wg[j / 2] * (f1 + f2);
  }
  const double mean = resk * 0.5;
  double resasc = wgk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j)
    resasc += wgk[j] * (std::abs(fx[(1 + 2 * j) * stride] - mean) + std::abs(fx[(2 + 2 * j) * stride] - mean));
  value = resk * h;
  err = error_estimate(h, resk, resg, resabs, resasc, floor);
}

struct Panel {
  double a, b;
  double err;
  double key;  // refinement priority; 0 once err is at the roundoff floor
  std::size_t slot;  // index into value storage
};

struct ByError {
  bool operator()(const Panel& p, const Panel& q) const {
    if (p.key != q.key) return p.key < q.key;
    return p.a > q.a;  // deterministic tie break
  }
};

// Shared adaptive driver. `eval(a, b, values, err, floor)` fills n values.
// The effective tolerance never drops below twice the summed roundoff floor.
template <class Eval>
void adapt(std::span<const double> points, std::size_t n, const Options& opts, Eval&& eval,
           std::vector<double>& total, double& total_err, std::size_t& panel_count) {
  std::vector<double> store;
  std::vector<Panel> panels;  // by slot; err < 0 marks a retired panel
  std::priority_queue<Panel, std::vector<Panel>, ByError> heap;
  std::vector<double> sum(n, 0.0);
  std::vector<double> floors;
  double err = 0.0, floor_sum = 0.0;
  auto add = [&](double a, double b) {
    const std::size_t slot = panels.size();
    store.resize(store.size() + n);
    double e = 0.0, fl = 0.0;
    eval(a, b, std::span<double>(store.data() + slot * n, n), e, fl);
    panels.push_back(Panel{a, b, e, e > 2.0 * fl ? e : 0.0, slot});
    floors.push_back(fl);
    heap.push(panels.back());
    for (std::size_t k = 0; k < n; ++k) sum[k] += store[slot * n + k];
    err += e;
    floor_sum += fl;
  };
  auto resum = [&] {
    err = 0.0;
    floor_sum = 0.0;
    std::fill(sum.begin(), sum.end(), 0.0);
    for (const Panel& p : panels) {
      if (p.err < 0.0) continue;
      err += p.err;
      floor_sum += floors[p.slot];
      for (std::size_t k = 0; k < n; ++k) sum[k] += store[p.slot * n + k];
    }
  };
  auto target = [&] {
    double mag = 0.0;
    for (double v : sum) mag = std::max(mag, std::abs(v));
    return std::max({opts.abs_tol, opts.rel_tol * mag, 2.0 * floor_sum});
  };
  for (std::size_t i = 0; i + 1 < points.size(); ++i)
    if (points[i + 1] > points[i]) add(points[i], points[i + 1]);

  std::size_t live = heap.size();
  while (!heap.empty()) {
    if (err <= target()) {
      resum();  // confirm without accumulated drift
      if (err <= target()) break;
    }
    if (live >= opts.max_panels) break;
    const Panel p = heap.top();
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) break;
    heap.pop();
    for (std::size_t k = 0; k < n; ++k) sum[k] -= store[p.slot * n + k];
    err -= p.err;
    floor_sum -= floors[p.slot];
    panels[p.slot].err = -1.0;
    add(p.a, mid);
    add(mid, p.b);
    ++live;
  }

  // Positional summation for determinism.
  std::vector<Panel> final;
  final.reserve(live);
  for (const Panel& p : panels)
    if (p.err >= 0.0) final.push_back(p);
  std::sort(final.begin(), final.end(), [](const Panel& p, const Panel& q) { return p.a < q.a; });
  total.assign(n, 0.0);
  total_err = 0.0;
  floor_sum = 0.0;
  for (const Panel& p : final) {
    for (std::size_t k = 0; k < n; ++k) total[k] += store[p.slot * n + k];
    total_err += p.err;
    floor_sum += floors[p.slot];
  }
  panel_count = final.size();
  sum = total;
  if (total_err > target())
    throw QuadratureError("adaptive quadrature did not converge", n ? total[0] : 0.0, total_err);
}

}  // namespace

std::vector<double> kronrod_abscissae(double a, double b) {
  std::array<double, 15> x;
  abscissae(a, b, x);
  return {x.begin(), x.end()};
}

std::vector<double> pieces(double a, double b, std::span<const double> interior) {
  std::vector<double> p{a};
  std::vector<double> in;
  for (double t : interior)
    if (t > a && t < b && std::isfinite(t)) in.push_back(t);
  std::sort(in.begin(), in.end());
  for (double t : in)
    if (t > p.back()) p.push_back(t);
  if (b > p.back()) p.push_back(b);
  return p;
}

Result integrate(const Integrand& f, std::span<const double> points, const Options& opts) {
  auto eval = [&](double a, double b, std::span<double> out, double& e, double& fl) {
    std::array<double, 15> x, fx;
    abscissae(a, b, x);
    for (int i = 0; i < 15; ++i) fx[i] = f(x[i]);
    rule(0.5 * (b - a), fx.data(), 1, out[0], e, fl);
  };
  std::vector<double> total;
  Result r;
  adapt(points, 1, opts, eval, total, r.error, r.panels);
  r.value = total[0];
  return r;
}

Result integrate(const Integrand& f, double a, double b, const Options& opts) {
  const std::array<double, 2> p{a, b};
  return integrate(f, std::span<const double>(p), opts);
}

VectorResult integrate(const VectorIntegrand& f, std::size_t n, std::span<const double> points,
                       const Options& opts) {
  std::vector<double> fx(15 * n);
  auto eval = [&](double a, double b, std::span<double> out, double& e, double& fl) {
    std::array<double, 15> x;
    abscissae(a, b, x);
    for (int i = 0; i < 15; ++i) f(x[i], std::span<double>(fx.data() + i * n, n));
    e = 0.0;
    fl = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      double ek = 0.0, fk = 0.0;
      rule(0.5 * (b - a), fx.data() + k, n, out[k], ek, fk);
      e = std::max(e, ek);
      fl = std::max(fl, fk);
    }
  };
  VectorResult r;
  adapt(points, n, opts, eval, r.value, r.error, r.panels);
  return r;
}

Result integrate_real_line(const Integrand& f, std::span<const double> breakpoints,
                           std::optional<double> support, const Options& opts, double scale) {
  if (support) {
    const double s = *support;
    return integrate(f, std::span<const double>(pieces(-s, s, breakpoints)), opts);
  }
  std::vector<double> th;
  th.reserve(breakpoints.size());
  for (double z : breakpoints) th.push_back(std::atan(z / scale));
  const double h = std::numbers::pi / 2;
  auto g = [&](double t) {
    const double c = std::cos(t);
    const double v = f(scale * std::tan(t));
    return v == 0.0 ? 0.0 : v * scale / (c * c);
  };
  return integrate(g, std::span<const double>(pieces(-h, h, th)), opts);
}

namespace {

// P_n(x) and P_n'(x) by the three-term recurrence.
void legendre(std::size_t n, double x, double& p, double& dp) {
  double p0 = 1.0, p1 = x;
  for (std::size_t k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = p1;
  dp = n * (x * p1 - p0) / (x * x - 1.0);
}

}  // namespace

Rule gauss_legendre(std::size_t n) {
  Rule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  if (n == 1) {
    r.nodes[0] = 0.0;
    r.weights[0] = 2.0;
    return r;
  }
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double p = 0.0, dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre(n, x, p, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-16) break;
    }
    legendre(n, x, p, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

}  // namespace ridgenet::quad
