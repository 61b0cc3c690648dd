#include "ridgenet/multidim.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <map>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ridgenet/error.hpp"
#include "ridgenet/parallel.hpp"
#include "ridgenet/quadrature.hpp"

namespace ridgenet {

namespace {

constexpr double kPi = std::numbers::pi;

// Calibrated against reconstruction of the bump fields; index = dimension.
constexpr std::array<double, 4> kChartConstant = {
    0.0,
    0.5,
    1.0 / (4.0 * kPi),
    -1.0 / (8.0 * kPi * kPi),
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// ---- Lebedev orbits --------------------------------------------------------

void add_point(DirectionRule& r, double x, double y, double z, double w) {
  r.nodes.insert(r.nodes.end(), {x, y, z});
  r.weights.push_back(w);
}

void orbit_a1(DirectionRule& r, double w) {
  for (int ax = 0; ax < 3; ++ax)
    for (double s : {1.0, -1.0}) {
      double p[3] = {0, 0, 0};
      p[ax] = s;
      add_point(r, p[0], p[1], p[2], w);
    }
}

void orbit_a2(DirectionRule& r, double w) {
  const double a = 1.0 / std::sqrt(2.0);
  for (int zero = 0; zero < 3; ++zero)
    for (double s1 : {1.0, -1.0})
      for (double s2 : {1.0, -1.0}) {
        double p[3];
        p[zero] = 0.0;
        p[(zero + 1) % 3] = s1 * a;
        p[(zero + 2) % 3] = s2 * a;
        add_point(r, p[0], p[1], p[2], w);
      }
}

void orbit_a3(DirectionRule& r, double w) {
  const double a = 1.0 / std::sqrt(3.0);
  for (double s1 : {1.0, -1.0})
    for (double s2 : {1.0, -1.0})
      for (double s3 : {1.0, -1.0}) add_point(r, s1 * a, s2 * a, s3 * a, w);
}

// (l, l, m) with 2 l^2 + m^2 = 1
void orbit_b(DirectionRule& r, double l, double m, double w) {
  for (int pos = 0; pos < 3; ++pos)
    for (double s1 : {1.0, -1.0})
      for (double s2 : {1.0, -1.0})
        for (double s3 : {1.0, -1.0}) {
          double p[3];
          p[pos] = s3 * m;
          p[(pos + 1) % 3] = s1 * l;
          p[(pos + 2) % 3] = s2 * l;
          add_point(r, p[0], p[1], p[2], w);
        }
}

// (p, q, 0) with p^2 + q^2 = 1
void orbit_c(DirectionRule& r, double p, double q, double w) {
  for (int zero = 0; zero < 3; ++zero)
    for (int swap = 0; swap < 2; ++swap)
      for (double s1 : {1.0, -1.0})
        for (double s2 : {1.0, -1.0}) {
          double v[3];
          v[zero] = 0.0;
          v[(zero + 1) % 3] = s1 * (swap ? q : p);
          v[(zero + 2) % 3] = s2 * (swap ? p : q);
          add_point(r, v[0], v[1], v[2], w);
        }
}

// ---- far field ---------------------------------------------------------------

// Moments nu_m = B^-m int g(t) t^m dt (trapezoid on the grid).
std::vector<double> far_moments(std::span<const double> g, double B, double h, int terms) {
  std::vector<double> nu(terms, 0.0);
  const std::size_t n = g.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double wt = (j == 0 || j + 1 == n) ? 0.5 * h : h;
    const double t = (-B + static_cast<double>(j) * h) / B;
    double p = wt * g[j];
    for (int m = 0; m < terms; ++m) {
      nu[m] += p;
      p *= t;
    }
  }
  return nu;
}

// Moments of g^(k) from those of g.
std::vector<double> differentiate_moments(const std::vector<double>& nu, int k, double B) {
  std::vector<double> out(nu.size(), 0.0);
  for (std::size_t m = static_cast<std::size_t>(k); m < nu.size(); ++m) {
    double c = (k % 2 == 0) ? 1.0 : -1.0;
    for (int q = 0; q < k; ++q) c *= static_cast<double>(m - q);
    out[m] = c * std::pow(B, -k) * nu[m - k];
  }
  return out;
}

// Contribution of |z| > B to (1/pi) p.v. int u(z) / (beta - z) dz, where u is
// the far-field expansion (1/(pi z)) sum nu_m (B/z)^m.
class FarTail {
 public:
  FarTail(const std::vector<double>& nu, double B) : B_(B) {
    const quad::Rule gl = quad::gauss_legendre(48);
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double s = 0.5 * (gl.nodes[q] + 1.0);
      s_.push_back(s);
      w_.push_back(0.5 * gl.weights[q]);
      double pp = 0.0, pm = 0.0, sp = 1.0, sm = 1.0;
      for (double v : nu) {
        pp += v * sp;
        pm += v * sm;
        sp *= s;
        sm *= -s;
      }
      pplus_.push_back(pp);
      pminus_.push_back(pm);
    }
  }
  double operator()(double beta) const {
    double t = 0.0;
    for (std::size_t q = 0; q < s_.size(); ++q)
      t += w_[q] * (pplus_[q] / (beta * s_[q] - B_) - pminus_[q] / (beta * s_[q] + B_));
    return t / (kPi * kPi);
  }

 private:
  double B_;
  std::vector<double> s_, w_, pplus_, pminus_;
};

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Discrete Hilbert transform y_i = sum_j K_{i-j} u_j, K_n = (1 - (-1)^n)/(pi n),
// evaluated by zero-padded FFT convolution.
class HilbertConvolver {
 public:
  explicit HilbertConvolver(std::size_t n) : n_(n) {
    P_ = 1;
    while (P_ < 4 * n) P_ <<= 1;
    const std::size_t nc = P_ / 2 + 1;
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * P_)));
    spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));
    kern_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * nc)));
    fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(P_), real_.get(), spec_.get(), FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(P_), spec_.get(), real_.get(), FFTW_ESTIMATE);
    std::fill(real_.get(), real_.get() + P_, 0.0);
    for (std::size_t m = 1; m < n; m += 2) {
      const double k = 2.0 / (kPi * static_cast<double>(m));
      real_[m] = k;
      real_[P_ - m] = -k;
    }
    fftw_execute(fwd_);
    std::memcpy(kern_.get(), spec_.get(), sizeof(fftw_complex) * nc);
  }
  ~HilbertConvolver() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  HilbertConvolver(const HilbertConvolver&) = delete;
  HilbertConvolver& operator=(const HilbertConvolver&) = delete;

  void apply(std::span<const double> u, std::span<double> y) {
    std::fill(real_.get(), real_.get() + P_, 0.0);
    std::copy(u.begin(), u.end(), real_.get());
    fftw_execute(fwd_);
    const std::size_t nc = P_ / 2 + 1;
    for (std::size_t q = 0; q < nc; ++q) {
      const double a = spec_[q][0], b = spec_[q][1];
      const double c = kern_[q][0], d = kern_[q][1];
      spec_[q][0] = a * c - b * d;
      spec_[q][1] = a * d + b * c;
    }
    fftw_execute(inv_);
    const double scale = 1.0 / static_cast<double>(P_);
    for (std::size_t i = 0; i < n_; ++i) y[i] = real_[i] * scale;
  }

 private:
  std::size_t n_, P_;
  std::unique_ptr<double[], FftwFree> real_;
  std::unique_ptr<fftw_complex[], FftwFree> spec_, kern_;
  fftw_plan fwd_, inv_;
};

// ---- Radon kernels -----------------------------------------------------------

void orthonormal_complement(std::span<const double> a, double e1[3], double e2[3]) {
  int ax = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(a[k]) < std::abs(a[ax])) ax = k;
  double t[3] = {0, 0, 0};
  t[ax] = 1.0;
  const double p = dot(a, std::span<const double>(t, 3));
  double n = 0.0;
  for (int k = 0; k < 3; ++k) {
    e1[k] = t[k] - p * a[k];
    n += e1[k] * e1[k];
  }
  n = std::sqrt(n);
  for (int k = 0; k < 3; ++k) e1[k] /= n;
  e2[0] = a[1] * e1[2] - a[2] * e1[1];
  e2[1] = a[2] * e1[0] - a[0] * e1[2];
  e2[2] = a[0] * e1[1] - a[1] * e1[0];
}

// Unit-direction Radon derivatives, orders 0..K.
std::vector<double> radon_unit(const FieldND& f, std::span<const double> a, double b, int K,
                               const RadonOptions& opt) {
  std::vector<double> out(K + 1, 0.0);
  const double rho = f.support_radius;
  const double L2 = rho * rho - b * b;
  if (!(L2 > 0.0)) return out;
  const double L = std::sqrt(L2);
  const int d = f.dim;
  double v[3], base[3];
  for (int k = 0; k < d; ++k) {
    v[k] = -a[k];
    base[k] = -b * a[k];
  }
  quad::Options qo;
  qo.abs_tol = opt.abs_tol;
  qo.rel_tol = opt.rel_tol;
  const std::size_t nk = static_cast<std::size_t>(K) + 1;
  if (d == 2) {
    const double p[2] = {-a[1], a[0]};
    auto g = [&](double s, std::span<double> o) {
      const double x[2] = {base[0] + s * p[0], base[1] + s * p[1]};
      const Jet j = f.jet(std::span<const double>(x, 2), std::span<const double>(v, 2), K);
      for (std::size_t k = 0; k < nk; ++k) o[k] = j.derivative(static_cast<int>(k));
    };
    const double pts[3] = {-L, 0.0, L};
    return quad::integrate(g, nk, pts, qo).value;
  }
  if (d == 3) {
    double e1[3], e2[3];
    orthonormal_complement(a, e1, e2);
    const int nt = opt.n_theta;
    std::vector<double> ct(nt), st(nt);
    for (int m = 0; m < nt; ++m) {
      ct[m] = std::cos(2.0 * kPi * m / nt);
      st[m] = std::sin(2.0 * kPi * m / nt);
    }
    const double wt = 2.0 * kPi / nt;
    auto g = [&](double r, std::span<double> o) {
      std::fill(o.begin(), o.end(), 0.0);
      for (int m = 0; m < nt; ++m) {
        double x[3];
        for (int k = 0; k < 3; ++k) x[k] = base[k] + r * (ct[m] * e1[k] + st[m] * e2[k]);
        const Jet j = f.jet(std::span<const double>(x, 3), std::span<const double>(v, 3), K);
        for (std::size_t k = 0; k < nk; ++k) o[k] += j.derivative(static_cast<int>(k));
      }
      for (std::size_t k = 0; k < nk; ++k) o[k] *= wt * r;
    };
    const double pts[2] = {0.0, L};
    return quad::integrate(g, nk, pts, qo).value;
  }
  throw InputError("Radon transform is implemented for d = 2 and d = 3");
}

std::size_t offsets_for(double B, double h) {
  const double n = 2.0 * B / h;
  const double r = std::round(n);
  if (std::abs(n - r) > 1e-9 * std::max(1.0, n)) throw InputError("2B/h must be an integer");
  return static_cast<std::size_t>(r) + 1;
}

void check_grid(const FieldND& f, const DirectionRule& dirs, double B, double h, bool allow_coarse = false) {
  if (dirs.dim != f.dim) throw InputError("direction rule dimension does not match the function");
  if (!(h > 0.0) || !(B > 0.0)) throw InputError("B and h must be positive");
  if (!(B > f.support_radius)) throw RefusalError("B must exceed the support radius");
  if (!allow_coarse && h > f.support_radius / 32.0) throw RefusalError("grid too coarse: h must be at most support_radius/32");
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    const auto a = dirs.node(i);
    if (std::abs(std::sqrt(dot(a, a)) - 1.0) > 1e-14) throw InputError("direction " + std::to_string(i) + " is not a unit vector");
  }
}

// Lagrange basis for 6 nodes at 0..5, evaluated at x.
void lagrange6(double x, double* L) {
  for (int m = 0; m < 6; ++m) {
    double v = 1.0;
    for (int q = 0; q < 6; ++q)
      if (q != m) v *= (x - q) / static_cast<double>(m - q);
    L[m] = v;
  }
}

std::size_t stencil_start(std::size_t cell, std::size_t n) {
  if (cell < 2) return 0;
  return std::min(cell - 2, n - 6);
}

constexpr std::array<double, 4> kGl4x = {-0.861136311594052575223946488892809,
                                         -0.339981043584856264802665759103245,
                                         0.339981043584856264802665759103245,
                                         0.861136311594052575223946488892809};
constexpr std::array<double, 4> kGl4w = {0.347854845137453857373063949221999,
                                         0.652145154862546142626936050778001,
                                         0.652145154862546142626936050778001,
                                         0.347854845137453857373063949221999};

// int over [lo, hi] inside one cell of interp(beta) * kernel(beta - beta0)
double cell_piece(std::span<const double> row, std::size_t cell, double B, double h, double lo, double hi,
                  double beta0, Kernel kernel) {
  const std::size_t n = row.size();
  const std::size_t s = stencil_start(cell, n);
  const double x0 = -B + static_cast<double>(s) * h;
  const double c = 0.5 * (lo + hi), r = 0.5 * (hi - lo);
  double acc = 0.0;
  for (int q = 0; q < 4; ++q) {
    const double b = c + r * kGl4x[q];
    double L[6];
    lagrange6((b - x0) / h, L);
    double w = 0.0;
    for (int m = 0; m < 6; ++m) w += L[m] * row[s + m];
    acc += kGl4w[q] * w * (kernel == Kernel::relu ? (b - beta0) : 1.0);
  }
  return acc * r;
}

struct CellTable {
  // weights[o][q][m]: Lagrange basis at GL node q of a cell at stencil offset o
  double weights[5][4][6];
  CellTable() {
    for (int o = 0; o < 5; ++o)
      for (int q = 0; q < 4; ++q) lagrange6(o + 0.5 * (kGl4x[q] + 1.0), weights[o][q]);
  }
};

const CellTable& cell_table() {
  static const CellTable t;
  return t;
}

double sampled_direction_integral(const ChartWeight& w, std::size_t i, double beta0) {
  const std::size_t n = w.n_offsets;
  std::span<const double> row(w.rows.data() + i * n, n);
  if (!(beta0 > -w.B && beta0 < w.B)) throw DomainError("evaluation point lies outside the chart box");
  const CellTable& tab = cell_table();
  const double half = 0.5 * w.h;
  double acc = 0.0;
  for (std::size_t c = n - 1; c-- > 0;) {
    const double lo = w.beta(c), hi = w.beta(c + 1);
    if (hi <= beta0) break;
    if (lo < beta0) {
      acc += cell_piece(row, c, w.B, w.h, beta0, hi, beta0, w.kernel);
      continue;
    }
    const std::size_t s = stencil_start(c, n);
    const std::size_t o = c - s;
    double cell = 0.0;
    for (int q = 0; q < 4; ++q) {
      double v = 0.0;
      for (int m = 0; m < 6; ++m) v += tab.weights[o][q][m] * row[s + m];
      const double b = lo + half * (kGl4x[q] + 1.0);
      cell += kGl4w[q] * v * (w.kernel == Kernel::relu ? (b - beta0) : 1.0);
    }
    acc += cell * half;
  }
  if (!w.far.empty() && !w.far[i].empty()) {
    const auto& nu = w.far[i];
    double t = 0.0;
    // moments that would make the tail diverge vanish analytically and are dropped
    if (w.kernel == Kernel::relu) {
      for (std::size_t m = 2; m < nu.size(); ++m)
        t += nu[m] * (w.B / static_cast<double>(m - 1) - beta0 / static_cast<double>(m));
    } else {
      for (std::size_t m = 1; m < nu.size(); ++m) t += nu[m] / static_cast<double>(m);
    }
    acc += t / kPi;
  }
  return acc;
}

double analytic_direction_integral(const ChartWeight& w, std::size_t i, double beta0, bool absolute) {
  auto g = [&](double b) {
    const double v = w.analytic(i, b);
    if (absolute) return std::abs(v);
    if (b <= beta0) return 0.0;
    return v * (w.kernel == Kernel::relu ? (b - beta0) : 1.0);
  };
  std::vector<double> br = i < w.kinks.size() ? w.kinks[i] : std::vector<double>{};
  if (!absolute) br.push_back(beta0);
  quad::Options qo;
  qo.abs_tol = 1e-11;
  qo.rel_tol = 1e-12;
  if (w.support) {
    const double S = *w.support;
    double lo = -S;
    if (!absolute) lo = std::clamp(beta0, -S, S);
    std::vector<double> in;
    for (double k : br)
      if (k > lo && k < S) in.push_back(k);
    const auto p = quad::pieces(lo, S, in);
    if (p.size() < 2 || lo >= S) return 0.0;
    return quad::integrate(g, p, qo).value;
  }
  return quad::integrate_real_line(g, br, std::nullopt, qo).value;
}

ChartWeight weight_from_layer(const RadonGrid& g, std::size_t layer, double scale, Kernel kernel) {
  ChartWeight w;
  w.dim = g.dim;
  w.kernel = kernel;
  w.dirs = g.dirs;
  w.B = g.B;
  w.h = g.h;
  w.n_offsets = g.n_offsets;
  w.rows = g.layers[layer];
  for (double& v : w.rows) v *= scale;
  if (g.hilbert && layer < g.far.size() && !g.far[layer].empty()) {
    w.far = g.far[layer];
    for (auto& r : w.far)
      for (double& v : r) v *= scale;
  }
  return w;
}

}  // namespace

// ---- direction rules -----------------------------------------------------

std::optional<std::size_t> DirectionRule::antipode(std::size_t i) const {
  const auto a = node(i);
  for (std::size_t j = 0; j < size(); ++j) {
    const auto b = node(j);
    double e = 0.0;
    for (int k = 0; k < dim; ++k) e = std::max(e, std::abs(a[k] + b[k]));
    if (e < 1e-12 && std::abs(weights[i] - weights[j]) <= 1e-14 * std::abs(weights[i])) return j;
  }
  return std::nullopt;
}

DirectionRule point_pair() {
  DirectionRule r;
  r.dim = 1;
  r.nodes = {1.0, -1.0};
  r.weights = {1.0, 1.0};
  r.name = "pair";
  return r;
}

DirectionRule circle_rule(std::size_t n) {
  if (n < 3) throw InputError("circle rule needs at least 3 nodes");
  DirectionRule r;
  r.dim = 2;
  r.name = "circle" + std::to_string(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(n);
    r.nodes.push_back(std::cos(t));
    r.nodes.push_back(std::sin(t));
    r.weights.push_back(2.0 * kPi / static_cast<double>(n));
  }
  return r;
}

DirectionRule product_sphere_rule(std::size_t n_theta, std::size_t n_phi) {
  if (n_theta < 1 || n_phi < 3) throw InputError("product rule needs n_theta >= 1 and n_phi >= 3");
  DirectionRule r;
  r.dim = 3;
  r.name = "product" + std::to_string(n_theta) + "x" + std::to_string(n_phi);
  const quad::Rule gl = quad::gauss_legendre(n_theta);
  for (std::size_t a = 0; a < n_theta; ++a) {
    const double t = gl.nodes[a];
    const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
    for (std::size_t b = 0; b < n_phi; ++b) {
      const double p = 2.0 * kPi * static_cast<double>(b) / static_cast<double>(n_phi);
      add_point(r, st * std::cos(p), st * std::sin(p), t, gl.weights[a] * 2.0 * kPi / static_cast<double>(n_phi));
    }
  }
  return r;
}

DirectionRule lebedev_rule(std::size_t n) {
  DirectionRule r;
  r.dim = 3;
  r.name = "lebedev" + std::to_string(n);
  switch (n) {
    case 6: orbit_a1(r, 1.0 / 6.0); break;
    case 14:
      orbit_a1(r, 1.0 / 15.0);
      orbit_a3(r, 3.0 / 40.0);
      break;
    case 26:
      orbit_a1(r, 1.0 / 21.0);
      orbit_a2(r, 4.0 / 105.0);
      orbit_a3(r, 9.0 / 280.0);
      break;
    case 38: {
      const double q = 0.4597008433809831;
      orbit_a1(r, 1.0 / 105.0);
      orbit_a3(r, 9.0 / 280.0);
      orbit_c(r, std::sqrt(1.0 - q * q), q, 1.0 / 35.0);
      break;
    }
    case 50:
      orbit_a1(r, 4.0 / 315.0);
      orbit_a2(r, 64.0 / 2835.0);
      orbit_a3(r, 27.0 / 1280.0);
      orbit_b(r, 1.0 / std::sqrt(11.0), 3.0 / std::sqrt(11.0), 14641.0 / 725760.0);
      break;
    default: throw InputError("Lebedev rules are available with 6, 14, 26, 38 or 50 nodes");
  }
  for (double& w : r.weights) w *= 4.0 * kPi;
  return r;
}

DirectionRule default_rule(int dim) {
  switch (dim) {
    case 1: return point_pair();
    case 2: return circle_rule(64);
    case 3: return product_sphere_rule(14, 28);
    default: throw InputError("dimension must be 1, 2 or 3");
  }
}

// ---- Radon -------------------------------------------------------------------

std::vector<double> radon_value(const FieldND& f, std::span<const double> alpha, double beta, int max_order,
                                const RadonOptions& opt) {
  if (alpha.size() != static_cast<std::size_t>(f.dim)) throw InputError("direction has the wrong dimension");
  if (max_order < 0 || max_order > kMaxJetOrder) throw InputError("derivative order out of range");
  const double n = std::sqrt(dot(alpha, alpha));
  if (!(n > 0.0)) throw InputError("direction must be nonzero");
  std::vector<double> a(alpha.begin(), alpha.end());
  for (double& v : a) v /= n;
  auto out = radon_unit(f, a, beta / n, max_order, opt);
  for (int k = 1; k <= max_order; ++k) out[k] *= std::pow(n, -k);
  return out;
}

RadonGrid radon_transform(const FieldND& f, const DirectionRule& dirs, double B, double h, int max_order,
                          const RadonOptions& opt) {
  check_grid(f, dirs, B, h, opt.allow_coarse);
  if (max_order < 0 || max_order > kMaxJetOrder) throw InputError("derivative order out of range");
  RadonGrid g;
  g.dim = f.dim;
  g.dirs = dirs;
  g.B = B;
  g.n_offsets = offsets_for(B, h);
  g.h = 2.0 * B / static_cast<double>(g.n_offsets - 1);
  g.deriv = 0;
  const std::size_t nd = dirs.size(), n = g.n_offsets, nk = static_cast<std::size_t>(max_order) + 1;
  g.layers.assign(nk, std::vector<double>(nd * n, 0.0));

  // R(-alpha, beta) = R(alpha, -beta): compute one direction of each antipodal pair
  std::vector<std::ptrdiff_t> mirror(nd, -1);
  std::vector<std::size_t> primary;
  for (std::size_t i = 0; i < nd; ++i) {
    if (mirror[i] >= 0) continue;
    primary.push_back(i);
    if (auto j = dirs.antipode(i); j && *j != i && mirror[*j] < 0) mirror[*j] = static_cast<std::ptrdiff_t>(i);
  }
  std::vector<std::pair<std::size_t, std::size_t>> tasks;
  for (std::size_t i : primary)
    for (std::size_t j = 0; j < n; ++j)
      if (std::abs(g.beta(j)) < f.support_radius) tasks.emplace_back(i, j);
  parallel_for(tasks.size(), [&](std::size_t t) {
    const auto [i, j] = tasks[t];
    const auto v = radon_unit(f, dirs.node(i), g.beta(j), max_order, opt);
    for (std::size_t k = 0; k < nk; ++k) g.layers[k][i * n + j] = v[k];
  });
  for (std::size_t i = 0; i < nd; ++i) {
    if (mirror[i] < 0) continue;
    const std::size_t src = static_cast<std::size_t>(mirror[i]);
    for (std::size_t k = 0; k < nk; ++k) {
      const double s = (k % 2 == 0) ? 1.0 : -1.0;
      for (std::size_t j = 0; j < n; ++j) g.layers[k][i * n + j] = s * g.layers[k][src * n + (n - 1 - j)];
    }
  }
  return g;
}

std::vector<double> fornberg_weights(int k, double x0, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0 || static_cast<std::size_t>(k) >= n) throw RefusalError("stencil out of range");
  std::vector<std::vector<long double>> c(n, std::vector<long double>(k + 1, 0.0L));
  long double c1 = 1.0L, c4 = x[0] - x0;
  c[0][0] = 1.0L;
  for (std::size_t i = 1; i < n; ++i) {
    const int mn = std::min<int>(static_cast<int>(i), k);
    long double c2 = 1.0L;
    const long double c5 = c4;
    c4 = x[i] - x0;
    for (std::size_t j = 0; j < i; ++j) {
      const long double c3 = static_cast<long double>(x[i]) - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int m = mn; m >= 1; --m) c[i][m] = c1 * (m * c[i - 1][m - 1] - c5 * c[i - 1][m]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int m = mn; m >= 1; --m) c[j][m] = (c4 * c[j][m] - m * c[j][m - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<double>(c[i][k]);
  return w;
}

RadonGrid offset_derivative(const RadonGrid& grid, int k, DerivMode mode, const FieldND* f,
                            const RadonOptions& opt) {
  if (k < 0) throw InputError("derivative order must be nonnegative");
  if (f && grid.deriv + k > f->smoothness)
    throw RefusalError("derivative order exceeds the smoothness of the function");
  if (mode == DerivMode::analytic) {
    if (!f) throw InputError("analytic offset derivatives need the function");
    const int total = grid.deriv + k;
    RadonGrid full = radon_transform(*f, grid.dirs, grid.B, grid.h, total, opt);
    RadonGrid out = full;
    out.deriv = total;
    out.layers = {full.layers[total]};
    if (grid.hilbert) out = hilbert_offset(out);
    return out;
  }
  constexpr int kHalf = 6;
  constexpr std::size_t kWidth = 2 * kHalf + 1;
  const std::size_t n = grid.n_offsets;
  if (n < kWidth) throw RefusalError("stencil out of range: grid has fewer than 13 offsets");
  // one weight set per stencil position relative to the target node
  std::map<std::size_t, std::vector<double>> tables;
  auto weights_for = [&](std::size_t pos) -> const std::vector<double>& {
    auto it = tables.find(pos);
    if (it != tables.end()) return it->second;
    std::vector<double> nodes(kWidth);
    for (std::size_t m = 0; m < kWidth; ++m) nodes[m] = static_cast<double>(m);
    auto w = fornberg_weights(k, static_cast<double>(pos), nodes);
    for (double& v : w) v /= std::pow(grid.h, k);
    return tables.emplace(pos, std::move(w)).first->second;
  };
  RadonGrid out = grid;
  out.deriv = grid.deriv + k;
  out.layers.assign(1, std::vector<double>(grid.layers[0].size(), 0.0));
  for (std::size_t i = 0; i < grid.dirs.size(); ++i) {
    const auto row = grid.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t s = std::min(j < kHalf ? 0 : j - kHalf, n - kWidth);
      const auto& w = weights_for(j - s);
      double acc = 0.0;
      for (std::size_t m = 0; m < kWidth; ++m) acc += w[m] * row[s + m];
      out.layers[0][i * n + j] = acc;
    }
  }
  out.far.clear();
  if (!grid.far.empty() && !grid.far[0].empty()) {
    out.far.assign(1, {});
    for (const auto& nu : grid.far[0]) out.far[0].push_back(differentiate_moments(nu, k, grid.B));
  }
  return out;
}

RadonGrid hilbert_offset(const RadonGrid& grid, const HilbertOptions& opt) {
  const std::size_t n = grid.n_offsets, nd = grid.dirs.size();
  if (n < 2) throw InputError("grid too small for the Hilbert transform");
  RadonGrid out = grid;
  out.hilbert = true;
  out.far.assign(grid.layers.size(), {});
  HilbertConvolver conv(n);
  std::vector<double> u(n), y(n);
  for (std::size_t k = 0; k < grid.layers.size(); ++k) {
    const bool has_far = k < grid.far.size() && !grid.far[k].empty();
    if (!has_far) out.far[k].resize(nd);
    for (std::size_t i = 0; i < nd; ++i) {
      const auto g = grid.row(i, k);
      if (!has_far && (std::abs(g[0]) > opt.edge_tol || std::abs(g[n - 1]) > opt.edge_tol))
        throw RefusalError("insufficient decay at grid ends for the Hilbert transform");
      std::copy(g.begin(), g.end(), u.begin());
      u[0] *= 0.5;
      u[n - 1] *= 0.5;
      conv.apply(u, y);
      if (has_far) {
        const FarTail tail(grid.far[k][i], grid.B);
        for (std::size_t j = 0; j < n; ++j) y[j] += tail(grid.beta(j));
      } else {
        out.far[k][i] = far_moments(g, grid.B, grid.h, opt.far_terms);
      }
      std::copy(y.begin(), y.end(), out.layers[k].begin() + static_cast<std::ptrdiff_t>(i * n));
    }
  }
  return out;
}

// ---- serialization -------------------------------------------------------

void write_radon_grid(std::ostream& out, const RadonGrid& g) {
  out << "# ridgenet radon grid\n";
  out << "dim=" << g.dim << "\n";
  out << "rule=" << g.dirs.name << "\n";
  out << "B=" << fmt(g.B) << "\n";
  out << "h=" << fmt(g.h) << "\n";
  out << "n_directions=" << g.dirs.size() << "\n";
  out << "n_offsets=" << g.n_offsets << "\n";
  out << "deriv=" << g.deriv << "\n";
  out << "hilbert=" << (g.hilbert ? 1 : 0) << "\n";
  out << "layers=" << g.layers.size() << "\n";
  out << "direction_weights=";
  for (std::size_t i = 0; i < g.dirs.size(); ++i) out << (i ? " " : "") << fmt(g.dirs.weights[i]);
  out << "\n";
  for (std::size_t k = 0; k < g.far.size(); ++k)
    for (std::size_t i = 0; i < g.far[k].size(); ++i) {
      if (g.far[k][i].empty()) continue;
      out << "far_" << k << "_" << i << "=";
      for (std::size_t m = 0; m < g.far[k][i].size(); ++m) out << (m ? " " : "") << fmt(g.far[k][i][m]);
      out << "\n";
    }
  for (int c = 0; c < g.dim; ++c) out << "alpha" << c + 1 << ",";
  out << "beta,value";
  for (std::size_t k = 1; k < g.layers.size(); ++k) out << ",d" << k;
  out << "\n";
  for (std::size_t i = 0; i < g.dirs.size(); ++i) {
    const auto a = g.dirs.node(i);
    std::string prefix;
    for (int c = 0; c < g.dim; ++c) prefix += fmt(a[c]) + ",";
    for (std::size_t j = 0; j < g.n_offsets; ++j) {
      out << prefix << fmt(g.beta(j));
      for (std::size_t k = 0; k < g.layers.size(); ++k) out << "," << fmt(g.at(i, j, k));
      out << "\n";
    }
  }
}

RadonGrid read_radon_grid(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ridgenet radon grid", 0) != 0)
    throw InputError("not a radon grid file");
  while (std::getline(in, line)) {
    if (line.rfind("alpha1", 0) == 0) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("malformed header line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&](const std::string& k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw InputError("missing header key " + k);
    return it->second;
  };
  auto num = [](const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw InputError("malformed number: " + s);
    return v;
  };
  auto numbers = [&](const std::string& s) {
    std::vector<double> v;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) v.push_back(num(tok));
    return v;
  };
  RadonGrid g;
  g.dim = std::stoi(need("dim"));
  if (g.dim < 1 || g.dim > 3) throw InputError("dimension must be 1, 2 or 3");
  g.dirs.dim = g.dim;
  g.dirs.name = kv.count("rule") ? kv["rule"] : "";
  g.B = num(need("B"));
  g.h = num(need("h"));
  const std::size_t nd = std::stoul(need("n_directions"));
  g.n_offsets = std::stoul(need("n_offsets"));
  g.deriv = std::stoi(need("deriv"));
  g.hilbert = std::stoi(need("hilbert")) != 0;
  const std::size_t nl = std::stoul(need("layers"));
  if (nl == 0) throw InputError("grid must have at least one layer");
  g.dirs.weights = numbers(need("direction_weights"));
  if (g.dirs.weights.size() != nd) throw InputError("direction weight count mismatch");
  g.layers.assign(nl, std::vector<double>(nd * g.n_offsets, 0.0));
  for (const auto& [key, val] : kv) {
    if (key.rfind("far_", 0) != 0) continue;
    std::size_t k = 0, i = 0;
    if (std::sscanf(key.c_str(), "far_%zu_%zu", &k, &i) != 2 || k >= nl || i >= nd)
      throw InputError("malformed far-field key " + key);
    if (g.far.size() < nl) g.far.assign(nl, {});
    if (g.far[k].size() < nd) g.far[k].resize(nd);
    g.far[k][i] = numbers(val);
  }
  g.dirs.nodes.assign(nd * g.dim, 0.0);
  for (std::size_t i = 0; i < nd; ++i)
    for (std::size_t j = 0; j < g.n_offsets; ++j) {
      if (!std::getline(in, line)) throw InputError("radon grid truncated");
      std::vector<double> v;
      std::size_t pos = 0;
      while (pos <= line.size()) {
        const auto c = line.find(',', pos);
        v.push_back(num(line.substr(pos, c == std::string::npos ? std::string::npos : c - pos)));
        if (c == std::string::npos) break;
        pos = c + 1;
      }
      if (v.size() != static_cast<std::size_t>(g.dim) + 1 + nl) throw InputError("radon grid row has wrong width");
      for (int c = 0; c < g.dim; ++c) g.dirs.nodes[i * g.dim + c] = v[c];
      for (std::size_t k = 0; k < nl; ++k) g.layers[k][i * g.n_offsets + j] = v[g.dim + 1 + k];
    }
  return g;
}

// ---- chart weights ------------------------------------------------------

double chart_constant(int d) {
  if (d < 1 || d > 3) throw InputError("dimension must be 1, 2 or 3");
  return kChartConstant[d];
}

double ChartWeight::operator()(std::size_t i, double beta) const {
  if (analytic) return analytic(i, beta);
  if (beta >= -B && beta <= B) {
    const double t = (beta + B) / h;
    std::size_t cell = static_cast<std::size_t>(std::clamp(std::floor(t), 0.0, static_cast<double>(n_offsets - 2)));
    const std::size_t s = stencil_start(cell, n_offsets);
    double L[6];
    lagrange6(t - static_cast<double>(s), L);
    double v = 0.0;
    for (int m = 0; m < 6; ++m) v += L[m] * rows[i * n_offsets + s + m];
    return v;
  }
  if (far.empty() || far[i].empty()) return 0.0;
  double p = 0.0, r = 1.0;
  for (double nu : far[i]) {
    p += nu * r;
    r *= B / beta;
  }
  return p / (kPi * beta);
}

ChartPair chart_weights(const FieldND& f, const ChartOptions& opt) {
  const int d = f.dim;
  if (d != 2 && d != 3) throw InputError("chart weights are implemented for d = 2 and d = 3");
  const DirectionRule dirs = opt.dirs ? *opt.dirs : default_rule(d);
  const double rho = f.support_radius;
  const double h = opt.h ? *opt.h : (d == 2 ? rho / 256.0 : rho / 128.0);
  const double B = opt.B ? *opt.B : (d == 2 ? 2.0 * rho : rho + 8.0 * h);
  const double K = chart_constant(d);
  const bool even = d % 2 == 0;
  if (f.smoothness < d + 1) throw RefusalError("chart weights need smoothness of order d+1");
  RadonGrid g;
  if (opt.mode == DerivMode::analytic) {
    RadonGrid full = radon_transform(f, dirs, B, h, d + 1, opt.radon);
    g = full;
    g.deriv = d;
    g.layers = {std::move(full.layers[d]), std::move(full.layers[d + 1])};
    if (even) g = hilbert_offset(g, opt.hilbert);
  } else {
    RadonGrid base = radon_transform(f, dirs, B, h, 0, opt.radon);
    if (even) base = hilbert_offset(base, opt.hilbert);
    RadonGrid gd = offset_derivative(base, d, DerivMode::finite_difference);
    RadonGrid gd1 = offset_derivative(base, d + 1, DerivMode::finite_difference);
    g = gd;
    g.layers.push_back(std::move(gd1.layers[0]));
    if (even) g.far.push_back(gd1.far.empty() ? std::vector<std::vector<double>>{} : gd1.far[0]);
  }
  ChartPair p;
  p.relu = weight_from_layer(g, 1, K, Kernel::relu);
  p.heaviside = weight_from_layer(g, 0, -K, Kernel::heaviside);
  return p;
}

ChartWeight relu_chart_weight(const FieldND& f, const ChartOptions& opt) { return chart_weights(f, opt).relu; }

ChartWeight heaviside_weight(const FieldND& f, const ChartOptions& opt) {
  return chart_weights(f, opt).heaviside;
}

ChartWeight relu_chart_weight(const Scalar1D& f) {
  ChartWeight w;
  w.dim = 1;
  w.kernel = Kernel::relu;
  w.dirs = point_pair();
  const double K = chart_constant(1);
  auto d2 = f.d2;
  w.analytic = [d2, K](std::size_t i, double beta) { return K * d2(i == 0 ? -beta : beta); };
  w.kinks.resize(2);
  for (double e : f.kinks()) {
    w.kinks[0].push_back(-e);
    w.kinks[1].push_back(e);
  }
  w.support = f.support;
  return w;
}

double reconstruct(const ChartWeight& w, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(w.dim)) throw InputError("point has the wrong dimension");
  double acc = 0.0;
  for (std::size_t i = 0; i < w.dirs.size(); ++i) {
    const double beta0 = -dot(w.dirs.node(i), x);
    const double v = w.sampled() ? sampled_direction_integral(w, i, beta0)
                                 : analytic_direction_integral(w, i, beta0, false);
    acc += w.dirs.weights[i] * v;
  }
  return acc;
}

double heaviside_reconstruct(const FieldND& f, std::span<const double> x, const ChartOptions& opt) {
  return reconstruct(heaviside_weight(f, opt), x);
}

double chart_l1_norm(const ChartWeight& w) {
  double total = 0.0;
  const quad::Rule gl = quad::gauss_legendre(48);
  for (std::size_t i = 0; i < w.dirs.size(); ++i) {
    double acc = 0.0;
    if (!w.sampled()) {
      acc = analytic_direction_integral(w, i, 0.0, true);
    } else {
      const std::size_t n = w.n_offsets;
      std::span<const double> row(w.rows.data() + i * n, n);
      for (std::size_t c = 0; c + 1 < n; ++c) {
        const std::size_t s = stencil_start(c, n);
        double cell = 0.0;
        for (int q = 0; q < 4; ++q) {
          double L[6];
          lagrange6(static_cast<double>(c - s) + 0.5 * (kGl4x[q] + 1.0), L);
          double v = 0.0;
          for (int m = 0; m < 6; ++m) v += L[m] * row[s + m];
          cell += kGl4w[q] * std::abs(v);
        }
        acc += 0.5 * w.h * cell;
      }
      if (!w.far.empty() && !w.far[i].empty()) {
        // beta = +-B/s: int |w| dbeta = (1/pi) int_0^1 |P(+-s)| / s ds
        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
          const double s = 0.5 * (gl.nodes[q] + 1.0), wq = 0.5 * gl.weights[q];
          double pp = 0.0, pm = 0.0, sp = 1.0, sm = 1.0;
          for (double nu : w.far[i]) {
            pp += nu * sp;
            pm += nu * sm;
            sp *= s;
            sm *= -s;
          }
          acc += wq * (std::abs(pp) + std::abs(pm)) / (kPi * s);
        }
      }
    }
    total += w.dirs.weights[i] * acc;
  }
  return total;
}

// ---- sphere integrals ---------------------------------------------------

SphereIntegrals sphere_change_of_variables(const std::function<double(std::span<const double> a, double b)>& F,
                                           int d, double tol) {
  if (d < 1 || d > 3) throw InputError("dimension must be 1, 2 or 3");
  const DirectionRule dirs = d == 1 ? point_pair() : d == 2 ? circle_rule(128) : product_sphere_rule(24, 48);
  quad::Options qo;
  qo.rel_tol = tol;
  qo.abs_tol = tol * 1e-3;
  std::vector<double> a(d);
  SphereIntegrals r;
  auto spherical = [&](double phi) {
    const double sp = std::sin(phi), cp = std::cos(phi);
    double s = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const auto n = dirs.node(i);
      for (int k = 0; k < d; ++k) a[k] = n[k] * sp;
      s += dirs.weights[i] * F(a, cp);
    }
    return std::pow(sp, d - 1) * s;
  };
  r.spherical = quad::integrate(spherical, 0.0, kPi, qo).value;
  auto chart = [&](double beta) {
    const double rho = std::sqrt(1.0 + beta * beta);
    double s = 0.0;
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const auto n = dirs.node(i);
      for (int k = 0; k < d; ++k) a[k] = n[k] / rho;
      s += dirs.weights[i] * F(a, beta / rho);
    }
    return s * std::pow(rho, -(d + 1));
  };
  const double core = quad::integrate(chart, -1.0, 1.0, qo).value;
  // tails beta = +-1/s
  auto tails = [&](double s) {
    if (s <= 0.0) return 0.0;
    return (chart(1.0 / s) + chart(-1.0 / s)) / (s * s);
  };
  const double tail = quad::integrate(tails, 0.0, 1.0, qo).value;
  r.chart = core + tail;
  return r;
}

std::vector<std::vector<double>> probe_points(int dim) {
  std::vector<std::vector<double>> p;
  if (dim == 1) {
    for (int i = 0; i < 27; ++i) p.push_back({-0.8 + 1.6 * i / 26.0});
  } else if (dim == 2) {
    p.push_back({0.0, 0.0});
    const double radii[3] = {0.3, 0.55, 0.75};
    const int counts[3] = {8, 9, 9};
    for (int r = 0; r < 3; ++r)
      for (int m = 0; m < counts[r]; ++m) {
        const double t = 2.0 * kPi * m / counts[r] + 0.1 * r;
        p.push_back({radii[r] * std::cos(t), radii[r] * std::sin(t)});
      }
  } else if (dim == 3) {
    const double v[3] = {-0.45, 0.0, 0.45};
    for (double a : v)
      for (double b : v)
        for (double c : v) p.push_back({a, b, c});
  } else {
    throw InputError("dimension must be 1, 2 or 3");
  }
  return p;
}

}  // namespace ridgenet
