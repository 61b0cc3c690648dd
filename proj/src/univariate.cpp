#include "ridgenet/univariate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "ridgenet/error.hpp"
#include "ridgenet/quadrature.hpp"

namespace ridgenet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double phi) {
  double p = std::fmod(phi, kTwoPi);
  if (p < 0.0) p += kTwoPi;
  return p;
}

quad::Options opts(double tol) {
  quad::Options o;
  o.abs_tol = tol;
  return o;
}

// Pieces of [lo, hi] split at the given phi-locations (taken mod 2 pi, and
// shifted by multiples of 2 pi into range).
std::vector<double> phi_pieces(double lo, double hi, std::vector<double> at) {
  std::vector<double> in;
  for (double p : at) {
    const double w = wrap(p);
    for (double s : {w - kTwoPi, w, w + kTwoPi})
      if (s > lo && s < hi) in.push_back(s);
  }
  return quad::pieces(lo, hi, in);
}

std::vector<double> circle_kinks(const CircleWeight& c) {
  std::vector<double> k = c.raw_kinks;
  k.push_back(kPi / 2);
  k.push_back(3 * kPi / 2);
  for (double z : c.z_kinks()) {
    k.push_back(-std::atan(z));
    k.push_back(kPi - std::atan(z));
  }
  return k;
}

double integrate_phi(const std::function<double(double)>& g, double lo, double hi, std::vector<double> at,
                     double tol) {
  const auto p = phi_pieces(lo, hi, std::move(at));
  return quad::integrate(g, std::span<const double>(p), opts(tol)).value;
}

double integrate_z(const std::function<double(double)>& g, const CircleWeight& c, std::vector<double> extra,
                   double tol) {
  std::vector<double> k = c.z_kinks();
  k.insert(k.end(), extra.begin(), extra.end());
  return quad::integrate_real_line(g, k, c.z_support(), opts(tol)).value;
}

double d2_or_zero(const std::optional<Scalar1D>& s, double z) { return s ? s->d2(z) : 0.0; }

// Roots of g on [lo, hi] located by sampling plus bisection.
std::vector<double> sign_changes(const std::function<double(double)>& g, double lo, double hi, int samples) {
  std::vector<double> roots;
  double xa = lo + (hi - lo) * 0.5 / samples;
  double ga = g(xa);
  for (int i = 1; i < samples; ++i) {
    const double xb = lo + (hi - lo) * (i + 0.5) / samples;
    const double gb = g(xb);
    if ((ga < 0.0 && gb > 0.0) || (ga > 0.0 && gb < 0.0)) {
      double a = xa, b = xb, fa = ga;
      for (int it = 0; it < 200; ++it) {
        const double m = 0.5 * (a + b);
        if (!(m > a && m < b)) break;
        const double fm = g(m);
        if ((fm < 0.0) == (fa < 0.0) && fm != 0.0) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    xa = xb;
    ga = gb;
  }
  return roots;
}

void check_in_w(const Scalar1D& f, const char* role) {
  const WMembership w = check_w_membership(f);
  if (w.verdict == WVerdict::in_W) return;
  std::ostringstream msg;
  msg << role << " '" << f.name << "' is not certified in W(R): verdict=" << to_string(w.verdict)
      << " |f(+-R)|=" << w.f_at_R << " |R f'(+-R)|=" << w.xf1_at_R << " lim|f|~" << w.f_limit
      << " lim|x f'|~" << w.xf1_limit << " int|f''|sqrt(1+x^2)~" << w.integral;
  if (!w.reason.empty()) msg << " (" << w.reason << ")";
  throw RefusalError(msg.str());
}

}  // namespace

double s_phi(double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  if (c > 0.0) return s;
  if (c < 0.0) return -s;
  return -1.0;  // phi = -pi/2 lies in the base interval, and s(pi/2) = s(-pi/2)
}

double CircleWeight::extra(double phi) const {
  const double c = std::cos(phi), s = std::sin(phi);
  double v = trig.alpha * c + trig.beta * s + trig.gamma * std::abs(c) + trig.eta * s_phi(phi);
  if (raw) v += raw(phi);
  return v;
}

bool CircleWeight::has_extra() const {
  return static_cast<bool>(raw) || trig.alpha != 0.0 || trig.beta != 0.0 || trig.gamma != 0.0 ||
         trig.eta != 0.0;
}

double CircleWeight::operator()(double phi) const {
  double v = extra(phi);
  const double c = std::cos(phi);
  if (has_structured() && c != 0.0) {
    const double z = -std::sin(phi) / c;
    const double c3 = c * c * c;
    if (sym) v += sym->d2(z) / (2.0 * std::abs(c3));
    if (anti) v += anti->d2(z) / (2.0 * c3);
  }
  return v;
}

std::vector<double> CircleWeight::z_kinks() const {
  std::vector<double> k;
  if (sym) k = sym->kinks();
  if (anti) {
    const auto a = anti->kinks();
    k.insert(k.end(), a.begin(), a.end());
  }
  std::sort(k.begin(), k.end());
  k.erase(std::unique(k.begin(), k.end()), k.end());
  return k;
}

std::optional<double> CircleWeight::z_support() const {
  if (!has_structured()) return 0.0;
  double r = 0.0;
  for (const auto* s : {&sym, &anti}) {
    if (!s->has_value()) continue;
    if (!(*s)->support) return std::nullopt;
    r = std::max(r, *(*s)->support);
  }
  return r;
}

CircleWeight raw_weight(std::function<double(double)> c, std::vector<double> kinks) {
  CircleWeight w;
  w.raw = std::move(c);
  w.raw_kinks = std::move(kinks);
  return w;
}

CircleWeight least_l1_weight(const Scalar1D& f, bool force) {
  if (!force) check_in_w(f, "target");
  CircleWeight w;
  w.sym = f;
  return w;
}

CircleWeight weight_family(const Scalar1D& f, const Scalar1D& k, const DecompCoeffs& trig, bool force) {
  if (!force) {
    check_in_w(f, "target");
    check_in_w(k, "anti-symmetric part");
  }
  CircleWeight w;
  w.sym = f;
  w.anti = k;
  w.trig = trig;
  return w;
}

double forward(const CircleWeight& c, double x, double tol) {
  double v = 0.0;
  if (c.has_structured()) {
    // In z = -tan(phi) the kernel collapses to |x - z| and (x - z).
    auto g = [&](double z) {
      return 0.5 * (d2_or_zero(c.sym, z) * std::abs(x - z) + d2_or_zero(c.anti, z) * (x - z));
    };
    v += integrate_z(g, c, {x}, tol);
  }
  const DecompCoeffs& t = c.trig;
  v += t.alpha * (kPi / 2) * x + t.beta * (kPi / 2) + t.gamma * (x * std::atan(x) + 1.0) + t.eta * std::atan(x);
  if (c.raw) {
    auto g = [&](double phi) {
      const double u = x * std::cos(phi) + std::sin(phi);
      return u > 0.0 ? c.raw(phi) * u : 0.0;
    };
    std::vector<double> at = c.raw_kinks;
    at.insert(at.end(), {kPi / 2, 3 * kPi / 2, -std::atan(x), kPi - std::atan(x)});
    v += integrate_phi(g, 0.0, kTwoPi, at, tol);
  }
  return v;
}

double forward_d1(const CircleWeight& c, double x, double tol) {
  double v = 0.0;
  if (c.has_structured()) {
    auto g = [&](double z) {
      const double sg = z < x ? 1.0 : (z > x ? -1.0 : 0.0);
      return 0.5 * (d2_or_zero(c.sym, z) * sg + d2_or_zero(c.anti, z));
    };
    v += integrate_z(g, c, {x}, tol);
  }
  const DecompCoeffs& t = c.trig;
  const double q = 1.0 + x * x;
  v += t.alpha * (kPi / 2) + t.gamma * (std::atan(x) + x / q) + t.eta / q;
  if (c.raw) {
    auto g = [&](double phi) {
      const double u = x * std::cos(phi) + std::sin(phi);
      const double h = u > 0.0 ? 1.0 : (u < 0.0 ? 0.0 : 0.5);
      return c.raw(phi) * h * std::cos(phi);
    };
    std::vector<double> at = c.raw_kinks;
    at.insert(at.end(), {kPi / 2, 3 * kPi / 2, -std::atan(x), kPi - std::atan(x)});
    v += integrate_phi(g, 0.0, kTwoPi, at, tol);
  }
  return v;
}

double forward_d2(const CircleWeight& c, double x) {
  // The anti part cancels between phi and phi + pi; the sym part gives f''(x).
  double v = d2_or_zero(c.sym, x);
  if (c.has_extra()) {
    const double phi = -std::atan(x);
    v += (c.extra(phi) + c.extra(phi + kPi)) / std::pow(1.0 + x * x, 1.5);
  }
  return v;
}

Scalar1D represented_function(const CircleWeight& c, double tol) {
  Scalar1D s;
  s.name = "represented";
  s.f = [c, tol](double x) { return forward(c, x, tol); };
  s.d1 = [c, tol](double x) { return forward_d1(c, x, tol); };
  s.d2 = [c](double x) { return forward_d2(c, x); };
  s.exceptional = c.z_kinks();
  if (!c.has_extra()) s.support = c.z_support();
  s.tags = {"represented"};
  return s;
}

Moments moment_conditions(const CircleWeight& c, double tol, double quad_tol) {
  Moments r;
  if (c.has_structured()) {
    auto fpk = [&](double z) { return 0.5 * (d2_or_zero(c.sym, z) + d2_or_zero(c.anti, z)); };
    auto fmk = [&](double z) { return 0.5 * (d2_or_zero(c.sym, z) - d2_or_zero(c.anti, z)); };
    r.m[0] += integrate_z(fpk, c, {}, quad_tol);
    r.m[1] += integrate_z(fmk, c, {}, quad_tol);
    r.m[2] += integrate_z([&](double z) { return -z * fpk(z); }, c, {}, quad_tol);
    r.m[3] += integrate_z([&](double z) { return -z * fmk(z); }, c, {}, quad_tol);
  }
  if (c.has_extra()) {
    std::vector<double> at = c.raw_kinks;
    for (double k : c.raw_kinks) at.push_back(k - kPi);
    const double lo = -kPi / 2, hi = kPi / 2;
    r.m[0] += integrate_phi([&](double p) { return c.extra(p) * std::cos(p); }, lo, hi, at, quad_tol);
    r.m[1] += integrate_phi([&](double p) { return c.extra(p + kPi) * std::cos(p); }, lo, hi, at, quad_tol);
    r.m[2] += integrate_phi([&](double p) { return c.extra(p) * std::sin(p); }, lo, hi, at, quad_tol);
    r.m[3] += integrate_phi([&](double p) { return c.extra(p + kPi) * std::sin(p); }, lo, hi, at, quad_tol);
  }
  r.vanish = std::all_of(r.m.begin(), r.m.end(), [tol](double v) { return std::abs(v) <= tol; });
  return r;
}

DecompCoeffs decompose(const CircleWeight& c, double tol) {
  // Full-circle projections expressed through the half-circle moments:
  // int c cos = m1 - m2, int c sin = m3 - m4, int c |cos| = m1 + m2, int c s = m3 + m4.
  const Moments mo = moment_conditions(c, 0.0, tol);
  const auto& m = mo.m;
  DecompCoeffs d;
  d.alpha = 0.5 * (m[0] - m[1]);
  d.beta = 0.5 * (m[2] - m[3]);
  d.gamma = (m[0] + m[1]) / kPi;
  d.eta = (m[2] + m[3]) / kPi;
  return d;
}

double eval_l1_norm(const CircleWeight& c, double tol) {
  if (!c.has_structured() && !c.has_extra()) return 0.0;
  if (!c.has_extra()) {
    auto p = [&](double z) { return d2_or_zero(c.sym, z) + d2_or_zero(c.anti, z); };
    auto m = [&](double z) { return d2_or_zero(c.sym, z) - d2_or_zero(c.anti, z); };
    std::vector<double> roots;
    const auto sup = c.z_support();
    for (const auto& g : {std::function<double(double)>(p), std::function<double(double)>(m)}) {
      std::vector<double> r;
      if (sup) {
        r = sign_changes(g, -*sup, *sup, 1024);
      } else {
        r = sign_changes([&](double t) { return g(std::tan(t)); }, -kPi / 2, kPi / 2, 1024);
        for (double& t : r) t = std::tan(t);
      }
      roots.insert(roots.end(), r.begin(), r.end());
    }
    auto h = [&](double z) { return 0.5 * (std::abs(p(z)) + std::abs(m(z))) * std::sqrt(1.0 + z * z); };
    return integrate_z(h, c, roots, tol);
  }
  auto h = [&](double phi) { return std::abs(c(phi)); };
  std::vector<double> at = circle_kinks(c);
  const auto r = sign_changes([&](double phi) { return c(phi); }, 0.0, kTwoPi, 4096);
  at.insert(at.end(), r.begin(), r.end());
  at.push_back(kPi);
  return integrate_phi(h, 0.0, kTwoPi, at, tol);
}

std::function<double(double)> reconstruct_weight_from_f(const Scalar1D& f) {
  return [d2 = f.d2](double phi) {
    const double c = std::cos(phi);
    if (c == 0.0) return 0.0;
    const double z = -std::sin(phi) / c;
    return d2(z) * std::pow(1.0 + z * z, 1.5);
  };
}

void write_weight_csv(std::ostream& out, const CircleWeight& c, std::size_t n) {
  out << "phi,c\n";
  char buf[96];
  for (std::size_t j = 0; j < n; ++j) {
    const double phi = kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", phi, c(phi));
    out << buf;
  }
}

DecompositionReport decomposition_report(const CircleWeight& c, double moment_tol) {
  DecompositionReport r;
  r.moments = moment_conditions(c, moment_tol);
  const auto& m = r.moments.m;
  r.coeffs.alpha = 0.5 * (m[0] - m[1]);
  r.coeffs.beta = 0.5 * (m[2] - m[3]);
  r.coeffs.gamma = (m[0] + m[1]) / kPi;
  r.coeffs.eta = (m[2] + m[3]) / kPi;
  r.l1_norm = eval_l1_norm(c);
  return r;
}

void write_report(std::ostream& out, const DecompositionReport& r) {
  char buf[128];
  auto kv = [&](const char* k, double v) {
    std::snprintf(buf, sizeof buf, "%s=%.17g\n", k, v);
    out << buf;
  };
  kv("alpha", r.coeffs.alpha);
  kv("beta", r.coeffs.beta);
  kv("gamma", r.coeffs.gamma);
  kv("eta", r.coeffs.eta);
  kv("moment1", r.moments.m[0]);
  kv("moment2", r.moments.m[1]);
  kv("moment3", r.moments.m[2]);
  kv("moment4", r.moments.m[3]);
  out << "moments_vanish=" << (r.moments.vanish ? "true" : "false") << "\n";
  kv("l1_norm", r.l1_norm);
}

}  // namespace ridgenet
