#include "ridgenet/jet.hpp"

#include <algorithm>
#include <cmath>

#include "ridgenet/error.hpp"

namespace ridgenet {

namespace {

// Coefficients of du/dt: (u')_j = (j+1) u_{j+1}, truncated at order-1.
Jet derivative_series(const Jet& u) {
  Jet d(std::max(u.order() - 1, 0));
  for (int j = 0; j < u.order(); ++j) d[j] = (j + 1) * u[j + 1];
  return d;
}

}  // namespace

double factorial(int k) noexcept {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

Jet::Jet(int order) : order_(std::clamp(order, 0, kMaxJetOrder)) {}

Jet Jet::constant(double value, int order) {
  Jet j(order);
  j.c_[0] = value;
  return j;
}

Jet Jet::variable(double x0, double v, int order) {
  Jet j(order);
  j.c_[0] = x0;
  if (j.order_ >= 1) j.c_[1] = v;
  return j;
}

double Jet::derivative(int k) const noexcept { return c_[k] * factorial(k); }

Jet& Jet::operator+=(const Jet& o) noexcept {
  order_ = std::min(order_, o.order_);
  for (int k = 0; k <= order_; ++k) c_[k] += o.c_[k];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) noexcept {
  order_ = std::min(order_, o.order_);
  for (int k = 0; k <= order_; ++k) c_[k] -= o.c_[k];
  return *this;
}

Jet& Jet::operator*=(double s) noexcept {
  for (int k = 0; k <= order_; ++k) c_[k] *= s;
  return *this;
}

Jet operator+(Jet a, const Jet& b) noexcept { return a += b; }
Jet operator-(Jet a, const Jet& b) noexcept { return a -= b; }
Jet operator-(Jet a) noexcept { return a *= -1.0; }
Jet operator*(Jet a, double s) noexcept { return a *= s; }
Jet operator*(double s, Jet a) noexcept { return a *= s; }

Jet operator*(const Jet& a, const Jet& b) noexcept {
  const int n = std::min(a.order(), b.order());
  Jet w = Jet(n);
  for (int k = 0; k <= n; ++k) {
    double s = 0.0;
    for (int j = 0; j <= k; ++j) s += a[j] * b[k - j];
    w[k] = s;
  }
  return w;
}

Jet operator/(const Jet& a, const Jet& b) {
  if (b[0] == 0.0) throw DomainError("division by a quantity that vanishes");
  const int n = std::min(a.order(), b.order());
  Jet w = Jet(n);
  for (int k = 0; k <= n; ++k) {
    double s = a[k];
    for (int j = 1; j <= k; ++j) s -= b[j] * w[k - j];
    w[k] = s / b[0];
  }
  return w;
}

Jet exp(const Jet& u) noexcept {
  Jet w = Jet(u.order());
  w[0] = std::exp(u[0]);
  for (int k = 1; k <= u.order(); ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * u[j] * w[k - j];
    w[k] = s / k;
  }
  return w;
}

namespace {

void sin_cos(const Jet& u, Jet& s, Jet& c) {
  s = Jet(u.order());
  c = Jet(u.order());
  s[0] = std::sin(u[0]);
  c[0] = std::cos(u[0]);
  for (int k = 1; k <= u.order(); ++k) {
    double ss = 0.0;
    double cc = 0.0;
    for (int j = 1; j <= k; ++j) {
      ss += j * u[j] * c[k - j];
      cc += j * u[j] * s[k - j];
    }
    s[k] = ss / k;
    c[k] = -cc / k;
  }
}

}  // namespace

Jet sin(const Jet& u) noexcept {
  Jet s, c;
  sin_cos(u, s, c);
  return s;
}

Jet cos(const Jet& u) noexcept {
  Jet s, c;
  sin_cos(u, s, c);
  return c;
}

Jet atan(const Jet& u) noexcept {
  Jet w = Jet(u.order());
  w[0] = std::atan(u[0]);
  if (u.order() == 0) return w;
  // w' = u' / (1 + u^2)
  Jet q = u * u;
  q[0] += 1.0;
  Jet trimmed(u.order() - 1);
  for (int j = 0; j < u.order(); ++j) trimmed[j] = q[j];
  Jet p = derivative_series(u) / trimmed;
  for (int k = 1; k <= u.order(); ++k) w[k] = p[k - 1] / k;
  return w;
}

Jet sqrt(const Jet& u) {
  if (u[0] < 0.0) throw DomainError("sqrt of a negative quantity");
  Jet w = Jet(u.order());
  w[0] = std::sqrt(u[0]);
  if (u.order() == 0) return w;
  if (u[0] == 0.0) throw DomainError("sqrt is not differentiable at 0");
  for (int k = 1; k <= u.order(); ++k) {
    double s = u[k];
    for (int j = 1; j < k; ++j) s -= w[j] * w[k - j];
    w[k] = s / (2.0 * w[0]);
  }
  return w;
}

Jet abs(const Jet& u) {
  if (u[0] > 0.0) return u;
  if (u[0] < 0.0) return -u;
  if (u.order() == 0) return u;
  throw DomainError("abs is not differentiable at 0");
}

Jet pow(const Jet& u, int n) {
  if (n < 0) {
    if (u[0] == 0.0) throw DomainError("negative power of a quantity that vanishes");
    return Jet::constant(1.0, u.order()) / pow(u, -n);
  }
  Jet result = Jet::constant(1.0, u.order());
  Jet base = u;
  unsigned e = static_cast<unsigned>(n);
  while (e != 0) {
    if (e & 1u) result = result * base;
    e >>= 1u;
    if (e != 0) base = base * base;
  }
  return result;
}

}  // namespace ridgenet
