#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace ridgenet {

inline constexpr int kMaxJetOrder = 8;

/// Truncated Taylor series t -> sum_k c_k t^k, k = 0..order.
///
/// Storage is inline so jets can live on the stack in tight quadrature
/// loops. All arithmetic truncates at the smaller of the operand orders.
class Jet {
 public:
  Jet() = default;
  explicit Jet(int order);

  static Jet constant(double value, int order);
  /// The jet of t -> x0 + t * v.
  static Jet variable(double x0, double v, int order);

  int order() const noexcept { return order_; }
  double operator[](std::size_t k) const noexcept { return c_[k]; }
  double& operator[](std::size_t k) noexcept { return c_[k]; }
  std::span<const double> coefficients() const noexcept {
    return {c_.data(), static_cast<std::size_t>(order_) + 1};
  }
  /// k-th derivative at t = 0, i.e. k! * c_k.
  double derivative(int k) const noexcept;
  double value() const noexcept { return c_[0]; }

  Jet& operator+=(const Jet& o) noexcept;
  Jet& operator-=(const Jet& o) noexcept;
  Jet& operator*=(double s) noexcept;

 private:
  std::array<double, kMaxJetOrder + 1> c_{};
  int order_ = 0;
};

Jet operator+(Jet a, const Jet& b) noexcept;
Jet operator-(Jet a, const Jet& b) noexcept;
Jet operator-(Jet a) noexcept;
Jet operator*(Jet a, double s) noexcept;
Jet operator*(double s, Jet a) noexcept;
Jet operator*(const Jet& a, const Jet& b) noexcept;
/// Throws DomainError when b(0) == 0.
Jet operator/(const Jet& a, const Jet& b);

Jet exp(const Jet& u) noexcept;
Jet sin(const Jet& u) noexcept;
Jet cos(const Jet& u) noexcept;
Jet atan(const Jet& u) noexcept;
/// Throws DomainError for u(0) < 0, or u(0) == 0 with order >= 1.
Jet sqrt(const Jet& u);
/// Throws DomainError for u(0) == 0 with order >= 1.
Jet abs(const Jet& u);
/// Integer power; negative exponents require u(0) != 0.
Jet pow(const Jet& u, int n);

double factorial(int k) noexcept;

}  // namespace ridgenet
