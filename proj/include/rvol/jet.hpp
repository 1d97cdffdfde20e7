#pragma once

// Multivariate truncated Taylor polynomials ("jets").
//
// A Jet stores the Taylor coefficients c_alpha of a function about a base
// point, for all multi-indices |alpha| <= order, in graded order. Arithmetic
// and elementary functions propagate exact derivatives, so metric components
// written as ordinary expressions yield exact partial derivatives to the
// requested order.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rvol {

class JetSpace {
 public:
  struct ProductTerm {
    std::uint32_t a;
    std::uint32_t b;
    std::uint32_t out;
  };
  struct DerivativeTerm {
    std::uint32_t from;
    std::uint32_t to;
    double factor;
  };

  // Spaces are interned and live for the lifetime of the program.
  static const JetSpace& get(int nvars, int order);

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  std::size_t size() const { return degree_of_.size(); }
  // Number of monomials of total degree <= d.
  std::size_t size_upto(int d) const;
  int degree(std::size_t idx) const { return degree_of_[idx]; }
  std::span<const int> exponents(std::size_t idx) const;
  std::size_t index(std::span<const int> alpha) const;
  std::size_t unit(int var) const { return unit_[static_cast<std::size_t>(var)]; }

  // All (a, b) with deg a + deg b <= max_degree, grouped by total degree.
  std::span<const ProductTerm> products(int max_degree) const;
  std::span<const DerivativeTerm> derivative_terms(int var) const;

 private:
  JetSpace(int nvars, int order);

  int nvars_;
  int order_;
  std::vector<int> exponents_;  // size() * nvars, row-major
  std::vector<int> degree_of_;
  std::vector<std::size_t> degree_start_;
  std::vector<std::size_t> lookup_;  // dense base-(order+1) encoding
  std::vector<std::size_t> unit_;
  std::vector<ProductTerm> products_;
  std::vector<std::size_t> products_upto_;
  std::vector<std::vector<DerivativeTerm>> derivatives_;
};

class Jet {
 public:
  Jet(const JetSpace& space, double constant);

  static Jet variable(const JetSpace& space, int var, double value);

  const JetSpace& space() const { return *space_; }
  // Truncation order actually carried; derivatives lower it by one.
  int order() const { return order_; }
  double value() const { return c_[0]; }
  std::span<const double> coefficients() const { return c_; }
  double coefficient(std::size_t idx) const { return c_[idx]; }
  // Partial derivative d^alpha f at the base point (alpha! * c_alpha).
  double derivative(std::span<const int> alpha) const;
  // First partial derivative d_var f at the base point.
  double gradient(int var) const;

  Jet partial(int var) const;
  Jet truncated(int order) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(const Jet& o);
  Jet& operator+=(double s);
  Jet& operator-=(double s);
  Jet& operator*=(double s);
  Jet& operator/=(double s);
  Jet operator-() const;

  // Product truncated to min(order, a.order(), b.order()).
  static Jet product(const Jet& a, const Jet& b, int order);

 private:
  Jet(const JetSpace& space, int order, std::vector<double> c)
      : space_(&space), order_(order), c_(std::move(c)) {}

  // f(x0 + h) = sum_k taylor[k] h^k, with taylor[k] = f^(k)(x0) / k!.
  friend Jet compose(const Jet& x, std::span<const double> taylor);

  const JetSpace* space_;
  int order_;
  std::vector<double> c_;
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator+(Jet a, double s);
Jet operator+(double s, Jet a);
Jet operator-(Jet a, double s);
Jet operator-(double s, const Jet& a);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);
Jet operator/(Jet a, double s);
Jet operator/(double s, const Jet& a);

Jet compose(const Jet& x, std::span<const double> taylor);
Jet sin(const Jet& x);
Jet cos(const Jet& x);
Jet sinh(const Jet& x);
Jet cosh(const Jet& x);
Jet exp(const Jet& x);
Jet log(const Jet& x);
Jet sqrt(const Jet& x);
Jet pow(const Jet& x, double p);
Jet pow(const Jet& x, int p);
Jet reciprocal(const Jet& x);

}  // namespace rvol
