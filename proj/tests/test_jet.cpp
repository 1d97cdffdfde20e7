#include <cmath>

#include "doctest.h"
#include "rvol/jet.hpp"

using namespace rvol;

TEST_CASE("univariate derivatives of elementary functions") {
  const JetSpace& s = JetSpace::get(1, 4);
  const double x0 = 0.7;
  Jet x = Jet::variable(s, 0, x0);
  Jet f = sin(x) * exp(x);
  // d^k/dx^k (e^x sin x) = 2^{k/2} e^x sin(x + k pi/4)
  for (int k = 0; k <= 4; ++k) {
    const int a[1] = {k};
    const double expect = std::pow(2.0, 0.5 * k) * std::exp(x0) * std::sin(x0 + k * M_PI / 4);
    CHECK(f.derivative(a) == doctest::Approx(expect).epsilon(1e-13));
  }
  Jet r = reciprocal(x);
  const int a3[1] = {3};
  CHECK(r.derivative(a3) == doctest::Approx(-6.0 / std::pow(x0, 4)).epsilon(1e-13));
  Jet l = log(x);
  CHECK(l.derivative(a3) == doctest::Approx(2.0 / std::pow(x0, 3)).epsilon(1e-13));
  Jet q = sqrt(x);
  const int a2[1] = {2};
  CHECK(q.derivative(a2) == doctest::Approx(-0.25 * std::pow(x0, -1.5)).epsilon(1e-13));
}

TEST_CASE("multivariate mixed partials") {
  const JetSpace& s = JetSpace::get(3, 4);
  Jet x = Jet::variable(s, 0, 0.3);
  Jet y = Jet::variable(s, 1, -0.2);
  Jet z = Jet::variable(s, 2, 1.1);
  Jet f = x * x * y * z + cos(y * z);
  // d_x d_x d_y d_z (x^2 y z) = 2
  const int a[3] = {2, 1, 1};
  CHECK(f.derivative(a) == doctest::Approx(2.0).epsilon(1e-13));
  // d_y d_z cos(yz) = -sin(yz) - yz cos(yz)
  const int b[3] = {0, 1, 1};
  const double yz = -0.22;
  CHECK(f.derivative(b) ==
        doctest::Approx(2 * 0.3 * 0.3 * 0 + 0.09 - std::sin(yz) - yz * std::cos(yz)).epsilon(1e-13));
}

TEST_CASE("partial lowers order and matches derivative") {
  const JetSpace& s = JetSpace::get(2, 3);
  Jet x = Jet::variable(s, 0, 0.5);
  Jet y = Jet::variable(s, 1, 0.25);
  Jet f = exp(x * y);
  Jet fx = f.partial(0);
  CHECK(fx.order() == 2);
  const int a[2] = {1, 1};
  const int b[2] = {2, 1};
  CHECK(fx.derivative(a) == doctest::Approx(f.derivative(b)).epsilon(1e-13));
  CHECK_THROWS(fx.derivative(std::span<const int>(b)));
}

TEST_CASE("products truncate consistently") {
  const JetSpace& s = JetSpace::get(2, 2);
  Jet x = Jet::variable(s, 0, 0.0);
  Jet y = Jet::variable(s, 1, 0.0);
  Jet f = x * y * x;
  const int a[2] = {1, 1};
  CHECK(f.derivative(a) == 0.0);
  CHECK(f.value() == 0.0);
}
