#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rvol/errors.hpp"
#include "rvol/quadrature.hpp"

using namespace rvol;

TEST_CASE("Gauss-Legendre rules integrate polynomials exactly") {
  for (int n : {1, 2, 5, 16, 64}) {
    auto r = gauss_legendre(n, -1.0, 2.0);
    for (int deg = 0; deg < 2 * n; deg += 3) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], deg);
      const double exact = (std::pow(2.0, deg + 1) - std::pow(-1.0, deg + 1)) / (deg + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("volumes and integrals on structured models") {
  const double pi = std::numbers::pi;
  auto s3 = ModelMetric::round_sphere(3, 1.0);
  const double vol =
      integrate(s3, PointFunction([](const Point&) { return 1.0; }));
  CHECK(vol == doctest::Approx(2 * pi * pi).epsilon(1e-10));
  CHECK(volume(s3) == doctest::Approx(2 * pi * pi).epsilon(1e-14));

  auto t3 = ModelMetric::flat_torus({1.0, 1.0, 1.0});
  CHECK(integrate(t3, PointFunction([](const Point&) { return 1.0; })) ==
        doctest::Approx(1.0).epsilon(1e-12));

  // x_1 = cos(theta_1) on S^4 integrates to zero.
  auto s4 = ModelMetric::round_sphere(4, 1.0);
  const double odd = integrate(s4, PointFunction([](const Point& p) { return std::cos(p[0]); }));
  CHECK(std::abs(odd) < 1e-12);

  // int_{S^2} cos^2 theta = 4 pi / 3
  auto s2 = ModelMetric::round_sphere(2, 1.0);
  CHECK(integrate(s2, PointFunction([](const Point& p) { return std::cos(p[0]) * std::cos(p[0]); })) ==
        doctest::Approx(4 * pi / 3).epsilon(1e-10));

  // product S^2 x S^2 volume
  auto prod = ModelMetric::product_of_spheres({{2, 1.0}, {2, 1.0}});
  CHECK(integrate(prod, PointFunction([](const Point&) { return 1.0; })) ==
        doctest::Approx(16 * pi * pi).epsilon(1e-10));
}

TEST_CASE("radial integration on warped models") {
  const double pi = std::numbers::pi;
  auto h4 = ModelMetric::warped_radial(WarpFunction::polynomial({1.0, 0.0, -0.25}),
                                       ModelMetric::round_sphere(3, 1.0), 0.0, 2.0);
  // int_0^2 (1 - r^2/4)^3 dr = 32/35
  CHECK(volume(h4) == doctest::Approx(2 * pi * pi * 32.0 / 35.0).epsilon(1e-12));
  // hyperbolic ball of radius 1 in H^3: 4 pi int_0^1 sinh^2 = pi (sinh 2 - 2)
  auto ball = ModelMetric::hyperbolic_ball(3, 1.0, 1.0);
  CHECK(volume(ball) == doctest::Approx(pi * (std::sinh(2.0) - 2.0)).epsilon(1e-12));
  // product grid on the ball agrees with the radial path
  CHECK(integrate(ball, PointFunction([](const Point&) { return 1.0; })) ==
        doctest::Approx(pi * (std::sinh(2.0) - 2.0)).epsilon(1e-9));
  ScalarField radial([](std::span<const Jet> x) { return x[0] * x[0]; }, true, "r^2");
  CHECK(integrate(ball, radial) ==
        doctest::Approx(4 * pi * integrate_1d([](double r) { return r * r * std::sinh(r) * std::sinh(r); }, 0, 1))
            .epsilon(1e-12));
}

TEST_CASE("unresolvable integrands are reported") {
  auto t2 = ModelMetric::flat_torus({1.0, 1.0});
  IntegrationOptions opt;
  opt.max_points = 100000;
  auto rough = PointFunction([](const Point& p) { return std::abs(p[0] - 0.3137) < 0.01 ? 1.0 : 0.0; });
  CHECK_THROWS_AS(integrate(t2, rough, opt), Error);
}
