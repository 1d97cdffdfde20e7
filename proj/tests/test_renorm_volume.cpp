#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rvol/errors.hpp"
#include "rvol/renorm_volume.hpp"

using namespace rvol;

namespace {
const double pi = std::numbers::pi;
}

TEST_CASE("truncated volume of H^4") {
  auto h4 = AHNormalForm::hyperbolic(3);
  // Antiderivative of r^{-4}(1 - r^2/4)^3 = r^{-4} - (3/4) r^{-2} + 3/16 - r^2/64.
  auto F = [](double r) { return -1.0 / (3 * r * r * r) + 0.75 / r + 3.0 * r / 16 - r * r * r / 192; };
  CHECK(truncated_volume(h4, 0.1) == doctest::Approx(2 * pi * pi * (F(2.0) - F(0.1))).epsilon(1e-14));
  CHECK(truncated_volume(h4, 2.0) == 0.0);
  CHECK_THROWS_AS(truncated_volume(h4, 2.5), Error);
  CHECK_THROWS_AS(truncated_volume(h4, 0.0), Error);
  // Flat boundary toy: pure c_0 term.
  auto flat = AHNormalForm::warped(ModelMetric::flat_torus({1.0, 1.0, 1.0}), WarpFunction::polynomial({1.0}), 1.5);
  CHECK(truncated_volume(flat, 0.2) == doctest::Approx((std::pow(0.2, -3) - std::pow(1.5, -3)) / 3).epsilon(1e-14));
}

TEST_CASE("analytic expansion and coefficient identities") {
  auto h4 = AHNormalForm::hyperbolic(3);
  auto e = extract_expansion(h4);
  REQUIRE(e.V);
  CHECK(*e.V == doctest::Approx(4 * pi * pi / 3).epsilon(1e-14));
  CHECK(e.c[0] == doctest::Approx(2 * pi * pi / 3).epsilon(1e-14));
  CHECK(!e.log_coefficient);
  CHECK(e.residual < 1e-12);
  CHECK(coefficient_identity_residual(h4, e) < 1e-12);
  for (int n : {4, 5, 6, 7}) {
    CAPTURE(n);
    auto a = AHNormalForm::hyperbolic(n);
    auto ex = extract_expansion(a);
    CHECK(coefficient_identity_residual(a, ex) < 1e-10);
    CHECK(ex.V.has_value() == (n % 2 == 1));
    CHECK(ex.log_coefficient.has_value() == (n % 2 == 0));
  }
  // L vanishes for spheres: int v^(n) = a^{n/2} C(n, n/2)(-1/2)^{n/2} Vol... is nonzero; check against formula.
  auto h5 = AHNormalForm::hyperbolic(4);
  auto e5 = extract_expansion(h5);
  CHECK(*e5.log_coefficient == doctest::Approx(boundary_vk_integral(h5, 2)).epsilon(1e-12));
}

TEST_CASE("fit path recovers the analytic expansion") {
  auto h4 = AHNormalForm::hyperbolic(3);
  FitOptions opt;
  opt.log_column = true;
  auto f = fit_expansion(h4, opt);
  REQUIRE(f.log_coefficient);
  CHECK(std::abs(*f.log_coefficient) < 1e-8);
  CHECK(*f.V == doctest::Approx(4 * pi * pi / 3).epsilon(1e-9));
  CHECK(coefficient_identity_residual(h4, f) < 1e-8);
  // Non-polynomial warp: same family written through a custom jet function.
  auto custom = AHNormalForm::warped(ModelMetric::einstein_sphere(3, 1.0),
                                     WarpFunction::custom([](const Jet& r) { return 1.0 - r * r * 0.25; }, "1-r^2/4"), 2.0);
  auto g = extract_expansion(custom);
  CHECK(!g.analytic);
  CHECK(*g.V == doctest::Approx(4 * pi * pi / 3).epsilon(1e-8));
  CHECK_THROWS_AS(AHNormalForm::warped(ModelMetric::einstein_sphere(3, 1.0), WarpFunction::polynomial({1.0, 0.1}), 1.0),
                  Error);
}

TEST_CASE("geodesic compactification and shape operators") {
  auto h4 = AHNormalForm::hyperbolic(3);
  auto X = geodesic_compactification(h4);
  CHECK(X.dim() == 4);
  CHECK(boundary_shape_defect(X) < 1e-10);
  // Flat ball: dr^2 + (1 - r)^2 g_{S^3} has shape operator identity at r = 0.
  auto ball = ModelMetric::warped_radial(WarpFunction::polynomial({1.0, -1.0}), ModelMetric::round_sphere(3, 1.0), 0.0, 1.0);
  const Matrix S = shape_operator(ball, {0.0, 1.0, 1.2, 0.5});
  CHECK((S - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(boundary_shape_defect(ball) == doctest::Approx(1.0));
  CHECK_THROWS_AS(renorm_volume_geodcomp(ball, 3), Error);
}

TEST_CASE("bulk formula for the renormalized volume") {
  CHECK(geodcomp_constant(3) == doctest::Approx(8.0 / 3));
  CHECK(geodcomp_constant(5) == doctest::Approx(16.0 / 5));
  auto h4 = AHNormalForm::hyperbolic(3);
  auto X = geodesic_compactification(h4);
  CHECK(v4_integral(X) == doctest::Approx(pi * pi / 2).epsilon(1e-10));
  CHECK(renorm_volume_geodcomp(X, 3) == doctest::Approx(*extract_expansion(h4).V).epsilon(1e-9));
  // Totally geodesic rescaling e^{2w} with w = O(r^2).
  for (double c : {0.3, -0.2}) {
    ScalarField w(
        [c](std::span<const Jet> x) {
          Jet u = x[0] * (4.0 - x[0]) * 0.25;
          return u * u * c;
        },
        true, "w");
    auto Y = ModelMetric::conformal(X, w);
    CHECK(boundary_shape_defect(Y) < 1e-10);
    CHECK(renorm_volume_geodcomp(Y, 3) == doctest::Approx(4 * pi * pi / 3).epsilon(1e-8));
  }
  auto h6 = AHNormalForm::hyperbolic(5);
  CHECK(renorm_volume_geodcomp(geodesic_compactification(h6), 5) ==
        doctest::Approx(*extract_expansion(h6).V).epsilon(1e-8));
  CHECK_THROWS_AS(renorm_volume_geodcomp(X, 4), Error);
  CHECK_THROWS_AS(renorm_volume_geodcomp(geodesic_compactification(AHNormalForm::hyperbolic(7)), 7), Error);
}

TEST_CASE("Gauss-Bonnet identities") {
  CHECK(gauss_bonnet_4d(4 * pi * pi / 3, 0.0, 1, GaussBonnetMode::AHE) < 1e-12);
  CHECK(gauss_bonnet_4d(0.0, 0.0, 2, GaussBonnetMode::Compact) == doctest::Approx(16 * pi * pi));
  CHECK(gauss_bonnet_4d(ModelMetric::round_sphere(4, 1.0), 2) < 1e-8);
  auto X = geodesic_compactification(AHNormalForm::hyperbolic(3));
  CHECK(weyl_norm_integral(X) < 1e-10);
  CHECK(gauss_bonnet_4d(X, 1) < 1e-8);
  CHECK_THROWS_AS(gauss_bonnet_4d(ModelMetric::round_sphere(3, 1.0), 2), Error);
}
