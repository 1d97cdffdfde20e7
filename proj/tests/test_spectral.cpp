#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rvol/errors.hpp"
#include "rvol/quadrature.hpp"
#include "rvol/spectral.hpp"

using namespace rvol;

namespace {

void check_exact_basis(const SpectralBasis& b, double tol) {
  CHECK(b.gram_residual() < tol);
  CHECK(b.means().cwiseAbs().maxCoeff() < tol);
  const Matrix D = b.eigenvalues().asDiagonal();
  CHECK((b.stiffness() - D).cwiseAbs().maxCoeff() < tol * std::max(1.0, b.eigenvalues().maxCoeff()));
}

}  // namespace

TEST_CASE("Gegenbauer polynomials and harmonic dimensions") {
  // C^{(1)}_k(cos t) = sin((k+1)t)/sin t
  for (int k = 0; k < 9; ++k) {
    const double t = 0.7;
    CHECK(gegenbauer(k, 1.0, std::cos(t)) == doctest::Approx(std::sin((k + 1) * t) / std::sin(t)).epsilon(1e-13));
  }
  CHECK(harmonic_dimension(2, 3) == 7);
  CHECK(harmonic_dimension(3, 2) == 9);
  CHECK(harmonic_dimension(4, 1) == 5);
  CHECK(harmonic_dimension(1, 4) == 2);
}

TEST_CASE("sphere bases are orthonormal eigenfunctions") {
  for (auto [n, r] : {std::pair{2, 1.0}, std::pair{3, 1.3}, std::pair{4, 1.0}, std::pair{5, 0.8}}) {
    CAPTURE(n);
    SpectralOptions opt;
    opt.lmax = 4;
    auto b = spectral_basis(ModelMetric::einstein_sphere(n, r), opt);
    check_exact_basis(b, 1e-11);
    int deg1 = 0;
    for (const auto& f : b.functions()) deg1 += (f.degree == 1);
    CHECK(deg1 == n + 1);
    CHECK(b.function(0).eigenvalue == doctest::Approx(n / (r * r)));
    if (n <= 3) {
      long total = 0;
      for (int l = 1; l <= 4; ++l) total += harmonic_dimension(n, l);
      CHECK(static_cast<long>(b.size()) == total);
    }
  }
}

TEST_CASE("assembled mass matches generic quadrature on S^3") {
  auto s3 = ModelMetric::round_sphere(3, 1.0);
  SpectralOptions opt;
  opt.lmax = 2;
  auto b = spectral_basis(s3, opt);
  for (std::size_t i : {std::size_t{0}, std::size_t{3}, b.size() - 1}) {
    for (std::size_t j : {std::size_t{0}, std::size_t{3}, b.size() - 1}) {
      const double v = integrate(s3, PointFunction([&](const Point& p) { return b.value(i, p) * b.value(j, p); }));
      CHECK(v == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("product and torus bases") {
  SpectralOptions opt;
  opt.lmax = 3;
  auto p = spectral_basis(ModelMetric::product_of_spheres({{2, 1.0}, {3, 1.4}}), opt);
  check_exact_basis(p, 1e-11);
  auto t = spectral_basis(ModelMetric::flat_torus({1.0, 2.0}), SpectralOptions{.torus_max_mode = 3});
  check_exact_basis(t, 1e-11);
  CHECK(t.size() == 7 * 7 - 1);
  const double w = 2 * std::numbers::pi / 2.0;
  CHECK(t.function(0).eigenvalue == doctest::Approx(w * w));
}

TEST_CASE("hyperbolic ball Ritz bases") {
  for (int n : {2, 4}) {
    CAPTURE(n);
    auto ball = ModelMetric::hyperbolic_ball(n, 1.0, 1.0);
    SpectralOptions opt;
    opt.lmax = 2;
    auto b = spectral_basis(ball, opt);
    CHECK(!b.exact_eigenfunctions());
    CHECK(b.gram_residual() < 1e-10);
    CHECK(b.means().cwiseAbs().maxCoeff() < 1e-10);
    const Matrix D = b.eigenvalues().asDiagonal();
    CHECK((b.stiffness() - D).cwiseAbs().maxCoeff() < 1e-8 * b.eigenvalues().maxCoeff());
    // Ritz values bound the Dirichlet values from above; volume-normalized
    // functions on a unit ball satisfy lambda > (n-1)^2/4 for H^n.
    CHECK(b.eigenvalues().minCoeff() > (n - 1) * (n - 1) / 4.0);
  }
  CHECK_THROWS_AS(spectral_basis(ModelMetric::round_sphere(2, 1.0), SpectralOptions{.lmax = 0}), Error);
}
