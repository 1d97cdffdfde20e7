#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "rvol/curvature.hpp"
#include "rvol/errors.hpp"

using namespace rvol;

namespace {

ModelMetric sphere_as_chart(int n, double c) {
  ChartEvaluator eval = [n, c](std::span<const Jet> x) {
    JetMatrix g(n, Jet(x[0].space(), 0.0));
    Jet w(x[0].space(), c * c);
    for (int j = 0; j < n; ++j) {
      g(j, j) = w;
      if (j + 1 < n) {
        Jet s = sin(x[static_cast<std::size_t>(j)]);
        w = w * s * s;
      }
    }
    return g;
  };
  std::vector<CoordinateRange> dom;
  for (int j = 0; j + 1 < n; ++j) dom.push_back({0.0, std::numbers::pi, false, 0.11});
  dom.push_back({0.0, 2 * std::numbers::pi, true, 0.0});
  return ModelMetric::chart(n, eval, dom, 4, "sphere-chart");
}

// Flat metric written in skewed linear coordinates.
ModelMetric skew_flat_chart(int n) {
  ChartEvaluator eval = [n](std::span<const Jet> x) {
    JetMatrix g(n, Jet(x[0].space(), 0.0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = Jet(x[0].space(), i == j ? 2.0 : 0.3);
    return g;
  };
  return ModelMetric::chart(n, eval, std::vector<CoordinateRange>(static_cast<std::size_t>(n), {0, 1, true, 0}), 4,
                            "skew-flat");
}

double max_diff(const Tensor4& a, const Tensor4& b) {
  const int n = a.dim();
  double m = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) m = std::max(m, std::abs(a(i, j, k, l) - b(i, j, k, l)));
  return m;
}

void check_fast_vs_chart(const ModelMetric& m, int samples, bool bach) {
  std::mt19937_64 rng(42);
  for (int s = 0; s < samples; ++s) {
    const Point p = m.sample_point(rng);
    const auto fast = curvature_pack(m, p, {.bach = bach});
    const auto chart = curvature_pack(m, p, {.bach = bach, .path = CurvaturePath::Chart});
    REQUIRE(fast.fast_path);
    REQUIRE_FALSE(chart.fast_path);
    const double scale = std::max(1.0, fast.riemann.max_abs());
    CHECK(max_diff(fast.riemann, chart.riemann) / scale < 1e-9);
    CHECK((fast.schouten - chart.schouten).cwiseAbs().maxCoeff() / scale < 1e-9);
    CHECK(max_diff(fast.weyl, chart.weyl) / scale < 1e-9);
    if (bach) CHECK((*fast.bach - *chart.bach).cwiseAbs().maxCoeff() / scale < 1e-9);
  }
}

}  // namespace

TEST_CASE("flat torus has zero curvature") {
  auto t = ModelMetric::flat_torus({1.0, 2.0, 3.0});
  auto pk = curvature_pack(t, {0.1, 0.2, 0.3});
  CHECK(pk.riemann.max_abs() == 0.0);
  CHECK(pk.scalar == 0.0);
  CHECK(pk.schouten.cwiseAbs().maxCoeff() == 0.0);
  auto swb = schouten_weyl_bach(skew_flat_chart(3), {0.1, 0.2, 0.3});
  CHECK(swb.schouten.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(swb.weyl.max_abs() < 1e-14);
  CHECK(swb.bach.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("unit S^4 has R = 12, Ric = 3g via the chart path") {
  auto m = sphere_as_chart(4, 1.0);
  const Point p{0.9, 1.2, 2.0, 0.4};
  auto pk = curvature_pack(m, p);
  CHECK(pk.scalar == doctest::Approx(12.0).epsilon(1e-12));
  CHECK((pk.ricci - 3.0 * pk.g).cwiseAbs().maxCoeff() < 1e-11);
  CHECK((pk.schouten - 0.5 * pk.g).cwiseAbs().maxCoeff() < 1e-11);
  CHECK(pk.weyl.max_abs() < 1e-11);
  CHECK(pk.bach->cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("warped radial curvature at r = 0") {
  auto m = ModelMetric::warped_radial(WarpFunction::polynomial({1.0, 0.0, -0.25}),
                                      ModelMetric::round_sphere(3, 1.0), 0.0, 2.0);
  const Point p{0.0, 1.0, 1.3, 0.2};
  for (auto path : {CurvaturePath::Auto, CurvaturePath::Chart}) {
    auto pk = curvature_pack(m, p, {.bach = false, .path = path});
    // Sectional curvature of the (r, theta_1) plane.
    const double K = pk.riemann(0, 1, 0, 1) / (pk.g(0, 0) * pk.g(1, 1));
    CHECK(K == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("closed-form paths agree with the chart path") {
  check_fast_vs_chart(ModelMetric::round_sphere(5, 1.3), 5, true);
  check_fast_vs_chart(ModelMetric::flat_torus({1.0, 1.0, 1.0}), 3, true);
  check_fast_vs_chart(ModelMetric::product_of_spheres({{2, 1.0}, {3, std::sqrt(2.0)}}), 5, true);
  check_fast_vs_chart(ModelMetric::product_of_spheres({{2, 1.0}, {2, 1.0}}), 5, true);
  check_fast_vs_chart(ModelMetric::product_of_spheres({{2, 1.0}, {3, 1.0}}), 5, true);
  check_fast_vs_chart(ModelMetric::hyperbolic_ball(4, 1.0, 1.5), 5, true);
  check_fast_vs_chart(ModelMetric::warped_radial(WarpFunction::polynomial({1.0, 0.0, -0.25}),
                                                 ModelMetric::round_sphere(4, 1.0), 0.0, 1.9),
                      5, true);
  check_fast_vs_chart(ModelMetric::einstein_sphere_product({2, 3}, 0.5), 3, true);
}

TEST_CASE("sphere-as-chart matches the structured sphere") {
  auto chart = sphere_as_chart(5, 1.0);
  auto fast = ModelMetric::round_sphere(5, 1.0);
  std::mt19937_64 rng(7);
  for (int s = 0; s < 5; ++s) {
    const Point p = fast.sample_point(rng);
    auto a = curvature_pack(chart, p);
    auto b = curvature_pack(fast, p);
    CHECK(max_diff(a.riemann, b.riemann) < 1e-9);
    CHECK((*a.bach - *b.bach).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("non-Einstein product S^2 x S^3 has nonzero Weyl and Bach") {
  auto m = ModelMetric::product_of_spheres({{2, 1.0}, {3, 1.0}});
  auto pk = curvature_pack(m, {1.0, 0.5, 1.1, 1.4, 0.3});
  CHECK(pk.weyl.max_abs() > 0.1);
  CHECK(pk.bach->cwiseAbs().maxCoeff() > 0.01);
}

TEST_CASE("Riemann symmetries and Weyl trace-freeness at 200 random points") {
  std::vector<ModelMetric> models{
      ModelMetric::round_sphere(4, 1.0),
      ModelMetric::product_of_spheres({{2, 1.0}, {2, 0.7}}),
      ModelMetric::hyperbolic_ball(5, 1.0, 1.0),
      ModelMetric::conformal(ModelMetric::flat_torus({1.0, 1.0, 1.0}),
                             ScalarField([](std::span<const Jet> x) {
                               return sin(x[0] * (2 * std::numbers::pi)) * 0.1 +
                                      cos(x[1] * (2 * std::numbers::pi)) * x[2] * 0.05;
                             })),
  };
  for (const auto& m : models) {
    std::mt19937_64 rng(123);
    double worst = 0.0;
    for (int s = 0; s < 200; ++s) {
      const Point p = m.sample_point(rng);
      auto fast = curvature_pack(m, p, {.bach = false});
      auto chart = curvature_pack(m, p, {.bach = false, .path = CurvaturePath::Chart});
      worst = std::max({worst, pack_residuals(fast).max(), pack_residuals(chart).max()});
    }
    CAPTURE(m.label());
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("Einstein models have P = a g") {
  for (double a : {-1.0, -0.5, 0.5, 2.0}) {
    auto m = ModelMetric::einstein_with_constant(5, a);
    std::mt19937_64 rng(3);
    const Point p = m.sample_point(rng);
    for (auto path : {CurvaturePath::Auto, CurvaturePath::Chart}) {
      auto pk = curvature_pack(m, p, {.bach = true, .path = path});
      CHECK((pk.schouten - a * pk.g).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(pk.bach->cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("unit spheres: P = g/2, W = 0, B = 0 for n = 3..8") {
  for (int n = 3; n <= 8; ++n) {
    auto m = ModelMetric::round_sphere(n, 1.0);
    std::mt19937_64 rng(static_cast<unsigned>(n));
    const Point p = m.sample_point(rng);
    auto swb = schouten_weyl_bach(m, p);
    CHECK((swb.schouten - 0.5 * m.metric(p)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(swb.weyl.max_abs() < 1e-12);
    CHECK(swb.bach.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sigma_k") {
  Matrix g = Matrix::Identity(3, 3);
  Matrix P = Matrix::Zero(3, 3);
  P.diagonal() << 1.0, 2.0, 3.0;
  CHECK(sigma_k(P, g, 2) == doctest::Approx(11.0).epsilon(1e-14));
  CHECK(sigma_k(P, g, 3) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(sigma_k(P, g, 0) == 1.0);
  CHECK_THROWS_AS(sigma_k(P, g, 4), Error);
  CHECK_THROWS_AS(sigma_k(P, g, -1), Error);
  // P = a g with a non-identity metric
  Matrix h(3, 3);
  h << 2.0, 0.3, 0.1, 0.3, 1.5, 0.2, 0.1, 0.2, 1.0;
  for (int k = 0; k <= 3; ++k) {
    const double binom[4] = {1, 3, 3, 1};
    CHECK(sigma_k(0.7 * h, h, k) == doctest::Approx(binom[k] * std::pow(0.7, k)).epsilon(1e-13));
  }
}

TEST_CASE("scaling laws under g -> c^2 g") {
  auto base = ModelMetric::product_of_spheres({{2, 1.0}, {3, 1.4}});
  const Point p{0.8, 0.3, 1.2, 1.9, 0.6};
  auto pk1 = curvature_pack(base, p);
  for (double c : {0.5, 2.0}) {
    auto scaled = ModelMetric::product_of_spheres({{2, c}, {3, 1.4 * c}});
    auto pk = curvature_pack(scaled, p);
    CHECK(pk.scalar == doctest::Approx(pk1.scalar / (c * c)).epsilon(1e-12));
    CHECK((pk.schouten - pk1.schouten).cwiseAbs().maxCoeff() < 1e-12);
    for (int k = 0; k <= 5; ++k)
      CHECK(sigma_k(pk.schouten, pk.g, k) ==
            doctest::Approx(sigma_k(pk1.schouten, pk1.g, k) / std::pow(c, 2 * k)).epsilon(1e-11));
  }
}

TEST_CASE("errors") {
  auto m = ModelMetric::chart(
      2,
      [](std::span<const Jet> x) {
        JetMatrix g(2, Jet(x[0].space(), 0.0));
        g(0, 0) = Jet(x[0].space(), 1.0);
        g(1, 1) = x[0] * x[0] - 1.0;
        return g;
      },
      {{0, 1, false, 0}, {0, 1, false, 0}}, 2, "bad");
  try {
    curvature_pack(m, {0.5, 0.5}, {.bach = false});
    FAIL("expected NonPositiveDefinite");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveDefinite);
  }
  try {
    curvature_pack(m, {0.5, 0.5}, {.bach = true});
    FAIL("expected DerivativeOrderUnavailable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DerivativeOrderUnavailable);
  }
  try {
    schouten_weyl_bach(ModelMetric::round_sphere(2, 1.0), {1.0, 1.0});
    FAIL("expected DimensionTooSmall");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionTooSmall);
  }
  try {
    ModelMetric::einstein(ModelMetric::product_of_spheres({{2, 1.0}, {2, 2.0}}), 0.5);
    FAIL("expected NotEinstein");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotEinstein);
  }
}
