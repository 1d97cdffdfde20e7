#include <cmath>
#include <numbers>

#include "doctest.h"
#include "rvol/errors.hpp"
#include "rvol/flow.hpp"
#include "rvol/variation.hpp"

using namespace rvol;

namespace {

const double two_pi = 2.0 * std::numbers::pi;

ScalarField cos_x(double amp) {
  return ScalarField([amp](std::span<const Jet> x) { return cos(x[0] * two_pi) * amp; });
}

bool variance_monotone(const FlowReport& r) {
  for (std::size_t i = 1; i < r.history.size(); ++i)
    if (r.history[i].variance > r.history[i - 1].variance) return false;
  return true;
}

}  // namespace

TEST_CASE("flat torus is a fixed point") {
  auto t3 = ModelMetric::flat_torus({1.0, 1.0, 1.0});
  auto r = run_flow(t3, 1, ScalarField::constant(0.0));
  CHECK(r.converged);
  CHECK(r.accepted == 0);
  CHECK(r.final_constant == doctest::Approx(0.0));
}

TEST_CASE("collocation v_k agrees with the direct formulas") {
  ScalarField w([](std::span<const Jet> x) {
    return cos(x[0] * two_pi) * 0.05 + sin(x[1] * two_pi) * cos(x[2] * two_pi) * 0.03;
  });
  FlowOptions opt;
  opt.grid = 16;
  auto t3 = ModelMetric::flat_torus({1.0, 1.0, 1.0});
  for (int k = 1; k <= 2; ++k) {
    CAPTURE(k);
    if (2 * k == 3) continue;
    auto s = flow_initial(t3, k, w, opt);
    auto g = flow_metric(s);
    const Vector wn = s.omega_nodes();
    for (std::size_t j : {0ul, 137ul, 2049ul, 4095ul}) {
      const long i0 = static_cast<long>(j) / 256, i1 = (static_cast<long>(j) / 16) % 16, i2 = static_cast<long>(j) % 16;
      const Point p{i0 / 16.0, i1 / 16.0, i2 / 16.0};
      CHECK(s.vk(static_cast<Eigen::Index>(j)) == doctest::Approx(vk_at(g, p, k)).epsilon(1e-10));
      CHECK(wn(static_cast<Eigen::Index>(j)) == doctest::Approx(w.value(p)).epsilon(1e-12));
    }
  }
  // v_3 in dimension 5.
  opt.grid = 8;
  auto t5 = ModelMetric::flat_torus({1.0, 1.0, 1.0, 1.0, 1.0});
  auto s = flow_initial(t5, 3, w, opt);
  auto g = flow_metric(s);
  const Point p{0.125, 0.25, 0.5, 0.0, 0.375};
  const std::size_t j = 1 * 4096 + 2 * 512 + 4 * 64 + 0 * 8 + 3;
  CHECK(s.vk(static_cast<Eigen::Index>(j)) == doctest::Approx(vk_at(g, p, 3)).epsilon(1e-9));
}

TEST_CASE("perturbed flat torus converges") {
  auto t3 = ModelMetric::flat_torus({1.0, 1.0, 1.0});
  FlowOptions opt;
  opt.tol = 1e-6;
  auto r = run_flow(t3, 1, cos_x(0.05), opt);
  REQUIRE(r.converged);
  CHECK(r.accepted <= 10000);
  CHECK(r.max_volume_drift < 1e-8);
  CHECK(std::abs(r.final_constant) < 1e-6);
  CHECK(variance_monotone(r));
  REQUIRE(r.history.size() > 51);
  for (std::size_t i = 1; i <= 50; ++i) CHECK(r.history[i].variance < r.history[i - 1].variance);
  CHECK_NOTHROW(require_critical(std::span<const double>(r.final_state.vk.data(), static_cast<std::size_t>(r.final_state.vk.size())), opt.tol));
  CHECK_NOTHROW(require_critical(flow_metric(r.final_state), 1, opt.tol));
  CHECK_NOTHROW(require_converged(r));
}

TEST_CASE("round S^3 with a degree-2 perturbation") {
  auto s3 = ModelMetric::round_sphere(3, 1.0);
  ScalarField w([](std::span<const Jet> x) { return (cos(x[0]) * cos(x[0]) - 0.25) * 0.02; });
  FlowOptions opt;
  opt.sphere_lmax = 4;
  auto r = run_flow(s3, 1, w, opt);
  CHECK(r.converged);
  CHECK(r.max_volume_drift < 1e-8);
  CHECK(r.final_constant == doctest::Approx(1.5).epsilon(1e-4));
  CHECK(variance_monotone(r));
}

TEST_CASE("large perturbations stay monotone") {
  auto t3 = ModelMetric::flat_torus({1.0, 1.0, 1.0});
  FlowOptions opt;
  opt.max_steps = 300;
  auto r = run_flow(t3, 1, cos_x(1.0), opt);
  CHECK(variance_monotone(r));
  if (!r.converged) {
    CHECK(r.diagnostic.has_value());
    CHECK_THROWS_AS(require_converged(r), Error);
  }
}

TEST_CASE("flow preconditions") {
  auto t4 = ModelMetric::flat_torus({1.0, 1.0, 1.0, 1.0});
  CHECK_THROWS_AS(flow_initial(t4, 3, cos_x(0.1)), Error);
  CHECK_THROWS_AS(flow_initial(t4, 2, cos_x(0.1)), Error);
  CHECK_THROWS_AS(flow_initial(t4, 4, cos_x(0.1)), Error);
  CHECK_THROWS_AS(flow_initial(ModelMetric::product_of_spheres({{2, 1.0}, {2, 1.0}}), 1, cos_x(0.1)), Error);
  auto s = flow_initial(ModelMetric::flat_torus({1.0, 1.0, 1.0}), 1, cos_x(0.05));
  CHECK_THROWS_AS(flow_step(s, 0.0), Error);
  // An oversized step raises the variance.
  CHECK_THROWS_AS(flow_step(s, 1.0), Error);
}
