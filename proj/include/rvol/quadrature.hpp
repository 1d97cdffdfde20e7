#pragma once

#include <functional>
#include <vector>

#include "rvol/model.hpp"

namespace rvol {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// n-point Gauss-Legendre rule on [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);
// Uniform rule on a periodic interval [a, a + period).
QuadratureRule periodic_rule(int n, double a, double period);

// One-dimensional integral by adaptive Gauss-Kronrod. A single-panel L1
// estimate below abs_tol ends the refinement early.
double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double rel_tol = 1e-13, double abs_tol = 0.0);

struct IntegrationOptions {
  int initial_nodes = 8;      // per coordinate
  int radial_nodes = 64;
  double rel_tol = 1e-10;     // between successive doublings
  double abs_tol = 0.0;
  long max_points = 4'000'000;
};

using PointFunction = std::function<double(const Point&)>;

// Integral of f over the model with respect to dv_g on a product grid:
// Gauss-Legendre in bounded coordinates, uniform in periodic ones. The
// per-coordinate resolution doubles until successive estimates agree.
double integrate(const ModelMetric& m, const PointFunction& f, const IntegrationOptions& opt = {});
double integrate(const ModelMetric& m, const ScalarField& f, const IntegrationOptions& opt = {});

// Volume: closed form when known, otherwise integrate(1).
double volume(const ModelMetric& m);

// For a warped model dr^2 + f(r)^2 h and a function of r alone:
// Vol(h) * int h(r) f(r)^{n-1} dr.
double integrate_radial(const ModelMetric& warped, const std::function<double(double)>& h,
                        const IntegrationOptions& opt = {});

// Riemannian volume density sqrt(det g) at p.
double volume_density(const ModelMetric& m, const Point& p);

}  // namespace rvol
