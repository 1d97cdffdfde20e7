#pragma once

// Model Riemannian metrics in explicit charts.
//
// Every model exposes its metric components as functions of jet-valued
// coordinates, so curvature of any order up to the jet truncation is exact.
// Structured kinds additionally carry closed-form curvature (see
// curvature.hpp) and closed-form volumes.

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rvol/jet.hpp"
#include "rvol/tensor.hpp"

namespace rvol {

// A smooth function of chart coordinates, written over jets.
class ScalarField {
 public:
  using Fn = std::function<Jet(std::span<const Jet>)>;

  ScalarField();
  explicit ScalarField(Fn fn, bool radial = false, std::string label = {});

  static ScalarField constant(double c);

  Jet operator()(std::span<const Jet> x) const { return fn_(x); }
  double value(std::span<const double> p) const;
  // True when the field depends on coordinate 0 only.
  bool radial() const { return radial_; }
  const std::string& label() const { return label_; }

  ScalarField scaled(double s) const;
  friend ScalarField operator+(const ScalarField& a, const ScalarField& b);

 private:
  Fn fn_;
  bool radial_ = false;
  std::string label_;
};

// Warp function f(r) of a radial warped product dr^2 + f(r)^2 h.
class WarpFunction {
 public:
  using Fn = std::function<Jet(const Jet&)>;

  static WarpFunction polynomial(std::vector<double> coefficients);
  // sinh(kappa r) / kappa, the hyperbolic warp with sectional curvature -kappa^2.
  static WarpFunction sinh_profile(double kappa);
  static WarpFunction custom(Fn fn, std::string label);

  Jet operator()(const Jet& r) const { return fn_(r); }
  double value(double r) const;
  // d^k f / dr^k at r.
  double derivative(double r, int k) const;
  const std::optional<std::vector<double>>& polynomial_coefficients() const { return poly_; }
  const std::string& label() const { return label_; }

 private:
  WarpFunction(Fn fn, std::optional<std::vector<double>> poly, std::string label)
      : fn_(std::move(fn)), poly_(std::move(poly)), label_(std::move(label)) {}

  Fn fn_;
  std::optional<std::vector<double>> poly_;
  std::string label_;
};

struct CoordinateRange {
  double lo;
  double hi;
  bool periodic;
  // Fraction of the interval kept away from each end when sampling points.
  double margin;
};

using ChartEvaluator = std::function<JetMatrix(std::span<const Jet>)>;

struct ModelKind;

// Immutable, cheaply copyable handle to a model metric.
class ModelMetric {
 public:
  static ModelMetric round_sphere(int n, double radius);
  static ModelMetric flat_torus(std::vector<double> periods);
  static ModelMetric product_of_spheres(std::vector<std::pair<int, double>> factors);
  static ModelMetric warped_radial(WarpFunction warp, ModelMetric fiber, double r_min, double r_max);
  static ModelMetric chart(int n, ChartEvaluator eval, std::vector<CoordinateRange> domain,
                           int max_order, std::string label);
  static ModelMetric conformal(ModelMetric base, ScalarField omega);
  // Tags `base` as Einstein with Ric = 2a(n-1)g; verified at sample points.
  static ModelMetric einstein(ModelMetric base, double a);

  // Round sphere of the given radius, tagged Einstein with a = 1/(2 radius^2).
  static ModelMetric einstein_sphere(int n, double radius);
  // Geodesic ball of radius ball_radius in hyperbolic space of curvature
  // -kappa^2, in polar coordinates, tagged Einstein with a = -kappa^2/2.
  static ModelMetric hyperbolic_ball(int n, double kappa, double ball_radius);
  // Product of round spheres with radii chosen so that Ric = 2a(n-1)g.
  static ModelMetric einstein_sphere_product(std::vector<int> dims, double a);
  // Einstein model with constant a: a round sphere for a > 0, a hyperbolic
  // ball for a < 0, a flat torus for a = 0.
  static ModelMetric einstein_with_constant(int n, double a);

  int dim() const;
  const ModelKind& kind() const;
  std::string label() const;

  JetMatrix metric_jet(std::span<const Jet> x) const;
  Matrix metric(std::span<const double> p) const;
  std::vector<CoordinateRange> domain() const;
  Point sample_point(std::mt19937_64& rng) const;
  // Highest derivative order of the metric components the chart supplies.
  int max_derivative_order() const;

  std::optional<double> einstein_constant() const;
  // Closed-form total volume where available.
  std::optional<double> closed_form_volume() const;
  // True for models known to be locally conformally flat.
  bool conformally_flat() const;

 private:
  explicit ModelMetric(std::shared_ptr<const ModelKind> kind) : kind_(std::move(kind)) {}
  std::shared_ptr<const ModelKind> kind_;
};

struct RoundSphere {
  int n;
  double radius;
};

struct FlatTorus {
  std::vector<double> periods;
};

struct ProductOfSpheres {
  std::vector<std::pair<int, double>> factors;  // (dimension, radius)
};

struct WarpedRadial {
  WarpFunction warp;
  ModelMetric fiber;
  double r_min;
  double r_max;
};

struct ChartMetric {
  int n;
  ChartEvaluator eval;
  std::vector<CoordinateRange> domain;
  int max_order;
  std::string label;
};

struct ConformalDeformation {
  ModelMetric base;
  ScalarField omega;
};

struct EinsteinModel {
  ModelMetric base;
  double a;
};

struct ModelKind : std::variant<RoundSphere, FlatTorus, ProductOfSpheres, WarpedRadial, ChartMetric,
                                ConformalDeformation, EinsteinModel> {
  using variant::variant;
};

// Strips EinsteinModel tags.
const ModelMetric& underlying_geometry(const ModelMetric& m);

double sphere_volume(int n, double radius);

}  // namespace rvol
