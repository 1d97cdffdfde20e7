#pragma once

// Truncated bases of Laplace eigenfunctions (or Dirichlet Ritz functions on
// geodesic balls), with assembled mass and stiffness matrices.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rvol/model.hpp"
#include "rvol/tensor.hpp"

namespace rvol {

// Diagonal metric h_c = kappa_c * prod_i u_i(x_i)^{E[c][i]} in the model chart.
struct SeparableMetric {
  int n = 0;
  std::vector<double> kappa;
  std::vector<std::vector<int>> E;
  std::vector<std::function<Jet(const Jet&)>> u;  // empty function means u = 1
  std::vector<CoordinateRange> domain;
};

std::optional<SeparableMetric> separable_form(const ModelMetric& m);

struct Factor1D {
  int coord = 0;
  std::string key;
  std::function<Jet(const Jet&)> fn;
};

// coef * prod_c factor[c](x_c)
struct SeparableTerm {
  double coef = 1.0;
  std::vector<int> factors;  // ids into SpectralBasis::factors(), one per coordinate
};

struct BasisFunction {
  double eigenvalue = 0.0;  // of -Delta; a Ritz value on balls
  int degree = 0;
  std::string label;
  std::vector<SeparableTerm> terms;
};

struct SpectralOptions {
  int lmax = 8;
  int shell_cap = 64;
  int radial_profiles = 4;     // geodesic balls
  int torus_max_mode = 4;
  std::size_t max_functions = 1024;
  int quadrature_nodes = 64;
};

class SpectralBasis {
 public:
  SpectralBasis(ModelMetric model, SeparableMetric metric, std::vector<Factor1D> factors,
                std::vector<BasisFunction> functions, bool exact, int quadrature_nodes);

  const ModelMetric& model() const { return model_; }
  const SeparableMetric& metric() const { return metric_; }
  std::size_t size() const { return functions_.size(); }
  const BasisFunction& function(std::size_t i) const { return functions_[i]; }
  const std::vector<BasisFunction>& functions() const { return functions_; }
  const std::vector<Factor1D>& factors() const { return factors_; }
  // True when members are exact eigenfunctions of -Delta.
  bool exact_eigenfunctions() const { return exact_; }

  Vector eigenvalues() const;
  // int w_a w_b dv and int <grad w_a, grad w_b> dv
  const Matrix& mass() const { return mass_; }
  const Matrix& stiffness() const { return stiffness_; }
  // int w_a dv
  const Vector& means() const { return means_; }
  double gram_residual() const;

  Jet jet(std::size_t i, std::span<const Jet> x) const;
  double value(std::size_t i, const Point& p) const;
  ScalarField field(std::size_t i) const;
  // Field for sum_i c_i w_i.
  ScalarField combination(const Vector& c) const;

 private:
  void assemble(int nodes);

  ModelMetric model_;
  SeparableMetric metric_;
  std::vector<Factor1D> factors_;
  std::vector<BasisFunction> functions_;
  bool exact_;
  Matrix mass_;
  Matrix stiffness_;
  Vector means_;
};

SpectralBasis spectral_basis(const ModelMetric& m, const SpectralOptions& opt = {});

// Gegenbauer polynomial C^{(alpha)}_k at x.
Jet gegenbauer(int k, double alpha, const Jet& x);
double gegenbauer(int k, double alpha, double x);

// Number of spherical harmonics of degree l on S^n.
long harmonic_dimension(int n, int l);

}  // namespace rvol
