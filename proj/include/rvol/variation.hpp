#pragma once

// First and second conformal variations of the volume-coefficient
// functionals F_k and of the renormalized volume, along g_t = e^{2t w} g.

#include <optional>
#include <string>
#include <string_view>

#include "rvol/model.hpp"
#include "rvol/quadrature.hpp"
#include "rvol/series.hpp"
#include "rvol/spectral.hpp"

namespace rvol {

enum class Definiteness {
  PositiveDefinite,
  NegativeDefinite,
  PositiveSemidefinite,
  NegativeSemidefinite,
  Indefinite,
  Zero,
};
std::string_view to_string(Definiteness d);

struct Classification {
  Definiteness kind = Definiteness::Zero;
  int nullity = 0;
  bool operator==(const Classification&) const = default;
};
std::string to_string(const Classification& c);

// Eigenvalues below rel * max|eig| count as null.
Classification classify_eigenvalues(const Vector& eig, double rel = 1e-8);

// Expected second-variation sign of F_k on unit-volume Einstein metrics.
// round_sphere selects the semi-definite case with nullity n+1.
Classification classify_sign_Fk(int n, int k, int sign_R, bool round_sphere = false);
// Same for the renormalized volume, n even.
Classification classify_sign_V(int n, int sign_R, bool round_sphere = false);

// Laplacian of f at p with respect to the model metric.
double laplacian(const ModelMetric& m, const ScalarField& f, const Point& p);

// v_k at p (series for Einstein models, direct formulas otherwise).
double vk_at(const ModelMetric& m, const Point& p, int k);

// delta v_k = div(L_(k) grad w) - 2k v_k w at p.
double delta_vk(const ModelMetric& m, const ScalarField& w, int k, const Point& p);
// d/dt (-2)^k v^(2k)(e^{2tw} g) at p by central differences with one
// Richardson step (h and h/2); k <= 3.
double delta_vk_fd(const ModelMetric& m, const ScalarField& w, int k, const Point& p, double h = 1e-2);

double functional_Fk(const ModelMetric& m, int k, const IntegrationOptions& opt = {});
// (n - 2k) int v_k w dv
double first_variation_Fk(const ModelMetric& m, int k, const ScalarField& w,
                          const IntegrationOptions& opt = {});
// Richardson-extrapolated central differences of functional_Fk along e^{2tw} g.
double first_variation_Fk_fd(const ModelMetric& m, int k, const ScalarField& w, double h = 1e-2,
                             const IntegrationOptions& opt = {});

// sup |v_k - mean| over sample points; NotCritical above tol.
double criticality_defect(const ModelMetric& m, int k, int samples = 16, std::uint64_t seed = 0x5eed);
void require_critical(const ModelMetric& m, int k, double tol = 1e-8);
void require_critical(std::span<const double> vk_values, double tol = 1e-8);

struct HessianForm {
  std::string functional;  // "F_k" or "V"
  int n = 0;
  int k = 0;
  Matrix H;
  Vector eigenvalues;
  Classification classification;
  double symmetry_residual = 0.0;
  // Against c (diag(lambda) - R/(n-1)) with the Einstein prefactor c.
  double closed_form_residual = 0.0;
  double prefactor = 0.0;
  double scalar_curvature = 0.0;
  // Positive factor turning raw eigenvalues into those of the unit-volume metric.
  double volume_scale = 1.0;
};

HessianForm hessian_Fk(const ModelMetric& m, int k, const SpectralBasis& basis);
HessianForm hessian_V(const ModelMetric& m, const SpectralBasis& basis);

// The same quadratic form assembled entry by entry on a product grid with
// L_(k) and v_k evaluated at every node. Cost grows like nodes^n * size^2.
Matrix hessian_pointwise(const ModelMetric& m, int k, const SpectralBasis& basis, int nodes,
                         bool renormalized_volume = false);

// If L_(k) is definite and v_k a nonzero constant of the same sign, the sign
// of the Hessian it forces (n != 2k).
std::optional<Definiteness> definiteness_criterion(const LTensor& L, double vk, int n, int k);

struct ObataReport {
  double lambda1 = 0.0;
  double bound = 0.0;  // R / (n - 1)
  bool holds = false;
  bool equality = false;
};
ObataReport obata_check(const SpectralBasis& basis, double R);

}  // namespace rvol
