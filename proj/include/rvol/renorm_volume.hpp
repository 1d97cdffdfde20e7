#pragma once

// Volume expansion of g_+ = r^{-2}(dr^2 + f(r)^2 g) near r = 0, the
// renormalized volume, and bulk formulas on compactifications.

#include <optional>
#include <vector>

#include "rvol/model.hpp"
#include "rvol/quadrature.hpp"

namespace rvol {

// Normal form with g_r = f(r)^2 g, f(0) = 1 and f even through order n.
struct AHNormalForm {
  int n;
  ModelMetric boundary;
  WarpFunction warp;
  double r_max;

  // Validates f(0) = 1 and the vanishing of odd derivatives below order n.
  static AHNormalForm warped(ModelMetric boundary, WarpFunction f, double r_max);
  // Einstein boundary with constant a: f = 1 - a r^2 / 2. For a > 0 the
  // default r_max is the collapse point sqrt(2/a).
  static AHNormalForm poincare_einstein(ModelMetric boundary, std::optional<double> r_max = {});
  // Hyperbolic space H^{n+1} over the unit sphere, r in (0, 2].
  static AHNormalForm hyperbolic(int n);
};

double truncated_volume(const AHNormalForm& a, double eps);

struct VolumeExpansion {
  int n = 0;
  std::vector<double> c;                 // c[k] = c_{2k}, 2k < n
  std::optional<double> log_coefficient;  // L, n even (or when fitted)
  double constant_term = 0.0;
  std::optional<double> V;               // odd n only
  bool analytic = false;
  double residual = 0.0;   // max relative misfit of the expansion at the sample radii
  double condition = 1.0;  // of the column-scaled fit matrix (1 on the analytic path)
};

struct FitOptions {
  double eps0 = 0.0;        // 0 selects r_max / 2
  double span = 8.0;        // eps0 / smallest eps
  int extra_points = 16;
  int correction_terms = 0;  // o(1) monomials added to the fit; 0 selects n + 1
  bool log_column = false;   // include log(1/eps) for odd n as well
  double max_condition = 1e13;
};

// Analytic term extraction when f is a polynomial; otherwise a fit.
VolumeExpansion extract_expansion(const AHNormalForm& a);
VolumeExpansion fit_expansion(const AHNormalForm& a, const FitOptions& opt = {});

// int_M v^(2k)(g) dv_g on the boundary.
double boundary_vk_integral(const AHNormalForm& a, int k);
// Max relative deviation of c_{2k} from (1/(n-2k)) int v^(2k), over the k with
// direct formulas (k <= 3), and of L from int v^(n) when present.
double coefficient_identity_residual(const AHNormalForm& a, const VolumeExpansion& e);

// dr^2 + f(r)^2 g on [0, r_max] x M.
ModelMetric geodesic_compactification(const AHNormalForm& a);
// Shape operator of {x_0 = p[0]} for the outward normal -grad x_0, as an
// endomorphism of the tangent space in chart coordinates x_1..x_{d-1}.
Matrix shape_operator(const ModelMetric& compact, const Point& p);
// Max |shape operator| over sample boundary points at x_0 = r_min.
double boundary_shape_defect(const ModelMetric& compact);

// C_{n+1} = 2^{n-1}(n+1)((n-1)/2)!^2 / n!
double geodcomp_constant(int n);
// C_{n+1} int_X v^(n+1)(gb) dv_gb; n odd, 3 or 5.
double renorm_volume_geodcomp(const ModelMetric& compact, int n);

// int_X h dv for models symmetric under the fiber: warped products and
// their conformal rescalings by radial factors.
double radial_integral(const ModelMetric& m, const std::function<double(const Point&)>& h,
                       double rel_tol = 1e-12, double abs_tol = 0.0);
// int |W|^2 dv and int v^(4) dv in dimension 4.
double weyl_norm_integral(const ModelMetric& m);
double v4_integral(const ModelMetric& m);

enum class GaussBonnetMode { AHE, Compact };
// AHE: |8 pi^2 chi - (W/4 + 6 V)|; Compact: |8 pi^2 chi - (W/4 + 16 value)|,
// with value = int v^(4) over a closed manifold or one with totally
// geodesic boundary.
double gauss_bonnet_4d(double value, double weyl_integral, int chi, GaussBonnetMode mode);
// Compact mode computed from a 4-dimensional model.
double gauss_bonnet_4d(const ModelMetric& m, int chi);

}  // namespace rvol
