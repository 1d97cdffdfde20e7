#pragma once

// Power series in rho of symmetric 2-tensors at a point, and the volume
// coefficients and L-tensors they determine.

#include <vector>

#include "rvol/curvature.hpp"
#include "rvol/model.hpp"
#include "rvol/tensor.hpp"

namespace rvol {

struct MetricSeries {
  int n = 0;
  int K = 0;                    // truncation order: coefficients 0..K
  std::vector<Matrix> coeffs;   // coeffs[0] is the base metric
  bool einstein = false;
  double a = 0.0;               // Einstein constant when einstein
  const Matrix& base() const { return coeffs.front(); }
};

constexpr int default_truncation(int n) { return 2 * n + 2; }

// g(rho) = (1 + a rho)^2 g. K < 0 selects default_truncation(n).
MetricSeries einstein_series(const Matrix& g, double a, int K = -1);
// Uses the model's Einstein constant at point p; NotEinstein otherwise.
MetricSeries einstein_series(const ModelMetric& m, const Point& p, int K = -1);
// Non-Einstein metrics: only [g, 2P] is available; K > 1 raises
// GeneralFGUnavailable.
MetricSeries general_series(const ModelMetric& m, const Point& p, int K = 1);
// einstein_series for Einstein models, general_series otherwise.
MetricSeries series_for(const ModelMetric& m, const Point& p, int K);

// Contravariant coefficients h_l of g(rho)^{-1}.
std::vector<Matrix> inverse_series(const MetricSeries& s);

// Coefficients of (det g(rho) / det g)^{1/2} = sum v_k rho^k.
struct VolumeCoefficients {
  std::vector<double> v;   // v_0..v_kmax
  // v^(2k) = v_k / (-2)^k
  double v_2k(int k) const;
};

// kmax < 0 selects s.K. TruncationTooShort if kmax > s.K.
VolumeCoefficients vk_from_series(const MetricSeries& s, int kmax = -1);

struct LTensor {
  int k = 0;
  Matrix upper;            // L^{ij}_{(k)}
  double mismatch = 0.0;   // between the two defining expressions
};

// Coefficients of v(rho) * int_0^rho g^{-1}(u) du through order K.
std::vector<Matrix> L_generating_series(const MetricSeries& s);
LTensor L_tensor(const MetricSeries& s, int k);

// v^(2k), k in {0, 1, 2, 3}, from the curvature at a point.
double v_direct(const CurvaturePack& pk, int k);
double v_direct(const ModelMetric& m, const Point& p, int k);

// Raises InvalidRange for k > n/2 on even n for non-Einstein metrics.
void check_general_range(int n, int k);

double binomial(int n, int k);

}  // namespace rvol
