#include "rvol/series.hpp"

#include <cmath>
#include <sstream>

#include "rvol/errors.hpp"

namespace rvol {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

void check_general_range(int n, int k) {
  if (n % 2 == 0 && 2 * k > n) {
    fail(ErrorKind::InvalidRange,
         "v_k for k > n/2 is not determined by g alone when n is even (n = " + std::to_string(n) +
             ", k = " + std::to_string(k) + ")");
  }
}

MetricSeries einstein_series(const Matrix& g, double a, int K) {
  const int n = static_cast<int>(g.rows());
  if (K < 0) K = default_truncation(n);
  MetricSeries s;
  s.n = n;
  s.K = K;
  s.einstein = true;
  s.a = a;
  for (int l = 0; l <= K; ++l) s.coeffs.push_back(binomial(2, l) * std::pow(a, l) * g);
  return s;
}

MetricSeries einstein_series(const ModelMetric& m, const Point& p, int K) {
  auto a = m.einstein_constant();
  if (!a) fail(ErrorKind::NotEinstein, m.label() + " is not tagged Einstein");
  return einstein_series(m.metric(p), *a, K);
}

MetricSeries general_series(const ModelMetric& m, const Point& p, int K) {
  if (K > 1) {
    fail(ErrorKind::GeneralFGUnavailable,
         "only the first-order coefficient g_1 = 2P is available for non-Einstein metrics");
  }
  if (K < 0) K = 1;
  if (m.dim() < 3) fail(ErrorKind::DimensionTooSmall, "general series needs n >= 3");
  const CurvaturePack pk = curvature_pack(m, p, {.bach = false});
  MetricSeries s;
  s.n = m.dim();
  s.K = K;
  s.coeffs.push_back(pk.g);
  if (K >= 1) s.coeffs.push_back(2.0 * pk.schouten);
  return s;
}

MetricSeries series_for(const ModelMetric& m, const Point& p, int K) {
  if (m.einstein_constant()) return einstein_series(m, p, K);
  return general_series(m, p, K);
}

std::vector<Matrix> inverse_series(const MetricSeries& s) {
  const Matrix g0inv = s.base().inverse();
  std::vector<Matrix> h;
  h.push_back(g0inv);
  for (int m = 1; m <= s.K; ++m) {
    Matrix acc = Matrix::Zero(s.n, s.n);
    for (int l = 1; l <= m; ++l) acc += s.coeffs[static_cast<std::size_t>(l)] * h[static_cast<std::size_t>(m - l)];
    h.push_back(-g0inv * acc);
  }
  for (auto& hm : h) hm = 0.5 * (hm + hm.transpose()).eval();
  return h;
}

double VolumeCoefficients::v_2k(int k) const {
  return v[static_cast<std::size_t>(k)] / std::pow(-2.0, k);
}

VolumeCoefficients vk_from_series(const MetricSeries& s, int kmax) {
  if (kmax < 0) kmax = s.K;
  if (kmax > s.K) {
    std::ostringstream os;
    os << "v_" << kmax << " requested from a series truncated at order " << s.K;
    fail(ErrorKind::TruncationTooShort, os.str());
  }
  const auto h = inverse_series(s);
  const auto K = static_cast<std::size_t>(kmax);
  // d/drho log det g(rho) = tr(g^{-1} g') = sum_m t[m] rho^m
  std::vector<long double> t(K + 1, 0.0L);
  for (std::size_t m = 0; m < K; ++m) {
    long double acc = 0.0L;
    for (std::size_t j = 0; j <= m; ++j) {
      const std::size_t l = m - j + 1;  // g' has coefficient l g_l at rho^{l-1}
      acc += static_cast<long double>(l) * (h[j].cwiseProduct(s.coeffs[l].transpose())).sum();
    }
    t[m] = acc;
  }
  // y = (1/2) log(det g(rho)/det g) = sum_{m>=1} t[m-1]/(2m) rho^m
  std::vector<long double> y(K + 1, 0.0L);
  for (std::size_t m = 1; m <= K; ++m) y[m] = t[m - 1] / (2.0L * static_cast<long double>(m));
  // v = exp(y), the square root of the determinant ratio:
  // k v_k = sum_{j=1}^k j y_j v_{k-j}
  std::vector<long double> v(K + 1, 0.0L);
  v[0] = 1.0L;
  for (std::size_t k = 1; k <= K; ++k) {
    long double acc = 0.0L;
    for (std::size_t j = 1; j <= k; ++j) acc += static_cast<long double>(j) * y[j] * v[k - j];
    v[k] = acc / static_cast<long double>(k);
  }
  VolumeCoefficients out;
  out.v.assign(v.begin(), v.end());
  return out;
}

std::vector<Matrix> L_generating_series(const MetricSeries& s) {
  const auto h = inverse_series(s);
  const auto v = vk_from_series(s).v;
  const auto K = static_cast<std::size_t>(s.K);
  // I(rho) = int_0^rho h(u) du
  std::vector<Matrix> I(K + 1, Matrix::Zero(s.n, s.n));
  for (std::size_t m = 1; m <= K; ++m) I[m] = h[m - 1] / static_cast<double>(m);
  std::vector<Matrix> out(K + 1, Matrix::Zero(s.n, s.n));
  for (std::size_t k = 0; k <= K; ++k)
    for (std::size_t j = 0; j <= k; ++j) out[k] += v[k - j] * I[j];
  return out;
}

LTensor L_tensor(const MetricSeries& s, int k) {
  if (k < 1) fail(ErrorKind::KOutOfRange, "L_(k) needs k >= 1");
  if (k > s.K) {
    fail(ErrorKind::TruncationTooShort,
         "L_(" + std::to_string(k) + ") needs truncation order >= k, have " + std::to_string(s.K));
  }
  // -(1/k!) d^k/drho^k [v(rho) int_0^rho g^{-1}], read off as a coefficient.
  const Matrix by_product = -L_generating_series(s)[static_cast<std::size_t>(k)];

  // -sum_{l=1}^k (1/l!) v_{k-l} d^{l-1}/drho^{l-1} g^{-1}|_0
  const auto h = inverse_series(s);
  const auto v = vk_from_series(s, k).v;
  Matrix by_sum = Matrix::Zero(s.n, s.n);
  double l_fact = 1.0;
  for (int l = 1; l <= k; ++l) {
    l_fact *= l;
    const double deriv_fact = l_fact / l;  // (l-1)!
    by_sum -= (v[static_cast<std::size_t>(k - l)] / l_fact) * (deriv_fact * h[static_cast<std::size_t>(l - 1)]);
  }
  LTensor L;
  L.k = k;
  L.upper = 0.5 * (by_sum + by_sum.transpose());
  const double scale = std::max(1.0, by_sum.cwiseAbs().maxCoeff());
  L.mismatch = (by_product - by_sum).cwiseAbs().maxCoeff() / scale;
  if (!(L.mismatch <= 1e-12)) {
    std::ostringstream os;
    os << "the two expressions for L_(" << k << ") differ by " << L.mismatch;
    fail(ErrorKind::ExpressionMismatch, os.str());
  }
  return L;
}

double v_direct(const CurvaturePack& pk, int k) {
  const int n = static_cast<int>(pk.g.rows());
  switch (k) {
    case 0:
      return 1.0;
    case 1:
      return -pk.scalar / (4.0 * (n - 1));
    case 2:
      if (n < 3) fail(ErrorKind::DimensionTooSmall, "v^(4) needs n >= 3");
      return 0.25 * sigma_k(pk.schouten, pk.g, 2);
    case 3: {
      if (n < 3) fail(ErrorKind::DimensionTooSmall, "v^(6) needs n >= 3");
      if (n == 4) fail(ErrorKind::DimensionFour, "the v^(6) formula is singular at n = 4");
      if (!pk.bach) fail(ErrorKind::DerivativeOrderUnavailable, "v^(6) needs the Bach tensor");
      const Matrix Pup = pk.g_inv * pk.schouten * pk.g_inv;
      const double pb = Pup.cwiseProduct(*pk.bach).sum();
      return -0.125 * (sigma_k(pk.schouten, pk.g, 3) + pb / (3.0 * (n - 4)));
    }
    default:
      fail(ErrorKind::KOutOfRange, "direct formulas exist for k <= 3 only");
  }
}

double v_direct(const ModelMetric& m, const Point& p, int k) {
  if (k == 0) return 1.0;
  if (k == 3 && m.dim() == 4) fail(ErrorKind::DimensionFour, "the v^(6) formula is singular at n = 4");
  return v_direct(curvature_pack(m, p, {.bach = (k == 3)}), k);
}

}  // namespace rvol
