#include "rvol/renorm_volume.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rvol/curvature.hpp"
#include "rvol/errors.hpp"
#include "rvol/series.hpp"

namespace rvol {

AHNormalForm AHNormalForm::warped(ModelMetric boundary, WarpFunction f, double r_max) {
  const int n = boundary.dim();
  if (!(r_max > 0.0)) fail(ErrorKind::InvalidRange, "r_max must be positive");
  if (std::abs(f.value(0.0) - 1.0) > 1e-12) fail(ErrorKind::InvalidRange, "the warp must satisfy f(0) = 1");
  const int top = std::min(n, 15);
  for (int k = 1; k <= top; k += 2) {
    if (std::abs(f.derivative(0.0, k)) > 1e-12) {
      std::ostringstream os;
      os << "g_r must be even in r through order " << n << "; f^(" << k << ")(0) = " << f.derivative(0.0, k);
      fail(ErrorKind::InvalidRange, os.str());
    }
  }
  return AHNormalForm{n, std::move(boundary), std::move(f), r_max};
}

AHNormalForm AHNormalForm::poincare_einstein(ModelMetric boundary, std::optional<double> r_max) {
  const auto a = boundary.einstein_constant();
  if (!a) fail(ErrorKind::NotEinstein, "Poincare-Einstein normal form needs an Einstein boundary");
  double R = 0.0;
  if (r_max) R = *r_max;
  else if (*a > 0.0) R = std::sqrt(2.0 / *a);
  else fail(ErrorKind::InvalidRange, "r_max is required when a <= 0");
  if (*a > 0.0 && R > std::sqrt(2.0 / *a) * (1.0 + 1e-12))
    fail(ErrorKind::InvalidRange, "r_max beyond the collapse point");
  return warped(std::move(boundary), WarpFunction::polynomial({1.0, 0.0, -0.5 * *a}), R);
}

AHNormalForm AHNormalForm::hyperbolic(int n) {
  return poincare_einstein(ModelMetric::einstein_sphere(n, 1.0), 2.0);
}

namespace {

using boost::math::quadrature::gauss_kronrod;

// Coefficients of f(r)^n.
std::vector<long double> warp_power(const std::vector<double>& f, int n) {
  std::vector<long double> out{1.0L};
  for (int i = 0; i < n; ++i) {
    std::vector<long double> next(out.size() + f.size() - 1, 0.0L);
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t b = 0; b < f.size(); ++b) next[a + b] += out[a] * static_cast<long double>(f[b]);
    out = std::move(next);
  }
  return out;
}

void check_eps(const AHNormalForm& a, double eps) {
  if (!(eps > 0.0) || eps > a.r_max) {
    std::ostringstream os;
    os << "eps = " << eps << " outside (0, " << a.r_max << "]";
    fail(ErrorKind::EpsilonOutOfRange, os.str());
  }
}

// int_eps^R r^{-n-1} f^n dr by adaptive Gauss-Kronrod on dyadic pieces.
long double radial_quadrature(const AHNormalForm& a, long double eps) {
  const int n = a.n;
  auto integrand = [&](long double r) {
    return std::pow(r, -static_cast<long double>(n + 1)) *
           std::pow(static_cast<long double>(a.warp.value(static_cast<double>(r))), n);
  };
  long double total = 0.0L;
  long double lo = eps;
  const long double R = a.r_max;
  while (lo < R) {
    const long double hi = std::min(R, 2.0L * lo);
    long double err = 0.0L;
    total += gauss_kronrod<long double, 61>::integrate(integrand, lo, hi, 10, 1e-16L, &err);
    lo = hi;
  }
  return total;
}

using Quad = boost::multiprecision::cpp_bin_float_quad;

// Closed form in quad precision for polynomial warps; quadrature otherwise.
Quad truncated_quad(const AHNormalForm& a, const Quad& eps) {
  const Quad vol = static_cast<Quad>(volume(a.boundary));
  const auto& poly = a.warp.polynomial_coefficients();
  if (!poly) return vol * static_cast<Quad>(radial_quadrature(a, static_cast<long double>(eps)));
  std::vector<Quad> b{Quad(1)};
  for (int i = 0; i < a.n; ++i) {
    std::vector<Quad> next(b.size() + poly->size() - 1, Quad(0));
    for (std::size_t x = 0; x < b.size(); ++x)
      for (std::size_t y = 0; y < poly->size(); ++y) next[x + y] += b[x] * static_cast<Quad>((*poly)[y]);
    b = std::move(next);
  }
  const Quad R = static_cast<Quad>(a.r_max);
  Quad s = 0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const int p = static_cast<int>(j) - a.n;
    if (p == 0) s += b[j] * log(R / eps);
    else s += b[j] * (pow(R, p) - pow(eps, p)) / p;
  }
  return vol * s;
}

long double truncated_ld(const AHNormalForm& a, long double eps) {
  const long double vol = volume(a.boundary);
  if (eps >= a.r_max) return 0.0L;
  const auto& poly = a.warp.polynomial_coefficients();
  if (!poly) return vol * radial_quadrature(a, eps);
  const auto b = warp_power(*poly, a.n);
  const long double R = a.r_max;
  long double s = 0.0L;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const int p = static_cast<int>(j) - a.n;
    if (p == 0) s += b[j] * std::log(R / eps);
    else s += b[j] * (std::pow(R, p) - std::pow(eps, p)) / p;
  }
  return vol * s;
}

}  // namespace

double truncated_volume(const AHNormalForm& a, double eps) {
  check_eps(a, eps);
  return static_cast<double>(truncated_ld(a, eps));
}

VolumeExpansion extract_expansion(const AHNormalForm& a) {
  const auto& poly = a.warp.polynomial_coefficients();
  if (!poly) return fit_expansion(a);
  const int n = a.n;
  const long double vol = volume(a.boundary);
  const auto b = warp_power(*poly, n);
  const long double R = a.r_max;
  VolumeExpansion e;
  e.n = n;
  e.analytic = true;
  e.c.assign(static_cast<std::size_t>((n + 1) / 2), 0.0);
  long double constant = 0.0L;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const int p = static_cast<int>(j) - n;
    if (p < 0) {
      if (j % 2 == 1 && std::abs(b[j]) > 1e-14L)
        fail(ErrorKind::InvalidRange, "odd power below order n in the volume density");
      if (j % 2 == 0) e.c[j / 2] = static_cast<double>(vol * b[j] / static_cast<long double>(-p));
      constant += b[j] * std::pow(R, p) / p;
    } else if (p == 0) {
      if (n % 2 == 1) {
        if (std::abs(b[j]) > 1e-14L) fail(ErrorKind::InvalidRange, "odd power r^n in the volume density");
        continue;
      }
      e.log_coefficient = static_cast<double>(vol * b[j]);
      constant += b[j] * std::log(R);
    } else {
      constant += b[j] * std::pow(R, p) / p;
    }
  }
  e.constant_term = static_cast<double>(vol * constant);
  if (n % 2 == 1) e.V = e.constant_term;
  // Cross-check the closed form against quadrature at one radius.
  const long double eps = R / 4.0L;
  long double series = vol * constant;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const int p = static_cast<int>(j) - n;
    if (p == 0) series += vol * b[j] * std::log(1.0L / eps);
    else series -= vol * b[j] * std::pow(eps, p) / p;
  }
  const long double quad = vol * radial_quadrature(a, eps);
  e.residual = static_cast<double>(std::abs(series - quad) / std::max(1.0L, std::abs(quad)));
  return e;
}

VolumeExpansion fit_expansion(const AHNormalForm& a, const FitOptions& opt) {
  // Monomial coefficients are sensitive to rounding in the data, so the fit runs in quad precision.
  using MatrixQ = Eigen::Matrix<Quad, Eigen::Dynamic, Eigen::Dynamic>;
  using VectorQ = Eigen::Matrix<Quad, Eigen::Dynamic, 1>;
  const int n = a.n;
  const bool with_log = (n % 2 == 0) || opt.log_column;
  // Columns: eps^{-n+2j} (2j < n), log(1/eps), 1, eps^1..eps^M.
  std::vector<std::function<Quad(const Quad&)>> cols;
  const int nsing = (n + 1) / 2;
  for (int j = 0; j < nsing; ++j) {
    const int p = -n + 2 * j;
    cols.emplace_back([p](const Quad& e) { return Quad(pow(e, p)); });
  }
  const int log_col = with_log ? static_cast<int>(cols.size()) : -1;
  if (with_log) cols.emplace_back([](const Quad& e) { return Quad(-log(e)); });
  const int const_col = static_cast<int>(cols.size());
  cols.emplace_back([](const Quad&) { return Quad(1); });
  const int terms = opt.correction_terms > 0 ? opt.correction_terms : n + 1;
  for (int p = 1; p <= terms; ++p) cols.emplace_back([p](const Quad& e) { return Quad(pow(e, p)); });

  const int ncol = static_cast<int>(cols.size());
  const int nrow = ncol + opt.extra_points;
  const double eps0 = opt.eps0 > 0.0 ? opt.eps0 : a.r_max / 2.0;
  check_eps(a, eps0);
  // Geometric radii from eps0 down to eps0 / span.
  const Quad q = pow(static_cast<Quad>(opt.span), Quad(-1) / (nrow - 1));
  MatrixQ A(nrow, ncol);
  VectorQ y(nrow);
  for (int i = 0; i < nrow; ++i) {
    const Quad e = static_cast<Quad>(eps0) * pow(q, i);
    for (int c = 0; c < ncol; ++c) A(i, c) = cols[static_cast<std::size_t>(c)](e);
    y(i) = truncated_quad(a, e);
  }
  // Relative weights: the data error is proportional to |y|.
  VectorQ yw(nrow);
  MatrixQ Aw(nrow, ncol);
  for (int i = 0; i < nrow; ++i) {
    const Quad w = 1 / abs(y(i));
    yw(i) = y(i) * w;
    Aw.row(i) = A.row(i) * w;
  }
  VectorQ scale(ncol);
  for (int c = 0; c < ncol; ++c) {
    scale(c) = 0;
    for (int i = 0; i < nrow; ++i) scale(c) = std::max(scale(c), Quad(abs(Aw(i, c))));
  }
  MatrixQ As = Aw;
  for (int c = 0; c < ncol; ++c) As.col(c) /= scale(c);
  Matrix Ad(nrow, ncol);
  for (int i = 0; i < nrow; ++i)
    for (int c = 0; c < ncol; ++c) Ad(i, c) = static_cast<double>(As(i, c));
  Eigen::JacobiSVD<Matrix> svd(Ad);
  const Vector sv = svd.singularValues();
  VolumeExpansion e;
  e.n = n;
  e.condition = sv(0) / sv(sv.size() - 1);
  if (!(e.condition <= opt.max_condition)) {
    std::ostringstream os;
    os << "volume fit condition number " << e.condition << " exceeds " << opt.max_condition
       << "; choose a smaller eps0";
    fail(ErrorKind::IllConditionedFit, os.str());
  }
  const VectorQ xs = As.colPivHouseholderQr().solve(yw);
  VectorQ x(ncol);
  for (int c = 0; c < ncol; ++c) x(c) = xs(c) / scale(c);
  Quad rmax = 0, ymax = 0;
  const VectorQ r = A * x - y;
  for (int i = 0; i < nrow; ++i) {
    rmax = std::max(rmax, Quad(abs(r(i))));
    ymax = std::max(ymax, Quad(abs(y(i))));
  }
  e.residual = static_cast<double>(rmax / ymax);
  e.c.resize(static_cast<std::size_t>(nsing));
  for (int j = 0; j < nsing; ++j) e.c[static_cast<std::size_t>(j)] = static_cast<double>(x(j));
  if (with_log) e.log_coefficient = static_cast<double>(x(log_col));
  e.constant_term = static_cast<double>(x(const_col));
  if (n % 2 == 1) e.V = e.constant_term;
  return e;
}

double boundary_vk_integral(const AHNormalForm& a, int k) {
  if (k == 0) return volume(a.boundary);
  if (a.boundary.einstein_constant()) {
    std::mt19937_64 rng(0x5eed);
    return v_direct(a.boundary, a.boundary.sample_point(rng), k) * volume(a.boundary);
  }
  return integrate(a.boundary, PointFunction([&](const Point& p) { return v_direct(a.boundary, p, k); }));
}

double coefficient_identity_residual(const AHNormalForm& a, const VolumeExpansion& e) {
  const int n = a.n;
  double worst = 0.0;
  for (std::size_t k = 0; k < e.c.size() && k <= 3; ++k) {
    if (k == 3 && n == 4) continue;
    const double expected = boundary_vk_integral(a, static_cast<int>(k)) / (n - 2.0 * k);
    worst = std::max(worst, std::abs(e.c[k] - expected) / std::max(1.0, std::abs(expected)));
  }
  if (n % 2 == 0 && n <= 6 && e.log_coefficient) {
    const double expected = boundary_vk_integral(a, n / 2);
    worst = std::max(worst, std::abs(*e.log_coefficient - expected) / std::max(1.0, std::abs(expected)));
  }
  return worst;
}

ModelMetric geodesic_compactification(const AHNormalForm& a) {
  return ModelMetric::warped_radial(a.warp, a.boundary, 0.0, a.r_max);
}

Matrix shape_operator(const ModelMetric& compact, const Point& p) {
  const int d = compact.dim();
  const JetSpace& s = JetSpace::get(d, 1);
  std::vector<Jet> x;
  for (int i = 0; i < d; ++i) x.push_back(Jet::variable(s, i, p[static_cast<std::size_t>(i)]));
  const JetMatrix gj = compact.metric_jet(x);
  const Matrix g = gj.values();
  const Matrix gi = g.inverse();
  const int m = d - 1;
  Matrix II(m, m);
  for (int a = 1; a < d; ++a)
    for (int b = 1; b < d; ++b) {
      double gamma0 = 0.0;  // Gamma^0_ab
      for (int l = 0; l < d; ++l)
        gamma0 += 0.5 * gi(0, l) * (gj(b, l).gradient(a) + gj(a, l).gradient(b) - gj(a, b).gradient(l));
      II(a - 1, b - 1) = gamma0 / std::sqrt(gi(0, 0));
    }
  const Matrix h = g.block(1, 1, m, m);
  return h.ldlt().solve(II);
}

double boundary_shape_defect(const ModelMetric& compact) {
  const auto dom = compact.domain();
  if (dom[0].periodic) fail(ErrorKind::InvalidRange, "coordinate 0 has no boundary");
  std::mt19937_64 rng(0x5eed);
  double worst = 0.0;
  for (int i = 0; i < 8; ++i) {
    Point p = compact.sample_point(rng);
    p[0] = dom[0].lo;
    const Matrix S = shape_operator(compact, p);
    // The shape operator is self-adjoint for the induced metric; its
    // eigenvalues are the principal curvatures.
    Eigen::EigenSolver<Matrix> es(S, false);
    worst = std::max(worst, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return worst;
}

double geodcomp_constant(int n) {
  if (n % 2 == 0) fail(ErrorKind::EvenDimension, "C_{n+1} is defined for odd n");
  const double h = std::tgamma((n - 1) / 2.0 + 1.0);
  return std::pow(2.0, n - 1) * (n + 1) * h * h / std::tgamma(n + 1.0);
}

namespace {

struct RadialForm {
  ModelMetric fiber;
  double r_min;
  double r_max;
};

std::optional<RadialForm> radial_form(const ModelMetric& m) {
  const ModelMetric& g = underlying_geometry(m);
  if (const auto* w = std::get_if<WarpedRadial>(&g.kind())) return RadialForm{w->fiber, w->r_min, w->r_max};
  if (const auto* c = std::get_if<ConformalDeformation>(&g.kind()))
    if (c->omega.radial()) return radial_form(c->base);
  return std::nullopt;
}

double vk_integral(const ModelMetric& m, int k) {
  auto f = [&](const Point& p) { return v_direct(m, p, k); };
  if (radial_form(m)) return radial_integral(m, f);
  return integrate(m, PointFunction(f));
}

}  // namespace

double radial_integral(const ModelMetric& m, const std::function<double(const Point&)>& h, double rel_tol,
                       double abs_tol) {
  const auto rf = radial_form(m);
  if (!rf) fail(ErrorKind::InvalidRange, m.label() + " is not radially symmetric");
  const auto fdom = rf->fiber.domain();
  Point y0;
  for (const auto& c : fdom) y0.push_back(0.5 * (c.lo + c.hi));
  const double fiber_density = volume_density(rf->fiber, y0);
  Point p(1 + y0.size());
  std::copy(y0.begin(), y0.end(), p.begin() + 1);
  const double val = integrate_1d(
      [&](double r) {
        Point q = p;
        q[0] = r;
        return h(q) * volume_density(m, q) / fiber_density;
      },
      rf->r_min, rf->r_max, rel_tol, abs_tol / volume(rf->fiber));
  return val * volume(rf->fiber);
}

double weyl_norm_integral(const ModelMetric& m) {
  auto f = [&](const Point& p) {
    const CurvaturePack pk = curvature_pack(m, p, {.bach = false});
    const int n = static_cast<int>(pk.g.rows());
    double s = 0.0;
    // |W|^2 = W_ijkl W^ijkl
    Tensor4 up(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double acc = 0.0;
            for (int a = 0; a < n; ++a) acc += pk.g_inv(l, a) * pk.weyl(i, j, k, a);
            up(i, j, k, l) = acc;
          }
    for (int pass = 0; pass < 3; ++pass) {
      Tensor4 next(n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              double acc = 0.0;
              // raise the index in position 2 - pass
              for (int a = 0; a < n; ++a) {
                if (pass == 0) acc += pk.g_inv(k, a) * up(i, j, a, l);
                if (pass == 1) acc += pk.g_inv(j, a) * up(i, a, k, l);
                if (pass == 2) acc += pk.g_inv(i, a) * up(a, j, k, l);
              }
              next(i, j, k, l) = acc;
            }
      up = next;
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) s += up(i, j, k, l) * pk.weyl(i, j, k, l);
    return s;
  };
  if (radial_form(m)) return radial_integral(m, f, 1e-12, 1e-12);
  // |W|^2 vanishes identically on conformally flat models; only an absolute
  // tolerance can certify convergence there.
  IntegrationOptions opt;
  opt.abs_tol = 1e-12;
  return integrate(m, PointFunction(f), opt);
}

double v4_integral(const ModelMetric& m) { return vk_integral(m, 2); }

double renorm_volume_geodcomp(const ModelMetric& compact, int n) {
  if (n % 2 == 0) fail(ErrorKind::EvenDimension, "the bulk formula holds for odd n");
  if (n < 3) fail(ErrorKind::InvalidRange, "need n >= 3");
  if (n >= 7) fail(ErrorKind::CoefficientUnavailable, "v^(n+1) for n >= 7 needs v^(8), which has no direct formula here");
  if (compact.dim() != n + 1) fail(ErrorKind::WrongDimension, "compactification must have dimension n + 1");
  const double defect = boundary_shape_defect(compact);
  if (defect > 1e-10) {
    std::ostringstream os;
    os << "boundary principal curvatures reach " << defect;
    fail(ErrorKind::NotTotallyGeodesic, os.str());
  }
  return geodcomp_constant(n) * vk_integral(compact, (n + 1) / 2);
}

double gauss_bonnet_4d(double value, double weyl_integral, int chi, GaussBonnetMode mode) {
  const double lhs = 8.0 * std::numbers::pi * std::numbers::pi * chi;
  const double rhs = 0.25 * weyl_integral + (mode == GaussBonnetMode::AHE ? 6.0 : 16.0) * value;
  return std::abs(lhs - rhs);
}

double gauss_bonnet_4d(const ModelMetric& m, int chi) {
  if (m.dim() != 4) fail(ErrorKind::WrongDimension, "Gauss-Bonnet identity needs dimension 4");
  const auto dom = m.domain();
  if (!dom[0].periodic && radial_form(m)) {
    const double defect = boundary_shape_defect(m);
    if (defect > 1e-8) {
      std::ostringstream os;
      os << "boundary is not totally geodesic (principal curvature " << defect << ")";
      fail(ErrorKind::NotTotallyGeodesic, os.str());
    }
  }
  return gauss_bonnet_4d(v4_integral(m), weyl_norm_integral(m), chi, GaussBonnetMode::Compact);
}

}  // namespace rvol
