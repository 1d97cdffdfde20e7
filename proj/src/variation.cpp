#include "rvol/variation.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "rvol/curvature.hpp"
#include "rvol/errors.hpp"
#include "rvol/parallel.hpp"

namespace rvol {

std::string_view to_string(Definiteness d) {
  switch (d) {
    case Definiteness::PositiveDefinite: return "positive definite";
    case Definiteness::NegativeDefinite: return "negative definite";
    case Definiteness::PositiveSemidefinite: return "positive semi-definite";
    case Definiteness::NegativeSemidefinite: return "negative semi-definite";
    case Definiteness::Indefinite: return "indefinite";
    case Definiteness::Zero: return "zero";
  }
  return "?";
}

std::string to_string(const Classification& c) {
  std::string s(to_string(c.kind));
  if (c.nullity > 0 && c.kind != Definiteness::Zero) s += " (nullity " + std::to_string(c.nullity) + ")";
  return s;
}

Classification classify_eigenvalues(const Vector& eig, double rel) {
  Classification c;
  const double top = eig.size() ? eig.cwiseAbs().maxCoeff() : 0.0;
  if (top == 0.0) {
    c.kind = Definiteness::Zero;
    c.nullity = static_cast<int>(eig.size());
    return c;
  }
  const double thr = rel * top;
  int pos = 0;
  int neg = 0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig(i) > thr) ++pos;
    else if (eig(i) < -thr) ++neg;
    else ++c.nullity;
  }
  if (pos && neg) c.kind = Definiteness::Indefinite;
  else if (pos) c.kind = c.nullity ? Definiteness::PositiveSemidefinite : Definiteness::PositiveDefinite;
  else c.kind = c.nullity ? Definiteness::NegativeSemidefinite : Definiteness::NegativeDefinite;
  return c;
}

namespace {

Classification signed_class(bool positive, bool round_sphere, int n) {
  Classification c;
  if (round_sphere) {
    c.kind = positive ? Definiteness::PositiveSemidefinite : Definiteness::NegativeSemidefinite;
    c.nullity = n + 1;
  } else {
    c.kind = positive ? Definiteness::PositiveDefinite : Definiteness::NegativeDefinite;
  }
  return c;
}

}  // namespace

Classification classify_sign_Fk(int n, int k, int sign_R, bool round_sphere) {
  if (n < 3 || k < 1 || k > n) fail(ErrorKind::InvalidRange, "need n >= 3 and 1 <= k <= n");
  if (n % 2 == 0 && 2 * k == n) fail(ErrorKind::InvalidRange, "k = n/2 is excluded for even n");
  if (sign_R == 0) fail(ErrorKind::InvalidRange, "scalar curvature must be nonzero");
  if (round_sphere && sign_R < 0) fail(ErrorKind::InvalidRange, "round spheres have R > 0");
  bool positive;
  if (2 * k < n) positive = sign_R > 0 ? true : (k % 2 == 1);
  else positive = sign_R > 0 ? false : (k % 2 == 0);
  return signed_class(positive, round_sphere, n);
}

Classification classify_sign_V(int n, int sign_R, bool round_sphere) {
  if (n % 2 != 0) fail(ErrorKind::OddDimension, "the renormalized volume Hessian needs even n");
  if (n < 2) fail(ErrorKind::InvalidRange, "need n >= 2");
  if (sign_R == 0) fail(ErrorKind::InvalidRange, "scalar curvature must be nonzero");
  if (round_sphere && sign_R < 0) fail(ErrorKind::InvalidRange, "round spheres have R > 0");
  const bool positive = sign_R > 0 && n % 4 == 0;
  return signed_class(positive, round_sphere, n);
}

namespace {

struct PointDerivatives {
  double value;
  Vector grad;
  Matrix hess;  // covariant Hessian
  Matrix g;
};

PointDerivatives covariant_derivatives(const ModelMetric& m, const ScalarField& f, const Point& p) {
  const int n = m.dim();
  const JetSpace& s = JetSpace::get(n, 2);
  std::vector<Jet> x;
  for (int i = 0; i < n; ++i) x.push_back(Jet::variable(s, i, p[static_cast<std::size_t>(i)]));
  const JetMatrix gj = m.metric_jet(x);
  const Matrix g = gj.values();
  const Matrix gi = g.inverse();
  const Jet w = f(x);
  PointDerivatives out{w.value(), Vector(n), Matrix(n, n), g};
  std::vector<int> alpha(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) out.grad(i) = w.gradient(i);
  // Gamma_{l,ij} = (1/2)(d_i g_jl + d_j g_il - d_l g_ij)
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      std::fill(alpha.begin(), alpha.end(), 0);
      ++alpha[static_cast<std::size_t>(i)];
      ++alpha[static_cast<std::size_t>(j)];
      double h = w.derivative(alpha);
      for (int l = 0; l < n; ++l) {
        const double gamma_l = 0.5 * (gj(j, l).gradient(i) + gj(i, l).gradient(j) - gj(i, j).gradient(l));
        double up = 0.0;  // g^{kl} Gamma_{l,ij} d_k w
        for (int k = 0; k < n; ++k) up += gi(k, l) * out.grad(k);
        h -= gamma_l * up;
      }
      out.hess(i, j) = h;
      out.hess(j, i) = h;
    }
  return out;
}

double richardson(const std::function<double(double)>& F, double h) {
  const double d1 = (F(h) - F(-h)) / (2.0 * h);
  const double d2 = (F(0.5 * h) - F(-0.5 * h)) / h;
  return (4.0 * d2 - d1) / 3.0;
}

struct EinsteinData {
  double a;
  double cL;     // L_(k) = cL g^{-1}
  double vk;
  double R;
};

// L_(k) and v_k at a sample point of an Einstein model, from the series engine.
EinsteinData einstein_data(const ModelMetric& m, int k) {
  auto a = m.einstein_constant();
  if (!a) fail(ErrorKind::NotEinstein, "Hessian assembly needs an Einstein background, got " + m.label());
  std::mt19937_64 rng(0x5eed);
  const Point p = m.sample_point(rng);
  const MetricSeries s = einstein_series(m, p, std::max(k, 1));
  const LTensor L = L_tensor(s, k);
  const Matrix g = s.base();
  const int n = m.dim();
  const double cL = (g * L.upper).trace() / n;
  const double off = (L.upper - cL * g.inverse()).cwiseAbs().maxCoeff();
  if (off > 1e-12 * std::max(1.0, std::abs(cL))) {
    std::ostringstream os;
    os << "L_(" << k << ") is not a multiple of g^{-1} (residual " << off << ")";
    fail(ErrorKind::ExpressionMismatch, os.str());
  }
  EinsteinData d;
  d.a = *a;
  d.cL = cL;
  d.vk = vk_from_series(s, k).v[static_cast<std::size_t>(k)];
  d.R = 2.0 * *a * n * (n - 1);
  return d;
}

void check_basis(const ModelMetric& m, const SpectralBasis& basis) {
  if (basis.model().dim() != m.dim() ||
      underlying_geometry(basis.model()).label() != underlying_geometry(m).label())
    fail(ErrorKind::InvalidRange, "spectral basis was built on " + basis.model().label() + ", not " + m.label());
  if (basis.gram_residual() > 1e-9) {
    std::ostringstream os;
    os << "basis Gram matrix deviates from the identity by " << basis.gram_residual();
    fail(ErrorKind::GridResolutionInsufficient, os.str());
  }
}

HessianForm finish(HessianForm h, const SpectralBasis& basis, double vol) {
  const Matrix sym = 0.5 * (h.H + h.H.transpose());
  const double scale = std::max(1.0, h.H.cwiseAbs().maxCoeff());
  h.symmetry_residual = (h.H - h.H.transpose()).cwiseAbs().maxCoeff() / scale;
  h.H = sym;
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  h.eigenvalues = es.eigenvalues();
  h.classification = classify_eigenvalues(h.eigenvalues);
  const Eigen::Index B = static_cast<Eigen::Index>(basis.size());
  const Matrix closed =
      h.prefactor * (Matrix(basis.eigenvalues().asDiagonal()) - h.scalar_curvature / (h.n - 1) * Matrix::Identity(B, B));
  h.closed_form_residual = (h.H - closed).cwiseAbs().maxCoeff() / std::max(1.0, closed.cwiseAbs().maxCoeff());
  if (h.closed_form_residual > 1e-6) {
    std::ostringstream os;
    os << "assembled Hessian differs from the Einstein closed form by " << h.closed_form_residual;
    fail(ErrorKind::ExpressionMismatch, os.str());
  }
  const double c = std::pow(vol, -1.0 / h.n);
  h.volume_scale = std::pow(c, -2.0 * h.k);
  return h;
}

}  // namespace

double laplacian(const ModelMetric& m, const ScalarField& f, const Point& p) {
  const auto d = covariant_derivatives(m, f, p);
  return (d.g.inverse() * d.hess).trace();
}

double vk_at(const ModelMetric& m, const Point& p, int k) {
  if (k == 0) return 1.0;
  if (m.einstein_constant()) return vk_from_series(einstein_series(m, p, k), k).v[static_cast<std::size_t>(k)];
  check_general_range(m.dim(), k);
  if (k > 3) fail(ErrorKind::GeneralFGUnavailable, "v_k for k > 3 needs the full expansion of a non-Einstein metric");
  return std::pow(-2.0, k) * v_direct(m, p, k);
}

double delta_vk(const ModelMetric& m, const ScalarField& w, int k, const Point& p) {
  if (k < 1) fail(ErrorKind::KOutOfRange, "delta v_k needs k >= 1");
  Matrix L;
  double vk;
  if (m.einstein_constant()) {
    const MetricSeries s = einstein_series(m, p, k);
    L = L_tensor(s, k).upper;
    vk = vk_from_series(s, k).v[static_cast<std::size_t>(k)];
  } else if (k == 1) {
    L = -m.metric(p).inverse();
    vk = vk_at(m, p, 1);
  } else {
    fail(ErrorKind::GeneralFGUnavailable, "L_(k) for k >= 2 needs an Einstein background");
  }
  // L is parallel in both cases, so div(L grad w) = L^{ij} w_{;ij}.
  const auto d = covariant_derivatives(m, w, p);
  return L.cwiseProduct(d.hess).sum() - 2.0 * k * vk * d.value;
}

double delta_vk_fd(const ModelMetric& m, const ScalarField& w, int k, const Point& p, double h) {
  if (k < 1 || k > 3) fail(ErrorKind::KOutOfRange, "finite-difference oracle needs 1 <= k <= 3");
  return richardson(
      [&](double t) {
        return std::pow(-2.0, k) * v_direct(ModelMetric::conformal(m, w.scaled(t)), p, k);
      },
      h);
}

double functional_Fk(const ModelMetric& m, int k, const IntegrationOptions& opt) {
  if (k < 0) fail(ErrorKind::KOutOfRange, "F_k needs k >= 0");
  if (k == 0) return volume(m);
  if (m.einstein_constant()) {
    std::mt19937_64 rng(0x5eed);
    return vk_at(m, m.sample_point(rng), k) * volume(m);
  }
  return integrate(m, PointFunction([&](const Point& p) { return vk_at(m, p, k); }), opt);
}

double first_variation_Fk(const ModelMetric& m, int k, const ScalarField& w, const IntegrationOptions& opt) {
  const int n = m.dim();
  if (2 * k == n) return 0.0;
  return (n - 2 * k) *
         integrate(m, PointFunction([&](const Point& p) { return vk_at(m, p, k) * w.value(p); }), opt);
}

double first_variation_Fk_fd(const ModelMetric& m, int k, const ScalarField& w, double h,
                             const IntegrationOptions& opt) {
  return richardson([&](double t) { return functional_Fk(ModelMetric::conformal(m, w.scaled(t)), k, opt); }, h);
}

double criticality_defect(const ModelMetric& m, int k, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v;
  for (int i = 0; i < samples; ++i) v.push_back(vk_at(m, m.sample_point(rng), k));
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double sup = 0.0;
  for (double x : v) sup = std::max(sup, std::abs(x - mean));
  return sup;
}

void require_critical(std::span<const double> vk_values, double tol) {
  double mean = 0.0;
  for (double x : vk_values) mean += x;
  mean /= static_cast<double>(vk_values.size());
  double sup = 0.0;
  for (double x : vk_values) sup = std::max(sup, std::abs(x - mean));
  if (!(sup <= tol)) {
    std::ostringstream os;
    os << "v_k is not constant: sup |v_k - mean| = " << sup << " > " << tol;
    fail(ErrorKind::NotCritical, os.str());
  }
}

void require_critical(const ModelMetric& m, int k, double tol) {
  const double d = criticality_defect(m, k);
  if (!(d <= tol)) {
    std::ostringstream os;
    os << "v_" << k << " is not constant on " << m.label() << ": sup |v_k - mean| = " << d;
    fail(ErrorKind::NotCritical, os.str());
  }
}

HessianForm hessian_Fk(const ModelMetric& m, int k, const SpectralBasis& basis) {
  const int n = m.dim();
  if (k < 1 || k > n) fail(ErrorKind::KOutOfRange, "hessian_Fk needs 1 <= k <= n");
  if (n % 2 == 0 && 2 * k == n)
    fail(ErrorKind::HalfDimension, "F_{n/2} is conformally invariant; use the renormalized volume Hessian");
  check_basis(m, basis);
  const EinsteinData d = einstein_data(m, k);
  require_critical(m, k);
  HessianForm h;
  h.functional = "F_k";
  h.n = n;
  h.k = k;
  h.H = -(n - 2.0 * k) * (d.cL * basis.stiffness() + 2.0 * k * d.vk * basis.mass());
  h.prefactor = (n - 2.0 * k) * std::pow(d.a, k - 1) * binomial(n - 1, k - 1);
  h.scalar_curvature = d.R;
  return finish(std::move(h), basis, volume(m));
}

HessianForm hessian_V(const ModelMetric& m, const SpectralBasis& basis) {
  const int n = m.dim();
  if (n % 2 != 0) fail(ErrorKind::OddDimension, "the renormalized volume Hessian needs even n");
  const int k = n / 2;
  check_basis(m, basis);
  const EinsteinData d = einstein_data(m, k);
  require_critical(m, k);
  HessianForm h;
  h.functional = "V";
  h.n = n;
  h.k = k;
  const double sign = (k + 1) % 2 == 0 ? 1.0 : -1.0;  // (-1)^{n/2+1}
  h.H = sign * std::pow(2.0, -k) * (d.cL * basis.stiffness() + n * d.vk * basis.mass());
  h.prefactor = -std::pow(-d.a, k - 1) * std::pow(2.0, -k) * binomial(n - 1, k - 1);
  h.scalar_curvature = d.R;
  return finish(std::move(h), basis, volume(m));
}

Matrix hessian_pointwise(const ModelMetric& m, int k, const SpectralBasis& basis, int nodes,
                         bool renormalized_volume) {
  const int n = m.dim();
  const auto dom = m.domain();
  std::vector<QuadratureRule> rules;
  for (const auto& r : dom)
    rules.push_back(r.periodic ? periodic_rule(nodes, r.lo, r.hi - r.lo) : gauss_legendre(nodes, r.lo, r.hi));
  const auto B = static_cast<Eigen::Index>(basis.size());
  const double pref = renormalized_volume ? ((k + 1) % 2 == 0 ? 1.0 : -1.0) * std::pow(2.0, -k) : -(n - 2.0 * k);
  const double mass_coef = renormalized_volume ? n : 2.0 * k;
  const auto outer = static_cast<std::size_t>(nodes);
  std::size_t inner = 1;
  for (int c = 1; c < n; ++c) inner *= static_cast<std::size_t>(nodes);
  std::vector<Matrix> partial(outer, Matrix::Zero(B, B));
  const JetSpace& s1 = JetSpace::get(n, 1);
  parallel_for(outer, [&](std::size_t i0) {
    Point p(static_cast<std::size_t>(n));
    Matrix grads(n, B);
    Vector vals(B);
    for (std::size_t it = 0; it < inner; ++it) {
      std::size_t rem = it;
      double w = rules[0].weights[i0];
      p[0] = rules[0].nodes[i0];
      for (int c = n - 1; c >= 1; --c) {
        const std::size_t ic = rem % outer;
        rem /= outer;
        p[static_cast<std::size_t>(c)] = rules[static_cast<std::size_t>(c)].nodes[ic];
        w *= rules[static_cast<std::size_t>(c)].weights[ic];
      }
      w *= volume_density(m, p);
      const MetricSeries s = series_for(m, p, k);
      const Matrix L = L_tensor(s, k).upper;
      const double vk = vk_from_series(s, k).v[static_cast<std::size_t>(k)];
      std::vector<Jet> x;
      for (int c = 0; c < n; ++c) x.push_back(Jet::variable(s1, c, p[static_cast<std::size_t>(c)]));
      for (Eigen::Index a = 0; a < B; ++a) {
        const Jet j = basis.jet(static_cast<std::size_t>(a), x);
        vals(a) = j.value();
        for (int c = 0; c < n; ++c) grads(c, a) = j.gradient(c);
      }
      partial[i0] += w * pref * (grads.transpose() * L * grads + mass_coef * vk * vals * vals.transpose());
    }
  });
  Matrix H = Matrix::Zero(B, B);
  for (const auto& P : partial) H += P;
  return H;
}

std::optional<Definiteness> definiteness_criterion(const LTensor& L, double vk, int n, int k) {
  if (2 * k == n || vk == 0.0) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Matrix> es(L.upper, Eigen::EigenvaluesOnly);
  const Vector e = es.eigenvalues();
  int sigma = 0;
  if (e.minCoeff() > 0.0) sigma = 1;
  else if (e.maxCoeff() < 0.0) sigma = -1;
  if (sigma == 0 || (vk > 0.0) != (sigma > 0)) return std::nullopt;
  const int sign = -sigma * (n - 2 * k > 0 ? 1 : -1);
  return sign > 0 ? Definiteness::PositiveDefinite : Definiteness::NegativeDefinite;
}

ObataReport obata_check(const SpectralBasis& basis, double R) {
  const int n = basis.model().dim();
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(basis.stiffness(), basis.mass(), Eigen::EigenvaluesOnly);
  ObataReport r;
  r.lambda1 = ges.eigenvalues().minCoeff();
  r.bound = R / (n - 1);
  r.holds = r.lambda1 >= r.bound - 1e-9;
  r.equality = std::abs(r.lambda1 - r.bound) <= 1e-9;
  return r;
}

}  // namespace rvol
