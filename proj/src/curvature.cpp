#include "rvol/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "rvol/errors.hpp"

namespace rvol {

namespace {

void require_positive_definite(const Matrix& g, const Point& p) {
  Eigen::LLT<Matrix> llt(g);
  if (llt.info() != Eigen::Success || !g.allFinite()) {
    std::ostringstream os;
    os << "metric is not positive definite at (";
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? ", " : "") << p[i];
    os << ")";
    fail(ErrorKind::NonPositiveDefinite, os.str());
  }
}

// Fills Ricci, scalar, Schouten and Weyl from the Riemann tensor.
void finish(CurvaturePack& pk) {
  const int n = static_cast<int>(pk.g.rows());
  pk.g_inv = pk.g.inverse();
  pk.ricci = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) s += pk.g_inv(i, k) * pk.riemann(i, j, k, l);
      pk.ricci(j, l) = s;
    }
  pk.ricci = 0.5 * (pk.ricci + pk.ricci.transpose()).eval();
  pk.scalar = (pk.g_inv.cwiseProduct(pk.ricci)).sum();
  if (n == 2) {
    pk.schouten = 0.25 * pk.scalar * pk.g;
  } else {
    pk.schouten = (pk.ricci - pk.scalar / (2.0 * (n - 1)) * pk.g) / (n - 2.0);
  }
  const Matrix& P = pk.schouten;
  const Matrix& g = pk.g;
  pk.weyl = Tensor4(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
          pk.weyl(i, j, k, l) = pk.riemann(i, j, k, l) -
                                (P(i, k) * g(j, l) - P(j, k) * g(i, l) - P(i, l) * g(j, k) +
                                 P(j, l) * g(i, k));
}

// -P^{kl} W_kijl, the Bach tensor of a metric with parallel Schouten tensor.
Matrix bach_parallel(const CurvaturePack& pk) {
  const int n = static_cast<int>(pk.g.rows());
  const Matrix Pup = pk.g_inv * pk.schouten * pk.g_inv;
  Matrix B = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) s += Pup(k, l) * pk.weyl(k, i, j, l);
      B(i, j) = -s;
    }
  return B;
}

Tensor4 constant_curvature(const Matrix& g, double K) {
  const int n = static_cast<int>(g.rows());
  Tensor4 R(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) R(i, j, k, l) = K * (g(i, k) * g(j, l) - g(i, l) * g(j, k));
  return R;
}

// -------------------------------------------------------------------------
// Chart path.

JetMatrix jet_inverse(const JetMatrix& g, const Matrix& g0inv, int order) {
  const int n = g.dim();
  const JetSpace& space = g(0, 0).space();
  const Jet zero(space, 0.0);
  // C = -g0^{-1} (g - g0); g^{-1} = sum_m C^m g0^{-1}.
  JetMatrix C(n, zero);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Jet acc = zero;
      for (int k = 0; k < n; ++k) {
        Jet e = g(k, j);
        e -= Jet(space, g(k, j).value());
        acc += e * (-g0inv(i, k));
      }
      C(i, j) = acc;
    }
  JetMatrix term(n, zero);
  JetMatrix sum(n, zero);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      term(i, j) = Jet(space, g0inv(i, j));
      sum(i, j) = term(i, j);
    }
  for (int m = 1; m <= order; ++m) {
    JetMatrix next(n, zero);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet acc = zero;
        for (int k = 0; k < n; ++k) acc += C(i, k) * term(k, j);
        next(i, j) = acc;
      }
    term = next;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) sum(i, j) += term(i, j);
  }
  return sum;
}

CurvaturePack chart_pack(const ModelMetric& m, const Point& p, bool want_bach) {
  const int n = m.dim();
  const int order = want_bach ? 4 : 2;
  if (m.max_derivative_order() < order) {
    fail(ErrorKind::DerivativeOrderUnavailable,
         "chart supplies derivatives to order " + std::to_string(m.max_derivative_order()) +
             ", need " + std::to_string(order));
  }
  const JetSpace& space = JetSpace::get(n, order);
  std::vector<Jet> x;
  x.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) x.push_back(Jet::variable(space, i, p[static_cast<std::size_t>(i)]));

  JetMatrix g = m.metric_jet(x);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      Jet s = (g(i, j) + g(j, i)) * 0.5;
      g(i, j) = s;
      g(j, i) = s;
    }
  CurvaturePack pk;
  pk.point = p;
  pk.g = g.values();
  require_positive_definite(pk.g, p);
  const Matrix g0inv = pk.g.inverse();
  const JetMatrix ginv = jet_inverse(g, g0inv, order);

  const auto N = static_cast<std::size_t>(n);
  auto idx3 = [N](int a, int b, int c) {
    return (static_cast<std::size_t>(a) * N + static_cast<std::size_t>(b)) * N +
           static_cast<std::size_t>(c);
  };
  const Jet zero(space, 0.0);

  // dg[k](i,j) = d_k g_ij
  std::vector<Jet> dg(N * N * N, zero);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        dg[idx3(k, i, j)] = g(i, j).partial(k);
        dg[idx3(k, j, i)] = dg[idx3(k, i, j)];
      }
  // Gamma[m](i,j)
  std::vector<Jet> gamma(N * N * N, zero);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      std::vector<Jet> lower;
      lower.reserve(N);
      for (int l = 0; l < n; ++l) {
        Jet t = dg[idx3(i, j, l)] + dg[idx3(j, i, l)];
        t -= dg[idx3(l, i, j)];
        lower.push_back(t * 0.5);
      }
      for (int mm = 0; mm < n; ++mm) {
        Jet acc = zero;
        for (int l = 0; l < n; ++l) acc += ginv(mm, l) * lower[static_cast<std::size_t>(l)];
        gamma[idx3(mm, i, j)] = acc;
        gamma[idx3(mm, j, i)] = acc;
      }
    }
  // Derivatives of Christoffel symbols: dgamma[k][m](i,j).
  std::vector<Jet> dgamma(N * N * N * N, zero);
  auto idx4 = [N](int a, int b, int c, int d) {
    return ((static_cast<std::size_t>(a) * N + static_cast<std::size_t>(b)) * N +
            static_cast<std::size_t>(c)) * N + static_cast<std::size_t>(d);
  };
  for (int k = 0; k < n; ++k)
    for (int mm = 0; mm < n; ++mm)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
          dgamma[idx4(k, mm, i, j)] = gamma[idx3(mm, i, j)].partial(k);
          dgamma[idx4(k, mm, j, i)] = dgamma[idx4(k, mm, i, j)];
        }
  // Mixed Riemann R^p_{jkl}, stored for k < l.
  const int rorder = order - 2;
  std::vector<Jet> rup(N * N * N * N, zero);
  for (int pp = 0; pp < n; ++pp)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = k + 1; l < n; ++l) {
          Jet acc = dgamma[idx4(k, pp, l, j)] - dgamma[idx4(l, pp, k, j)];
          for (int q = 0; q < n; ++q) {
            acc += Jet::product(gamma[idx3(pp, k, q)], gamma[idx3(q, l, j)], rorder);
            acc -= Jet::product(gamma[idx3(pp, l, q)], gamma[idx3(q, k, j)], rorder);
          }
          rup[idx4(pp, j, k, l)] = acc;
          rup[idx4(pp, j, l, k)] = -acc;
        }

  pk.riemann = Tensor4(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          double s = 0.0;
          for (int pp = 0; pp < n; ++pp) s += pk.g(i, pp) * rup[idx4(pp, j, k, l)].value();
          pk.riemann(i, j, k, l) = s;
        }
  finish(pk);

  if (want_bach) {
    if (n < 3) fail(ErrorKind::DimensionTooSmall, "Bach tensor needs n >= 3");
    // Jets of Ricci, scalar curvature and Schouten to order 2.
    JetMatrix ric(n, zero);
    for (int j = 0; j < n; ++j)
      for (int l = 0; l <= j; ++l) {
        Jet acc = zero;
        for (int k = 0; k < n; ++k) acc += rup[idx4(k, j, k, l)];
        ric(j, l) = acc;
        ric(l, j) = acc;
      }
    Jet scal = zero;
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) scal += Jet::product(ginv(j, l), ric(j, l), rorder);
    JetMatrix P(n, zero);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Jet t = ric(i, j) - Jet::product(scal, g(i, j), rorder) * (1.0 / (2.0 * (n - 1)));
        P(i, j) = t * (1.0 / (n - 2.0));
      }
    // nablaP[k](i,j) = nabla_k P_ij, order 1.
    std::vector<Jet> nP(N * N * N, zero);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
          Jet acc = P(i, j).partial(k);
          for (int mm = 0; mm < n; ++mm) {
            acc -= Jet::product(gamma[idx3(mm, k, i)], P(mm, j), 1);
            acc -= Jet::product(gamma[idx3(mm, k, j)], P(i, mm), 1);
          }
          nP[idx3(k, i, j)] = acc;
          nP[idx3(k, j, i)] = acc;
        }
    // D2(l,k,i,j) = nabla_l nabla_k P_ij at the point.
    auto val_gamma = [&](int a, int b, int c) { return gamma[idx3(a, b, c)].value(); };
    auto val_np = [&](int a, int b, int c) { return nP[idx3(a, b, c)].value(); };
    Tensor4 D2(n);
    for (int l = 0; l < n; ++l)
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            double s = nP[idx3(k, i, j)].gradient(l);
            for (int mm = 0; mm < n; ++mm) {
              s -= val_gamma(mm, l, k) * val_np(mm, i, j);
              s -= val_gamma(mm, l, i) * val_np(k, mm, j);
              s -= val_gamma(mm, l, j) * val_np(k, i, mm);
            }
            D2(l, k, i, j) = s;
          }
    Matrix B = bach_parallel(pk);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l)
            s += pk.g_inv(k, l) * (D2(l, k, i, j) - D2(l, j, i, k));
        B(i, j) += s;
      }
    pk.bach = 0.5 * (B + B.transpose());
  }
  return pk;
}

// -------------------------------------------------------------------------
// Closed-form paths. Each returns nullopt when the model has none.

std::optional<CurvaturePack> fast_pack(const ModelMetric& m, const Point& p, bool want_bach) {
  const int n = m.dim();
  const auto& kind = m.kind();
  auto start = [&]() {
    CurvaturePack pk;
    pk.point = p;
    pk.g = m.metric(p);
    require_positive_definite(pk.g, p);
    pk.fast_path = true;
    return pk;
  };

  if (const auto* s = std::get_if<RoundSphere>(&kind)) {
    CurvaturePack pk = start();
    pk.riemann = constant_curvature(pk.g, 1.0 / (s->radius * s->radius));
    finish(pk);
    if (want_bach) pk.bach = Matrix::Zero(n, n);
    return pk;
  }
  if (std::get_if<FlatTorus>(&kind)) {
    CurvaturePack pk = start();
    pk.riemann = Tensor4(n);
    finish(pk);
    if (want_bach) pk.bach = Matrix::Zero(n, n);
    return pk;
  }
  if (const auto* prod = std::get_if<ProductOfSpheres>(&kind)) {
    CurvaturePack pk = start();
    pk.riemann = Tensor4(n);
    int off = 0;
    for (const auto& [d, r] : prod->factors) {
      const double K = 1.0 / (r * r);
      for (int i = off; i < off + d; ++i)
        for (int j = off; j < off + d; ++j)
          for (int k = off; k < off + d; ++k)
            for (int l = off; l < off + d; ++l)
              pk.riemann(i, j, k, l) = K * (pk.g(i, k) * pk.g(j, l) - pk.g(i, l) * pk.g(j, k));
      off += d;
    }
    finish(pk);
    if (want_bach) pk.bach = bach_parallel(pk);
    return pk;
  }
  if (const auto* w = std::get_if<WarpedRadial>(&kind)) {
    const auto& fib = underlying_geometry(w->fiber).kind();
    double kappa = 0.0;
    if (const auto* fs = std::get_if<RoundSphere>(&fib)) {
      kappa = 1.0 / (fs->radius * fs->radius);
    } else if (!std::get_if<FlatTorus>(&fib)) {
      return std::nullopt;
    }
    CurvaturePack pk = start();
    const double r = p[0];
    const double f = w->warp.value(r);
    const double f1 = w->warp.derivative(r, 1);
    const double f2 = w->warp.derivative(r, 2);
    const double k_rad = -f2 / f;
    const double k_tan = (kappa - f1 * f1) / (f * f);
    const Matrix& g = pk.g;
    pk.riemann = constant_curvature(g, k_tan);
    // N = dr is a unit covector; only N_0 = 1 is nonzero.
    const double dk = k_rad - k_tan;
    auto Nv = [](int i) { return i == 0 ? 1.0 : 0.0; };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            const double t = g(i, k) * Nv(j) * Nv(l) + Nv(i) * Nv(k) * g(j, l) -
                             g(i, l) * Nv(j) * Nv(k) - Nv(i) * Nv(l) * g(j, k);
            if (t != 0.0) pk.riemann(i, j, k, l) += dk * t;
          }
    finish(pk);
    // Warped products over space forms are locally conformally flat.
    if (want_bach) {
      if (n < 3) fail(ErrorKind::DimensionTooSmall, "Bach tensor needs n >= 3");
      pk.bach = Matrix::Zero(n, n);
    }
    return pk;
  }
  if (const auto* e = std::get_if<EinsteinModel>(&kind)) {
    auto pk = fast_pack(e->base, p, false);
    if (!pk) return std::nullopt;
    if (want_bach) {
      if (n < 3) fail(ErrorKind::DimensionTooSmall, "Bach tensor needs n >= 3");
      pk->bach = Matrix::Zero(n, n);
    }
    return pk;
  }
  return std::nullopt;
}

}  // namespace

CurvaturePack curvature_pack(const ModelMetric& m, const Point& p, CurvatureRequest req) {
  if (static_cast<int>(p.size()) != m.dim())
    fail(ErrorKind::InvalidRange, "point has wrong number of coordinates");
  if (req.path == CurvaturePath::Auto) {
    if (auto pk = fast_pack(m, p, req.bach)) return *pk;
  }
  return chart_pack(m, p, req.bach);
}

SchoutenWeylBach schouten_weyl_bach(const ModelMetric& m, const Point& p) {
  if (m.dim() < 3) fail(ErrorKind::DimensionTooSmall, "Schouten tensor needs n >= 3");
  CurvaturePack pk = curvature_pack(m, p, {.bach = true});
  return {pk.schouten, pk.weyl, *pk.bach};
}

double sigma_k_endomorphism(const Matrix& A, int k) {
  const int n = static_cast<int>(A.rows());
  if (k < 0 || k > n) fail(ErrorKind::KOutOfRange, "sigma_k needs 0 <= k <= n");
  if (k == 0) return 1.0;
  std::vector<double> ptr(static_cast<std::size_t>(k + 1), 0.0);
  Matrix power = Matrix::Identity(n, n);
  for (int i = 1; i <= k; ++i) {
    power = power * A;
    ptr[static_cast<std::size_t>(i)] = power.trace();
  }
  std::vector<double> e(static_cast<std::size_t>(k + 1), 0.0);
  e[0] = 1.0;
  for (int j = 1; j <= k; ++j) {
    double s = 0.0;
    for (int i = 1; i <= j; ++i) {
      const double sign = (i % 2 == 1) ? 1.0 : -1.0;
      s += sign * e[static_cast<std::size_t>(j - i)] * ptr[static_cast<std::size_t>(i)];
    }
    e[static_cast<std::size_t>(j)] = s / j;
  }
  return e[static_cast<std::size_t>(k)];
}

double sigma_k(const Matrix& P, const Matrix& g, int k) {
  return sigma_k_endomorphism(g.ldlt().solve(P), k);
}

double PackResiduals::max() const {
  return std::max({ricci_trace, schouten_trace, weyl_trace, antisymmetry, pair_exchange, bianchi});
}

PackResiduals pack_residuals(const CurvaturePack& pk) {
  const int n = static_cast<int>(pk.g.rows());
  PackResiduals r;
  const double scale = std::max(1.0, pk.riemann.max_abs());
  r.ricci_trace = std::abs(pk.g_inv.cwiseProduct(pk.ricci).sum() - pk.scalar) / scale;
  if (n >= 3) {
    r.schouten_trace =
        std::abs(pk.g_inv.cwiseProduct(pk.schouten).sum() - pk.scalar / (2.0 * (n - 1))) / scale;
  }
  for (int j = 0; j < n; ++j)
    for (int l = 0; l < n; ++l) {
      double tr_ik = 0.0;
      double tr_ij = 0.0;
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          tr_ik += pk.g_inv(i, k) * pk.weyl(i, j, k, l);
          tr_ij += pk.g_inv(i, k) * pk.weyl(i, k, j, l);
        }
      r.weyl_trace = std::max({r.weyl_trace, std::abs(tr_ik) / scale, std::abs(tr_ij) / scale});
    }
  const Tensor4& R = pk.riemann;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          const double v = R(i, j, k, l);
          r.antisymmetry = std::max({r.antisymmetry, std::abs(v + R(j, i, k, l)) / scale,
                                     std::abs(v + R(i, j, l, k)) / scale});
          r.pair_exchange = std::max(r.pair_exchange, std::abs(v - R(k, l, i, j)) / scale);
          r.bianchi =
              std::max(r.bianchi, std::abs(v + R(i, k, l, j) + R(i, l, j, k)) / scale);
        }
  return r;
}

void verify_einstein(const ModelMetric& m, double a) {
  const int n = m.dim();
  std::mt19937_64 rng(0x5eed5eedULL);
  const double target = 2.0 * a * (n - 1);
  for (int s = 0; s < 8; ++s) {
    const Point p = m.sample_point(rng);
    const CurvaturePack pk = curvature_pack(m, p, {.bach = false, .path = CurvaturePath::Chart});
    const Matrix diff = pk.ricci - target * pk.g;
    const double scale = std::max({1.0, std::abs(target) * pk.g.cwiseAbs().maxCoeff(),
                                   pk.ricci.cwiseAbs().maxCoeff()});
    const double err = diff.cwiseAbs().maxCoeff() / scale;
    if (!(err <= 1e-10)) {
      std::ostringstream os;
      os << "Ric - 2a(n-1)g = " << err << " (relative) at sample " << s << " for " << m.label();
      fail(ErrorKind::NotEinstein, os.str());
    }
  }
}

}  // namespace rvol
