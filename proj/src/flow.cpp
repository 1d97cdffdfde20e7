#include "rvol/flow.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <sstream>

#include "rvol/curvature.hpp"
#include "rvol/errors.hpp"
#include "rvol/parallel.hpp"
#include "rvol/quadrature.hpp"
#include "rvol/spectral.hpp"
#include "rvol/variation.hpp"

namespace rvol {

namespace {

using cplx = std::complex<double>;
constexpr double two_pi = 2.0 * std::numbers::pi;

// FFTW planning is not thread-safe.
std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

class FlowDiscretization {
 public:
  enum class Kind { Torus, Sphere };

  FlowDiscretization(Kind k, ModelMetric m) : kind(k), base(std::move(m)), n(base.dim()) {}

  Kind kind;
  ModelMetric base;
  int n = 0;
  double lambda_max = 0.0;

  // Torus
  std::vector<double> periods;
  int N = 0;
  std::size_t points = 0;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<std::vector<double>> wave;  // per coordinate, 2 pi m / L per index
  std::vector<std::vector<bool>> nyquist;

  // Sphere
  std::shared_ptr<SpectralBasis> basis;
  std::vector<Point> nodes;
  Vector weights;  // quadrature weight times round density
  Matrix Y;        // nodes x basis

  ~FlowDiscretization() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }

  std::vector<int> multi_index(std::size_t flat) const {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int d = n - 1; d >= 0; --d) {
      idx[static_cast<std::size_t>(d)] = static_cast<int>(flat % static_cast<std::size_t>(N));
      flat /= static_cast<std::size_t>(N);
    }
    return idx;
  }

  double cell() const {
    double c = 1.0;
    for (double L : periods) c *= L / N;
    return c;
  }

  std::size_t node_count() const { return kind == Kind::Torus ? points : nodes.size(); }

  double node_weight(std::size_t j) const { return kind == Kind::Torus ? cell() : weights(static_cast<Eigen::Index>(j)); }

  Vector omega_nodes(const Vector& w) const {
    if (kind == Kind::Torus) return w;
    return Vector::Constant(Y.rows(), w(0)) + Y * w.tail(w.size() - 1);
  }

  std::vector<cplx> fft(const Vector& f) const {
    std::vector<cplx> in(points), out(points);
    for (std::size_t j = 0; j < points; ++j) in[j] = f(static_cast<Eigen::Index>(j));
    fftw_execute_dft(forward, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
    return out;
  }

  // Real part of the inverse transform of coef * multiplier(index).
  template <class F>
  Vector ifft(const std::vector<cplx>& coef, F&& mult) const {
    std::vector<cplx> in(points), out(points);
    for (std::size_t j = 0; j < points; ++j) in[j] = coef[j] * mult(multi_index(j));
    fftw_execute_dft(backward, reinterpret_cast<fftw_complex*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
    Vector r(static_cast<Eigen::Index>(points));
    for (std::size_t j = 0; j < points; ++j) r(static_cast<Eigen::Index>(j)) = out[j].real() / static_cast<double>(points);
    return r;
  }

  // v_k of e^{2w} delta from the conformal Schouten tensor
  // P = -Hess w + dw dw - |dw|^2 g / 2; the metric is locally conformally
  // flat, so v_k = sigma_k(g^{-1} P).
  Vector torus_vk(const Vector& w, int k) const {
    const auto coef = fft(w);
    std::vector<Vector> grad(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a)
      grad[static_cast<std::size_t>(a)] = ifft(coef, [&](const std::vector<int>& idx) {
        const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
        if (nyquist[static_cast<std::size_t>(a)][i]) return cplx(0.0);
        return cplx(0.0, wave[static_cast<std::size_t>(a)][i]);
      });
    std::vector<Vector> hess(static_cast<std::size_t>(n * n));
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        hess[static_cast<std::size_t>(a * n + b)] = ifft(coef, [&](const std::vector<int>& idx) {
          const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
          const auto j = static_cast<std::size_t>(idx[static_cast<std::size_t>(b)]);
          const double ka = wave[static_cast<std::size_t>(a)][i];
          if (a == b) return cplx(-ka * ka);
          if (nyquist[static_cast<std::size_t>(a)][i] || nyquist[static_cast<std::size_t>(b)][j]) return cplx(0.0);
          return cplx(-ka * wave[static_cast<std::size_t>(b)][j]);
        });
        hess[static_cast<std::size_t>(b * n + a)] = hess[static_cast<std::size_t>(a * n + b)];
      }
    Vector v(static_cast<Eigen::Index>(points));
    parallel_for(points, [&](std::size_t j) {
      const auto J = static_cast<Eigen::Index>(j);
      Matrix A(n, n);
      double g2 = 0.0;
      for (int a = 0; a < n; ++a) g2 += grad[static_cast<std::size_t>(a)](J) * grad[static_cast<std::size_t>(a)](J);
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          A(a, b) = -hess[static_cast<std::size_t>(a * n + b)](J) +
                    grad[static_cast<std::size_t>(a)](J) * grad[static_cast<std::size_t>(b)](J) - (a == b ? 0.5 * g2 : 0.0);
      A *= std::exp(-2.0 * w(J));
      v(J) = sigma_k_endomorphism(A, k);
    });
    return v;
  }

  Vector sphere_vk(const Vector& w, int k) const {
    const ModelMetric g = ModelMetric::conformal(underlying_geometry(base), field(w));
    Vector v(static_cast<Eigen::Index>(nodes.size()));
    parallel_for(nodes.size(), [&](std::size_t j) { v(static_cast<Eigen::Index>(j)) = vk_at(g, nodes[j], k); });
    return v;
  }

  Vector vk(const Vector& w, int k) const { return kind == Kind::Torus ? torus_vk(w, k) : sphere_vk(w, k); }

  ScalarField field(const Vector& w) const {
    if (kind == Kind::Sphere) return ScalarField::constant(w(0)) + basis->combination(w.tail(w.size() - 1));
    // Trigonometric interpolant from the retained Fourier modes.
    const auto coef = fft(w);
    double top = 0.0;
    for (const auto& c : coef) top = std::max(top, std::abs(c));
    struct Mode {
      std::vector<double> freq;
      cplx c;
    };
    auto modes = std::make_shared<std::vector<Mode>>();
    for (std::size_t j = 0; j < points; ++j) {
      if (std::abs(coef[j]) <= 1e-15 * top) continue;
      const auto idx = multi_index(j);
      Mode m{std::vector<double>(static_cast<std::size_t>(n)), coef[j] / static_cast<double>(points)};
      for (int a = 0; a < n; ++a) {
        const int i = idx[static_cast<std::size_t>(a)];
        const int s = i <= N / 2 ? i : i - N;
        m.freq[static_cast<std::size_t>(a)] = two_pi * s / periods[static_cast<std::size_t>(a)];
      }
      modes->push_back(std::move(m));
    }
    const int dims = n;
    return ScalarField(
        [modes, dims](std::span<const Jet> x) {
          Jet acc(x[0].space(), 0.0);
          for (const auto& m : *modes) {
            Jet theta(x[0].space(), 0.0);
            for (int a = 0; a < dims; ++a)
              if (m.freq[static_cast<std::size_t>(a)] != 0.0) theta += x[static_cast<std::size_t>(a)] * m.freq[static_cast<std::size_t>(a)];
            acc += cos(theta) * m.c.real() - sin(theta) * m.c.imag();
          }
          return acc;
        },
        false, "fourier");
  }

  double volume(const Vector& w) const {
    const Vector wn = omega_nodes(w);
    double v = 0.0;
    for (Eigen::Index j = 0; j < wn.size(); ++j) v += node_weight(static_cast<std::size_t>(j)) * std::exp(n * wn(j));
    return v;
  }
};

namespace {

std::shared_ptr<FlowDiscretization> make_torus(const ModelMetric& m, const FlatTorus& t, const FlowOptions& opt) {
  if (opt.grid < 4) fail(ErrorKind::InvalidRange, "torus grid needs at least 4 points per coordinate");
  auto d = std::make_shared<FlowDiscretization>(FlowDiscretization::Kind::Torus, m);
  d->periods = t.periods;
  d->N = opt.grid;
  d->points = 1;
  for (int a = 0; a < d->n; ++a) d->points *= static_cast<std::size_t>(d->N);
  for (int a = 0; a < d->n; ++a) {
    std::vector<double> w(static_cast<std::size_t>(d->N));
    std::vector<bool> ny(static_cast<std::size_t>(d->N), false);
    for (int i = 0; i < d->N; ++i) {
      const int s = i <= d->N / 2 ? i : i - d->N;
      w[static_cast<std::size_t>(i)] = two_pi * s / t.periods[static_cast<std::size_t>(a)];
      ny[static_cast<std::size_t>(i)] = d->N % 2 == 0 && i == d->N / 2;
    }
    const double kmax = std::numbers::pi * d->N / t.periods[static_cast<std::size_t>(a)];
    d->lambda_max += kmax * kmax;
    d->wave.push_back(std::move(w));
    d->nyquist.push_back(std::move(ny));
  }
  std::vector<int> dims(static_cast<std::size_t>(d->n), d->N);
  std::vector<cplx> buf(d->points);
  auto* p = reinterpret_cast<fftw_complex*>(buf.data());
  std::lock_guard<std::mutex> lock(plan_mutex());
  d->forward = fftw_plan_dft(d->n, dims.data(), p, p, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  d->backward = fftw_plan_dft(d->n, dims.data(), p, p, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  return d;
}

std::shared_ptr<FlowDiscretization> make_sphere(const ModelMetric& m, const FlowOptions& opt) {
  auto d = std::make_shared<FlowDiscretization>(FlowDiscretization::Kind::Sphere, m);
  SpectralOptions so;
  so.lmax = opt.sphere_lmax;
  d->basis = std::make_shared<SpectralBasis>(spectral_basis(m, so));
  d->lambda_max = d->basis->eigenvalues().maxCoeff();
  const int q = opt.sphere_nodes > 0 ? opt.sphere_nodes : 2 * opt.sphere_lmax + 4;
  std::vector<QuadratureRule> rules;
  for (const auto& r : m.domain())
    rules.push_back(r.periodic ? periodic_rule(2 * q, r.lo, r.hi - r.lo) : gauss_legendre(q, r.lo, r.hi));
  std::vector<std::size_t> idx(rules.size(), 0);
  std::vector<double> w;
  for (;;) {
    Point p(rules.size());
    double wt = 1.0;
    for (std::size_t c = 0; c < rules.size(); ++c) {
      p[c] = rules[c].nodes[idx[c]];
      wt *= rules[c].weights[idx[c]];
    }
    d->nodes.push_back(p);
    w.push_back(wt * volume_density(m, p));
    std::size_t c = 0;
    for (; c < rules.size(); ++c) {
      if (++idx[c] < rules[c].nodes.size()) break;
      idx[c] = 0;
    }
    if (c == rules.size()) break;
  }
  d->weights = Eigen::Map<Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  d->Y.resize(static_cast<Eigen::Index>(d->nodes.size()), static_cast<Eigen::Index>(d->basis->size()));
  parallel_for(d->nodes.size(), [&](std::size_t j) {
    for (std::size_t i = 0; i < d->basis->size(); ++i)
      d->Y(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = d->basis->value(i, d->nodes[j]);
  });
  return d;
}

void check_k(int n, int k) {
  if (k < 1 || k > 3) fail(ErrorKind::KOutOfRange, "flows need 1 <= k <= 3");
  if (k > n) fail(ErrorKind::KOutOfRange, "k exceeds the dimension");
  if (k == 3 && n == 4) fail(ErrorKind::DimensionFour, "v_3 has no direct formula in dimension 4");
  if (2 * k == n) fail(ErrorKind::HalfDimension, "F_{n/2} is conformally invariant; the flow does not move");
}

void refresh(FlowState& s) {
  const FlowDiscretization& d = *s.disc;
  s.volume = d.volume(s.omega);
  s.vk = d.vk(s.omega, s.k);
  const Vector wn = d.omega_nodes(s.omega);
  double mass = 0.0, first = 0.0, base_mass = 0.0, wsum = 0.0;
  for (Eigen::Index j = 0; j < wn.size(); ++j) {
    const double bw = d.node_weight(static_cast<std::size_t>(j));
    const double dv = bw * std::exp(d.n * wn(j));
    mass += dv;
    first += dv * s.vk(j);
    base_mass += bw;
    wsum += bw * wn(j);
  }
  s.mean = first / mass;
  double var = 0.0, sup = 0.0;
  for (Eigen::Index j = 0; j < wn.size(); ++j) {
    const double dv = d.node_weight(static_cast<std::size_t>(j)) * std::exp(d.n * wn(j));
    const double dev = s.vk(j) - s.mean;
    var += dv * dev * dev;
    sup = std::max(sup, std::abs(dev));
  }
  s.variance = var / mass;
  s.sup_defect = sup;
  s.omega_mean = wsum / base_mass;
}

// Constant shift restoring the target volume.
void renormalize(const FlowDiscretization& d, Vector& w, double target) {
  const double shift = std::log(d.volume(w) / target) / d.n;
  if (d.kind == FlowDiscretization::Kind::Torus)
    w.array() -= shift;
  else
    w(0) -= shift;
}

}  // namespace

int FlowState::n() const { return disc->n; }
const ModelMetric& FlowState::base() const { return disc->base; }
Vector FlowState::omega_nodes() const { return disc->omega_nodes(omega); }

FlowState flow_initial(const ModelMetric& m, int k, const ScalarField& omega0, const FlowOptions& opt) {
  check_k(m.dim(), k);
  const ModelMetric& geo = underlying_geometry(m);
  std::shared_ptr<FlowDiscretization> d;
  if (const auto* t = std::get_if<FlatTorus>(&geo.kind()))
    d = make_torus(m, *t, opt);
  else if (std::holds_alternative<RoundSphere>(geo.kind()))
    d = make_sphere(m, opt);
  else
    fail(ErrorKind::InvalidRange, "flows are implemented on flat tori and round spheres, not " + m.label());
  FlowState s;
  s.disc = d;
  s.k = k;
  if (d->kind == FlowDiscretization::Kind::Torus) {
    s.omega.resize(static_cast<Eigen::Index>(d->points));
    parallel_for(d->points, [&](std::size_t j) {
      const auto idx = d->multi_index(j);
      Point p(static_cast<std::size_t>(d->n));
      for (int a = 0; a < d->n; ++a)
        p[static_cast<std::size_t>(a)] = d->periods[static_cast<std::size_t>(a)] * idx[static_cast<std::size_t>(a)] / d->N;
      s.omega(static_cast<Eigen::Index>(j)) = omega0.value(p);
    });
  } else {
    // L2 projection onto constants and the orthonormal harmonics.
    Vector w0(static_cast<Eigen::Index>(d->nodes.size()));
    for (std::size_t j = 0; j < d->nodes.size(); ++j) w0(static_cast<Eigen::Index>(j)) = omega0.value(d->nodes[j]);
    s.omega.resize(1 + d->Y.cols());
    s.omega(0) = d->weights.dot(w0) / d->weights.sum();
    s.omega.tail(d->Y.cols()) = d->Y.transpose() * d->weights.cwiseProduct(w0);
  }
  // The flow keeps the volume of the initial metric.
  s.target_volume = d->volume(s.omega);
  refresh(s);
  return s;
}

FlowState flow_step(const FlowState& s, double dt) {
  if (!(dt > 0.0)) fail(ErrorKind::InvalidRange, "flow step needs dt > 0");
  const FlowDiscretization& d = *s.disc;
  const double sgn = d.n > 2 * s.k ? 1.0 : -1.0;
  FlowState t = s;
  const Vector dev = s.vk.array() - s.mean;
  if (d.kind == FlowDiscretization::Kind::Torus) {
    t.omega = s.omega - dt * sgn * dev;
  } else {
    // Harmonic part of the deviation; the constant is fixed by the volume.
    t.omega.tail(d.Y.cols()) -= dt * sgn * (d.Y.transpose() * d.weights.cwiseProduct(dev));
  }
  renormalize(d, t.omega, s.target_volume);
  refresh(t);
  if (std::abs(t.volume - t.target_volume) > 1e-10 * t.target_volume) {
    std::ostringstream os;
    os << "volume renormalization missed by " << std::abs(t.volume - t.target_volume) / t.target_volume;
    fail(ErrorKind::StepRejected, os.str());
  }
  if (t.variance > s.variance) {
    std::ostringstream os;
    os << "variance of v_k grew from " << s.variance << " to " << t.variance << " at dt = " << dt;
    fail(ErrorKind::StepRejected, os.str());
  }
  t.step = s.step + 1;
  return t;
}

ScalarField flow_field(const FlowState& s) { return s.disc->field(s.omega); }

ModelMetric flow_metric(const FlowState& s) {
  return ModelMetric::conformal(underlying_geometry(s.disc->base), flow_field(s));
}

FlowReport run_flow(const ModelMetric& m, int k, const ScalarField& omega0, const FlowOptions& opt) {
  FlowState s = flow_initial(m, k, omega0, opt);
  const double v0 = s.target_volume;
  double dt = opt.dt0 > 0.0 ? opt.dt0 : 1.0 / s.disc->lambda_max;
  const double dt_min = dt * opt.dt_min_ratio;
  FlowReport r;
  r.history.push_back({0, 0.0, s.variance, s.sup_defect, 0.0});
  while (s.sup_defect >= opt.tol && r.accepted < opt.max_steps) {
    try {
      s = flow_step(s, dt);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::StepRejected) throw;
      ++r.rejected;
      dt *= 0.5;
      if (dt < dt_min) {
        std::ostringstream os;
        os << "step size fell below " << dt_min << " after " << r.accepted << " accepted steps; sup |v_k - mean| = "
           << s.sup_defect;
        r.diagnostic = os.str();
        break;
      }
      continue;
    }
    ++r.accepted;
    const double drift = std::abs(s.volume - v0) / v0;
    r.max_volume_drift = std::max(r.max_volume_drift, drift);
    r.history.push_back({s.step, dt, s.variance, s.sup_defect, drift});
    dt *= opt.growth;
  }
  r.converged = s.sup_defect < opt.tol;
  if (!r.converged && !r.diagnostic) {
    std::ostringstream os;
    os << "no convergence within " << opt.max_steps << " steps; sup |v_k - mean| = " << s.sup_defect;
    r.diagnostic = os.str();
  }
  r.final_constant = s.mean;
  r.final_state = std::move(s);
  return r;
}

void require_converged(const FlowReport& r) {
  if (!r.converged) fail(ErrorKind::NoConvergence, r.diagnostic.value_or("flow did not converge"));
}

}  // namespace rvol
