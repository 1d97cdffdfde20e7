#include "rvol/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rvol/errors.hpp"
#include "rvol/parallel.hpp"

namespace rvol {

namespace {

// Reference rule on [-1, 1] by Newton iteration on P_n.
const QuadratureRule& reference_rule(int n) {
  static std::map<int, QuadratureRule> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return cache.emplace(n, std::move(rule)).first->second;
}

struct GridResult {
  double value;
  double abs_value;
};

GridResult product_grid(const ModelMetric& m, const PointFunction& f, int nodes) {
  const auto domain = m.domain();
  const std::size_t d = domain.size();
  std::vector<QuadratureRule> rules;
  rules.reserve(d);
  std::size_t total = 1;
  for (const auto& r : domain) {
    rules.push_back(r.periodic ? periodic_rule(nodes, r.lo, r.hi - r.lo)
                               : gauss_legendre(nodes, r.lo, r.hi));
    total *= static_cast<std::size_t>(nodes);
  }
  // Split the outermost coordinate across workers.
  const auto outer = static_cast<std::size_t>(nodes);
  std::vector<double> partial(outer, 0.0);
  std::vector<double> partial_abs(outer, 0.0);
  const std::size_t inner = total / outer;
  parallel_for(outer, [&](std::size_t i0) {
    Point p(d);
    double sum = 0.0;
    double sum_abs = 0.0;
    for (std::size_t it = 0; it < inner; ++it) {
      std::size_t rem = it;
      double w = rules[0].weights[i0];
      p[0] = rules[0].nodes[i0];
      for (std::size_t c = d; c-- > 1;) {
        const std::size_t ic = rem % outer;
        rem /= outer;
        p[c] = rules[c].nodes[ic];
        w *= rules[c].weights[ic];
      }
      const double v = f(p) * volume_density(m, p) * w;
      sum += v;
      sum_abs += std::abs(v);
    }
    partial[i0] = sum;
    partial_abs[i0] = sum_abs;
  });
  GridResult res{0.0, 0.0};
  for (std::size_t i = 0; i < outer; ++i) {
    res.value += partial[i];
    res.abs_value += partial_abs[i];
  }
  return res;
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  const QuadratureRule& ref = reference_rule(n);
  QuadratureRule r;
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < ref.nodes.size(); ++i) {
    r.nodes.push_back(mid + half * ref.nodes[i]);
    r.weights.push_back(half * ref.weights[i]);
  }
  return r;
}

QuadratureRule periodic_rule(int n, double a, double period) {
  QuadratureRule r;
  for (int i = 0; i < n; ++i) {
    r.nodes.push_back(a + period * i / n);
    r.weights.push_back(period / n);
  }
  return r;
}

double integrate_1d(const std::function<double(double)>& f, double a, double b, double rel_tol,
                    double abs_tol) {
  double err = 0.0;
  if (abs_tol > 0.0) {
    double l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 0, rel_tol, &err, &l1);
    if (l1 <= abs_tol) return v;
  }
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, rel_tol, &err);
}

double volume_density(const ModelMetric& m, const Point& p) {
  const Matrix g = m.metric(p);
  Eigen::LDLT<Matrix> ldlt(g);
  double det = 1.0;
  for (Eigen::Index i = 0; i < g.rows(); ++i) det *= ldlt.vectorD()(i);
  return std::sqrt(std::max(det, 0.0));
}

double integrate(const ModelMetric& m, const PointFunction& f, const IntegrationOptions& opt) {
  const int d = m.dim();
  int nodes = opt.initial_nodes;
  GridResult prev = product_grid(m, f, nodes);
  for (;;) {
    const int next_nodes = 2 * nodes;
    if (std::pow(static_cast<double>(next_nodes), d) > static_cast<double>(opt.max_points)) {
      std::ostringstream os;
      os << "product grid for " << m.label() << " did not converge before " << opt.max_points
         << " points";
      fail(ErrorKind::GridResolutionInsufficient, os.str());
    }
    GridResult cur = product_grid(m, f, next_nodes);
    const double scale = std::max(std::abs(cur.value), 1e-3 * cur.abs_value);
    if (std::abs(cur.value - prev.value) <= opt.rel_tol * scale ||
        std::abs(cur.value - prev.value) <= opt.abs_tol ||
        std::abs(cur.value - prev.value) <= 1e-15 * cur.abs_value)
      return cur.value;
    prev = cur;
    nodes = next_nodes;
  }
}

double integrate(const ModelMetric& m, const ScalarField& f, const IntegrationOptions& opt) {
  if (f.radial()) {
    if (std::get_if<WarpedRadial>(&underlying_geometry(m).kind())) {
      // Radial fields only read coordinate 0.
      std::vector<double> p(static_cast<std::size_t>(m.dim()), 0.0);
      return integrate_radial(
          m,
          [&](double r) {
            p[0] = r;
            return f.value(p);
          },
          opt);
    }
  }
  return integrate(m, PointFunction([&](const Point& p) { return f.value(p); }), opt);
}

double volume(const ModelMetric& m) {
  if (auto v = m.closed_form_volume()) return *v;
  const auto& base = underlying_geometry(m);
  if (std::get_if<WarpedRadial>(&base.kind()))
    return integrate_radial(base, [](double) { return 1.0; });
  return integrate(m, PointFunction([](const Point&) { return 1.0; }));
}

double integrate_radial(const ModelMetric& warped, const std::function<double(double)>& h,
                        const IntegrationOptions& opt) {
  const auto* w = std::get_if<WarpedRadial>(&underlying_geometry(warped).kind());
  if (w == nullptr) fail(ErrorKind::InvalidRange, "integrate_radial needs a warped model");
  const int n = warped.dim();
  const double fiber_volume = volume(w->fiber);
  auto eval = [&](int nodes) {
    const QuadratureRule rule = gauss_legendre(nodes, w->r_min, w->r_max);
    GridResult res{0.0, 0.0};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double r = rule.nodes[i];
      const double v = h(r) * std::pow(w->warp.value(r), n - 1) * rule.weights[i];
      res.value += v;
      res.abs_value += std::abs(v);
    }
    return res;
  };
  int nodes = opt.radial_nodes;
  GridResult prev = eval(nodes);
  for (int doubling = 0; doubling < 5; ++doubling) {
    nodes *= 2;
    GridResult cur = eval(nodes);
    const double diff = std::abs(cur.value - prev.value);
    if (diff <= opt.rel_tol * std::abs(cur.value) || diff <= 1e-15 * cur.abs_value)
      return fiber_volume * cur.value;
    prev = cur;
  }
  fail(ErrorKind::GridResolutionInsufficient,
       "radial quadrature for " + warped.label() + " did not converge");
}

}  // namespace rvol
