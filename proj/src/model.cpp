#include "rvol/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "rvol/curvature.hpp"
#include "rvol/errors.hpp"

namespace rvol {

ScalarField::ScalarField()
    : fn_([](std::span<const Jet> x) { return Jet(x[0].space(), 0.0); }), radial_(true), label_("0") {}

ScalarField::ScalarField(Fn fn, bool radial, std::string label)
    : fn_(std::move(fn)), radial_(radial), label_(std::move(label)) {}

ScalarField ScalarField::constant(double c) {
  return ScalarField([c](std::span<const Jet> x) { return Jet(x[0].space(), c); }, true,
                     std::to_string(c));
}

double ScalarField::value(std::span<const double> p) const {
  const JetSpace& space = JetSpace::get(static_cast<int>(p.size()), 0);
  std::vector<Jet> x;
  x.reserve(p.size());
  for (double v : p) x.emplace_back(space, v);
  return fn_(x).value();
}

ScalarField ScalarField::scaled(double s) const {
  auto fn = fn_;
  return ScalarField([fn, s](std::span<const Jet> x) { return fn(x) * s; }, radial_, label_);
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  auto fa = a.fn_;
  auto fb = b.fn_;
  return ScalarField([fa, fb](std::span<const Jet> x) { return fa(x) + fb(x); },
                     a.radial_ && b.radial_, a.label_ + "+" + b.label_);
}

// ---------------------------------------------------------------------------

WarpFunction WarpFunction::polynomial(std::vector<double> coefficients) {
  auto c = coefficients;
  Fn fn = [c](const Jet& r) {
    Jet acc(r.space(), c.empty() ? 0.0 : c.back());
    acc = acc.truncated(r.order());
    for (std::size_t i = c.size(); i-- > 1;) {
      acc = acc * r;
      acc += c[i - 1];
    }
    return acc;
  };
  std::ostringstream label;
  label << "poly[";
  for (std::size_t i = 0; i < c.size(); ++i) label << (i ? "," : "") << c[i];
  label << "]";
  return WarpFunction(std::move(fn), std::move(coefficients), label.str());
}

WarpFunction WarpFunction::sinh_profile(double kappa) {
  Fn fn = [kappa](const Jet& r) { return sinh(r * kappa) / kappa; };
  return WarpFunction(std::move(fn), std::nullopt, "sinh(" + std::to_string(kappa) + " r)/k");
}

WarpFunction WarpFunction::custom(Fn fn, std::string label) {
  return WarpFunction(std::move(fn), std::nullopt, std::move(label));
}

double WarpFunction::value(double r) const {
  return fn_(Jet(JetSpace::get(1, 0), r)).value();
}

double WarpFunction::derivative(double r, int k) const {
  const JetSpace& s = JetSpace::get(1, k);
  const int alpha[1] = {k};
  return fn_(Jet::variable(s, 0, r)).derivative(alpha);
}

// ---------------------------------------------------------------------------

double sphere_volume(int n, double radius) {
  const double half = 0.5 * (n + 1);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half) * std::pow(radius, n);
}

namespace {

// Hyperspherical chart (theta_1..theta_{n-1}, phi) on S^n of radius c.
void sphere_metric_block(std::span<const Jet> x, double c, JetMatrix& g, int offset) {
  const int n = static_cast<int>(x.size());
  Jet warp(x[0].space(), c * c);
  for (int j = 0; j < n; ++j) {
    g(offset + j, offset + j) = warp;
    if (j + 1 < n) {
      Jet s = sin(x[static_cast<std::size_t>(j)]);
      warp = warp * (s * s);
    }
  }
}

std::vector<CoordinateRange> sphere_domain(int n) {
  std::vector<CoordinateRange> d;
  for (int j = 0; j + 1 < n; ++j) d.push_back({0.0, std::numbers::pi, false, 0.11});
  d.push_back({0.0, 2.0 * std::numbers::pi, true, 0.0});
  return d;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

ModelMetric ModelMetric::round_sphere(int n, double radius) {
  if (n < 1) fail(ErrorKind::DimensionTooSmall, "round sphere needs n >= 1");
  if (!(radius > 0.0)) fail(ErrorKind::InvalidRange, "round sphere radius must be positive");
  return ModelMetric(std::make_shared<ModelKind>(RoundSphere{n, radius}));
}

ModelMetric ModelMetric::flat_torus(std::vector<double> periods) {
  if (periods.empty()) fail(ErrorKind::DimensionTooSmall, "torus needs at least one period");
  for (double p : periods)
    if (!(p > 0.0)) fail(ErrorKind::InvalidRange, "torus periods must be positive");
  return ModelMetric(std::make_shared<ModelKind>(FlatTorus{std::move(periods)}));
}

ModelMetric ModelMetric::product_of_spheres(std::vector<std::pair<int, double>> factors) {
  if (factors.empty()) fail(ErrorKind::DimensionTooSmall, "product needs factors");
  for (const auto& [d, r] : factors) {
    if (d < 1) fail(ErrorKind::DimensionTooSmall, "sphere factor needs dimension >= 1");
    if (!(r > 0.0)) fail(ErrorKind::InvalidRange, "sphere factor radius must be positive");
  }
  return ModelMetric(std::make_shared<ModelKind>(ProductOfSpheres{std::move(factors)}));
}

ModelMetric ModelMetric::warped_radial(WarpFunction warp, ModelMetric fiber, double r_min,
                                       double r_max) {
  if (!(r_max > r_min)) fail(ErrorKind::InvalidRange, "warped radial interval is empty");
  return ModelMetric(
      std::make_shared<ModelKind>(WarpedRadial{std::move(warp), std::move(fiber), r_min, r_max}));
}

ModelMetric ModelMetric::chart(int n, ChartEvaluator eval, std::vector<CoordinateRange> domain,
                               int max_order, std::string label) {
  if (static_cast<int>(domain.size()) != n)
    fail(ErrorKind::InvalidRange, "chart domain must have one range per coordinate");
  return ModelMetric(std::make_shared<ModelKind>(
      ChartMetric{n, std::move(eval), std::move(domain), max_order, std::move(label)}));
}

ModelMetric ModelMetric::conformal(ModelMetric base, ScalarField omega) {
  return ModelMetric(
      std::make_shared<ModelKind>(ConformalDeformation{std::move(base), std::move(omega)}));
}

ModelMetric ModelMetric::einstein(ModelMetric base, double a) {
  verify_einstein(base, a);
  return ModelMetric(std::make_shared<ModelKind>(EinsteinModel{std::move(base), a}));
}

ModelMetric ModelMetric::einstein_sphere(int n, double radius) {
  return einstein(round_sphere(n, radius), 1.0 / (2.0 * radius * radius));
}

ModelMetric ModelMetric::hyperbolic_ball(int n, double kappa, double ball_radius) {
  if (n < 2) fail(ErrorKind::DimensionTooSmall, "hyperbolic ball needs n >= 2");
  auto ball = warped_radial(WarpFunction::sinh_profile(kappa), round_sphere(n - 1, 1.0), 0.0,
                            ball_radius);
  return einstein(ball, -0.5 * kappa * kappa);
}

ModelMetric ModelMetric::einstein_sphere_product(std::vector<int> dims, double a) {
  if (!(a > 0.0)) fail(ErrorKind::InvalidRange, "sphere products are Einstein only for a > 0");
  int n = 0;
  for (int d : dims) {
    if (d < 2) fail(ErrorKind::InvalidRange, "Einstein sphere products need factor dimension >= 2");
    n += d;
  }
  // Ric of S^p(r) is (p-1)/r^2 g.
  std::vector<std::pair<int, double>> factors;
  for (int d : dims) factors.emplace_back(d, std::sqrt((d - 1) / (2.0 * a * (n - 1))));
  return einstein(product_of_spheres(std::move(factors)), a);
}

ModelMetric ModelMetric::einstein_with_constant(int n, double a) {
  if (a > 0.0) return einstein_sphere(n, 1.0 / std::sqrt(2.0 * a));
  if (a < 0.0) return hyperbolic_ball(n, std::sqrt(-2.0 * a), 1.0);
  return einstein(flat_torus(std::vector<double>(static_cast<std::size_t>(n), 1.0)), 0.0);
}

const ModelKind& ModelMetric::kind() const { return *kind_; }

int ModelMetric::dim() const {
  return std::visit(overloaded{
                        [](const RoundSphere& s) { return s.n; },
                        [](const FlatTorus& t) { return static_cast<int>(t.periods.size()); },
                        [](const ProductOfSpheres& p) {
                          int n = 0;
                          for (const auto& f : p.factors) n += f.first;
                          return n;
                        },
                        [](const WarpedRadial& w) { return 1 + w.fiber.dim(); },
                        [](const ChartMetric& c) { return c.n; },
                        [](const ConformalDeformation& c) { return c.base.dim(); },
                        [](const EinsteinModel& e) { return e.base.dim(); },
                    },
                    static_cast<const ModelKind::variant&>(*kind_));
}

std::string ModelMetric::label() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const RoundSphere& s) { os << "S^" << s.n << "(r=" << s.radius << ")"; },
                 [&](const FlatTorus& t) {
                   os << "T^" << t.periods.size() << "[";
                   for (std::size_t i = 0; i < t.periods.size(); ++i)
                     os << (i ? "," : "") << t.periods[i];
                   os << "]";
                 },
                 [&](const ProductOfSpheres& p) {
                   for (std::size_t i = 0; i < p.factors.size(); ++i)
                     os << (i ? "x" : "") << "S^" << p.factors[i].first << "(r="
                        << p.factors[i].second << ")";
                 },
                 [&](const WarpedRadial& w) {
                   os << "dr^2+f(r)^2 " << w.fiber.label() << " f=" << w.warp.label() << " r in ["
                      << w.r_min << "," << w.r_max << "]";
                 },
                 [&](const ChartMetric& c) { os << "chart:" << c.label; },
                 [&](const ConformalDeformation& c) {
                   os << "exp(2w)(" << c.base.label() << ")";
                 },
                 [&](const EinsteinModel& e) {
                   os << "Einstein[a=" << e.a << "](" << e.base.label() << ")";
                 },
             },
             static_cast<const ModelKind::variant&>(*kind_));
  return os.str();
}

JetMatrix ModelMetric::metric_jet(std::span<const Jet> x) const {
  const int n = dim();
  if (static_cast<int>(x.size()) != n) throw std::invalid_argument("metric_jet: wrong coordinate count");
  const Jet zero(x[0].space(), 0.0);
  return std::visit(
      overloaded{
          [&](const RoundSphere& s) {
            JetMatrix g(n, zero);
            sphere_metric_block(x, s.radius, g, 0);
            return g;
          },
          [&](const FlatTorus&) {
            JetMatrix g(n, zero);
            for (int i = 0; i < n; ++i) g(i, i) = Jet(x[0].space(), 1.0);
            return g;
          },
          [&](const ProductOfSpheres& p) {
            JetMatrix g(n, zero);
            int offset = 0;
            for (const auto& [d, r] : p.factors) {
              sphere_metric_block(x.subspan(static_cast<std::size_t>(offset), static_cast<std::size_t>(d)),
                                  r, g, offset);
              offset += d;
            }
            return g;
          },
          [&](const WarpedRadial& w) {
            JetMatrix g(n, zero);
            g(0, 0) = Jet(x[0].space(), 1.0);
            Jet f = w.warp(x[0]);
            Jet f2 = f * f;
            JetMatrix h = w.fiber.metric_jet(x.subspan(1));
            for (int a = 0; a + 1 < n; ++a)
              for (int b = 0; b + 1 < n; ++b) g(a + 1, b + 1) = f2 * h(a, b);
            return g;
          },
          [&](const ChartMetric& c) { return c.eval(x); },
          [&](const ConformalDeformation& c) {
            JetMatrix g = c.base.metric_jet(x);
            Jet e = exp(c.omega(x) * 2.0);
            for (int i = 0; i < n; ++i)
              for (int j = 0; j < n; ++j) g(i, j) = e * g(i, j);
            return g;
          },
          [&](const EinsteinModel& e) { return e.base.metric_jet(x); },
      },
      static_cast<const ModelKind::variant&>(*kind_));
}

Matrix ModelMetric::metric(std::span<const double> p) const {
  const JetSpace& space = JetSpace::get(dim(), 0);
  std::vector<Jet> x;
  x.reserve(p.size());
  for (double v : p) x.emplace_back(space, v);
  return metric_jet(x).values();
}

std::vector<CoordinateRange> ModelMetric::domain() const {
  return std::visit(
      overloaded{
          [](const RoundSphere& s) { return sphere_domain(s.n); },
          [](const FlatTorus& t) {
            std::vector<CoordinateRange> d;
            for (double p : t.periods) d.push_back({0.0, p, true, 0.0});
            return d;
          },
          [](const ProductOfSpheres& p) {
            std::vector<CoordinateRange> d;
            for (const auto& f : p.factors) {
              auto block = sphere_domain(f.first);
              d.insert(d.end(), block.begin(), block.end());
            }
            return d;
          },
          [](const WarpedRadial& w) {
            std::vector<CoordinateRange> d{{w.r_min, w.r_max, false, 0.05}};
            auto fiber = w.fiber.domain();
            d.insert(d.end(), fiber.begin(), fiber.end());
            return d;
          },
          [](const ChartMetric& c) { return c.domain; },
          [](const ConformalDeformation& c) { return c.base.domain(); },
          [](const EinsteinModel& e) { return e.base.domain(); },
      },
      static_cast<const ModelKind::variant&>(*kind_));
}

Point ModelMetric::sample_point(std::mt19937_64& rng) const {
  Point p;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& r : domain()) {
    const double len = r.hi - r.lo;
    const double lo = r.lo + r.margin * len;
    const double hi = r.hi - r.margin * len;
    p.push_back(lo + (hi - lo) * unit(rng));
  }
  return p;
}

int ModelMetric::max_derivative_order() const {
  constexpr int unlimited = 16;
  return std::visit(overloaded{
                        [](const ChartMetric& c) { return c.max_order; },
                        [](const ConformalDeformation& c) { return c.base.max_derivative_order(); },
                        [](const EinsteinModel& e) { return e.base.max_derivative_order(); },
                        [](const WarpedRadial& w) { return w.fiber.max_derivative_order(); },
                        [](const auto&) { return unlimited; },
                    },
                    static_cast<const ModelKind::variant&>(*kind_));
}

std::optional<double> ModelMetric::einstein_constant() const {
  if (const auto* e = std::get_if<EinsteinModel>(kind_.get())) return e->a;
  return std::nullopt;
}

std::optional<double> ModelMetric::closed_form_volume() const {
  return std::visit(overloaded{
                        [](const RoundSphere& s) -> std::optional<double> {
                          return sphere_volume(s.n, s.radius);
                        },
                        [](const FlatTorus& t) -> std::optional<double> {
                          double v = 1.0;
                          for (double p : t.periods) v *= p;
                          return v;
                        },
                        [](const ProductOfSpheres& p) -> std::optional<double> {
                          double v = 1.0;
                          for (const auto& [d, r] : p.factors) v *= sphere_volume(d, r);
                          return v;
                        },
                        [](const EinsteinModel& e) { return e.base.closed_form_volume(); },
                        [](const auto&) -> std::optional<double> { return std::nullopt; },
                    },
                    static_cast<const ModelKind::variant&>(*kind_));
}

bool ModelMetric::conformally_flat() const {
  return std::visit(overloaded{
                        [](const RoundSphere&) { return true; },
                        [](const FlatTorus&) { return true; },
                        [](const WarpedRadial& w) {
                          const auto& fib = underlying_geometry(w.fiber).kind();
                          const auto* s = std::get_if<RoundSphere>(&fib);
                          return s != nullptr;
                        },
                        [](const ConformalDeformation& c) { return c.base.conformally_flat(); },
                        [](const EinsteinModel& e) { return e.base.conformally_flat(); },
                        [](const auto&) { return false; },
                    },
                    static_cast<const ModelKind::variant&>(*kind_));
}

const ModelMetric& underlying_geometry(const ModelMetric& m) {
  if (const auto* e = std::get_if<EinsteinModel>(&m.kind())) return underlying_geometry(e->base);
  return m;
}

}  // namespace rvol
