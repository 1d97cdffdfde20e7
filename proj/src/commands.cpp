#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "rvol/cli.hpp"
#include "rvol/curvature.hpp"
#include "rvol/errors.hpp"
#include "rvol/flow.hpp"
#include "rvol/renorm_volume.hpp"
#include "rvol/series.hpp"
#include "rvol/variation.hpp"

namespace rvol {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& msg) { fail(ErrorKind::ConfigInvalid, msg); }

int get_n(const RunConfig& c, int fallback) {
  const long n = c.get_int("n", fallback);
  if (n < 2 || n > 16) invalid("key 'n': dimension must lie in [2, 16]");
  return static_cast<int>(n);
}

ModelMetric build_model(const RunConfig& c, const std::string& fallback = "sphere", int n_fallback = 3) {
  const std::string kind = c.get_text("model", fallback);
  if (kind == "sphere") return ModelMetric::einstein_sphere(get_n(c, n_fallback), c.get_real("radius", 1.0));
  if (kind == "round_sphere") return ModelMetric::round_sphere(get_n(c, n_fallback), c.get_real("radius", 1.0));
  if (kind == "einstein") {
    if (!c.has("a")) invalid("model 'einstein' needs key 'a'");
    return ModelMetric::einstein_with_constant(get_n(c, n_fallback), c.get_real("a", 0.0));
  }
  if (kind == "torus") {
    std::vector<double> p = c.get_reals("periods", {});
    if (p.empty()) p.assign(static_cast<std::size_t>(get_n(c, n_fallback)), 1.0);
    if (c.has("n") && static_cast<long>(p.size()) != c.get_int("n", 0)) invalid("key 'periods': length differs from n");
    return ModelMetric::einstein(ModelMetric::flat_torus(p), 0.0);
  }
  if (kind == "sphere_product" || kind == "einstein_product") {
    const auto d = c.get_ints("dims", {2, 2});
    std::vector<int> dims(d.begin(), d.end());
    if (kind == "einstein_product") return ModelMetric::einstein_sphere_product(dims, c.get_real("a", 0.5));
    const auto r = c.get_reals("radii", std::vector<double>(dims.size(), 1.0));
    if (r.size() != dims.size()) invalid("key 'radii': length differs from 'dims'");
    std::vector<std::pair<int, double>> f;
    for (std::size_t i = 0; i < dims.size(); ++i) f.emplace_back(dims[i], r[i]);
    return ModelMetric::product_of_spheres(f);
  }
  if (kind == "ball")
    return ModelMetric::hyperbolic_ball(get_n(c, n_fallback), c.get_real("kappa", 1.0), c.get_real("ball_radius", 1.0));
  invalid("key 'model': '" + kind + "' is not a manifold model here");
}

bool is_round(const RunConfig& c) {
  const std::string kind = c.get_text("model", "sphere");
  return kind == "sphere" || kind == "round_sphere" || (kind == "einstein" && c.get_real("a", 0.0) > 0.0);
}

Point sample(const ModelMetric& m, const RunConfig& c) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(c.get_int("seed", 0x5eed)));
  return m.sample_point(rng);
}

json point_json(const Point& p) { return json(std::vector<double>(p.begin(), p.end())); }

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

void cmd_curvature(const RunConfig& c, ResultRecord& r) {
  const ModelMetric m = build_model(c);
  const Point p = sample(m, c);
  const CurvaturePack pk = curvature_pack(m, p, {.bach = m.dim() >= 3 && m.max_derivative_order() >= 4});
  const auto res = pack_residuals(pk);
  r.payload["model"] = m.label();
  r.payload["n"] = m.dim();
  r.payload["point"] = point_json(p);
  r.payload["scalar_curvature"] = pk.scalar;
  r.payload["riemann_max"] = pk.riemann.max_abs();
  r.payload["weyl_max"] = pk.weyl.max_abs();
  r.payload["schouten_trace"] = (pk.g_inv * pk.schouten).trace();
  if (pk.bach) r.payload["bach_max"] = max_abs(*pk.bach);
  r.payload["identity_residual"] = res.max();
  if (auto a = m.einstein_constant()) {
    const int n = m.dim();
    r.payload["expected_scalar_curvature"] = 2.0 * *a * n * (n - 1);
    r.payload["scalar_residual"] = std::abs(pk.scalar - 2.0 * *a * n * (n - 1));
  }
  r.table_header = {"i", "ricci_eigenvalue"};
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(pk.ricci, pk.g, Eigen::EigenvaluesOnly);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) r.table_rows.push_back({i, es.eigenvalues()(i)});
}

void cmd_vk(const RunConfig& c, ResultRecord& r) {
  const ModelMetric m = build_model(c);
  const int n = m.dim();
  const int kmin = static_cast<int>(c.get_int("kmin", 0));
  const int kmax = static_cast<int>(c.get_int("kmax", n));
  if (kmin < 0 || kmax < kmin) invalid("keys 'kmin'/'kmax': need 0 <= kmin <= kmax");
  const Point p = sample(m, c);
  const auto a = m.einstein_constant();
  r.payload["model"] = m.label();
  r.payload["n"] = n;
  if (a) r.payload["a"] = *a;
  r.payload["point"] = point_json(p);
  std::vector<double> series_v;
  if (a) series_v = vk_from_series(einstein_series(m, p, std::max(kmax, default_truncation(n))), kmax).v;
  r.table_header = {"k", "v_k", "expected", "direct", "residual"};
  double worst = 0.0;
  json vals = json::array();
  for (int k = kmin; k <= kmax; ++k) {
    const double v = a ? series_v[static_cast<std::size_t>(k)] : vk_at(m, p, k);
    json expected = nullptr, direct = nullptr;
    double res = 0.0;
    if (a) {
      const double e = std::pow(*a, k) * binomial(n, k);
      expected = e;
      res = std::abs(v - e) / std::max(1.0, std::abs(e));
    }
    if (k <= 3 && !(k == 3 && n == 4)) {
      const double d = std::pow(-2.0, k) * v_direct(m, p, k);
      direct = d;
      res = std::max(res, std::abs(v - d) / std::max(1.0, std::abs(v)));
    }
    worst = std::max(worst, res);
    vals.push_back(v);
    r.table_rows.push_back({k, v, expected, direct, res});
  }
  r.payload["v"] = vals;
  r.payload["max_residual"] = worst;
}

void cmd_ltensor(const RunConfig& c, ResultRecord& r) {
  const ModelMetric m = build_model(c);
  const int n = m.dim();
  const auto a = m.einstein_constant();
  if (!a) invalid("ltensor needs an Einstein model");
  const int kmin = static_cast<int>(c.get_int("kmin", c.get_int("k", 1)));
  const int kmax = static_cast<int>(c.get_int("kmax", c.get_int("k", n)));
  if (kmin < 1 || kmax < kmin || kmax > n) invalid("keys 'kmin'/'kmax': need 1 <= kmin <= kmax <= n");
  const Point p = sample(m, c);
  const MetricSeries s = einstein_series(m, p);
  r.payload["model"] = m.label();
  r.payload["n"] = n;
  r.payload["a"] = *a;
  r.table_header = {"k", "mismatch", "closed_form_residual", "L_trace_coefficient"};
  double worst = 0.0;
  const Matrix ginv = s.base().inverse();
  for (int k = kmin; k <= kmax; ++k) {
    const LTensor L = L_tensor(s, k);
    const Matrix expected = -std::pow(*a, k - 1) * binomial(n - 1, k - 1) * ginv;
    const double cf = max_abs(L.upper - expected) / std::max(1.0, max_abs(expected));
    worst = std::max({worst, L.mismatch, cf});
    r.table_rows.push_back({k, L.mismatch, cf, (s.base() * L.upper).trace() / n});
  }
  r.payload["max_residual"] = worst;
}

void cmd_variation(const RunConfig& c, ResultRecord& r) {
  const ModelMetric m = build_model(c);
  const int n = m.dim();
  const int kmin = static_cast<int>(c.get_int("kmin", c.get_int("k", 1)));
  const int kmax = static_cast<int>(c.get_int("kmax", c.get_int("k", std::min(3, n))));
  if (kmin < 1 || kmax > 3 || kmax < kmin) invalid("keys 'kmin'/'kmax': need 1 <= kmin <= kmax <= 3");
  const int samples = static_cast<int>(c.get_int("samples", 10));
  SpectralOptions opt;
  opt.lmax = static_cast<int>(c.get_int("lmax", 2));
  const SpectralBasis b = spectral_basis(m, opt);
  std::mt19937_64 rng(static_cast<std::uint64_t>(c.get_int("seed", 0x5eed)));
  std::normal_distribution<double> nd;
  r.payload["model"] = m.label();
  r.payload["n"] = n;
  r.payload["basis_size"] = b.size();
  r.table_header = {"sample", "k", "exact", "finite_difference", "relative_error"};
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vector coef(static_cast<Eigen::Index>(b.size()));
    for (Eigen::Index i = 0; i < coef.size(); ++i) coef(i) = nd(rng);
    coef /= coef.norm();
    const ScalarField w = b.combination(coef);
    const Point p = m.sample_point(rng);
    for (int k = kmin; k <= kmax; ++k) {
      if (k == 3 && n == 4) continue;
      const double e = delta_vk(m, w, k, p);
      const double f = delta_vk_fd(m, w, k, p);
      const double rel = std::abs(e - f) / std::max(1.0, std::abs(e));
      worst = std::max(worst, rel);
      r.table_rows.push_back({s, k, e, f, rel});
    }
  }
  r.payload["max_relative_error"] = worst;
  r.payload["pass"] = worst <= 1e-6;
}

void cmd_hessian(const RunConfig& c, ResultRecord& r) {
  const ModelMetric m = build_model(c);
  const int n = m.dim();
  const std::string functional = c.get_text("functional", "Fk");
  const int k = static_cast<int>(c.get_int("k", 1));
  if (functional == "Fk") {
    if (n % 2 == 0 && 2 * k == n) invalid("hessian of F_k with k = n/2 is undefined for even n (use functional = V)");
    if (k < 1 || k > n) invalid("key 'k': need 1 <= k <= n");
  } else if (functional == "V") {
    if (n % 2 == 1) invalid("the renormalized volume Hessian needs even n");
  } else {
    invalid("key 'functional': expected Fk or V");
  }
  SpectralOptions opt;
  opt.lmax = static_cast<int>(c.get_int("lmax", 4));
  const SpectralBasis b = spectral_basis(m, opt);
  const HessianForm h = functional == "Fk" ? hessian_Fk(m, k, b) : hessian_V(m, b);
  r.payload["model"] = m.label();
  r.payload["n"] = n;
  r.payload["functional"] = h.functional;
  if (functional == "Fk") r.payload["k"] = k;
  r.payload["basis_size"] = b.size();
  r.payload["scalar_curvature"] = h.scalar_curvature;
  r.payload["prefactor"] = h.prefactor;
  r.payload["classification"] = to_string(h.classification.kind);
  r.payload["nullity"] = h.classification.nullity;
  const int sign_R = h.scalar_curvature > 0 ? 1 : h.scalar_curvature < 0 ? -1 : 0;
  if (sign_R != 0) {
    const Classification e = functional == "Fk" ? classify_sign_Fk(n, k, sign_R, is_round(c))
                                                : classify_sign_V(n, sign_R, is_round(c));
    r.payload["expected"] = to_string(e.kind);
    r.payload["expected_nullity"] = e.nullity;
    r.payload["match"] = e == h.classification;
  }
  r.payload["closed_form_residual"] = h.closed_form_residual;
  r.payload["symmetry_residual"] = h.symmetry_residual;
  r.payload["volume_scale"] = h.volume_scale;
  const ObataReport ob = obata_check(b, h.scalar_curvature);
  r.payload["obata"] = {{"lambda1", ob.lambda1}, {"bound", ob.bound}, {"holds", ob.holds}, {"equality", ob.equality}};
  r.table_header = {"i", "eigenvalue", "unit_volume_eigenvalue"};
  for (Eigen::Index i = 0; i < h.eigenvalues.size(); ++i)
    r.table_rows.push_back({i, h.eigenvalues(i), h.eigenvalues(i) * h.volume_scale});
}

struct Cell {
  int n;
  int k;  // 0 for V
  int sign_R;
  bool round;
  std::string model;
  ModelMetric metric;
};

void cmd_signtable(const RunConfig& c, ResultRecord& r) {
  const int nmin = static_cast<int>(c.get_int("nmin", 3));
  const int nmax = static_cast<int>(c.get_int("nmax", 8));
  if (nmin < 2 || nmax < nmin || nmax > 10) invalid("keys 'nmin'/'nmax': need 2 <= nmin <= nmax <= 10");
  SpectralOptions opt;
  opt.lmax = static_cast<int>(c.get_int("lmax", 8));
  r.table_header = {"n", "functional", "k", "model", "sign_R", "expected", "computed", "nullity", "status"};
  int passed = 0, failed = 0;
  for (int n = nmin; n <= nmax; ++n) {
    std::vector<std::pair<std::string, ModelMetric>> models{
        {"sphere", ModelMetric::einstein_sphere(n, 1.0)}, {"ball", ModelMetric::hyperbolic_ball(n, 1.0, 1.0)}};
    if (n % 2 == 0 && n >= 4) models.emplace_back("S2xS" + std::to_string(n - 2), ModelMetric::einstein_sphere_product({2, n - 2}, 0.5));
    for (const auto& [name, m] : models) {
      const SpectralBasis b = spectral_basis(m, opt);
      const double a = *m.einstein_constant();
      const int sign_R = a > 0 ? 1 : -1;
      const bool round = name == "sphere";
      const bool product = name.rfind("S2xS", 0) == 0;
      std::vector<int> ks;
      if (!product)
        for (int k = 1; k <= n; ++k)
          if (2 * k != n) ks.push_back(k);
      if (n % 2 == 0) ks.push_back(0);
      for (int k : ks) {
        const HessianForm h = k ? hessian_Fk(m, k, b) : hessian_V(m, b);
        const Classification e = k ? classify_sign_Fk(n, k, sign_R, round) : classify_sign_V(n, sign_R, round);
        const bool ok = e == h.classification;
        (ok ? passed : failed)++;
        r.table_rows.push_back({n, k ? "F_k" : "V", k, name, sign_R, to_string(e), to_string(h.classification),
                                h.classification.nullity, ok ? "PASS" : "FAIL"});
      }
    }
  }
  r.payload["nmin"] = nmin;
  r.payload["nmax"] = nmax;
  r.payload["lmax"] = opt.lmax;
  r.payload["cells"] = passed + failed;
  r.payload["passed"] = passed;
  r.payload["failed"] = failed;
  r.payload["all_pass"] = failed == 0;
}

int hyperbolic_n(const RunConfig& c) {
  const std::string kind = c.get_text("model", "hyperbolic4");
  if (kind == "hyperbolic4") {
    if (c.has("n") && c.get_int("n", 3) != 3) invalid("model 'hyperbolic4' has boundary dimension 3");
    return 3;
  }
  if (kind == "hyperbolic") return get_n(c, 3);
  invalid("key 'model': expected hyperbolic or hyperbolic4");
}

void cmd_rv(const RunConfig& c, ResultRecord& r) {
  const int n = hyperbolic_n(c);
  const bool want_geod = c.get_int("geodcomp", n % 2 == 1 && n <= 5 ? 1 : 0) != 0;
  if (want_geod && n % 2 == 0) invalid("key 'geodcomp': the bulk formula needs odd n");
  const AHNormalForm h = AHNormalForm::hyperbolic(n);
  const VolumeExpansion e = extract_expansion(h);
  r.payload["model"] = "H^" + std::to_string(n + 1);
  r.payload["n"] = n;
  r.payload["analytic"] = e.analytic;
  r.payload["c"] = e.c;
  if (e.log_coefficient) r.payload["log_coefficient"] = *e.log_coefficient;
  if (e.V) r.payload["V"] = *e.V;
  r.payload["constant_term"] = e.constant_term;
  r.payload["fit_residual"] = e.residual;
  r.payload["coefficient_identity_residual"] = coefficient_identity_residual(h, e);
  r.table_header = {"quantity", "value"};
  for (std::size_t j = 0; j < e.c.size(); ++j) r.table_rows.push_back({"c_" + std::to_string(2 * j), e.c[j]});
  if (e.log_coefficient) r.table_rows.push_back({"L", *e.log_coefficient});
  if (e.V) r.table_rows.push_back({"V", *e.V});
  if (want_geod) {
    const ModelMetric X = geodesic_compactification(h);
    const double g = renorm_volume_geodcomp(X, n);
    const double res = std::abs(g - *e.V) / std::abs(*e.V);
    r.payload["geodcomp"] = {{"constant", geodcomp_constant(n)}, {"value", g}, {"relative_residual", res},
                             {"status", res < 1e-6 ? "PASS" : "FAIL"}};
    r.table_rows.push_back({"geodcomp", g});
    if (n == 3) {
      const double gb = gauss_bonnet_4d(*e.V, weyl_norm_integral(X), 1, GaussBonnetMode::AHE);
      r.payload["gauss_bonnet_residual"] = gb;
    }
  }
}

void cmd_gaussbonnet(const RunConfig& c, ResultRecord& r) {
  const std::string kind = c.get_text("model", "sphere");
  if (kind == "hyperbolic4" || kind == "hyperbolic") {
    if (hyperbolic_n(c) != 3) invalid("Gauss-Bonnet identities need a 4-dimensional filling");
    const AHNormalForm h = AHNormalForm::hyperbolic(3);
    const ModelMetric X = geodesic_compactification(h);
    const double V = *extract_expansion(h).V;
    const double W = weyl_norm_integral(X);
    const int chi = static_cast<int>(c.get_int("chi", 1));
    r.payload["model"] = "H^4";
    r.payload["chi"] = chi;
    r.payload["V"] = V;
    r.payload["weyl_integral"] = W;
    r.payload["ahe_residual"] = gauss_bonnet_4d(V, W, chi, GaussBonnetMode::AHE);
    r.payload["compact_residual"] = gauss_bonnet_4d(X, chi);
  } else {
    const ModelMetric m = build_model(c, "sphere", 4);
    if (m.dim() != 4) invalid("Gauss-Bonnet identities need n = 4");
    const int chi = static_cast<int>(c.get_int("chi", 2));
    r.payload["model"] = m.label();
    r.payload["chi"] = chi;
    r.payload["v4_integral"] = v4_integral(m);
    r.payload["weyl_integral"] = weyl_norm_integral(m);
    r.payload["compact_residual"] = gauss_bonnet_4d(m, chi);
  }
}

void cmd_flow(const RunConfig& c, ResultRecord& r) {
  const ModelMetric m = build_model(c, "torus", 3);
  const int k = static_cast<int>(c.get_int("k", 1));
  const double amp = c.get_real("amplitude", 0.05);
  FlowOptions opt;
  opt.grid = static_cast<int>(c.get_int("grid", opt.grid));
  opt.sphere_lmax = static_cast<int>(c.get_int("lmax", opt.sphere_lmax));
  opt.tol = c.get_real("tol", opt.tol);
  opt.max_steps = c.get_int("max_steps", opt.max_steps);
  opt.dt0 = c.get_real("dt0", 0.0);
  const bool torus = std::holds_alternative<FlatTorus>(underlying_geometry(m).kind());
  ScalarField w0;
  if (torus) {
    const double L = std::get<FlatTorus>(underlying_geometry(m).kind()).periods[0];
    w0 = ScalarField([amp, L](std::span<const Jet> x) { return cos(x[0] * (2.0 * std::numbers::pi / L)) * amp; });
  } else {
    // Zonal degree-2 harmonic.
    const double shift = 1.0 / (m.dim() + 1);
    w0 = ScalarField([amp, shift](std::span<const Jet> x) { return (cos(x[0]) * cos(x[0]) - shift) * amp; });
  }
  const FlowReport f = run_flow(m, k, w0, opt);
  bool gate = true;
  try {
    require_critical(std::span<const double>(f.final_state.vk.data(), static_cast<std::size_t>(f.final_state.vk.size())),
                     opt.tol);
  } catch (const Error&) {
    gate = false;
  }
  r.payload["model"] = m.label();
  r.payload["n"] = m.dim();
  r.payload["k"] = k;
  r.payload["amplitude"] = amp;
  r.payload["converged"] = f.converged;
  r.payload["accepted"] = f.accepted;
  r.payload["rejected"] = f.rejected;
  r.payload["final_sup_defect"] = f.final_state.sup_defect;
  r.payload["final_variance"] = f.final_state.variance;
  r.payload["final_constant"] = f.final_constant;
  r.payload["max_volume_drift"] = f.max_volume_drift;
  r.payload["omega_mean"] = f.final_state.omega_mean;
  r.payload["critical_gate"] = gate ? "PASS" : "FAIL";
  if (f.diagnostic) r.payload["diagnostic"] = *f.diagnostic;
  if (!f.converged) r.status = std::string(to_string(ErrorKind::NoConvergence));
  r.table_header = {"step", "dt", "variance", "sup_defect", "volume_drift"};
  for (const auto& h : f.history) r.table_rows.push_back({h.step, h.dt, h.variance, h.sup_defect, h.volume_drift});
  // Tables are capped at 200 rows, first and last kept.
  if (r.table_rows.size() > 200) {
    std::vector<std::vector<json>> kept;
    const std::size_t N = r.table_rows.size();
    for (std::size_t i = 0; i < 200; ++i) {
      const std::size_t j = (i * (N - 1) + 99) / 199;
      if (kept.empty() || kept.back()[0] != r.table_rows[j][0]) kept.push_back(r.table_rows[j]);
    }
    r.table_rows = std::move(kept);
  }
}

void check_finite(const json& j, const std::string& where) {
  if (j.is_number_float() && !std::isfinite(j.get<double>()))
    fail(ErrorKind::GridResolutionInsufficient, "non-finite value at " + where);
  if (j.is_structured())
    for (auto it = j.begin(); it != j.end(); ++it) check_finite(*it, where + (j.is_object() ? "." + it.key() : "[]"));
}

}  // namespace

ResultRecord run_command(const RunConfig& cfg) {
  ResultRecord r;
  r.command = cfg.command;
  r.config = cfg.canonical();
  r.config_hash = cfg.hash();
  r.version = tool_version();
  const auto t0 = std::chrono::steady_clock::now();
  const std::string& c = cfg.command;
  if (c == "curvature") cmd_curvature(cfg, r);
  else if (c == "vk") cmd_vk(cfg, r);
  else if (c == "ltensor") cmd_ltensor(cfg, r);
  else if (c == "variation") cmd_variation(cfg, r);
  else if (c == "hessian") cmd_hessian(cfg, r);
  else if (c == "signtable") cmd_signtable(cfg, r);
  else if (c == "rv") cmd_rv(cfg, r);
  else if (c == "gaussbonnet") cmd_gaussbonnet(cfg, r);
  else if (c == "flow") cmd_flow(cfg, r);
  else fail(ErrorKind::UnknownCommand, "command '" + c + "' does not produce a record");
  check_finite(r.payload, "payload");
  for (const auto& row : r.table_rows)
    for (const auto& v : row) check_finite(v, "table");
  r.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::ConfigInvalid, "cannot write " + path);
  f << text;
}

int run_report(const RunConfig& cfg, std::ostream& out) {
  const auto inputs = cfg.get_texts("inputs", {});
  if (inputs.empty()) invalid("report needs key 'inputs'");
  std::vector<ResultRecord> recs;
  for (const auto& p : inputs) {
    std::ifstream f(p);
    if (!f) fail(ErrorKind::ConfigInvalid, "cannot read " + p);
    json j;
    try {
      f >> j;
    } catch (const json::exception& e) {
      fail(ErrorKind::ConfigInvalid, p + ": " + e.what());
    }
    recs.push_back(ResultRecord::from_json(j));
  }
  const std::string text = emit_report(recs);
  if (cfg.has("output"))
    write_file(cfg.get_text("output", ""), text);
  else
    out << text;
  return 0;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Renormalized volume coefficients and their conformal variations", "rvol"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());
  std::map<std::string, std::map<std::string, std::string>> flags;
  std::map<std::string, std::string> config_path;
  static const std::map<std::string, std::string> about{
      {"curvature", "Schouten, Weyl and Bach tensors at sample points"},
      {"vk", "volume coefficients v_k, series and direct"},
      {"ltensor", "the L tensor and its Einstein closed form"},
      {"variation", "first variation against finite differences"},
      {"hessian", "second variation of F_k or V on a truncated basis"},
      {"signtable", "definiteness sweep over dimensions and k"},
      {"rv", "expansion of the truncated volume of hyperbolic space"},
      {"gaussbonnet", "Gauss-Bonnet identities in dimension four"},
      {"flow", "volume-constrained flow towards constant v_k"},
      {"report", "text summary of saved result records"},
  };
  for (const auto& name : command_names()) {
    CLI::App* sub = app.add_subcommand(name, about.at(name));
    sub->add_option("--config", config_path[name], "flat key = value config file");
    for (const auto& k : config_schema()) {
      std::string help = k.help;
      if (!k.unit.empty()) help += " [" + k.unit + "]";
      sub->add_option("--" + k.name, flags[name][k.name], help);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    const bool unknown_cmd = argc > 1 && argv[1][0] != '-' &&
                             std::find(command_names().begin(), command_names().end(), argv[1]) == command_names().end();
    err << (unknown_cmd ? "UnknownCommand: unknown command '" + std::string(argv[1]) + "'" : "ConfigInvalid: " + std::string(e.what()))
        << "\n";
    return 1;
  }
  const std::string name = app.get_subcommands().front()->get_name();
  CLI::App* sub = app.get_subcommands().front();
  try {
    RunConfig cfg;
    if (!config_path[name].empty()) {
      cfg = RunConfig::load(config_path[name]);
      if (!cfg.command.empty() && cfg.command != name)
        fail(ErrorKind::ConfigInvalid, "config file is for command '" + cfg.command + "'");
    }
    cfg.command = name;
    for (const auto& k : config_schema())
      if (sub->count("--" + k.name)) cfg.set(k.name, flags[name][k.name]);
    if (name == "report") return run_report(cfg, out);
    ResultRecord rec = run_command(cfg);
    const std::string text = rec.to_json().dump(2) + "\n";
    if (cfg.has("json"))
      write_file(cfg.get_text("json", ""), text);
    else
      out << text;
    if (cfg.has("csv")) write_file(cfg.get_text("csv", ""), rec.csv());
    if (rec.status != "ok") {
      err << rec.status << ": " << rec.payload.value("diagnostic", std::string()) << "\n";
      return 2;
    }
    return 0;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return is_numerical_failure(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace rvol
