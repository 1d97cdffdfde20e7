// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "rvol/cli.hpp"
#include "rvol/errors.hpp"
#include "rvol/flow.hpp"
#include "rvol/renorm_volume.hpp"
#include "rvol/series.hpp"
#include "rvol/variation.hpp"

using namespace rvol;

namespace {

const double pi = std::numbers::pi;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "first failure: " << what << "; ";
      pass = false;
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << "exception: " << e.what() << "; ";
  }
  const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (budget_s > 0 && t > budget_s) {
    o.pass = false;
    o.detail << "runtime " << t << " s over budget " << budget_s << " s; ";
  }
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s (%s%.2f s)\n", o.pass ? "PASS" : "FAIL", id, title.c_str(), o.detail.str().c_str(), t);
  std::fflush(stdout);
}

double rel(double x, double y) { return std::abs(x - y) / std::max(1.0, std::abs(y)); }

const std::vector<double> sweep_a{-1.0, -0.5, 0.5, 1.0, 2.0};

}  // namespace

int main() {
  criterion(1, "Einstein coefficient identity v_k = a^k C(n,k)", 5.0, [](Outcome& o) {
    double worst = 0.0;
    for (int n = 3; n <= 8; ++n)
      for (double a : sweep_a) {
        const ModelMetric m = ModelMetric::einstein_with_constant(n, a);
        std::mt19937_64 rng(static_cast<std::uint64_t>(n * 100 + 7));
        const auto v = vk_from_series(einstein_series(m, m.sample_point(rng)), n).v;
        for (int k = 0; k <= n; ++k) worst = std::max(worst, rel(v[static_cast<std::size_t>(k)], std::pow(a, k) * binomial(n, k)));
      }
    o.detail << "max rel err " << worst << "; ";
    o.require(worst <= 1e-12, "series v_k");
  });

  criterion(2, "direct formulas (-2)^k v^(2k) match the series, k <= 3", 0.0, [](Outcome& o) {
    double worst = 0.0;
    for (int n = 3; n <= 8; ++n)
      for (double a : sweep_a) {
        const ModelMetric m = ModelMetric::einstein_with_constant(n, a);
        std::mt19937_64 rng(static_cast<std::uint64_t>(n * 100 + 11));
        const Point p = m.sample_point(rng);
        const auto v = vk_from_series(einstein_series(m, p), 3).v;
        for (int k = 1; k <= 3; ++k) {
          if (k == 3 && n == 4) continue;
          worst = std::max(worst, rel(std::pow(-2.0, k) * v_direct(m, p, k), v[static_cast<std::size_t>(k)]));
        }
      }
    o.detail << "max rel err " << worst << "; ";
    o.require(worst <= 1e-9, "direct vs series");
  });

  criterion(3, "L-tensor: both defining expressions agree and match -a^{k-1}C(n-1,k-1)g^{-1}", 0.0, [](Outcome& o) {
    double mismatch = 0.0, closed = 0.0;
    for (int n = 3; n <= 8; ++n)
      for (double a : sweep_a) {
        const ModelMetric m = ModelMetric::einstein_with_constant(n, a);
        std::mt19937_64 rng(static_cast<std::uint64_t>(n * 100 + 13));
        const MetricSeries s = einstein_series(m, m.sample_point(rng));
        const Matrix ginv = s.base().inverse();
        for (int k = 1; k <= n; ++k) {
          const LTensor L = L_tensor(s, k);
          const Matrix e = -std::pow(a, k - 1) * binomial(n - 1, k - 1) * ginv;
          mismatch = std::max(mismatch, L.mismatch);
          closed = std::max(closed, (L.upper - e).cwiseAbs().maxCoeff() / std::max(1.0, e.cwiseAbs().maxCoeff()));
        }
      }
    o.detail << "expression mismatch " << mismatch << ", closed form " << closed << "; ";
    o.require(mismatch <= 1e-12, "mismatch");
    o.require(closed <= 1e-12, "closed form");
  });

  criterion(4, "delta v_k matches finite differences, n in {5,7}, k <= 3, 10 random fields", 60.0, [](Outcome& o) {
    double worst = 0.0;
    for (int n : {5, 7}) {
      const ModelMetric m = ModelMetric::einstein_sphere(n, 1.0);
      SpectralOptions opt;
      opt.lmax = 2;
      const SpectralBasis b = spectral_basis(m, opt);
      std::mt19937_64 rng(static_cast<std::uint64_t>(n));
      std::normal_distribution<double> nd;
      for (int s = 0; s < 10; ++s) {
        Vector c(static_cast<Eigen::Index>(b.size()));
        for (Eigen::Index i = 0; i < c.size(); ++i) c(i) = nd(rng);
        c /= c.norm();
        const ScalarField w = b.combination(c);
        const Point p = m.sample_point(rng);
        for (int k = 1; k <= 3; ++k) {
          const double e = delta_vk(m, w, k, p);
          worst = std::max(worst, rel(delta_vk_fd(m, w, k, p), e));
        }
      }
    }
    o.detail << "max rel err " << worst << "; ";
    o.require(worst <= 1e-6, "variation oracle");
  });

  criterion(5, "sign table for F_k, n = 3..8, degree <= 8 basis, spheres nullity n+1", 600.0, [](Outcome& o) {
    RunConfig c = RunConfig::parse("command = signtable\nnmin = 3\nnmax = 8\nlmax = 8\n");
    const ResultRecord r = run_command(c);
    int cells = 0, bad = 0;
    for (const auto& row : r.table_rows) {
      if (row[1] != "F_k") continue;
      ++cells;
      if (row[8] != "PASS") {
        if (!bad) o.detail << "n=" << row[0] << " k=" << row[2] << " " << row[3] << " expected " << row[5] << " got " << row[6] << "; ";
        ++bad;
      }
    }
    o.detail << cells - bad << "/" << cells << " cells; ";
    o.require(bad == 0 && cells > 0, "sign table");
  });

  criterion(6, "renormalized volume sign table, n in {2,4,6}, mod-4 alternation", 0.0, [](Outcome& o) {
    SpectralOptions opt;
    opt.lmax = 6;
    int cells = 0, bad = 0;
    for (int n : {2, 4, 6}) {
      std::vector<std::tuple<std::string, ModelMetric, int, bool>> models{
          {"sphere", ModelMetric::einstein_sphere(n, 1.0), 1, true},
          {"ball", ModelMetric::hyperbolic_ball(n, 1.0, 1.0), -1, false}};
      if (n >= 4) models.emplace_back("S2xS" + std::to_string(n - 2), ModelMetric::einstein_sphere_product({2, n - 2}, 0.5), 1, false);
      for (const auto& [name, m, sign, round] : models) {
        const HessianForm h = hessian_V(m, spectral_basis(m, opt));
        const Classification e = classify_sign_V(n, sign, round);
        ++cells;
        if (!(e == h.classification)) {
          ++bad;
          o.detail << "n=" << n << " " << name << " expected " << to_string(e) << " got " << to_string(h.classification) << "; ";
        }
      }
    }
    // R > 0, non-round: positive for n = 0 mod 4, negative for n = 2 mod 4.
    o.require(classify_sign_V(4, 1).kind == Definiteness::PositiveDefinite, "n=4 table");
    o.require(classify_sign_V(6, 1).kind == Definiteness::NegativeDefinite, "n=6 table");
    o.detail << cells - bad << "/" << cells << " cells; ";
    o.require(bad == 0, "V sign table");
  });

  criterion(7, "H^4: V = 4 pi^2/3, bulk formula, Gauss-Bonnet; H^6 with C_6 = 16/5", 0.0, [](Outcome& o) {
    const AHNormalForm h4 = AHNormalForm::hyperbolic(3);
    const VolumeExpansion e = extract_expansion(h4);
    o.require(e.analytic && e.V && std::abs(*e.V - 4 * pi * pi / 3) <= 1e-8, "analytic V");
    const ModelMetric X = geodesic_compactification(h4);
    const double g = renorm_volume_geodcomp(X, 3);
    o.require(std::abs(geodcomp_constant(3) - 8.0 / 3) < 1e-15 && rel(g, *e.V) <= 1e-6, "(8/3) int v^(4)");
    const double W = weyl_norm_integral(X);
    const double gb = gauss_bonnet_4d(*e.V, W, 1, GaussBonnetMode::AHE);
    o.require(gb < 1e-6 && W < 1e-10, "gb1");
    const AHNormalForm h6 = AHNormalForm::hyperbolic(5);
    const VolumeExpansion e6 = extract_expansion(h6);
    const double g6 = renorm_volume_geodcomp(geodesic_compactification(h6), 5);
    o.require(std::abs(geodcomp_constant(5) - 16.0 / 5) < 1e-15 && e6.V && rel(g6, *e6.V) <= 1e-6, "H^6");
    o.detail << "V = " << *e.V << ", bulk " << g << ", gb residual " << gb << ", H^6 V " << *e6.V << " vs " << g6 << "; ";
  });

  criterion(8, "Gauss-Bonnet on closed S^4", 0.0, [](Outcome& o) {
    const double r = gauss_bonnet_4d(ModelMetric::round_sphere(4, 1.0), 2);
    o.detail << "residual " << r << "; ";
    o.require(r < 1e-6, "gb2");
  });

  criterion(9, "odd-n fits have no log term; c_{2k} = (1/(n-2k)) int v^(2k)", 0.0, [](Outcome& o) {
    double logc = 0.0, ident = 0.0;
    for (int n : {3, 5, 7}) {
      const AHNormalForm h = AHNormalForm::hyperbolic(n);
      FitOptions fo;
      fo.log_column = true;
      const VolumeExpansion f = fit_expansion(h, fo);
      logc = std::max(logc, std::abs(f.log_coefficient.value_or(0.0)));
      ident = std::max(ident, coefficient_identity_residual(h, f));
      ident = std::max(ident, coefficient_identity_residual(h, extract_expansion(h)));
    }
    for (int n : {4, 6}) {
      const AHNormalForm h = AHNormalForm::hyperbolic(n);
      ident = std::max(ident, coefficient_identity_residual(h, extract_expansion(h)));
    }
    o.detail << "max |log coeff| " << logc << ", identity residual " << ident << "; ";
    o.require(logc < 1e-8, "log term");
    o.require(ident <= 1e-8, "c_2k identity");
  });

  criterion(10, "flow on perturbed flat T^3 converges, volume kept, critical gate passes", 0.0, [](Outcome& o) {
    FlowOptions opt;
    opt.tol = 1e-6;
    opt.max_steps = 10000;
    ScalarField w([](std::span<const Jet> x) { return cos(x[0] * (2 * pi)) * 0.05; });
    const FlowReport r = run_flow(ModelMetric::flat_torus({1.0, 1.0, 1.0}), 1, w, opt);
    o.require(r.converged && r.accepted <= 10000, "convergence");
    o.require(r.max_volume_drift < 1e-8, "volume drift");
    const auto& v = r.final_state.vk;
    require_critical(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())), opt.tol);
    require_critical(flow_metric(r.final_state), 1, opt.tol);
    o.detail << r.accepted << " steps, sup " << r.final_state.sup_defect << ", drift " << r.max_volume_drift << "; ";
  });

  criterion(11, "Obata: equality exactly on round spheres", 0.0, [](Outcome& o) {
    SpectralOptions opt;
    opt.lmax = 3;
    for (int n = 2; n <= 6; ++n) {
      const ModelMetric s = ModelMetric::einstein_sphere(n, 1.0);
      const ObataReport r = obata_check(spectral_basis(s, opt), n * (n - 1.0));
      o.require(r.holds && r.equality, "sphere n=" + std::to_string(n));
    }
    const ModelMetric s22 = ModelMetric::einstein_sphere_product({2, 2}, 1.0 / 6.0);
    const ObataReport p = obata_check(spectral_basis(s22, opt), 4.0);
    o.require(p.holds && !p.equality, "S2xS2");
    for (int n : {2, 3}) {
      const ObataReport t = obata_check(spectral_basis(ModelMetric::flat_torus(std::vector<double>(static_cast<std::size_t>(n), 1.0))), 0.0);
      o.require(t.holds && !t.equality, "flat torus");
    }
    o.detail << "S2xS2 lambda1 " << p.lambda1 << " vs bound " << p.bound << "; ";
  });

  return failures == 0 ? 0 : 1;
}
