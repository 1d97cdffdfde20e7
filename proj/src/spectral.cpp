#include "rvol/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "rvol/errors.hpp"
#include "rvol/parallel.hpp"
#include "rvol/quadrature.hpp"
#include "rvol/series.hpp"

namespace rvol {

Jet gegenbauer(int k, double alpha, const Jet& x) {
  Jet c0(x.space(), 1.0);
  c0 = c0.truncated(x.order());
  if (k == 0) return c0;
  Jet c1 = x * (2.0 * alpha);
  for (int j = 2; j <= k; ++j) {
    Jet c2 = (x * c1 * (2.0 * (j + alpha - 1.0)) - c0 * (j + 2.0 * alpha - 2.0)) / static_cast<double>(j);
    c0 = c1;
    c1 = c2;
  }
  return c1;
}

double gegenbauer(int k, double alpha, double x) {
  double c0 = 1.0;
  if (k == 0) return c0;
  double c1 = 2.0 * alpha * x;
  for (int j = 2; j <= k; ++j) {
    const double c2 = (2.0 * x * (j + alpha - 1.0) * c1 - (j + 2.0 * alpha - 2.0) * c0) / j;
    c0 = c1;
    c1 = c2;
  }
  return c1;
}

long harmonic_dimension(int n, int l) {
  if (l < 0) return 0;
  if (n == 1) return l == 0 ? 1 : 2;
  return static_cast<long>(binomial(n + l, n) - (l >= 2 ? binomial(n + l - 2, n) : 0.0));
}

namespace {

Jet sin_power(const Jet& x, int m) {
  if (m == 0) return Jet(x.space(), 1.0).truncated(x.order());
  return pow(sin(x), m);
}

void append_block(SeparableMetric& sm, const SeparableMetric& block) {
  const int off = sm.n;
  const int d = block.n;
  sm.n += d;
  for (auto& row : sm.E) row.resize(static_cast<std::size_t>(sm.n), 0);
  for (int c = 0; c < d; ++c) {
    std::vector<int> row(static_cast<std::size_t>(sm.n), 0);
    for (int i = 0; i < d; ++i) row[static_cast<std::size_t>(off + i)] = block.E[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)];
    sm.E.push_back(row);
    sm.kappa.push_back(block.kappa[static_cast<std::size_t>(c)]);
    sm.u.push_back(block.u[static_cast<std::size_t>(c)]);
    sm.domain.push_back(block.domain[static_cast<std::size_t>(c)]);
  }
}

SeparableMetric sphere_form(int d, double radius) {
  SeparableMetric sm;
  sm.n = d;
  sm.E.assign(static_cast<std::size_t>(d), std::vector<int>(static_cast<std::size_t>(d), 0));
  for (int c = 0; c < d; ++c) {
    sm.kappa.push_back(radius * radius);
    for (int i = 0; i < c; ++i) sm.E[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = 2;
    if (c + 1 < d) {
      sm.u.emplace_back([](const Jet& x) { return sin(x); });
      sm.domain.push_back({0.0, std::numbers::pi, false, 0.11});
    } else {
      sm.u.emplace_back();
      sm.domain.push_back({0.0, 2.0 * std::numbers::pi, true, 0.0});
    }
  }
  return sm;
}

// Registry of one-dimensional factors, deduplicated by (coord, key).
class FactorRegistry {
 public:
  explicit FactorRegistry(int n) {
    for (int c = 0; c < n; ++c)
      add(c, "1", [](const Jet& x) { return Jet(x.space(), 1.0).truncated(x.order()); });
  }
  int add(int coord, const std::string& key, std::function<Jet(const Jet&)> fn) {
    auto it = ids_.find({coord, key});
    if (it != ids_.end()) return it->second;
    const int id = static_cast<int>(factors_.size());
    factors_.push_back({coord, key, std::move(fn)});
    ids_.emplace(std::make_pair(coord, key), id);
    return id;
  }
  int one(int coord) const { return ids_.at({coord, "1"}); }
  std::vector<Factor1D> take() { return std::move(factors_); }

 private:
  std::vector<Factor1D> factors_;
  std::map<std::pair<int, std::string>, int> ids_;
};

struct Harmonic {
  int degree;
  std::string label;
  std::vector<int> factors;  // one per block coordinate
};

// Hyperspherical harmonics of degree l on S^d, on coordinates
// [offset, offset + d). Chains l = m_0 >= m_1 >= ... >= m_{d-1} >= 0 in
// lexicographic order (zonal first), at most cap functions unless l <= 1.
std::vector<Harmonic> sphere_harmonics(int d, int l, int cap, int offset, FactorRegistry& reg) {
  std::vector<Harmonic> out;
  const bool full = l <= 1;
  auto phi_factor = [&](int m, bool sine) {
    const int coord = offset + d - 1;
    if (m == 0) return reg.one(coord);
    const std::string key = (sine ? "s" : "c") + std::to_string(m);
    return reg.add(coord, key, [m, sine](const Jet& x) {
      return sine ? sin(x * static_cast<double>(m)) : cos(x * static_cast<double>(m));
    });
  };
  if (d == 1) {
    out.push_back({l, "Y" + std::to_string(l) + "c", {phi_factor(l, false)}});
    if (l > 0) out.push_back({l, "Y" + std::to_string(l) + "s", {phi_factor(l, true)}});
    return out;
  }
  std::vector<int> chain(static_cast<std::size_t>(d), 0);
  chain[0] = l;
  std::function<void(int)> rec = [&](int j) {
    if (!full && static_cast<int>(out.size()) >= cap) return;
    if (j == d) {
      std::vector<int> fac(static_cast<std::size_t>(d));
      for (int jj = 1; jj < d; ++jj) {
        const int k = chain[static_cast<std::size_t>(jj - 1)] - chain[static_cast<std::size_t>(jj)];
        const int m = chain[static_cast<std::size_t>(jj)];
        const double alpha = m + 0.5 * (d - jj);
        const int coord = offset + jj - 1;
        if (k == 0 && m == 0) {
          fac[static_cast<std::size_t>(jj - 1)] = reg.one(coord);
        } else {
          std::ostringstream key;
          key << "G" << k << "," << m << "," << alpha;
          fac[static_cast<std::size_t>(jj - 1)] = reg.add(coord, key.str(), [k, m, alpha](const Jet& x) {
            return sin_power(x, m) * gegenbauer(k, alpha, cos(x));
          });
        }
      }
      const int mphi = chain[static_cast<std::size_t>(d - 1)];
      std::ostringstream label;
      label << "Y" << l << "[";
      for (int jj = 1; jj < d; ++jj) label << (jj > 1 ? "," : "") << chain[static_cast<std::size_t>(jj)];
      label << "]";
      fac[static_cast<std::size_t>(d - 1)] = phi_factor(mphi, false);
      out.push_back({l, label.str() + (mphi > 0 ? "c" : ""), fac});
      if (mphi > 0 && (full || static_cast<int>(out.size()) < cap)) {
        fac[static_cast<std::size_t>(d - 1)] = phi_factor(mphi, true);
        out.push_back({l, label.str() + "s", fac});
      }
      return;
    }
    for (int m = 0; m <= chain[static_cast<std::size_t>(j - 1)]; ++m) {
      chain[static_cast<std::size_t>(j)] = m;
      rec(j + 1);
      if (!full && static_cast<int>(out.size()) >= cap) return;
    }
  };
  rec(1);
  return out;
}

BasisFunction single_term(double eigenvalue, int degree, std::string label, std::vector<int> factors) {
  BasisFunction f;
  f.eigenvalue = eigenvalue;
  f.degree = degree;
  f.label = std::move(label);
  f.terms.push_back({1.0, std::move(factors)});
  return f;
}

std::vector<BasisFunction> sphere_basis(int d, double radius, const SpectralOptions& opt,
                                        FactorRegistry& reg) {
  std::vector<BasisFunction> out;
  for (int l = 1; l <= opt.lmax; ++l) {
    const double lambda = l * (l + d - 1.0) / (radius * radius);
    for (auto& h : sphere_harmonics(d, l, opt.shell_cap, 0, reg))
      out.push_back(single_term(lambda, l, h.label, h.factors));
  }
  return out;
}

std::vector<BasisFunction> product_basis(const ProductOfSpheres& prod, const SpectralOptions& opt,
                                         FactorRegistry& reg) {
  // Per-factor harmonic lists (degree 0 included) by degree.
  struct FactorHarmonics {
    int offset;
    int dim;
    double radius;
    std::vector<std::vector<Harmonic>> by_degree;
  };
  std::vector<FactorHarmonics> parts;
  int off = 0;
  for (const auto& [d, r] : prod.factors) {
    FactorHarmonics fh{off, d, r, {}};
    for (int l = 0; l <= opt.lmax; ++l) fh.by_degree.push_back(sphere_harmonics(d, l, opt.shell_cap, off, reg));
    parts.push_back(std::move(fh));
    off += d;
  }
  const int n = off;
  std::vector<BasisFunction> out;
  // Shell s = total degree; enumerate degree vectors in lexicographic order.
  for (int s = 1; s <= opt.lmax; ++s) {
    std::size_t in_shell = 0;
    std::vector<int> degs(parts.size(), 0);
    std::function<void(std::size_t, int)> rec_deg = [&](std::size_t pi, int remaining) {
      if (static_cast<int>(in_shell) >= opt.shell_cap && s > 1) return;
      if (pi + 1 == parts.size()) {
        degs[pi] = remaining;
        // Cartesian product of the chosen harmonics.
        std::vector<std::size_t> idx(parts.size(), 0);
        for (;;) {
          if (static_cast<int>(in_shell) >= opt.shell_cap && s > 1) return;
          std::vector<int> fac(static_cast<std::size_t>(n));
          double lambda = 0.0;
          std::string label;
          for (std::size_t q = 0; q < parts.size(); ++q) {
            const auto& h = parts[q].by_degree[static_cast<std::size_t>(degs[q])][idx[q]];
            for (int c = 0; c < parts[q].dim; ++c)
              fac[static_cast<std::size_t>(parts[q].offset + c)] = h.factors[static_cast<std::size_t>(c)];
            const int l = degs[q];
            lambda += l * (l + parts[q].dim - 1.0) / (parts[q].radius * parts[q].radius);
            label += (q ? "x" : "") + h.label;
          }
          out.push_back(single_term(lambda, s, label, fac));
          ++in_shell;
          std::size_t q = parts.size();
          while (q-- > 0) {
            if (++idx[q] < parts[q].by_degree[static_cast<std::size_t>(degs[q])].size()) break;
            idx[q] = 0;
            if (q == 0) return;
          }
        }
      }
      for (int l = 0; l <= remaining; ++l) {
        degs[pi] = l;
        rec_deg(pi + 1, remaining - l);
      }
    };
    rec_deg(0, s);
  }
  return out;
}

std::vector<BasisFunction> torus_basis(const FlatTorus& t, const SpectralOptions& opt,
                                       FactorRegistry& reg) {
  const int n = static_cast<int>(t.periods.size());
  const int M = opt.torus_max_mode;
  struct Mode {
    double lambda;
    std::vector<int> m;
  };
  std::vector<Mode> modes;
  std::vector<int> m(static_cast<std::size_t>(n), 0);
  // Enumerate |m|_inf <= M, skipping the zero vector; bounded by max_functions.
  std::function<void(int)> rec = [&](int c) {
    if (c == n) {
      double lambda = 0.0;
      bool nonzero = false;
      for (int i = 0; i < n; ++i) {
        const double w = 2.0 * std::numbers::pi * m[static_cast<std::size_t>(i)] / t.periods[static_cast<std::size_t>(i)];
        lambda += w * w;
        nonzero = nonzero || m[static_cast<std::size_t>(i)] != 0;
      }
      if (nonzero) modes.push_back({lambda, m});
      return;
    }
    for (int v = 0; v <= M; ++v) {
      m[static_cast<std::size_t>(c)] = v;
      rec(c + 1);
    }
  };
  if (std::pow(M + 1.0, n) > 5e6) fail(ErrorKind::InvalidRange, "torus mode table too large");
  rec(0);
  std::stable_sort(modes.begin(), modes.end(), [](const Mode& a, const Mode& b) { return a.lambda < b.lambda; });
  std::vector<BasisFunction> out;
  double shell_lambda = -1.0;
  int shell = 0;
  int in_shell = 0;
  for (const auto& md : modes) {
    if (std::abs(md.lambda - shell_lambda) > 1e-9 * std::max(1.0, md.lambda)) {
      shell_lambda = md.lambda;
      ++shell;
      in_shell = 0;
    }
    // cos/sin choice per nonzero coordinate.
    std::vector<int> nz;
    for (int i = 0; i < n; ++i)
      if (md.m[static_cast<std::size_t>(i)] != 0) nz.push_back(i);
    for (unsigned mask = 0; mask < (1u << nz.size()); ++mask) {
      if (in_shell >= opt.shell_cap && shell > 1) break;
      if (out.size() >= opt.max_functions) return out;
      std::vector<int> fac(static_cast<std::size_t>(n));
      std::ostringstream label;
      label << "F[";
      for (int i = 0; i < n; ++i) {
        const int mi = md.m[static_cast<std::size_t>(i)];
        if (mi == 0) {
          fac[static_cast<std::size_t>(i)] = reg.one(i);
          label << (i ? "," : "") << "0";
          continue;
        }
        const auto pos = static_cast<unsigned>(std::find(nz.begin(), nz.end(), i) - nz.begin());
        const bool sine = (mask >> pos) & 1u;
        const double w = 2.0 * std::numbers::pi * mi / t.periods[static_cast<std::size_t>(i)];
        fac[static_cast<std::size_t>(i)] = reg.add(i, (sine ? "s" : "c") + std::to_string(mi), [w, sine](const Jet& x) {
          return sine ? sin(x * w) : cos(x * w);
        });
        label << (i ? "," : "") << (sine ? "s" : "c") << mi;
      }
      label << "]";
      out.push_back(single_term(md.lambda, shell, label.str(), fac));
      ++in_shell;
    }
  }
  return out;
}

}  // namespace

std::optional<SeparableMetric> separable_form(const ModelMetric& model) {
  const ModelMetric& m = underlying_geometry(model);
  const auto& kind = m.kind();
  if (const auto* s = std::get_if<RoundSphere>(&kind)) return sphere_form(s->n, s->radius);
  if (const auto* t = std::get_if<FlatTorus>(&kind)) {
    SeparableMetric sm;
    sm.n = static_cast<int>(t->periods.size());
    sm.E.assign(static_cast<std::size_t>(sm.n), std::vector<int>(static_cast<std::size_t>(sm.n), 0));
    for (double p : t->periods) {
      sm.kappa.push_back(1.0);
      sm.u.emplace_back();
      sm.domain.push_back({0.0, p, true, 0.0});
    }
    return sm;
  }
  if (const auto* p = std::get_if<ProductOfSpheres>(&kind)) {
    SeparableMetric sm;
    for (const auto& [d, r] : p->factors) append_block(sm, sphere_form(d, r));
    return sm;
  }
  if (const auto* w = std::get_if<WarpedRadial>(&kind)) {
    auto fiber = separable_form(w->fiber);
    if (!fiber) return std::nullopt;
    SeparableMetric sm;
    sm.n = 1;
    sm.E = {{0}};
    sm.kappa = {1.0};
    WarpFunction warp = w->warp;
    sm.u = {[warp](const Jet& r) { return warp(r); }};
    sm.domain = {{w->r_min, w->r_max, false, 0.05}};
    append_block(sm, *fiber);
    for (int c = 1; c < sm.n; ++c) sm.E[static_cast<std::size_t>(c)][0] = 2;
    return sm;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

SpectralBasis::SpectralBasis(ModelMetric model, SeparableMetric metric, std::vector<Factor1D> factors,
                             std::vector<BasisFunction> functions, bool exact, int quadrature_nodes)
    : model_(std::move(model)),
      metric_(std::move(metric)),
      factors_(std::move(factors)),
      functions_(std::move(functions)),
      exact_(exact) {
  assemble(quadrature_nodes);
}

void SpectralBasis::assemble(int nodes) {
  const int n = metric_.n;
  const auto N = static_cast<std::size_t>(n);
  // Local factor indices per coordinate.
  std::vector<std::vector<int>> local_ids(N);
  std::vector<int> local_of(factors_.size());
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    auto& ids = local_ids[static_cast<std::size_t>(factors_[f].coord)];
    local_of[f] = static_cast<int>(ids.size());
    ids.push_back(static_cast<int>(f));
  }
  std::vector<int> e(N, 0);
  for (std::size_t c = 0; c < N; ++c)
    for (std::size_t i = 0; i < N; ++i) e[i] += metric_.E[c][i];
  for (auto& v : e) v /= 2;

  // Values and derivatives of factors and warps at the nodes of each coordinate.
  struct CoordTables {
    QuadratureRule rule;
    std::vector<double> u;
    std::vector<std::vector<double>> val, der;
    std::map<std::pair<int, int>, Matrix> integrals;  // (power, derivative) -> local matrix
  };
  std::vector<CoordTables> tab(N);
  const JetSpace& s1 = JetSpace::get(1, 1);
  parallel_for(N, [&](std::size_t c) {
    const auto& dom = metric_.domain[c];
    CoordTables& t = tab[c];
    t.rule = dom.periodic ? periodic_rule(std::max(nodes, 4 * 8 + 4), dom.lo, dom.hi - dom.lo)
                          : gauss_legendre(nodes, dom.lo, dom.hi);
    const std::size_t Q = t.rule.nodes.size();
    t.u.assign(Q, 1.0);
    if (metric_.u[c])
      for (std::size_t q = 0; q < Q; ++q) t.u[q] = metric_.u[c](Jet(s1, t.rule.nodes[q])).value();
    for (int fid : local_ids[c]) {
      std::vector<double> v(Q), d(Q);
      for (std::size_t q = 0; q < Q; ++q) {
        Jet j = factors_[static_cast<std::size_t>(fid)].fn(Jet::variable(s1, 0, t.rule.nodes[q]));
        v[q] = j.value();
        d[q] = j.order() >= 1 ? j.gradient(0) : 0.0;
      }
      t.val.push_back(std::move(v));
      t.der.push_back(std::move(d));
    }
    auto table = [&](int power, int deriv) {
      const std::size_t F = local_ids[c].size();
      Matrix T(static_cast<Eigen::Index>(F), static_cast<Eigen::Index>(F));
      std::vector<double> w(Q);
      for (std::size_t q = 0; q < Q; ++q) w[q] = t.rule.weights[q] * std::pow(t.u[q], power);
      const auto& src = deriv ? t.der : t.val;
      for (std::size_t a = 0; a < F; ++a)
        for (std::size_t b = 0; b <= a; ++b) {
          double s = 0.0;
          for (std::size_t q = 0; q < Q; ++q) s += w[q] * src[a][q] * src[b][q];
          T(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = s;
          T(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = s;
        }
      t.integrals[{power, deriv}] = T;
    };
    table(e[c], 0);
    table(e[c], 1);
    for (std::size_t cc = 0; cc < N; ++cc) {
      const int p = e[c] - metric_.E[cc][c];
      if (!t.integrals.count({p, 0})) table(p, 0);
    }
  });

  double vol_const = 1.0;
  for (double k : metric_.kappa) vol_const *= std::sqrt(k);

  const std::size_t B = functions_.size();
  mass_ = Matrix::Zero(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(B));
  stiffness_ = mass_;
  means_ = Vector::Zero(static_cast<Eigen::Index>(B));

  // Pointers to the tables used per coordinate.
  std::vector<const Matrix*> mass_tab(N), der_tab(N);
  std::vector<std::vector<const Matrix*>> shift_tab(N, std::vector<const Matrix*>(N));
  for (std::size_t c = 0; c < N; ++c) {
    mass_tab[c] = &tab[c].integrals.at({e[c], 0});
    der_tab[c] = &tab[c].integrals.at({e[c], 1});
    for (std::size_t cc = 0; cc < N; ++cc) shift_tab[cc][c] = &tab[c].integrals.at({e[c] - metric_.E[cc][c], 0});
  }

  parallel_for(B, [&](std::size_t a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double m = 0.0;
      double s = 0.0;
      for (const auto& ta : functions_[a].terms)
        for (const auto& tb : functions_[b].terms) {
          const double coef = ta.coef * tb.coef;
          double mp = 1.0;
          for (std::size_t c = 0; c < N && mp != 0.0; ++c)
            mp *= (*mass_tab[c])(local_of[static_cast<std::size_t>(ta.factors[c])],
                                 local_of[static_cast<std::size_t>(tb.factors[c])]);
          m += coef * mp;
          for (std::size_t cc = 0; cc < N; ++cc) {
            double sp = 1.0 / metric_.kappa[cc];
            for (std::size_t c = 0; c < N && sp != 0.0; ++c) {
              const Matrix& T = (c == cc) ? *der_tab[c] : *shift_tab[cc][c];
              sp *= T(local_of[static_cast<std::size_t>(ta.factors[c])], local_of[static_cast<std::size_t>(tb.factors[c])]);
            }
            s += coef * sp;
          }
        }
      mass_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = vol_const * m;
      stiffness_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = vol_const * s;
    }
    double mean = 0.0;
    for (const auto& ta : functions_[a].terms) {
      double mp = ta.coef;
      for (std::size_t c = 0; c < N; ++c) {
        // Factor "1" is registered first for every coordinate, so its local index is 0.
        mp *= (*mass_tab[c])(local_of[static_cast<std::size_t>(ta.factors[c])], 0);
      }
      mean += mp;
    }
    means_(static_cast<Eigen::Index>(a)) = vol_const * mean;
  });
  mass_ = mass_.selfadjointView<Eigen::Lower>();
  stiffness_ = stiffness_.selfadjointView<Eigen::Lower>();
}

Vector SpectralBasis::eigenvalues() const {
  Vector v(static_cast<Eigen::Index>(functions_.size()));
  for (std::size_t i = 0; i < functions_.size(); ++i) v(static_cast<Eigen::Index>(i)) = functions_[i].eigenvalue;
  return v;
}

double SpectralBasis::gram_residual() const {
  return (mass_ - Matrix::Identity(mass_.rows(), mass_.cols())).cwiseAbs().maxCoeff();
}

Jet SpectralBasis::jet(std::size_t i, std::span<const Jet> x) const {
  Jet acc(x[0].space(), 0.0);
  for (const auto& t : functions_[i].terms) {
    Jet prod(x[0].space(), t.coef);
    for (std::size_t c = 0; c < t.factors.size(); ++c) {
      const auto& f = factors_[static_cast<std::size_t>(t.factors[c])];
      if (f.key == "1") continue;
      prod = prod * f.fn(x[c]);
    }
    acc += prod;
  }
  return acc;
}

double SpectralBasis::value(std::size_t i, const Point& p) const {
  const JetSpace& s = JetSpace::get(static_cast<int>(p.size()), 0);
  std::vector<Jet> x;
  for (double v : p) x.emplace_back(s, v);
  return jet(i, x).value();
}

ScalarField SpectralBasis::field(std::size_t i) const {
  auto self = std::make_shared<SpectralBasis>(*this);
  return ScalarField([self, i](std::span<const Jet> x) { return self->jet(i, x); }, false,
                     functions_[i].label);
}

ScalarField SpectralBasis::combination(const Vector& c) const {
  auto self = std::make_shared<SpectralBasis>(*this);
  Vector coef = c;
  return ScalarField(
      [self, coef](std::span<const Jet> x) {
        Jet acc(x[0].space(), 0.0);
        for (Eigen::Index i = 0; i < coef.size(); ++i)
          if (coef(i) != 0.0) acc += self->jet(static_cast<std::size_t>(i), x) * coef(i);
        return acc;
      },
      false, "combination");
}

namespace {

SpectralBasis normalized(const ModelMetric& m, const SeparableMetric& sm, std::vector<Factor1D> factors,
                         std::vector<BasisFunction> raw, const SpectralOptions& opt) {
  SpectralBasis first(m, sm, factors, raw, true, opt.quadrature_nodes);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double nrm = std::sqrt(first.mass()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)));
    for (auto& t : raw[i].terms) t.coef /= nrm;
  }
  return SpectralBasis(m, sm, std::move(factors), std::move(raw), true, opt.quadrature_nodes);
}

// Rayleigh-Ritz on radial profiles times fiber harmonics, constrained to
// mean zero; the Dirichlet problem on a geodesic ball.
SpectralBasis ball_basis(const ModelMetric& m, const WarpedRadial& w, const SeparableMetric& sm,
                         const SpectralOptions& opt) {
  const int n = sm.n;
  const int d = n - 1;
  FactorRegistry reg(n);
  const double R = w.r_max;
  if (w.r_min != 0.0) fail(ErrorKind::InvalidRange, "ball basis needs a radial interval starting at 0");
  std::vector<BasisFunction> raw;
  struct Group {
    std::size_t first;
    std::size_t count;
    int degree;
    std::string label;
  };
  std::vector<Group> groups;
  for (int l = 0; l <= opt.lmax; ++l) {
    std::vector<Harmonic> hs;
    if (l == 0) {
      std::vector<int> ones;
      for (int c = 1; c < n; ++c) ones.push_back(reg.one(c));
      hs.push_back({0, "Y0", ones});
    } else {
      hs = sphere_harmonics(d, l, opt.shell_cap, 1, reg);
    }
    for (const auto& h : hs) {
      Group g{raw.size(), 0, l, h.label};
      for (int j = 0; j < opt.radial_profiles; ++j) {
        const int power = l + 2 * j;
        const int id = reg.add(0, "p" + std::to_string(power), [power, R](const Jet& r) {
          Jet s = r * (1.0 / R);
          Jet bump = 1.0 - s * s;
          return pow(s, power) * bump * bump;
        });
        std::vector<int> fac{id};
        fac.insert(fac.end(), h.factors.begin(), h.factors.end());
        raw.push_back(single_term(0.0, l, h.label + "r" + std::to_string(j), fac));
        ++g.count;
      }
      groups.push_back(g);
    }
  }
  auto factors = reg.take();
  SpectralBasis first(m, sm, factors, raw, false, opt.quadrature_nodes);
  std::vector<BasisFunction> out;
  for (const auto& g : groups) {
    const auto f0 = static_cast<Eigen::Index>(g.first);
    const auto cnt = static_cast<Eigen::Index>(g.count);
    Matrix M = first.mass().block(f0, f0, cnt, cnt);
    Matrix S = first.stiffness().block(f0, f0, cnt, cnt);
    Matrix Z = Matrix::Identity(cnt, cnt);
    if (g.degree == 0) {
      const Vector mu = first.means().segment(f0, cnt);
      Eigen::JacobiSVD<Matrix> svd(mu.transpose(), Eigen::ComputeFullV);
      Z = svd.matrixV().rightCols(cnt - 1);
    }
    const Matrix Mr = Z.transpose() * M * Z;
    const Matrix Sr = Z.transpose() * S * Z;
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(Sr, Mr);
    if (ges.info() != Eigen::Success) fail(ErrorKind::InvalidRange, "Ritz problem failed");
    const Matrix C = Z * ges.eigenvectors();
    for (Eigen::Index q = 0; q < C.cols(); ++q) {
      BasisFunction f;
      f.eigenvalue = ges.eigenvalues()(q);
      f.degree = g.degree;
      f.label = g.label + "q" + std::to_string(q);
      for (Eigen::Index j = 0; j < cnt; ++j) {
        SeparableTerm t = raw[g.first + static_cast<std::size_t>(j)].terms[0];
        t.coef = C(j, q);
        f.terms.push_back(t);
      }
      out.push_back(std::move(f));
    }
  }
  return SpectralBasis(m, sm, std::move(factors), std::move(out), false, opt.quadrature_nodes);
}

}  // namespace

SpectralBasis spectral_basis(const ModelMetric& m, const SpectralOptions& opt) {
  if (opt.lmax < 1) fail(ErrorKind::InvalidRange, "lmax must be at least 1");
  auto sm = separable_form(m);
  if (!sm) fail(ErrorKind::InvalidRange, "no spectral basis for " + m.label());
  const ModelMetric& geo = underlying_geometry(m);
  const auto& kind = geo.kind();
  if (const auto* w = std::get_if<WarpedRadial>(&kind)) {
    return ball_basis(m, *w, *sm, opt);
  }
  FactorRegistry reg(sm->n);
  std::vector<BasisFunction> raw;
  if (const auto* s = std::get_if<RoundSphere>(&kind)) {
    raw = sphere_basis(s->n, s->radius, opt, reg);
  } else if (const auto* p = std::get_if<ProductOfSpheres>(&kind)) {
    raw = product_basis(*p, opt, reg);
  } else if (const auto* t = std::get_if<FlatTorus>(&kind)) {
    raw = torus_basis(*t, opt, reg);
  } else {
    fail(ErrorKind::InvalidRange, "no spectral basis for " + m.label());
  }
  return normalized(m, *sm, reg.take(), std::move(raw), opt);
}

}  // namespace rvol
