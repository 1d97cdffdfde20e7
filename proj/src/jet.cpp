#include "rvol/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <unordered_map>

namespace rvol {

namespace {

std::uint64_t encode(std::span<const int> alpha, int base) {
  std::uint64_t key = 0;
  for (int a : alpha) key = key * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(a);
  return key;
}

// All multi-indices of length n with total degree exactly d, lexicographic.
void enumerate_degree(int n, int d, std::vector<int>& current, int pos,
                      std::vector<std::vector<int>>& out) {
  if (pos == n - 1) {
    current[static_cast<std::size_t>(pos)] = d;
    out.push_back(current);
    return;
  }
  for (int a = d; a >= 0; --a) {
    current[static_cast<std::size_t>(pos)] = a;
    enumerate_degree(n, d - a, current, pos + 1, out);
  }
}

struct SpaceIndex {
  std::unordered_map<std::uint64_t, std::size_t> map;
};

std::map<std::pair<int, int>, std::unique_ptr<JetSpace>>& registry() {
  static std::map<std::pair<int, int>, std::unique_ptr<JetSpace>> spaces;
  return spaces;
}

std::map<const JetSpace*, SpaceIndex>& index_registry() {
  static std::map<const JetSpace*, SpaceIndex> idx;
  return idx;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

const JetSpace& JetSpace::get(int nvars, int order) {
  if (nvars < 1 || order < 0) throw std::invalid_argument("JetSpace: invalid shape");
  std::lock_guard<std::mutex> lock(registry_mutex());
  auto& reg = registry();
  auto key = std::make_pair(nvars, order);
  auto it = reg.find(key);
  if (it != reg.end()) return *it->second;
  std::unique_ptr<JetSpace> space(new JetSpace(nvars, order));
  const JetSpace& ref = *space;
  reg.emplace(key, std::move(space));
  return ref;
}

JetSpace::JetSpace(int nvars, int order) : nvars_(nvars), order_(order) {
  std::vector<std::vector<int>> monomials;
  std::vector<int> current(static_cast<std::size_t>(nvars), 0);
  degree_start_.push_back(0);
  for (int d = 0; d <= order; ++d) {
    enumerate_degree(nvars, d, current, 0, monomials);
    degree_start_.push_back(monomials.size());
  }
  SpaceIndex index;
  const int base = order + 1;
  for (std::size_t i = 0; i < monomials.size(); ++i) {
    int deg = 0;
    for (int a : monomials[i]) {
      exponents_.push_back(a);
      deg += a;
    }
    degree_of_.push_back(deg);
    index.map.emplace(encode(monomials[i], base), i);
  }

  unit_.resize(static_cast<std::size_t>(nvars), 0);
  if (order >= 1) {
    for (int v = 0; v < nvars; ++v) {
      std::vector<int> e(static_cast<std::size_t>(nvars), 0);
      e[static_cast<std::size_t>(v)] = 1;
      unit_[static_cast<std::size_t>(v)] = index.map.at(encode(e, base));
    }
  }

  std::vector<std::vector<ProductTerm>> by_degree(static_cast<std::size_t>(order + 1));
  std::vector<int> sum(static_cast<std::size_t>(nvars));
  for (std::size_t a = 0; a < monomials.size(); ++a) {
    for (std::size_t b = 0; b < monomials.size(); ++b) {
      const int total = degree_of_[a] + degree_of_[b];
      if (total > order) continue;
      for (std::size_t v = 0; v < sum.size(); ++v) sum[v] = monomials[a][v] + monomials[b][v];
      by_degree[static_cast<std::size_t>(total)].push_back(
          {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
           static_cast<std::uint32_t>(index.map.at(encode(sum, base)))});
    }
  }
  for (auto& group : by_degree) {
    products_.insert(products_.end(), group.begin(), group.end());
    products_upto_.push_back(products_.size());
  }

  derivatives_.resize(static_cast<std::size_t>(nvars));
  for (int v = 0; v < nvars; ++v) {
    for (std::size_t i = 0; i < monomials.size(); ++i) {
      const int a = monomials[i][static_cast<std::size_t>(v)];
      if (a == 0) continue;
      std::vector<int> lower = monomials[i];
      lower[static_cast<std::size_t>(v)] -= 1;
      derivatives_[static_cast<std::size_t>(v)].push_back(
          {static_cast<std::uint32_t>(i),
           static_cast<std::uint32_t>(index.map.at(encode(lower, base))),
           static_cast<double>(a)});
    }
  }
  index_registry().emplace(this, std::move(index));
}

std::size_t JetSpace::size_upto(int d) const {
  if (d < 0) return 0;
  return degree_start_[static_cast<std::size_t>(std::min(d, order_) + 1)];
}

std::span<const int> JetSpace::exponents(std::size_t idx) const {
  return {exponents_.data() + idx * static_cast<std::size_t>(nvars_),
          static_cast<std::size_t>(nvars_)};
}

std::size_t JetSpace::index(std::span<const int> alpha) const {
  std::lock_guard<std::mutex> lock(registry_mutex());
  const auto& idx = index_registry().at(this);
  auto it = idx.map.find(encode(alpha, order_ + 1));
  if (it == idx.map.end()) throw std::out_of_range("JetSpace::index: multi-index out of range");
  return it->second;
}

std::span<const JetSpace::ProductTerm> JetSpace::products(int max_degree) const {
  const int d = std::min(max_degree, order_);
  if (d < 0) return {};
  return {products_.data(), products_upto_[static_cast<std::size_t>(d)]};
}

std::span<const JetSpace::DerivativeTerm> JetSpace::derivative_terms(int var) const {
  return derivatives_[static_cast<std::size_t>(var)];
}

// ---------------------------------------------------------------------------

Jet::Jet(const JetSpace& space, double constant)
    : space_(&space), order_(space.order()), c_(space.size(), 0.0) {
  c_[0] = constant;
}

Jet Jet::variable(const JetSpace& space, int var, double value) {
  Jet j(space, value);
  if (space.order() >= 1) j.c_[space.unit(var)] = 1.0;
  return j;
}

double Jet::derivative(std::span<const int> alpha) const {
  int deg = 0;
  double factorial = 1.0;
  for (int a : alpha) {
    deg += a;
    for (int t = 2; t <= a; ++t) factorial *= t;
  }
  if (deg > order_) throw std::out_of_range("Jet::derivative: order exceeds truncation");
  return factorial * c_[space_->index(alpha)];
}

double Jet::gradient(int var) const {
  if (order_ < 1) throw std::out_of_range("Jet::gradient: order-0 jet");
  return c_[space_->unit(var)];
}

Jet Jet::partial(int var) const {
  if (order_ < 1) throw std::out_of_range("Jet::partial: order-0 jet");
  std::vector<double> out(c_.size(), 0.0);
  for (const auto& t : space_->derivative_terms(var)) {
    if (space_->degree(t.from) > order_) continue;
    out[t.to] += t.factor * c_[t.from];
  }
  return Jet(*space_, order_ - 1, std::move(out));
}

Jet Jet::truncated(int order) const {
  if (order >= order_) return *this;
  Jet r = *this;
  r.order_ = std::max(order, 0);
  for (std::size_t i = space_->size_upto(r.order_); i < r.c_.size(); ++i) r.c_[i] = 0.0;
  return r;
}

Jet& Jet::operator+=(const Jet& o) {
  const int ord = std::min(order_, o.order_);
  const std::size_t n = space_->size_upto(ord);
  for (std::size_t i = 0; i < n; ++i) c_[i] += o.c_[i];
  for (std::size_t i = n; i < c_.size(); ++i) c_[i] = 0.0;
  order_ = ord;
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  const int ord = std::min(order_, o.order_);
  const std::size_t n = space_->size_upto(ord);
  for (std::size_t i = 0; i < n; ++i) c_[i] -= o.c_[i];
  for (std::size_t i = n; i < c_.size(); ++i) c_[i] = 0.0;
  order_ = ord;
  return *this;
}

Jet Jet::product(const Jet& a, const Jet& b, int order) {
  const int ord = std::min({order, a.order_, b.order_});
  std::vector<double> out(a.c_.size(), 0.0);
  const double* ac = a.c_.data();
  const double* bc = b.c_.data();
  for (const auto& t : a.space_->products(ord)) out[t.out] += ac[t.a] * bc[t.b];
  return Jet(*a.space_, ord, std::move(out));
}

Jet& Jet::operator*=(const Jet& o) {
  *this = product(*this, o, order_);
  return *this;
}

Jet& Jet::operator+=(double s) {
  c_[0] += s;
  return *this;
}

Jet& Jet::operator-=(double s) {
  c_[0] -= s;
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (auto& v : c_) v *= s;
  return *this;
}

Jet& Jet::operator/=(double s) {
  for (auto& v : c_) v /= s;
  return *this;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (auto& v : r.c_) v = -v;
  return r;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }
Jet operator*(const Jet& a, const Jet& b) { return Jet::product(a, b, a.order()); }
Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
Jet operator+(Jet a, double s) { return a += s; }
Jet operator+(double s, Jet a) { return a += s; }
Jet operator-(Jet a, double s) { return a -= s; }
Jet operator-(double s, const Jet& a) { return (-a) += s; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }
Jet operator/(Jet a, double s) { return a /= s; }
Jet operator/(double s, const Jet& a) { return reciprocal(a) *= s; }

Jet compose(const Jet& x, std::span<const double> taylor) {
  const int ord = x.order_;
  Jet h = x;
  h.c_[0] = 0.0;
  Jet r(x.space(), taylor[static_cast<std::size_t>(ord)]);
  r.order_ = ord;
  for (int k = ord - 1; k >= 0; --k) {
    r = Jet::product(r, h, ord);
    r.c_[0] += taylor[static_cast<std::size_t>(k)];
  }
  return r;
}

namespace {

std::vector<double> cyclic_taylor(double f0, double f1, double f2, double f3, int order) {
  const double d[4] = {f0, f1, f2, f3};
  std::vector<double> t(static_cast<std::size_t>(order + 1));
  double fact = 1.0;
  for (int k = 0; k <= order; ++k) {
    if (k > 0) fact *= k;
    t[static_cast<std::size_t>(k)] = d[k % 4] / fact;
  }
  return t;
}

}  // namespace

Jet sin(const Jet& x) {
  const double s = std::sin(x.value()), c = std::cos(x.value());
  return compose(x, cyclic_taylor(s, c, -s, -c, x.order()));
}

Jet cos(const Jet& x) {
  const double s = std::sin(x.value()), c = std::cos(x.value());
  return compose(x, cyclic_taylor(c, -s, -c, s, x.order()));
}

Jet sinh(const Jet& x) {
  const double s = std::sinh(x.value()), c = std::cosh(x.value());
  return compose(x, cyclic_taylor(s, c, s, c, x.order()));
}

Jet cosh(const Jet& x) {
  const double s = std::sinh(x.value()), c = std::cosh(x.value());
  return compose(x, cyclic_taylor(c, s, c, s, x.order()));
}

Jet exp(const Jet& x) {
  const double e = std::exp(x.value());
  return compose(x, cyclic_taylor(e, e, e, e, x.order()));
}

Jet log(const Jet& x) {
  const double x0 = x.value();
  std::vector<double> t(static_cast<std::size_t>(x.order() + 1));
  t[0] = std::log(x0);
  double p = 1.0;
  for (int k = 1; k <= x.order(); ++k) {
    p *= x0;
    t[static_cast<std::size_t>(k)] = ((k % 2 == 1) ? 1.0 : -1.0) / (k * p);
  }
  return compose(x, t);
}

Jet pow(const Jet& x, double p) {
  const double x0 = x.value();
  std::vector<double> t(static_cast<std::size_t>(x.order() + 1));
  double binom = 1.0;
  for (int k = 0; k <= x.order(); ++k) {
    if (k > 0) binom *= (p - (k - 1)) / k;
    t[static_cast<std::size_t>(k)] = binom * std::pow(x0, p - k);
  }
  return compose(x, t);
}

Jet sqrt(const Jet& x) { return pow(x, 0.5); }

Jet pow(const Jet& x, int p) {
  if (p < 0) return reciprocal(pow(x, -p));
  Jet r(x.space(), 1.0);
  Jet base = x;
  while (p > 0) {
    if (p & 1) r = r * base;
    p >>= 1;
    if (p > 0) base = base * base;
  }
  return r.truncated(x.order());
}

Jet reciprocal(const Jet& x) {
  const double x0 = x.value();
  std::vector<double> t(static_cast<std::size_t>(x.order() + 1));
  double p = 1.0 / x0;
  for (int k = 0; k <= x.order(); ++k) {
    t[static_cast<std::size_t>(k)] = ((k % 2 == 0) ? 1.0 : -1.0) * p;
    p /= x0;
  }
  return compose(x, t);
}

}  // namespace rvol
