#pragma once

// Curvature of model metrics at a point.
//
// Conventions: R_ijkl = g(R(d_k, d_l) d_j, d_i), so the unit sphere has
// R_ijkl = g_ik g_jl - g_il g_jk; Ric_jl = g^{ik} R_ijkl. The Laplacian is
// the analyst's Delta = nabla^k nabla_k.

#include <optional>

#include "rvol/model.hpp"
#include "rvol/tensor.hpp"

namespace rvol {

struct CurvaturePack {
  Point point;
  Matrix g;
  Matrix g_inv;
  Tensor4 riemann;
  Matrix ricci;
  double scalar = 0.0;
  // For n = 2 the Schouten formula is singular; we store P = (R/4) g, which
  // is the Einstein normalization P = a g with R = 4a.
  Matrix schouten;
  Tensor4 weyl;
  std::optional<Matrix> bach;
  bool fast_path = false;
};

enum class CurvaturePath { Auto, Chart };

struct CurvatureRequest {
  bool bach = true;
  CurvaturePath path = CurvaturePath::Auto;
};

CurvaturePack curvature_pack(const ModelMetric& m, const Point& p, CurvatureRequest req = {});

struct SchoutenWeylBach {
  Matrix schouten;
  Tensor4 weyl;
  Matrix bach;
};

SchoutenWeylBach schouten_weyl_bach(const ModelMetric& m, const Point& p);

// k-th elementary symmetric function of the eigenvalues of g^{-1} P, from
// Newton's identities on power traces.
double sigma_k(const Matrix& P, const Matrix& g, int k);
double sigma_k_endomorphism(const Matrix& A, int k);

// Largest violations of the trace identities and Riemann symmetries.
struct PackResiduals {
  double ricci_trace = 0.0;
  double schouten_trace = 0.0;
  double weyl_trace = 0.0;
  double antisymmetry = 0.0;
  double pair_exchange = 0.0;
  double bianchi = 0.0;
  double max() const;
};

PackResiduals pack_residuals(const CurvaturePack& pack);

// Throws NotEinstein unless Ric = 2a(n-1)g at deterministic sample points.
void verify_einstein(const ModelMetric& m, double a);

}  // namespace rvol
