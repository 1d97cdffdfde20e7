#pragma once

// Volume-preserving conformal gradient flow toward v_k(e^{2w} g) = const on
// flat tori (Fourier collocation) and round spheres (harmonic coefficients).

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rvol/model.hpp"

namespace rvol {

struct FlowOptions {
  int grid = 16;             // torus points per coordinate
  int sphere_lmax = 4;       // harmonic degree cap on spheres
  int sphere_nodes = 0;      // Gauss-Legendre nodes per polar angle; 0 picks 2 lmax + 4
  double dt0 = 0.0;          // 0 picks 1 / (largest discrete eigenvalue of -Delta)
  double growth = 1.2;       // dt factor after an accepted step
  double dt_min_ratio = 1e-12;
  double tol = 1e-6;         // on sup |v_k - mean|
  long max_steps = 10000;    // accepted steps
};

class FlowDiscretization;

struct FlowState {
  std::shared_ptr<const FlowDiscretization> disc;
  int k = 1;
  // Torus: w at the grid points. Sphere: (constant, harmonic coefficients).
  Vector omega;
  long step = 0;
  double volume = 0.0;
  double target_volume = 0.0;
  Vector vk;  // at the nodes
  double mean = 0.0;      // volume-weighted
  double variance = 0.0;  // volume-weighted
  double sup_defect = 0.0;
  double omega_mean = 0.0;  // of w over the base measure

  int n() const;
  const ModelMetric& base() const;
  // w on the nodes.
  Vector omega_nodes() const;
};

FlowState flow_initial(const ModelMetric& m, int k, const ScalarField& omega0, const FlowOptions& opt = {});

// w <- w - dt sign(n-2k)(v_k - mean), then a constant shift restoring the
// volume. Throws StepRejected when the variance of v_k grows.
FlowState flow_step(const FlowState& s, double dt);

// e^{2w} g with w interpolated from the state.
ModelMetric flow_metric(const FlowState& s);
ScalarField flow_field(const FlowState& s);

struct FlowRecord {
  long step = 0;
  double dt = 0.0;
  double variance = 0.0;
  double sup_defect = 0.0;
  double volume_drift = 0.0;
};

struct FlowReport {
  FlowState final_state;
  bool converged = false;
  std::optional<std::string> diagnostic;  // set with NoConvergence
  long accepted = 0;
  long rejected = 0;
  double max_volume_drift = 0.0;
  double final_constant = 0.0;
  std::vector<FlowRecord> history;  // initial state then every accepted step
};

// Adaptive explicit Euler: dt halves on rejection and grows by opt.growth on
// acceptance. Never throws NoConvergence itself; see require_converged.
FlowReport run_flow(const ModelMetric& m, int k, const ScalarField& omega0, const FlowOptions& opt = {});
void require_converged(const FlowReport& r);

}  // namespace rvol
