#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spectralopt/curvature.hpp"
#include "spectralopt/matrix.hpp"

namespace spectralopt::theory {

// Convergence-ratio denominators at or below this are treated as converged.
inline constexpr double kGapFloor = 1e-14;

enum class StepKind { Gd, MuonExact };

struct ThresholdResult {
  double eta_star_empirical = 0.0;  // bisected one-step descent boundary
  double eta_bound_theory = 0.0;    // sufficient bound from the curvature model
  double loss_at_w = 0.0;
  int bisection_steps = 0;
};

// Doubles eta from the theory bound until one step ascends, then bisects the
// boundary to a relative width of 1e-8. Momentum-free, exact polar for Muon.
ThresholdResult one_step_threshold(const curvature::KroneckerQuadratic& q,
                                   const Matrix& w, StepKind kind);

struct EtaPolicy {
  enum class Mode { Constant, GdTheory, MuonTheory };
  Mode mode = Mode::Constant;
  double value = 0.0;

  static EtaPolicy constant(double eta) { return {Mode::Constant, eta}; }
  static EtaPolicy gd_theory() { return {Mode::GdTheory, 0.0}; }    // eta = 1/beta
  static EtaPolicy muon_theory() { return {Mode::MuonTheory, 0.0}; }  // eta_t = 1/beta_tilde_t
};

struct TraceRow {
  int step = 0;
  double loss = 0.0;
  double gap = 0.0;
  std::optional<double> r_t;          // gap_t / gap_{t-1}, only above the floor
  std::optional<double> eta;          // absent on the initial row
  std::optional<double> alpha_tilde;  // Muon-theory runs only
  std::optional<double> beta_tilde;
  std::optional<double> grad_fro;
  double param_fro = 0.0;
};

struct RunTrace {
  std::vector<TraceRow> rows;  // row 0 is the initial point
  bool converged_early = false;
  // Preconditioned-eta runs stop early once the gradient becomes numerically
  // rank-deficient (the error aligns to its slowest mode), because the
  // preconditioner (G G^T)^{-1/2} is no longer computable at working precision.
  bool precond_degenerate = false;
  int final_step = 0;

  void write_csv(std::ostream& os) const;
};

// Runs `steps` optimizer steps on the quadratic, recording loss, gap,
// per-step convergence ratio and norms. Terminates early once the gap falls
// to the floor. Muon-theory runs record alpha_tilde/beta_tilde from
// P_t = I kron (G_t G_t^T)^{-1/2} against the instance Hessian.
RunTrace run(const curvature::KroneckerQuadratic& q, const Matrix& w0,
             StepKind kind, const EtaPolicy& policy, int steps);

// r_t = (loss_t - l_star) / (loss_{t-1} - l_star); entries are absent where
// the previous gap is at the floor. Errors if l_star exceeds any loss by
// more than a small slack.
std::vector<std::optional<double>> rt_series(const std::vector<double>& losses,
                                             double l_star);

struct Check {
  std::string name;
  double residual = 0.0;
  double tol = 0.0;
  bool pass = false;
};

struct VerificationReport {
  std::vector<Check> checks;  // sorted by name
  bool all_pass() const;
  void write(std::ostream& os) const;  // CHECK <name> residual=<v> tol=<v> PASS|FAIL
};

// Mechanical verification of the learning-rate and convergence-rate claims
// plus the linear-algebra identities they rest on, over seeded random
// instances of the given shapes.
VerificationReport verify_all(std::uint64_t seed,
                              const std::vector<std::pair<int, int>>& sizes);

}  // namespace spectralopt::theory
