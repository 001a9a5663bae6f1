#pragma once

#include <cstdint>
#include <vector>

#include "spectralopt/densela.hpp"
#include "spectralopt/matrix.hpp"
#include "spectralopt/rng.hpp"

namespace spectralopt::curvature {

// Quadratic loss L(w) = 0.5 * tr((w - w*)^T b (w - w*) a) whose Hessian in
// vec coordinates is kron(a, b). The loss floor is 0 by construction. The
// factor eigenvalue extremes are computed once at construction.
class KroneckerQuadratic {
 public:
  KroneckerQuadratic(Matrix a, Matrix b, Matrix w_star);

  const Matrix& a() const { return a_; }
  const Matrix& b() const { return b_; }
  const Matrix& w_star() const { return w_star_; }
  int m() const { return b_.rows(); }
  int n() const { return a_.rows(); }
  int dim() const { return m() * n(); }

  double lam_min_a() const { return lam_min_a_; }
  double lam_max_a() const { return lam_max_a_; }
  double lam_min_b() const { return lam_min_b_; }
  double lam_max_b() const { return lam_max_b_; }
  double alpha() const { return lam_min_a_ * lam_min_b_; }  // lambda_min of the Hessian
  double beta() const { return lam_max_a_ * lam_max_b_; }   // lambda_max of the Hessian

  // Materialized kron(a, b); subject to the usual element cap.
  Matrix hessian(std::size_t cap_elements = la::kKronCapElements) const;

 private:
  Matrix a_, b_, w_star_;
  double lam_min_a_, lam_max_a_, lam_min_b_, lam_max_b_;
};

double loss(const KroneckerQuadratic& q, const Matrix& w);
Matrix gradient(const KroneckerQuadratic& q, const Matrix& w);  // b (w - w*) a

// Random SPD with the requested condition number: a seeded Gram matrix plus
// a small ridge, eigenvalues rescaled affinely onto [1/cond, 1].
Matrix make_spd(int n, double cond, Rng& rng);

// Random instance; w* entries are standard normal.
KroneckerQuadratic make_instance(int m, int n, double cond_a, double cond_b,
                                 std::uint64_t seed);

// Largest one-step-descent learning rates implied by the curvature model.
double eta_max_gd(double lam_max_h);
double eta_max_muon(double lam_max_h, const std::vector<double>& sigma, int m);

struct KfacFactors {
  Matrix a;          // x^T x
  Matrix b;          // g g^T
  double lam_max_h;  // lambda_max(x^T x) * sigma_max(g)^2
};
KfacFactors kfac_factors(const Matrix& x, const Matrix& g);

struct ConditionRatios {
  double gd;    // lam_min(a) lam_min(ggt) / (lam_max(a) lam_max(ggt))
  double muon;  // lam_min(a) sqrt(lam_min(ggt)) / (lam_max(a) sqrt(lam_max(ggt)))
};
ConditionRatios condition_ratios(const Matrix& a, const Matrix& ggt);

struct PreconditionedExtremes {
  double alpha_tilde;  // lambda_min(P^{1/2} H P^{1/2})
  double beta_tilde;   // lambda_max(P^{1/2} H P^{1/2})
};
// p must be SPD, h symmetric PSD, both square of equal dimension.
PreconditionedExtremes preconditioned_extremes(const Matrix& p, const Matrix& h);

// Spectrum summary of a single gradient-like matrix g, using g^T g in the
// input-factor role and g g^T in the gradient-factor role.
struct SpectralReport {
  std::vector<double> sigma;
  double flatness = 0.0;   // sum(sigma) / (m * sigma_max)
  double eta_ratio = 0.0;  // sum(sigma) / m: Muon-to-GD threshold ratio
  double lam_max_a = 0.0, lam_min_a = 0.0;
  double lam_max_b = 0.0, lam_min_b = 0.0;
  double eta_max_gd = 0.0, eta_max_muon = 0.0;
  double ratio_gd = 0.0, ratio_muon = 0.0;
};
SpectralReport spectral_report(const Matrix& g);

}  // namespace spectralopt::curvature
