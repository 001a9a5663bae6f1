#include "spectralopt/curvature.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "spectralopt/polar.hpp"

namespace spectralopt::curvature {

namespace {

std::pair<double, double> eig_extremes(const Matrix& s, const char* who) {
  la::EigResult e = la::sym_eig(s);
  if (!(e.values.front() > 0.0)) {
    throw NumericError(std::string(who) + ": factor is not positive definite");
  }
  return {e.values.front(), e.values.back()};
}

}  // namespace

KroneckerQuadratic::KroneckerQuadratic(Matrix a, Matrix b, Matrix w_star)
    : a_(std::move(a)), b_(std::move(b)), w_star_(std::move(w_star)) {
  if (a_.rows() != a_.cols() || b_.rows() != b_.cols()) {
    throw DimensionError("quadratic: factors must be square");
  }
  if (w_star_.rows() != b_.rows() || w_star_.cols() != a_.rows()) {
    throw DimensionError("quadratic: minimizer must be m x n for factors n x n and m x m");
  }
  auto [amin, amax] = eig_extremes(a_, "quadratic factor a");
  auto [bmin, bmax] = eig_extremes(b_, "quadratic factor b");
  lam_min_a_ = amin;
  lam_max_a_ = amax;
  lam_min_b_ = bmin;
  lam_max_b_ = bmax;
}

Matrix KroneckerQuadratic::hessian(std::size_t cap_elements) const {
  return la::kron(a_, b_, cap_elements);
}

double loss(const KroneckerQuadratic& q, const Matrix& w) {
  if (w.rows() != q.m() || w.cols() != q.n()) {
    throw DimensionError("quadratic loss: parameter shape disagrees with the instance");
  }
  Matrix delta = w - q.w_star();
  Matrix bda = la::matmul(la::matmul(q.b(), delta), q.a());
  return 0.5 * polar::trace_inner(delta, bda);
}

Matrix gradient(const KroneckerQuadratic& q, const Matrix& w) {
  if (w.rows() != q.m() || w.cols() != q.n()) {
    throw DimensionError("quadratic gradient: parameter shape disagrees with the instance");
  }
  Matrix delta = w - q.w_star();
  return la::matmul(la::matmul(q.b(), delta), q.a());
}

Matrix make_spd(int n, double cond, Rng& rng) {
  if (n < 1) throw DimensionError("make_spd: dimension must be positive");
  if (!(cond >= 1.0)) throw DimensionError("make_spd: condition number must be >= 1");
  Matrix r(n, n);
  for (double& v : r.data()) v = rng.normal();
  Matrix s = la::matmul(la::transpose(r), r);
  for (int i = 0; i < n; ++i) s(i, i) += n * 1e-6;

  la::EigResult e = la::sym_eig(s);
  const double lo = e.values.front();
  const double hi = e.values.back();
  const double tgt_lo = 1.0 / cond;
  Matrix scaled(n, n);
  for (int j = 0; j < n; ++j) {
    // Affine rescale of the spectrum onto [1/cond, 1]; a degenerate spread
    // (n = 1 or repeated eigenvalues) collapses to the identity spectrum.
    double lam = hi - lo > 1e-12 * hi
                     ? tgt_lo + (e.values[j] - lo) * (1.0 - tgt_lo) / (hi - lo)
                     : 1.0;
    const double f = std::sqrt(lam);
    for (int i = 0; i < n; ++i) scaled(i, j) = e.vectors(i, j) * f;
  }
  Matrix out = la::matmul(scaled, la::transpose(scaled));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double m = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = m;
      out(j, i) = m;
    }
  return out;
}

KroneckerQuadratic make_instance(int m, int n, double cond_a, double cond_b,
                                 std::uint64_t seed) {
  Rng root(seed);
  Rng rng_a = root.fork(1);
  Rng rng_b = root.fork(2);
  Rng rng_w = root.fork(3);
  Matrix a = make_spd(n, cond_a, rng_a);
  Matrix b = make_spd(m, cond_b, rng_b);
  Matrix w_star(m, n);
  for (double& v : w_star.data()) v = rng_w.normal();
  return KroneckerQuadratic(std::move(a), std::move(b), std::move(w_star));
}

double eta_max_gd(double lam_max_h) {
  if (!(lam_max_h > 0.0)) {
    throw DimensionError("eta_max_gd: curvature bound must be positive");
  }
  return 2.0 / lam_max_h;
}

double eta_max_muon(double lam_max_h, const std::vector<double>& sigma, int m) {
  if (!(lam_max_h > 0.0)) {
    throw DimensionError("eta_max_muon: curvature bound must be positive");
  }
  if (m < 1) throw DimensionError("eta_max_muon: m must be >= 1");
  if (sigma.size() != static_cast<std::size_t>(m)) {
    throw DimensionError("eta_max_muon: expected one singular value per row");
  }
  double sum = 0.0;
  for (double s : sigma) {
    if (s < 0.0) throw DimensionError("eta_max_muon: singular values must be >= 0");
    sum += s;
  }
  return (2.0 / lam_max_h) * (sum / static_cast<double>(m));
}

KfacFactors kfac_factors(const Matrix& x, const Matrix& g) {
  if (x.cols() != g.cols()) {
    throw DimensionError("kfac_factors: data features and gradient columns disagree");
  }
  KfacFactors f{la::matmul(la::transpose(x), x),
                la::matmul(g, la::transpose(g)), 0.0};
  la::EigResult ea = la::sym_eig(f.a);
  la::EigResult eb = la::sym_eig(f.b);
  f.lam_max_h = ea.values.back() * eb.values.back();
  return f;
}

ConditionRatios condition_ratios(const Matrix& a, const Matrix& ggt) {
  auto [amin, amax] = eig_extremes(a, "condition_ratios factor a");
  auto [gmin, gmax] = eig_extremes(ggt, "condition_ratios gradient factor");
  ConditionRatios r;
  r.gd = (amin * gmin) / (amax * gmax);
  r.muon = (amin * std::sqrt(gmin)) / (amax * std::sqrt(gmax));
  return r;
}

PreconditionedExtremes preconditioned_extremes(const Matrix& p, const Matrix& h) {
  if (p.rows() != h.rows() || p.cols() != h.cols() || p.rows() != p.cols()) {
    throw DimensionError("preconditioned_extremes: inputs must be square and equal-sized");
  }
  Matrix root = la::sqrt_spd(p);
  Matrix q = la::matmul(la::matmul(root, h), root);
  for (int i = 0; i < q.rows(); ++i)
    for (int j = i + 1; j < q.cols(); ++j) {
      const double m = 0.5 * (q(i, j) + q(j, i));
      q(i, j) = m;
      q(j, i) = m;
    }
  la::EigResult e = la::sym_eig(q);
  return {e.values.front(), e.values.back()};
}

SpectralReport spectral_report(const Matrix& g) {
  polar::FlatnessReport flat = polar::spectral_flatness(g);
  SpectralReport rep;
  rep.sigma = flat.sigma;
  rep.flatness = flat.flatness;
  rep.eta_ratio = flat.mean;

  // The matrix is paired with itself: g^T g plays the data-factor role and
  // g g^T the gradient-factor role, so every spectral quantity follows from
  // the singular values alone.
  const double smax = flat.sigma_max;
  const double smin = flat.sigma_min;
  rep.lam_max_a = smax * smax;
  rep.lam_min_a = g.cols() > g.rows() ? 0.0 : smin * smin;  // g^T g rank-deficient when wide
  rep.lam_max_b = smax * smax;
  rep.lam_min_b = g.rows() > g.cols() ? 0.0 : smin * smin;  // g g^T rank-deficient when tall
  const double lam_max_h = rep.lam_max_a * rep.lam_max_b;
  rep.eta_max_gd = eta_max_gd(lam_max_h);
  rep.eta_max_muon = rep.eta_max_gd * rep.eta_ratio;
  rep.ratio_gd = (rep.lam_min_a * rep.lam_min_b) / (rep.lam_max_a * rep.lam_max_b);
  rep.ratio_muon = rep.lam_max_b > 0.0
                       ? (rep.lam_min_a * std::sqrt(rep.lam_min_b)) /
                             (rep.lam_max_a * std::sqrt(rep.lam_max_b))
                       : 0.0;
  return rep;
}

}  // namespace spectralopt::curvature
