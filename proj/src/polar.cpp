#include "spectralopt/polar.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace spectralopt::polar {

namespace {

int count_retained(const std::vector<double>& sigma_desc) {
  if (sigma_desc.empty() || sigma_desc.front() <= 0.0) return 0;
  const double cutoff = kRankTol * sigma_desc.front();
  int kept = 0;
  for (double s : sigma_desc)
    if (s > cutoff) ++kept;
  return kept;
}

// The Frobenius norm of a matrix whose entries sit near the limits of the
// exponent range under- or overflows even though the entries themselves are
// representable. Dividing by the largest magnitude brings such inputs back
// into the safe range without changing the polar factor.
Matrix renormalized_extreme(const Matrix& g, const char* who) {
  double mx = 0.0;
  for (double v : g.data()) mx = std::max(mx, std::abs(v));
  if (mx == 0.0) {
    throw NumericError(std::string(who) + ": zero matrix has no polar factor");
  }
  if (!std::isfinite(mx)) {
    throw NumericError(std::string(who) + ": non-finite input");
  }
  Matrix scaled = g;
  for (double& v : scaled.data()) v /= mx;
  return scaled;
}

}  // namespace

void NewtonSchulzConfig::validate() const {
  if (iterations <= 0) {
    throw DimensionError("newton_schulz: iterations must be positive");
  }
  if (!(prescale_epsilon > 0.0)) {
    throw DimensionError("newton_schulz: prescale_epsilon must be positive");
  }
  const double p1 = a + b + c;
  if (!std::isfinite(p1) || std::abs(p1 - 1.0) > 0.35) {
    throw NumericError("newton_schulz: polynomial maps 1 to " +
                       std::to_string(p1) + ", too far from the fixed point");
  }
}

Matrix exact_polar(const Matrix& g) {
  const double fro = la::frobenius_norm(g);
  if (fro == 0.0 || !std::isfinite(fro)) {
    return exact_polar(renormalized_extreme(g, "exact_polar"));
  }
  if (g.rows() > g.cols()) return la::transpose(exact_polar(la::transpose(g)));
  // The polar factor is invariant to positive scaling; normalizing first
  // keeps the factorization away from overflow/underflow on extreme inputs.
  la::SvdResult s = la::svd((1.0 / fro) * g);
  const int kept = count_retained(s.sigma);
  Matrix q(g.rows(), g.cols());
  for (int k = 0; k < kept; ++k)
    for (int r = 0; r < g.rows(); ++r)
      for (int c = 0; c < g.cols(); ++c)
        q(r, c) += s.u(r, k) * s.v(c, k);
  return q;
}

NewtonSchulzResult newton_schulz(const Matrix& g, const NewtonSchulzConfig& cfg) {
  cfg.validate();
  const double input_fro = la::frobenius_norm(g);
  if (input_fro == 0.0 || !std::isfinite(input_fro)) {
    return newton_schulz(renormalized_extreme(g, "newton_schulz"), cfg);
  }
  if (g.rows() > g.cols()) {
    NewtonSchulzResult r = newton_schulz(la::transpose(g), cfg);
    r.q = la::transpose(r.q);
    return r;
  }

  const int m = g.rows();
  const double scale = la::frobenius_norm(g) + cfg.prescale_epsilon;
  Matrix x = (1.0 / scale) * g;
  for (int it = 0; it < cfg.iterations; ++it) {
    Matrix gram = la::matmul(x, la::transpose(x));  // m x m
    Matrix poly(m, m);                              // b*gram + c*gram^2
    if (cfg.c != 0.0) {
      Matrix gram2 = la::matmul(gram, gram);
      for (int i = 0; i < m * m; ++i)
        poly.data()[i] = cfg.b * gram.data()[i] + cfg.c * gram2.data()[i];
    } else {
      for (int i = 0; i < m * m; ++i) poly.data()[i] = cfg.b * gram.data()[i];
    }
    x = cfg.a * x + la::matmul(poly, x);
    x.check_finite("newton_schulz");
  }

  NewtonSchulzResult out{x, 0.0, 0};
  la::SvdResult in_svd = la::svd(g);
  out.retained = count_retained(in_svd.sigma);
  if (out.retained > 0) {
    la::SvdResult q_svd = la::svd(x);
    double worst = 0.0;
    for (int k = 0; k < out.retained; ++k)
      worst = std::max(worst, std::abs(q_svd.sigma[k] - 1.0));
    out.delta = worst;
  }
  return out;
}

double trace_inner(const Matrix& a, const Matrix& b) {
  if (!same_shape(a, b)) throw DimensionError("trace_inner: shapes disagree");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

FlatnessReport spectral_flatness(const Matrix& g) {
  la::SvdResult s = g.rows() <= g.cols() ? la::svd(g) : la::svd(la::transpose(g));
  FlatnessReport rep;
  rep.sigma = s.sigma;
  rep.sigma_max = s.sigma.front();
  rep.sigma_min = s.sigma.back();
  for (double v : s.sigma) rep.sum += v;
  const double m = static_cast<double>(s.sigma.size());
  rep.mean = rep.sum / m;
  if (rep.sigma_max <= 0.0) {
    throw NumericError("spectral_flatness: zero matrix has no flatness");
  }
  rep.flatness = rep.sum / (m * rep.sigma_max);
  return rep;
}

}  // namespace spectralopt::polar
