#pragma once

#include <vector>

#include "spectralopt/densela.hpp"
#include "spectralopt/matrix.hpp"

namespace spectralopt::polar {

// Directions whose singular value is at or below kRankTol * sigma_max are
// treated as numerically null and dropped from the polar factor.
inline constexpr double kRankTol = 1e-10;

struct NewtonSchulzConfig {
  int iterations = 5;
  // Odd polynomial p(s) = a*s + b*s^3 + c*s^5 applied per iteration as
  // X <- aX + bX(X^T X) + cX(X^T X)^2. The default triple trades accuracy
  // for speed: it expands small singular values fast but settles into an
  // oscillating band around 1 instead of converging.
  double a = 3.4445;
  double b = -4.7750;
  double c = 2.0315;
  double prescale_epsilon = 1e-7;

  // Classical contracting variant: monotone convergence of all singular
  // values to 1, at the price of more iterations on ill-conditioned input.
  static NewtonSchulzConfig cubic(int iterations = 5) {
    NewtonSchulzConfig cfg;
    cfg.iterations = iterations;
    cfg.a = 1.5;
    cfg.b = -0.5;
    cfg.c = 0.0;
    return cfg;
  }

  // Rejects triples whose scalar map visibly drifts away from the s = 1
  // fixed region (|p(1) - 1| > 0.35), zero or negative iteration counts,
  // and non-positive prescale epsilon.
  void validate() const;
};

struct NewtonSchulzResult {
  Matrix q;       // approximate polar factor, same shape as the input
  double delta;   // max |sigma_i(q) - 1| over the retained directions
  int retained;   // input singular values above the rank tolerance
};

// Orthogonal polar factor U V^T from the SVD, with near-null directions
// dropped. Accepts any shape; wide/tall handling transposes internally.
Matrix exact_polar(const Matrix& g);

NewtonSchulzResult newton_schulz(const Matrix& g,
                                 const NewtonSchulzConfig& cfg = {});

// Frobenius inner product <a, b> = sum_ij a_ij b_ij.
double trace_inner(const Matrix& a, const Matrix& b);

struct FlatnessReport {
  std::vector<double> sigma;  // descending, length min(rows, cols)
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double sum = 0.0;
  double mean = 0.0;      // sum / m, m = min(rows, cols)
  double flatness = 0.0;  // sum / (m * sigma_max), in (0, 1]
};

FlatnessReport spectral_flatness(const Matrix& g);

}  // namespace spectralopt::polar
