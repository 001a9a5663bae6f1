#include "spectralopt/densela.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace spectralopt::la {

namespace {

double off_diagonal_norm(const Matrix& s) {
  double acc = 0.0;
  for (int r = 0; r < s.rows(); ++r)
    for (int c = 0; c < s.cols(); ++c)
      if (r != c) acc += s(r, c) * s(r, c);
  return std::sqrt(acc);
}

// Symmetry gate shared by the symmetric-input routines: the skew part must
// be small relative to the whole, then we work on the symmetrized copy.
Matrix require_symmetric(const Matrix& s, const char* who) {
  if (s.rows() != s.cols()) {
    throw DimensionError(std::string(who) + ": input must be square, got " +
                         std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
  }
  double skew = 0.0;
  for (int r = 0; r < s.rows(); ++r)
    for (int c = 0; c < s.cols(); ++c) {
      double d = 0.5 * (s(r, c) - s(c, r));
      skew += d * d;
    }
  double fro = frobenius_norm(s);
  if (std::sqrt(skew) > 1e-9 * std::max(fro, 1e-300)) {
    throw DimensionError(std::string(who) + ": input is not symmetric");
  }
  Matrix sym(s.rows(), s.cols());
  for (int r = 0; r < s.rows(); ++r)
    for (int c = 0; c < s.cols(); ++c) sym(r, c) = 0.5 * (s(r, c) + s(c, r));
  return sym;
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: inner dimensions disagree (" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
  }
  Matrix out(a.rows(), b.cols());
  const int n = a.cols();
  for (int r = 0; r < a.rows(); ++r) {
    for (int k = 0; k < n; ++k) {
      const double arow = a(r, k);
      if (arow == 0.0) continue;
      for (int c = 0; c < b.cols(); ++c) out(r, c) += arow * b(k, c);
    }
  }
  out.check_finite("matmul");
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (int r = 0; r < a.rows(); ++r)
    for (int c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

double frobenius_norm(const Matrix& a) {
  double acc = 0.0;
  for (double v : a.data()) acc += v * v;
  return std::sqrt(acc);
}

double trace(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("trace: input must be square");
  double acc = 0.0;
  for (int i = 0; i < a.rows(); ++i) acc += a(i, i);
  return acc;
}

Matrix vec(const Matrix& a) {
  Matrix out(a.rows() * a.cols(), 1);
  for (int c = 0; c < a.cols(); ++c)
    for (int r = 0; r < a.rows(); ++r)
      out(c * a.rows() + r, 0) = a(r, c);
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b, std::size_t cap_elements) {
  std::size_t rows = static_cast<std::size_t>(a.rows()) * b.rows();
  std::size_t cols = static_cast<std::size_t>(a.cols()) * b.cols();
  if (rows * cols > cap_elements) {
    throw DimensionError("kron: result of " + std::to_string(rows) + "x" +
                         std::to_string(cols) + " exceeds the element cap");
  }
  Matrix out(static_cast<int>(rows), static_cast<int>(cols));
  for (int ar = 0; ar < a.rows(); ++ar)
    for (int ac = 0; ac < a.cols(); ++ac) {
      double v = a(ar, ac);
      if (v == 0.0) continue;
      for (int br = 0; br < b.rows(); ++br)
        for (int bc = 0; bc < b.cols(); ++bc)
          out(ar * b.rows() + br, ac * b.cols() + bc) = v * b(br, bc);
    }
  out.check_finite("kron");
  return out;
}

EigResult sym_eig(const Matrix& s, int max_sweeps) {
  Matrix a = require_symmetric(s, "sym_eig");
  const int n = a.rows();
  Matrix v = Matrix::identity(n);
  const double target = 1e-12 * std::max(frobenius_norm(a), 1e-300);

  bool converged = off_diagonal_norm(a) <= target;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        const double app = a(p, p), aqq = a(q, q);
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(p, k) = a(k, p);
          a(k, q) = sn * akp + c * akq;
          a(q, k) = a(k, q);
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - sn * vkq;
          v(k, q) = sn * vkp + c * vkq;
        }
      }
    }
    converged = off_diagonal_norm(a) <= target;
  }
  if (!converged) {
    throw ConvergenceError("sym_eig: Jacobi did not converge in " +
                           std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return a(i, i) < a(j, j); });
  EigResult out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (int j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (int i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

SvdResult svd(const Matrix& g, int max_sweeps) {
  if (g.rows() > g.cols()) {
    throw DimensionError("svd: expects rows <= cols; transpose the input");
  }
  const int m = g.rows();
  const int n = g.cols();
  // Work on the columns of b = g^T (n x m); right-rotations orthogonalize
  // them, and the accumulated rotations form the left factor of g.
  Matrix b = transpose(g);
  Matrix u = Matrix::identity(m);

  const double pair_tol = 1e-13;
  bool converged = false;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    int rotations = 0;
    for (int p = 0; p < m - 1; ++p) {
      for (int q = p + 1; q < m; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < n; ++i) {
          app += b(i, p) * b(i, p);
          aqq += b(i, q) * b(i, q);
          apq += b(i, p) * b(i, q);
        }
        // Scale-safe gate: sqrt(app)*sqrt(aqq) avoids overflow/underflow of
        // the product, and the absolute floor treats denormal-level column
        // pairs as orthogonal instead of rotating on arithmetic noise.
        const double scale = std::sqrt(app) * std::sqrt(aqq);
        if (apq == 0.0 || std::abs(apq) <= pair_tol * scale || scale < 1e-290) {
          continue;
        }
        ++rotations;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (int i = 0; i < n; ++i) {
          const double bp = b(i, p), bq = b(i, q);
          b(i, p) = c * bp - sn * bq;
          b(i, q) = sn * bp + c * bq;
        }
        for (int i = 0; i < m; ++i) {
          const double up = u(i, p), uq = u(i, q);
          u(i, p) = c * up - sn * uq;
          u(i, q) = sn * up + c * uq;
        }
      }
    }
    converged = rotations == 0;
  }
  if (!converged) {
    throw ConvergenceError("svd: one-sided Jacobi did not converge in " +
                           std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<double> sigma(m);
  for (int j = 0; j < m; ++j) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += b(i, j) * b(i, j);
    sigma[j] = std::sqrt(acc);
  }
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return sigma[i] > sigma[j]; });

  SvdResult out;
  out.sigma.resize(m);
  out.u = Matrix(m, m);
  out.v = Matrix(n, m);
  for (int j = 0; j < m; ++j) {
    const int src = order[j];
    out.sigma[j] = sigma[src];
    for (int i = 0; i < m; ++i) out.u(i, j) = u(i, src);
    if (sigma[src] > 0.0) {
      for (int i = 0; i < n; ++i) out.v(i, j) = b(i, src) / sigma[src];
    }
  }
  // Exactly-zero singular values leave holes in v; fill them with an
  // orthonormal completion chosen deterministically from the standard basis.
  for (int j = 0; j < m; ++j) {
    if (out.sigma[j] > 0.0) continue;
    int best_k = -1;
    double best_norm = -1.0;
    std::vector<double> best;
    for (int k = 0; k < n; ++k) {
      std::vector<double> cand(n, 0.0);
      cand[k] = 1.0;
      for (int other = 0; other < m; ++other) {
        if (other == j) continue;
        if (out.sigma[other] <= 0.0 && other > j) continue;  // not yet filled
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += cand[i] * out.v(i, other);
        for (int i = 0; i < n; ++i) cand[i] -= dot * out.v(i, other);
      }
      double norm = 0.0;
      for (double x : cand) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > best_norm + 1e-12) {
        best_norm = norm;
        best_k = k;
        best = cand;
      }
    }
    if (best_k < 0 || best_norm <= 1e-6) {
      throw NumericError("svd: failed to complete an orthonormal basis");
    }
    for (int i = 0; i < n; ++i) out.v(i, j) = best[i] / best_norm;
  }
  return out;
}

double lambda_max_power(const Matrix& s, double tol, int max_iters) {
  Matrix a = require_symmetric(s, "lambda_max_power");
  if (tol <= 0.0) throw DimensionError("lambda_max_power: tol must be positive");
  const int n = a.rows();
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<double> y(n);
  double nu = 0.0;
  for (int iter = 0; iter < max_iters; ++iter) {
    for (int r = 0; r < n; ++r) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c) acc += a(r, c) * x[c];
      y[r] = acc;
    }
    nu = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
    double resid = 0.0;
    for (int r = 0; r < n; ++r) {
      const double d = y[r] - nu * x[r];
      resid += d * d;
    }
    if (std::sqrt(resid) <= tol * std::max(std::abs(nu), 1e-300)) {
      return nu;
    }
    double ynorm = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
    if (ynorm == 0.0) return 0.0;  // the start vector is in the null space
    for (int r = 0; r < n; ++r) x[r] = y[r] / ynorm;
  }
  throw ConvergenceError("lambda_max_power: no convergence in " +
                         std::to_string(max_iters) + " iterations");
}

namespace {

Matrix spd_function(const Matrix& s, double eig_floor_rel, bool inverse, const char* who) {
  EigResult e = sym_eig(s);
  const double lam_max = e.values.back();
  if (!(lam_max > 0.0)) {
    throw NumericError(std::string(who) + ": input is not positive definite");
  }
  const double floor = eig_floor_rel * lam_max;
  if (e.values.front() < floor) {
    throw NumericError(std::string(who) + ": smallest eigenvalue " +
                       std::to_string(e.values.front()) +
                       " is below the relative floor");
  }
  const int n = s.rows();
  // r = v diag(g(lambda)) v^T built as (v g^{1/2})(v g^{1/2})^T so the
  // result is symmetric positive definite by construction.
  Matrix scaled(n, n);
  for (int j = 0; j < n; ++j) {
    const double f = std::pow(e.values[j], inverse ? -0.25 : 0.25);
    for (int i = 0; i < n; ++i) scaled(i, j) = e.vectors(i, j) * f;
  }
  Matrix r = matmul(scaled, transpose(scaled));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double m = 0.5 * (r(i, j) + r(j, i));
      r(i, j) = m;
      r(j, i) = m;
    }
  return r;
}

}  // namespace

Matrix sqrt_spd(const Matrix& s, double eig_floor_rel) {
  return spd_function(s, eig_floor_rel, false, "sqrt_spd");
}

Matrix sqrt_inv_spd(const Matrix& s, double eig_floor_rel) {
  return spd_function(s, eig_floor_rel, true, "sqrt_inv_spd");
}

}  // namespace spectralopt::la
