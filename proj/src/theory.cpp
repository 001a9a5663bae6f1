#include "spectralopt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>

#include "spectralopt/parallel.hpp"
#include "spectralopt/polar.hpp"
#include "spectralopt/rng.hpp"

namespace spectralopt::theory {

namespace {

// vec(d)^T H vec(d) in matrix form, avoiding Kronecker materialization.
double quad_form(const curvature::KroneckerQuadratic& q, const Matrix& d) {
  return polar::trace_inner(d, la::matmul(la::matmul(q.b(), d), q.a()));
}

void require_wide(const curvature::KroneckerQuadratic& q, const char* who) {
  if (q.m() > q.n()) {
    throw DimensionError(std::string(who) +
                         ": the polar-factor analysis assumes rows <= cols");
  }
}

// Extremes of P^{1/2} H P^{1/2} for P = I kron (g g^T)^{-1/2}, using the
// Kronecker structure: the conjugated Hessian is a kron (c b c) with
// c = (g g^T)^{-1/4}, so only m x m eigenproblems are needed.
std::pair<double, double> tilde_extremes(const curvature::KroneckerQuadratic& q,
                                         const Matrix& g) {
  Matrix ggt = la::matmul(g, la::transpose(g));
  Matrix c = la::sqrt_spd(la::sqrt_inv_spd(ggt));
  Matrix conj = la::matmul(la::matmul(c, q.b()), c);
  la::EigResult e = la::sym_eig(conj);
  return {q.lam_min_a() * e.values.front(), q.lam_max_a() * e.values.back()};
}

Matrix step_direction(const curvature::KroneckerQuadratic& q, const Matrix& w,
                      StepKind kind, const Matrix& grad) {
  (void)q;
  (void)w;
  return kind == StepKind::Gd ? grad : polar::exact_polar(grad);
}

}  // namespace

ThresholdResult one_step_threshold(const curvature::KroneckerQuadratic& q,
                                   const Matrix& w, StepKind kind) {
  Matrix grad = curvature::gradient(q, w);
  if (la::frobenius_norm(grad) == 0.0) {
    throw NumericError("one_step_threshold: gradient is zero at the probe point");
  }
  if (kind == StepKind::MuonExact) require_wide(q, "one_step_threshold");

  ThresholdResult out;
  out.loss_at_w = curvature::loss(q, w);
  if (kind == StepKind::Gd) {
    out.eta_bound_theory = curvature::eta_max_gd(q.beta());
  } else {
    out.eta_bound_theory =
        curvature::eta_max_muon(q.beta(), la::svd(grad).sigma, q.m());
  }

  Matrix dir = step_direction(q, w, kind, grad);
  auto descends = [&](double eta) {
    return curvature::loss(q, w - eta * dir) < out.loss_at_w;
  };

  double lo, hi;
  if (descends(out.eta_bound_theory)) {
    lo = out.eta_bound_theory;
    hi = 2.0 * lo;
    int guard = 0;
    while (descends(hi)) {
      lo = hi;
      hi *= 2.0;
      if (++guard > 200) {
        throw ConvergenceError("one_step_threshold: no ascent found while doubling");
      }
    }
  } else {
    // The sufficient bound is itself the boundary; descent is guaranteed
    // strictly below it.
    hi = out.eta_bound_theory;
    lo = 0.5 * hi;
    int guard = 0;
    while (!descends(lo)) {
      hi = lo;
      lo *= 0.5;
      if (++guard > 200) {
        throw ConvergenceError("one_step_threshold: no descent found while halving");
      }
    }
  }

  int steps = 0;
  while (hi - lo > 1e-8 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (descends(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
    ++steps;
  }
  out.eta_star_empirical = 0.5 * (lo + hi);
  out.bisection_steps = steps;
  return out;
}

RunTrace run(const curvature::KroneckerQuadratic& q, const Matrix& w0,
             StepKind kind, const EtaPolicy& policy, int steps) {
  if (steps < 1) throw DimensionError("run: steps must be >= 1");
  if (policy.mode == EtaPolicy::Mode::Constant && !(policy.value > 0.0)) {
    throw DimensionError("run: constant eta must be positive");
  }
  if (policy.mode == EtaPolicy::Mode::MuonTheory && kind != StepKind::MuonExact) {
    throw DimensionError("run: the preconditioned-eta policy applies to Muon only");
  }
  if (kind == StepKind::MuonExact) require_wide(q, "run");

  RunTrace trace;
  Matrix w = w0;
  {
    TraceRow row;
    row.step = 0;
    row.loss = curvature::loss(q, w);
    row.gap = row.loss;
    row.grad_fro = la::frobenius_norm(curvature::gradient(q, w));
    row.param_fro = la::frobenius_norm(w);
    trace.rows.push_back(row);
  }
  double prev_gap = trace.rows.front().gap;
  if (prev_gap <= kGapFloor) {
    trace.converged_early = true;
    return trace;
  }

  for (int t = 1; t <= steps; ++t) {
    Matrix grad = curvature::gradient(q, w);
    const double gfro = la::frobenius_norm(grad);
    if (kind == StepKind::MuonExact && gfro == 0.0) {
      trace.converged_early = true;
      break;
    }

    TraceRow row;
    double eta = 0.0;
    switch (policy.mode) {
      case EtaPolicy::Mode::Constant:
        eta = policy.value;
        break;
      case EtaPolicy::Mode::GdTheory:
        eta = 1.0 / q.beta();
        break;
      case EtaPolicy::Mode::MuonTheory: {
        try {
          auto [at, bt] = tilde_extremes(q, grad);
          row.alpha_tilde = at;
          row.beta_tilde = bt;
          eta = 1.0 / bt;
        } catch (const NumericError&) {
          trace.precond_degenerate = true;
        }
        break;
      }
    }
    if (trace.precond_degenerate) break;

    w = w - eta * step_direction(q, w, kind, grad);
    row.step = t;
    row.loss = curvature::loss(q, w);
    row.gap = row.loss;
    row.r_t = row.gap / prev_gap;
    row.eta = eta;
    row.grad_fro = gfro;
    row.param_fro = la::frobenius_norm(w);
    trace.rows.push_back(row);
    trace.final_step = t;
    prev_gap = row.gap;
    if (prev_gap <= kGapFloor) {
      trace.converged_early = true;
      break;
    }
  }
  return trace;
}

void RunTrace::write_csv(std::ostream& os) const {
  os << "step,loss,gap,r_t,eta,alpha_tilde,beta_tilde,grad_fro,param_fro\n";
  auto opt = [](const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
  };
  for (const TraceRow& row : rows) {
    os << row.step << ',' << format_double(row.loss) << ','
       << format_double(row.gap) << ',' << opt(row.r_t) << ',' << opt(row.eta)
       << ',' << opt(row.alpha_tilde) << ',' << opt(row.beta_tilde) << ','
       << opt(row.grad_fro) << ',' << format_double(row.param_fro) << '\n';
  }
}

std::vector<std::optional<double>> rt_series(const std::vector<double>& losses,
                                             double l_star) {
  for (double v : losses) {
    if (v < l_star - 1e-12) {
      throw NumericError("rt_series: floor estimate exceeds an observed loss");
    }
  }
  std::vector<std::optional<double>> out;
  for (std::size_t i = 1; i < losses.size(); ++i) {
    const double denom = losses[i - 1] - l_star;
    if (denom > kGapFloor) {
      out.emplace_back((losses[i] - l_star) / denom);
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

bool VerificationReport::all_pass() const {
  for (const Check& c : checks)
    if (!c.pass) return false;
  return true;
}

void VerificationReport::write(std::ostream& os) const {
  std::vector<Check> sorted = checks;
  std::sort(sorted.begin(), sorted.end(),
            [](const Check& a, const Check& b) { return a.name < b.name; });
  for (const Check& c : sorted) {
    os << "CHECK " << c.name << " residual=" << format_double(c.residual)
       << " tol=" << format_double(c.tol) << ' ' << (c.pass ? "PASS" : "FAIL")
       << '\n';
  }
}

namespace {

using Sizes = std::vector<std::pair<int, int>>;

Check make_check(std::string name, double residual, double tol) {
  Check c;
  c.name = std::move(name);
  c.residual = residual;
  c.tol = tol;
  c.pass = residual <= tol;
  return c;
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

double rel(double measured, double reference) {
  return std::abs(measured - reference) /
         std::max(std::abs(reference), 1e-300);
}

// Gate for draws that feed (g g^T)^{+-1/2}: a relative rank-deficiency much
// below this leaves no precision for the comparisons those draws support, so
// degenerate draws are resampled instead of tripping the eigenvalue floor.
bool numerically_full_rank(const Matrix& gram) {
  la::EigResult e = la::sym_eig(gram);
  return e.values.front() > 1e-8 * e.values.back();
}

// A full-column-rank data matrix and a full-row-rank gradient for one shape.
struct XgPair {
  Matrix x;  // (n + 3) x n
  Matrix g;  // m x n
};

XgPair random_xg(const std::pair<int, int>& size, Rng& rng) {
  const int m = size.first;
  const int n = size.second;
  for (int tries = 0; tries < 100; ++tries) {
    XgPair out{random_matrix(n + 3, n, rng), random_matrix(m, n, rng)};
    // The combined factor condition bounds the relative accuracy available
    // to eigenvalue-ratio comparisons on the materialized Kronecker product;
    // keeping it under ~1e6 leaves resolution for checks pinned at 1e-9.
    la::EigResult ex = la::sym_eig(la::matmul(la::transpose(out.x), out.x));
    la::EigResult eg = la::sym_eig(la::matmul(out.g, la::transpose(out.g)));
    const double ratio_product = (ex.values.front() / ex.values.back()) *
                                 (eg.values.front() / eg.values.back());
    if (ratio_product > 1e-6) return out;
  }
  throw ConvergenceError("random_xg: no well-conditioned draw in 100 tries");
}

// Random point whose gradient on q is numerically full-rank.
Matrix random_point_full_rank(const curvature::KroneckerQuadratic& q, Rng& rng) {
  for (int tries = 0; tries < 100; ++tries) {
    Matrix w = random_matrix(q.m(), q.n(), rng);
    Matrix g = curvature::gradient(q, w);
    if (numerically_full_rank(la::matmul(g, la::transpose(g)))) return w;
  }
  throw ConvergenceError(
      "random_point_full_rank: no numerically full-rank draw in 100 tries");
}

Check check_vec_kron_identity(Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int p = rng.uniform_int(1, 8), q = rng.uniform_int(1, 8);
    const int r = rng.uniform_int(1, 8), s = rng.uniform_int(1, 8);
    Matrix a = random_matrix(p, q, rng);
    Matrix b = random_matrix(q, r, rng);
    Matrix c = random_matrix(r, s, rng);
    Matrix lhs = la::vec(la::matmul(la::matmul(a, b), c));
    Matrix rhs = la::matmul(la::kron(la::transpose(c), a), la::vec(b));
    worst = std::max(worst, la::frobenius_norm(lhs - rhs) /
                                std::max(la::frobenius_norm(lhs), 1e-300));
  }
  return make_check("vec_kron_identity", worst, 1e-11);
}

Check check_kron_eigenvalue_products(Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int p = rng.uniform_int(2, 6), q = rng.uniform_int(2, 6);
    Matrix a = curvature::make_spd(p, 10.0, rng);
    Matrix b = curvature::make_spd(q, 10.0, rng);
    std::vector<double> products;
    la::EigResult ea = la::sym_eig(a), eb = la::sym_eig(b);
    for (double la_v : ea.values)
      for (double lb_v : eb.values) products.push_back(la_v * lb_v);
    std::sort(products.begin(), products.end());
    la::EigResult ek = la::sym_eig(la::kron(a, b));
    for (std::size_t j = 0; j < products.size(); ++j) {
      worst = std::max(worst, rel(ek.values[j], products[j]));
    }
  }
  return make_check("kron_eigenvalue_products", worst, 1e-8);
}

Check check_kron_lambda_max_factorizes(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    XgPair xg = random_xg(sizes[i % sizes.size()], rng);
    curvature::KfacFactors f = curvature::kfac_factors(xg.x, xg.g);
    la::EigResult eh = la::sym_eig(la::kron(f.a, f.b));
    worst = std::max(worst, rel(f.lam_max_h, eh.values.back()));
  }
  return make_check("kron_lambda_max_factorizes", worst, 1e-8);
}

Check check_rayleigh_quadratic_bound(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto [m, n] = sizes[i % sizes.size()];
    auto q = curvature::make_instance(m, n, 30.0, 30.0, rng.next_u64());
    Matrix d = random_matrix(m, n, rng);
    const double lhs = quad_form(q, d);
    const double bound = q.beta() * la::frobenius_norm(d) * la::frobenius_norm(d);
    worst = std::max(worst, std::max(0.0, lhs - bound) / bound);
  }
  return make_check("rayleigh_quadratic_bound", worst, 1e-10);
}

Check check_quadratic_taylor_exactness(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto [m, n] = sizes[i % sizes.size()];
    auto q = curvature::make_instance(m, n, 30.0, 30.0, rng.next_u64());
    Matrix w = random_matrix(m, n, rng);
    Matrix d = random_matrix(m, n, rng);
    const double expanded = curvature::loss(q, w) +
                            polar::trace_inner(curvature::gradient(q, w), d) +
                            0.5 * quad_form(q, d);
    const double direct = curvature::loss(q, w + d);
    worst = std::max(worst, std::abs(direct - expanded) /
                                std::max(std::abs(direct), 1.0));
  }
  return make_check("quadratic_taylor_exactness", worst, 1e-10);
}

Check check_polar_trace_equals_sigma_sum(Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int m = rng.uniform_int(2, 16);
    const int n = rng.uniform_int(m, 32);
    Matrix g = random_matrix(m, n, rng);
    const double lhs = polar::trace_inner(g, polar::exact_polar(g));
    double sum = 0.0;
    for (double s : la::svd(g).sigma) sum += s;
    worst = std::max(worst, rel(lhs, sum));
  }
  return make_check("polar_trace_equals_sigma_sum", worst, 1e-9);
}

Check check_descent_below_threshold(const Sizes& sizes, Rng rng, StepKind kind,
                                    const std::string& name) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto [m, n] = sizes[i % sizes.size()];
    auto q = curvature::make_instance(m, n, 50.0, 50.0, rng.next_u64());
    Matrix w = random_matrix(m, n, rng);
    Matrix grad = curvature::gradient(q, w);
    Matrix dir = kind == StepKind::Gd ? grad : polar::exact_polar(grad);
    double bound = kind == StepKind::Gd
                       ? curvature::eta_max_gd(q.beta())
                       : curvature::eta_max_muon(q.beta(), la::svd(grad).sigma,
                                                 q.m());
    const double after = curvature::loss(q, w - (0.999 * bound) * dir);
    worst = std::max(worst, std::max(0.0, after - curvature::loss(q, w)));
  }
  return make_check(name, worst, 0.0);
}

Check check_gd_threshold_closed_form(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto [m, n] = sizes[i % sizes.size()];
    auto q = curvature::make_instance(m, n, 50.0, 50.0, rng.next_u64());
    Matrix w = random_matrix(m, n, rng);
    Matrix g = curvature::gradient(q, w);
    const double gnorm2 = polar::trace_inner(g, g);
    const double closed = 2.0 * gnorm2 / quad_form(q, g);
    ThresholdResult t = one_step_threshold(q, w, StepKind::Gd);
    worst = std::max(worst, rel(t.eta_star_empirical, closed));
  }
  return make_check("gd_threshold_closed_form", worst, 1e-6);
}

Check check_muon_gd_threshold_ratio(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto [m, n] = sizes[i % sizes.size()];
    auto q = curvature::make_instance(m, n, 50.0, 50.0, rng.next_u64());
    Matrix w = random_matrix(m, n, rng);
    Matrix g = curvature::gradient(q, w);
    std::vector<double> sigma = la::svd(g).sigma;
    const double bound_gd = curvature::eta_max_gd(q.beta());
    const double bound_muon = curvature::eta_max_muon(q.beta(), sigma, q.m());
    double mean_sigma = 0.0;
    for (double s : sigma) mean_sigma += s;
    mean_sigma /= q.m();
    worst = std::max(worst, rel(bound_muon / bound_gd, mean_sigma));
  }
  return make_check("muon_gd_threshold_ratio", worst, 1e-12);
}

Check check_gd_contraction_rate(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto [m, n] = sizes[i % sizes.size()];
    auto q = curvature::make_instance(m, n, 40.0, 40.0, rng.next_u64());
    Matrix w0 = random_matrix(m, n, rng);
    RunTrace trace = run(q, w0, StepKind::Gd, EtaPolicy::gd_theory(), 200);
    const double limit = 1.0 - q.alpha() / q.beta();
    for (const TraceRow& row : trace.rows) {
      if (row.r_t) worst = std::max(worst, *row.r_t - limit);
    }
  }
  return make_check("gd_contraction_rate", std::max(worst, 0.0), 1e-10);
}

Check check_muon_contraction_rate(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto [m, n] = sizes[i % sizes.size()];
    auto q = curvature::make_instance(m, n, 40.0, 40.0, rng.next_u64());
    Matrix w0 = random_matrix(m, n, rng);
    RunTrace trace = run(q, w0, StepKind::MuonExact, EtaPolicy::muon_theory(), 200);
    for (const TraceRow& row : trace.rows) {
      if (row.r_t && row.alpha_tilde && row.beta_tilde) {
        worst = std::max(worst, *row.r_t - (1.0 - *row.alpha_tilde / *row.beta_tilde));
      }
    }
  }
  return make_check("muon_contraction_rate", std::max(worst, 0.0), 1e-9);
}

Check check_gd_condition_ratio_kron(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    XgPair xg = random_xg(sizes[i % sizes.size()], rng);
    curvature::KfacFactors f = curvature::kfac_factors(xg.x, xg.g);
    curvature::ConditionRatios ratios = curvature::condition_ratios(f.a, f.b);
    la::EigResult eh = la::sym_eig(la::kron(f.a, f.b));
    worst = std::max(worst, rel(ratios.gd, eh.values.front() / eh.values.back()));
  }
  return make_check("gd_condition_ratio_kron", worst, 1e-9);
}

Check check_muon_condition_ratio_precond(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    XgPair xg = random_xg(sizes[i % sizes.size()], rng);
    curvature::KfacFactors f = curvature::kfac_factors(xg.x, xg.g);
    curvature::ConditionRatios ratios = curvature::condition_ratios(f.a, f.b);
    Matrix p = la::kron(Matrix::identity(f.a.rows()), la::sqrt_inv_spd(f.b));
    Matrix h = la::kron(f.a, f.b);
    curvature::PreconditionedExtremes ex = curvature::preconditioned_extremes(p, h);
    worst = std::max(worst, rel(ratios.muon, ex.alpha_tilde / ex.beta_tilde));
  }
  return make_check("muon_condition_ratio_precond", worst, 1e-9);
}

Check check_condition_ratio_relation(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    XgPair xg = random_xg(sizes[i % sizes.size()], rng);
    curvature::KfacFactors f = curvature::kfac_factors(xg.x, xg.g);
    curvature::ConditionRatios ratios = curvature::condition_ratios(f.a, f.b);
    la::EigResult eb = la::sym_eig(f.b);
    const double factor = std::sqrt(eb.values.front() / eb.values.back());
    worst = std::max(worst, rel(ratios.gd, ratios.muon * factor));
  }
  return make_check("condition_ratio_relation", worst, 1e-11);
}

Check check_condition_ratio_strict_gain(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    XgPair xg = random_xg(sizes[i % sizes.size()], rng);
    curvature::KfacFactors f = curvature::kfac_factors(xg.x, xg.g);
    la::EigResult eb = la::sym_eig(f.b);
    if (eb.values.front() >= eb.values.back() * (1.0 - 1e-9)) continue;
    curvature::ConditionRatios ratios = curvature::condition_ratios(f.a, f.b);
    worst = std::max(worst, ratios.gd - ratios.muon);
  }
  return make_check("condition_ratio_strict_gain", std::max(worst, 0.0), 0.0);
}

Check check_preconditioned_smoothness_bound(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto [m, n] = sizes[i % sizes.size()];
    auto q = curvature::make_instance(m, n, 30.0, 30.0, rng.next_u64());
    Matrix w = random_point_full_rank(q, rng);
    Matrix g = curvature::gradient(q, w);
    Matrix ggt = la::matmul(g, la::transpose(g));
    Matrix p = la::kron(Matrix::identity(n), la::sqrt_inv_spd(ggt));
    Matrix p_inv = la::kron(Matrix::identity(n), la::sqrt_spd(ggt));
    Matrix h = q.hessian();
    curvature::PreconditionedExtremes ex = curvature::preconditioned_extremes(p, h);
    Matrix d = la::vec(random_matrix(m, n, rng));
    const double lhs = polar::trace_inner(d, la::matmul(h, d));
    const double rhs = ex.beta_tilde * polar::trace_inner(d, la::matmul(p_inv, d));
    worst = std::max(worst, std::max(0.0, lhs - rhs) / std::abs(rhs));
  }
  return make_check("preconditioned_smoothness_bound", worst, 1e-9);
}

Check check_preconditioned_pl_bound(const Sizes& sizes, Rng rng) {
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    auto [m, n] = sizes[i % sizes.size()];
    auto q = curvature::make_instance(m, n, 30.0, 30.0, rng.next_u64());
    Matrix w = random_point_full_rank(q, rng);
    Matrix g = curvature::gradient(q, w);
    Matrix ggt = la::matmul(g, la::transpose(g));
    Matrix p = la::kron(Matrix::identity(n), la::sqrt_inv_spd(ggt));
    Matrix h = q.hessian();
    curvature::PreconditionedExtremes ex = curvature::preconditioned_extremes(p, h);
    Matrix gv = la::vec(g);
    const double lhs = 0.5 * polar::trace_inner(gv, la::matmul(p, gv));
    const double rhs = ex.alpha_tilde * curvature::loss(q, w);
    worst = std::max(worst, std::max(0.0, rhs - lhs) / std::max(rhs, 1e-300));
  }
  return make_check("preconditioned_pl_bound", worst, 1e-9);
}

}  // namespace

VerificationReport verify_all(std::uint64_t seed, const Sizes& sizes) {
  if (sizes.empty()) throw DimensionError("verify_all: size list must be nonempty");
  for (auto [m, n] : sizes) {
    if (m < 1 || n < 1 || m > n) {
      throw DimensionError("verify_all: sizes must satisfy 1 <= rows <= cols");
    }
  }
  const Rng root(seed);
  std::vector<std::function<Check()>> tasks;
  auto fork = [&root](std::uint64_t stream) { return root.fork(stream); };
  tasks.push_back([&, f = fork(1)] { return check_vec_kron_identity(f); });
  tasks.push_back([&, f = fork(2)] { return check_kron_eigenvalue_products(f); });
  tasks.push_back([&, f = fork(3)] { return check_kron_lambda_max_factorizes(sizes, f); });
  tasks.push_back([&, f = fork(4)] { return check_rayleigh_quadratic_bound(sizes, f); });
  tasks.push_back([&, f = fork(5)] { return check_quadratic_taylor_exactness(sizes, f); });
  tasks.push_back([&, f = fork(6)] { return check_polar_trace_equals_sigma_sum(f); });
  tasks.push_back([&, f = fork(7)] {
    return check_descent_below_threshold(sizes, f, StepKind::Gd,
                                         "gd_descent_below_threshold");
  });
  tasks.push_back([&, f = fork(8)] { return check_gd_threshold_closed_form(sizes, f); });
  tasks.push_back([&, f = fork(9)] {
    return check_descent_below_threshold(sizes, f, StepKind::MuonExact,
                                         "muon_descent_below_threshold");
  });
  tasks.push_back([&, f = fork(10)] { return check_muon_gd_threshold_ratio(sizes, f); });
  tasks.push_back([&, f = fork(11)] { return check_gd_contraction_rate(sizes, f); });
  tasks.push_back([&, f = fork(12)] { return check_muon_contraction_rate(sizes, f); });
  tasks.push_back([&, f = fork(13)] { return check_gd_condition_ratio_kron(sizes, f); });
  tasks.push_back([&, f = fork(14)] { return check_muon_condition_ratio_precond(sizes, f); });
  tasks.push_back([&, f = fork(15)] { return check_condition_ratio_relation(sizes, f); });
  tasks.push_back([&, f = fork(16)] { return check_condition_ratio_strict_gain(sizes, f); });
  tasks.push_back([&, f = fork(17)] { return check_preconditioned_smoothness_bound(sizes, f); });
  tasks.push_back([&, f = fork(18)] { return check_preconditioned_pl_bound(sizes, f); });

  VerificationReport report;
  report.checks.resize(tasks.size());
  parallel_for(static_cast<int>(tasks.size()),
               [&](int i) { report.checks[i] = tasks[i](); });
  std::sort(report.checks.begin(), report.checks.end(),
            [](const Check& a, const Check& b) { return a.name < b.name; });
  return report;
}

}  // namespace spectralopt::theory
