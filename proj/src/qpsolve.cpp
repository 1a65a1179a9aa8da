#include "cesim/qpsolve.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cesim/parallel.hpp"

namespace cesim::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Stacks A_in with the finite bound rows into one G x <= h system.
struct IneqSystem {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  std::vector<std::string> labels;
};

IneqSystem build_inequalities(const QpProblem& p, bool equilibrate) {
  const Eigen::Index n = p.vars();
  const Eigen::Index m_in = p.A_in.rows();
  Eigen::Index rows = m_in;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.lo[i] > -kInf) ++rows;
    if (p.hi[i] < kInf) ++rows;
  }
  IneqSystem sys;
  sys.G = Eigen::MatrixXd::Zero(rows, n);
  sys.h.resize(rows);
  sys.labels.reserve(rows);
  for (Eigen::Index i = 0; i < m_in; ++i) {
    // unit row norms keep the reduced KKT reasonably conditioned
    const double norm = p.A_in.row(i).cwiseAbs().maxCoeff();
    const double scale = equilibrate && norm > 1e-12 ? 1.0 / norm : 1.0;
    sys.G.row(i) = scale * p.A_in.row(i);
    sys.h[i] = scale * p.b_in[i];
    sys.labels.push_back("ineq " + std::to_string(i));
  }
  Eigen::Index r = m_in;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (p.lo[i] > -kInf) {
      sys.G(r, i) = -1.0;
      sys.h[r] = -p.lo[i];
      sys.labels.push_back("lower bound x" + std::to_string(i));
      ++r;
    }
    if (p.hi[i] < kInf) {
      sys.G(r, i) = 1.0;
      sys.h[r] = p.hi[i];
      sys.labels.push_back("upper bound x" + std::to_string(i));
      ++r;
    }
  }
  return sys;
}

Eigen::MatrixXd equilibrated_eq(const QpProblem& p, Eigen::VectorXd& b_eq) {
  Eigen::MatrixXd a_eq = p.A_eq;
  b_eq = p.b_eq;
  for (Eigen::Index i = 0; i < a_eq.rows(); ++i) {
    const double norm = a_eq.row(i).cwiseAbs().maxCoeff();
    if (norm > 1e-12) {
      a_eq.row(i) /= norm;
      b_eq[i] /= norm;
    }
  }
  return a_eq;
}

double primal_violation(const Eigen::MatrixXd& a_eq,
                        const Eigen::VectorXd& b_eq, const IneqSystem& sys,
                        const Eigen::VectorXd& x) {
  double violation = 0.0;
  if (a_eq.rows() > 0)
    violation = (a_eq * x - b_eq).cwiseAbs().maxCoeff();
  if (sys.G.rows() > 0)
    violation = std::max(
        violation, (sys.G * x - sys.h).cwiseMax(0.0).maxCoeff());
  return violation;
}

Eigen::VectorXd initial_point(const QpProblem& p) {
  const Eigen::Index n = p.vars();
  Eigen::VectorXd x(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool has_lo = p.lo[i] > -kInf;
    const bool has_hi = p.hi[i] < kInf;
    if (has_lo && has_hi)
      x[i] = 0.5 * (p.lo[i] + p.hi[i]);
    else if (has_lo)
      x[i] = p.lo[i] + 1.0;
    else if (has_hi)
      x[i] = p.hi[i] - 1.0;
    else
      x[i] = 0.0;
  }
  return x;
}

// Largest alpha in (0, 1] with v + alpha*dv >= (1 - boundary_frac) * ... kept
// strictly positive via the fraction-to-boundary rule.
double step_length(const Eigen::VectorXd& v, const Eigen::VectorXd& dv,
                   double boundary_frac = 0.995) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return std::min(1.0, boundary_frac * alpha);
}

QpSolution solve_equality_only(const QpProblem& p, double tol) {
  const Eigen::Index n = p.vars();
  const Eigen::Index me = p.A_eq.rows();
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + me, n + me);
  kkt.topLeftCorner(n, n) = p.Q;
  if (me > 0) {
    kkt.topRightCorner(n, me) = p.A_eq.transpose();
    kkt.bottomLeftCorner(me, n) = p.A_eq;
  }
  Eigen::VectorXd rhs(n + me);
  rhs.head(n) = -p.c;
  if (me > 0) rhs.tail(me) = p.b_eq;

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  QpSolution sol;
  if (!lu.isInvertible()) {
    // Singular KKT: PSD Q with an unconstrained direction. Use the
    // least-squares solution and report honestly.
    sol.x = kkt.colPivHouseholderQr().solve(rhs).head(n);
    sol.status = QpStatus::max_iter;
    sol.message = "singular KKT system (flat direction or redundant rows)";
  } else {
    const Eigen::VectorXd full = lu.solve(rhs);
    sol.x = full.head(n);
    sol.status = QpStatus::optimal;
  }
  sol.objective = p.objective(sol.x);
  Eigen::VectorXd grad = p.Q * sol.x + p.c;
  if (me > 0) {
    const Eigen::VectorXd y =
        p.A_eq.transpose().colPivHouseholderQr().solve(-grad);
    grad += p.A_eq.transpose() * y;
    sol.kkt.primal = (p.A_eq * sol.x - p.b_eq).cwiseAbs().maxCoeff();
  }
  sol.kkt.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (sol.status == QpStatus::optimal &&
      (sol.kkt.stationarity > tol * (1.0 + p.c.cwiseAbs().maxCoeff()) ||
       sol.kkt.primal > tol))
    sol.status = QpStatus::max_iter;
  return sol;
}

QpProblem phase1_relaxation(const QpProblem& p) {
  // Relax A_eq and A_in with penalized gap variables, keep bounds hard:
  //   min 1/2(|u|^2 + |v|^2)  s.t.  A_eq x - v = b_eq, A_in x - u <= b_in,
  //   u >= 0. Optimum ~ 0 iff the original constraints are consistent.
  const Eigen::Index n = p.vars();
  const Eigen::Index me = p.A_eq.rows();
  const Eigen::Index mi = p.A_in.rows();
  QpProblem relaxed;
  const Eigen::Index total = n + mi + me;
  relaxed.Q = Eigen::MatrixXd::Zero(total, total);
  relaxed.Q.bottomRightCorner(mi + me, mi + me) =
      Eigen::MatrixXd::Identity(mi + me, mi + me);
  relaxed.c = Eigen::VectorXd::Zero(total);
  relaxed.A_eq = Eigen::MatrixXd::Zero(me, total);
  relaxed.A_eq.leftCols(n) = p.A_eq;
  relaxed.A_eq.rightCols(me) = -Eigen::MatrixXd::Identity(me, me);
  relaxed.b_eq = p.b_eq;
  relaxed.A_in = Eigen::MatrixXd::Zero(mi, total);
  relaxed.A_in.leftCols(n) = p.A_in;
  relaxed.A_in.middleCols(n, mi) = -Eigen::MatrixXd::Identity(mi, mi);
  relaxed.b_in = p.b_in;
  relaxed.lo = Eigen::VectorXd::Constant(total, -kInf);
  relaxed.hi = Eigen::VectorXd::Constant(total, kInf);
  relaxed.lo.head(n) = p.lo;
  relaxed.hi.head(n) = p.hi;
  relaxed.lo.segment(n, mi).setZero();
  return relaxed;
}

std::string diagnose_infeasibility(const QpProblem& p, const IneqSystem& sys,
                                   const Eigen::VectorXd& x) {
  std::ostringstream msg;
  msg << "infeasible; most violated constraints:";
  struct Entry {
    double violation;
    std::string label;
  };
  std::vector<Entry> entries;
  for (Eigen::Index i = 0; i < p.A_eq.rows(); ++i) {
    const double v = std::abs(p.A_eq.row(i).dot(x) - p.b_eq[i]);
    if (v > 1e-7) entries.push_back({v, "eq " + std::to_string(i)});
  }
  for (Eigen::Index i = 0; i < sys.G.rows(); ++i) {
    const double v = sys.G.row(i).dot(x) - sys.h[i];
    if (v > 1e-7) entries.push_back({v, sys.labels[i]});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) {
              return a.violation > b.violation;
            });
  const std::size_t shown = std::min<std::size_t>(entries.size(), 5);
  for (std::size_t i = 0; i < shown; ++i)
    msg << " [" << entries[i].label << " by " << entries[i].violation << "]";
  return msg.str();
}

QpSolution run_interior_point(const QpProblem& p, const IneqSystem& sys,
                              const Eigen::MatrixXd& a_eq,
                              const Eigen::VectorXd& b_eq, double tol,
                              int max_iter,
                              const std::optional<Eigen::VectorXd>& x_hint) {
  const Eigen::Index n = p.vars();
  const Eigen::Index me = a_eq.rows();
  const Eigen::Index mi = sys.G.rows();

  Eigen::VectorXd x = x_hint ? *x_hint : initial_point(p);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(me);
  Eigen::VectorXd s = (sys.h - sys.G * x).cwiseMax(1.0);
  Eigen::VectorXd z = Eigen::VectorXd::Ones(mi);

  const double scale_d = 1.0 + p.c.cwiseAbs().maxCoeff();
  double scale_p = 1.0;
  if (me > 0) scale_p = std::max(scale_p, b_eq.cwiseAbs().maxCoeff());
  if (mi > 0) scale_p = std::max(scale_p, sys.h.cwiseAbs().maxCoeff());
  const double scale_c = scale_p;  // slack * multiplier carries |h| units

  QpSolution best;
  best.x = x;
  best.status = QpStatus::max_iter;
  double best_merit = kInf;

  Eigen::MatrixXd kkt(n + me + mi, n + me + mi);
  Eigen::VectorXd rhs(n + me + mi);
  double prev_alpha = 1.0;
  int stalled = 0;

  for (int iter = 0; iter < max_iter; ++iter) {
    if (!x.allFinite() || !s.allFinite() || !z.allFinite()) break;
    const Eigen::VectorXd r_d = p.Q * x + p.c + a_eq.transpose() * y +
                                sys.G.transpose() * z;
    const Eigen::VectorXd r_e = me ? (a_eq * x - b_eq).eval()
                                   : Eigen::VectorXd();
    const Eigen::VectorXd r_i = sys.G * x + s - sys.h;
    const double mu = mi ? s.dot(z) / static_cast<double>(mi) : 0.0;

    const double stat = r_d.size() ? r_d.cwiseAbs().maxCoeff() : 0.0;
    const double pviol = primal_violation(a_eq, b_eq, sys, x);
    const double comp =
        mi ? (s.array() * z.array()).abs().maxCoeff() : 0.0;

    if (std::getenv("CESIM_QP_TRACE"))
      std::fprintf(stderr,
                   "ipm iter %3d mu %.3e stat %.3e pviol %.3e comp %.3e "
                   "alpha %.3f\n",
                   iter, mu, stat, pviol, comp, prev_alpha);

    const double merit = stat / scale_d + pviol / scale_p + comp;
    if (merit < best_merit) {
      best_merit = merit;
      best.x = x;
      best.iterations = iter;
      best.kkt = {stat, pviol, comp};
    }

    if (stat <= tol * scale_d && pviol <= tol * scale_p &&
        comp <= tol * scale_c) {
      QpSolution sol;
      sol.x = x;
      sol.objective = p.objective(x);
      sol.status = QpStatus::optimal;
      sol.kkt = {stat, pviol, comp};
      sol.iterations = iter;
      return sol;
    }

    // Augmented quasidefinite KKT in (dx, dy, dz); the slack block stays
    // unreduced, which avoids the catastrophic cancellation of forming
    // G' W G once constraints go numerically active. Regularization is
    // bumped when the factorization turns out unusable; a refinement pass
    // recovers the accuracy it costs.
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    double reg = 1e-10 * (1.0 + p.Q.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 4; ++attempt) {
      kkt.setZero();
      kkt.topLeftCorner(n, n) = p.Q;
      kkt.topLeftCorner(n, n).diagonal().array() += reg;
      if (me > 0) {
        kkt.block(0, n, n, me) = a_eq.transpose();
        kkt.block(n, 0, me, n) = a_eq;
        kkt.block(n, n, me, me).diagonal().array() -= reg;
      }
      if (mi > 0) {
        kkt.block(0, n + me, n, mi) = sys.G.transpose();
        kkt.block(n + me, 0, mi, n) = sys.G;
        kkt.block(n + me, n + me, mi, mi).diagonal() =
            -(s.array() / z.array()).matrix();
        kkt.block(n + me, n + me, mi, mi).diagonal().array() -= reg;
      }
      lu.compute(kkt);
      const Eigen::VectorXd check =
          lu.solve(Eigen::VectorXd::Ones(n + me + mi));
      if (check.allFinite()) break;
      reg *= 1e3;
    }

    auto solve_newton = [&](const Eigen::VectorXd& r_sz, Eigen::VectorXd& dx,
                            Eigen::VectorXd& dy, Eigen::VectorXd& ds,
                            Eigen::VectorXd& dz) {
      rhs.head(n) = -r_d;
      if (me > 0) rhs.segment(n, me) = -r_e;
      if (mi > 0)
        rhs.tail(mi) = -r_i + (r_sz.array() / z.array()).matrix();
      Eigen::VectorXd step = lu.solve(rhs);
      step += lu.solve(rhs - kkt * step);  // one refinement pass
      dx = step.head(n);
      dy = me ? step.segment(n, me).eval() : Eigen::VectorXd();
      if (mi > 0) {
        dz = step.tail(mi);
        ds = ((-r_sz.array() - s.array() * dz.array()) / z.array()).matrix();
      }
    };

    Eigen::VectorXd dx, dy, ds, dz;
    if (mi == 0) {
      solve_newton(Eigen::VectorXd(), dx, dy, ds, dz);
      x += dx;
      if (me > 0) y += dy;
      continue;
    }

    // Predictor
    Eigen::VectorXd r_sz = (s.array() * z.array()).matrix();
    solve_newton(r_sz, dx, dy, ds, dz);
    const double alpha_p_aff = step_length(s, ds, 1.0);
    const double alpha_d_aff = step_length(z, dz, 1.0);
    const double mu_aff = (s + alpha_p_aff * ds).dot(z + alpha_d_aff * dz) /
                          static_cast<double>(mi);
    double sigma =
        std::min(1.0, std::pow(std::max(mu_aff, 0.0) / mu, 3.0));
    // short previous step: lean on centering to re-open the channel
    if (prev_alpha < 0.1) sigma = std::max(sigma, 0.5);

    // Corrector
    r_sz = (s.array() * z.array() + ds.array() * dz.array() - sigma * mu)
               .matrix();
    solve_newton(r_sz, dx, dy, ds, dz);
    double alpha_p = step_length(s, ds);
    double alpha_d = step_length(z, dz);

    // Safeguard: a step that blows the complementarity product up signals a
    // runaway direction; fall back to a pure centering step instead.
    const double mu_next = (s + alpha_p * ds).dot(z + alpha_d * dz) /
                           static_cast<double>(mi);
    if (mu_next > 5.0 * mu + tol) {
      r_sz = (s.array() * z.array() - mu).matrix();
      solve_newton(r_sz, dx, dy, ds, dz);
      alpha_p = 0.5 * step_length(s, ds);
      alpha_d = 0.5 * step_length(z, dz);
    }
    prev_alpha = std::min(alpha_p, alpha_d);
    stalled = prev_alpha < 1e-10 ? stalled + 1 : 0;
    if (stalled >= 3) break;  // wedged; return the best iterate

    x += alpha_p * dx;
    s += alpha_p * ds;
    if (me > 0) y += alpha_d * dy;
    z += alpha_d * dz;
  }

  best.objective = p.objective(best.x);
  best.iterations = max_iter;
  best.message = "max_iter reached";
  return best;
}

}  // namespace

QpProblem QpProblem::unconstrained(Eigen::MatrixXd Q, Eigen::VectorXd c) {
  QpProblem p;
  const Eigen::Index n = c.size();
  p.Q = std::move(Q);
  p.c = std::move(c);
  p.A_eq.resize(0, n);
  p.b_eq.resize(0);
  p.A_in.resize(0, n);
  p.b_in.resize(0);
  p.lo = Eigen::VectorXd::Constant(n, -kInf);
  p.hi = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

void QpProblem::validate() const {
  const Eigen::Index n = vars();
  if (Q.rows() != n || Q.cols() != n)
    throw std::invalid_argument("QpProblem: Q must be n x n");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * (1.0 + Q.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("QpProblem: Q must be symmetric");
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n))
    throw std::invalid_argument("QpProblem: equality system shape mismatch");
  if (A_in.rows() != b_in.size() || (A_in.rows() > 0 && A_in.cols() != n))
    throw std::invalid_argument("QpProblem: inequality system shape mismatch");
  if (lo.size() != n || hi.size() != n)
    throw std::invalid_argument("QpProblem: bounds must have length n");
  for (Eigen::Index i = 0; i < n; ++i)
    if (lo[i] > hi[i])
      throw std::invalid_argument("QpProblem: lo > hi at variable " +
                                  std::to_string(i));
  if (n > 0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(
        0.5 * (Q + Q.transpose()), Eigen::EigenvaluesOnly);
    const double min_eig = eigs.eigenvalues().minCoeff();
    const double max_eig = std::max(1.0, eigs.eigenvalues().maxCoeff());
    if (min_eig < -1e-8 * max_eig)
      throw std::invalid_argument(
          "QpProblem: Q is not positive semidefinite (min eigenvalue " +
          std::to_string(min_eig) + ")");
  }
}

QpSolution solve_qp(const QpProblem& p, double tol, int max_iter,
                    const std::optional<Eigen::VectorXd>& x_hint) {
  p.validate();
  const IneqSystem sys = build_inequalities(p, true);
  if (sys.G.rows() == 0) return solve_equality_only(p, tol);
  Eigen::VectorXd b_eq_scaled;
  const Eigen::MatrixXd a_eq_scaled = equilibrated_eq(p, b_eq_scaled);

  QpSolution sol = run_interior_point(p, sys, a_eq_scaled, b_eq_scaled, tol,
                                      max_iter, x_hint);
  if (sol.status == QpStatus::optimal) return sol;

  // Did not converge: decide between "hard" and "infeasible" via the
  // phase-1 relaxation.
  if (sol.kkt.primal > tol * 10.0) {
    const QpProblem relaxed = phase1_relaxation(p);
    const IneqSystem relaxed_sys = build_inequalities(relaxed, true);
    Eigen::VectorXd relaxed_b_eq;
    const Eigen::MatrixXd relaxed_a_eq =
        equilibrated_eq(relaxed, relaxed_b_eq);
    QpSolution feas =
        run_interior_point(relaxed, relaxed_sys, relaxed_a_eq, relaxed_b_eq,
                           1e-9, max_iter, {});
    if (feas.status == QpStatus::optimal && feas.objective > 1e-12) {
      sol.status = QpStatus::infeasible;
      sol.message =
          diagnose_infeasibility(p, sys, feas.x.head(p.vars()));
      return sol;
    }
  }
  return sol;
}

KktResiduals kkt_residual(const QpProblem& p, const Eigen::VectorXd& x,
                          double active_tol) {
  const IneqSystem sys = build_inequalities(p, false);
  const Eigen::Index n = p.vars();
  const Eigen::Index me = p.A_eq.rows();

  std::vector<Eigen::Index> active;
  const Eigen::VectorXd slack = sys.h - sys.G * x;
  for (Eigen::Index i = 0; i < sys.G.rows(); ++i)
    if (slack[i] <= active_tol) active.push_back(i);

  KktResiduals res;
  res.primal = primal_violation(p.A_eq, p.b_eq, sys, x);

  const Eigen::VectorXd grad = p.Q * x + p.c;
  const Eigen::Index cols = me + static_cast<Eigen::Index>(active.size());
  if (cols == 0) {
    res.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    res.complementarity = 0.0;
    return res;
  }

  Eigen::MatrixXd basis(n, cols);
  if (me > 0) basis.leftCols(me) = p.A_eq.transpose();
  for (std::size_t k = 0; k < active.size(); ++k)
    basis.col(me + k) = sys.G.row(active[k]).transpose();

  Eigen::VectorXd multipliers = basis.colPivHouseholderQr().solve(-grad);
  // Inequality multipliers must be non-negative; clip and report what is
  // left rather than pretending the fit was exact.
  for (std::size_t k = 0; k < active.size(); ++k)
    multipliers[me + k] = std::max(multipliers[me + k], 0.0);

  const Eigen::VectorXd residual = grad + basis * multipliers;
  res.stationarity = residual.cwiseAbs().maxCoeff();
  double comp = 0.0;
  for (std::size_t k = 0; k < active.size(); ++k)
    comp = std::max(comp, std::abs(slack[active[k]] * multipliers[me + k]));
  res.complementarity = comp;
  return res;
}

GridResult brute_force_grid(const QpProblem& p, double resolution) {
  p.validate();
  const Eigen::Index n = p.vars();
  if (n > 6)
    throw std::invalid_argument("brute_force_grid: n must be <= 6");
  if (!(resolution > 0.0))
    throw std::invalid_argument("brute_force_grid: resolution must be > 0");
  std::vector<Eigen::Index> counts(n);
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(p.lo[i] > -kInf) || !(p.hi[i] < kInf))
      throw std::invalid_argument(
          "brute_force_grid: all variables must be bounded");
    counts[i] =
        static_cast<Eigen::Index>(std::floor((p.hi[i] - p.lo[i]) / resolution +
                                             1e-12)) +
        2;  // grid points plus the upper endpoint
    total *= static_cast<std::size_t>(counts[i]);
    if (total > 200'000'000)
      throw std::invalid_argument("brute_force_grid: grid too large");
  }

  auto point_coord = [&](Eigen::Index dim, Eigen::Index k) {
    return k + 1 == counts[dim] ? p.hi[dim]
                                : std::min(p.lo[dim] + k * resolution,
                                           p.hi[dim]);
  };

  const double eq_tol_base = 1e-9;
  const Eigen::Index outer = counts[0];
  std::vector<double> best_obj(outer, kInf);
  std::vector<std::size_t> best_idx(outer, 0);

  std::size_t inner_total = total / static_cast<std::size_t>(outer);
  parallel_for(outer, [&](std::ptrdiff_t first) {
    Eigen::VectorXd x(n);
    x[0] = point_coord(0, first);
    for (std::size_t linear = 0; linear < inner_total; ++linear) {
      std::size_t rest = linear;
      for (Eigen::Index d = n - 1; d >= 1; --d) {
        x[d] = point_coord(d, static_cast<Eigen::Index>(
                                  rest % static_cast<std::size_t>(counts[d])));
        rest /= static_cast<std::size_t>(counts[d]);
      }
      bool feasible = true;
      for (Eigen::Index r = 0; feasible && r < p.A_eq.rows(); ++r) {
        const double tol =
            std::max(eq_tol_base,
                     0.5 * resolution * p.A_eq.row(r).cwiseAbs().sum());
        feasible = std::abs(p.A_eq.row(r).dot(x) - p.b_eq[r]) <= tol;
      }
      for (Eigen::Index r = 0; feasible && r < p.A_in.rows(); ++r)
        feasible = p.A_in.row(r).dot(x) <= p.b_in[r] + eq_tol_base;
      if (!feasible) continue;
      const double obj = p.objective(x);
      if (obj < best_obj[first] ||
          (obj == best_obj[first] && linear < best_idx[first])) {
        best_obj[first] = obj;
        best_idx[first] = linear;
      }
    }
  });

  GridResult result;
  Eigen::Index winner = -1;
  for (Eigen::Index i = 0; i < outer; ++i)
    if (best_obj[i] < result.objective || !result.found) {
      if (best_obj[i] == kInf) continue;
      result.found = true;
      result.objective = best_obj[i];
      winner = i;
    }
  if (!result.found) return result;

  result.x.resize(n);
  result.x[0] = point_coord(0, winner);
  std::size_t rest = best_idx[static_cast<std::size_t>(winner)];
  for (Eigen::Index d = n - 1; d >= 1; --d) {
    result.x[d] = point_coord(
        d, static_cast<Eigen::Index>(rest % static_cast<std::size_t>(counts[d])));
    rest /= static_cast<std::size_t>(counts[d]);
  }
  result.objective = p.objective(result.x);
  return result;
}

void dump_problem(const QpProblem& p, std::ostream& os) {
  const Eigen::IOFormat fmt(Eigen::FullPrecision, 0, " ", "\n", "", "", "", "");
  os << "# convex QP: min 1/2 x'Qx + c'x\n";
  os << "n " << p.vars() << "\n";
  os << "Q\n" << p.Q.format(fmt) << "\n";
  os << "c\n" << p.c.transpose().format(fmt) << "\n";
  os << "A_eq " << p.A_eq.rows() << "\n";
  if (p.A_eq.rows() > 0) os << p.A_eq.format(fmt) << "\n";
  os << "b_eq\n";
  if (p.b_eq.size() > 0) os << p.b_eq.transpose().format(fmt) << "\n";
  os << "A_in " << p.A_in.rows() << "\n";
  if (p.A_in.rows() > 0) os << p.A_in.format(fmt) << "\n";
  os << "b_in\n";
  if (p.b_in.size() > 0) os << p.b_in.transpose().format(fmt) << "\n";
  os << "lo\n" << p.lo.transpose().format(fmt) << "\n";
  os << "hi\n" << p.hi.transpose().format(fmt) << "\n";
}

}  // namespace cesim::qp
