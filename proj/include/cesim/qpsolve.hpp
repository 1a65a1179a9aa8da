#pragma once

#include <Eigen/Core>
#include <optional>
#include <ostream>
#include <string>

namespace cesim::qp {

// Convex quadratic program, minimization convention:
//   min 1/2 x'Qx + c'x
//   s.t. A_eq x = b_eq, A_in x <= b_in, lo <= x <= hi.
// Q must be symmetric positive semidefinite; +-infinity bounds allowed.
struct QpProblem {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  Eigen::MatrixXd A_eq;  // 0 x n when absent
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Eigen::Index vars() const { return c.size(); }
  double objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(Q * x) + c.dot(x);
  }

  static QpProblem unconstrained(Eigen::MatrixXd Q, Eigen::VectorXd c);
  void validate() const;  // dimensions + PSD within 1e-8 eigenvalue tolerance
};

enum class QpStatus { optimal, infeasible, max_iter };

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
};

struct QpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  QpStatus status = QpStatus::max_iter;
  KktResiduals kkt;
  int iterations = 0;
  std::string message;  // infeasibility diagnosis / binding constraints
};

// Primal-dual interior point (Mehrotra predictor-corrector). When status ==
// optimal the returned point satisfies the KKT conditions within tol, each
// residual measured relative to its problem scale (|c|, |b|, |h|); for
// strictly convex Q that point is the unique global minimizer. Constraint
// rows are equilibrated internally.
QpSolution solve_qp(const QpProblem& p, double tol = 1e-8, int max_iter = 200,
                    const std::optional<Eigen::VectorXd>& x_hint = {});

// Independent KKT check at an arbitrary point: least-squares multipliers over
// the active constraints, negative inequality multipliers clipped at zero.
KktResiduals kkt_residual(const QpProblem& p, const Eigen::VectorXd& x,
                          double active_tol = 1e-6);

struct GridResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  bool found = false;
};

// Exhaustive oracle for small instances (n <= 6, all variables bounded):
// evaluates every grid point with the given spacing, keeps the best feasible
// one. Equality rows admit points within 0.5 * resolution * |row|_1.
GridResult brute_force_grid(const QpProblem& p, double resolution);

// Plain-text dump of (Q, c, A, b, bounds) for external verification.
void dump_problem(const QpProblem& p, std::ostream& os);

}  // namespace cesim::qp
