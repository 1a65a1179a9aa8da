#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace cesim::storage {

// Shared battery parameters. alpha is the per-slot retention factor (a 10%
// daily leakage over 48 slots is stored as 0.9^(1/48)); beta_plus/beta_minus
// are the charge/discharge conversion factors.
struct CesParams {
  double capacity = 80.0;     // Q_M, kWh
  double q0 = 20.0;           // initial charge, kWh
  double alpha = 0.99780764;  // per-slot retention, 0 < alpha <= 1
  double beta_plus = 0.9;     // 0 < beta_plus <= 1
  double beta_minus = 1.1;    // beta_minus >= 1

  void validate() const;  // throws std::invalid_argument
};

// Non-negative charge/discharge flow pair per slot.
struct FlowSplit {
  Eigen::VectorXd chi_plus;
  Eigen::VectorXd chi_minus;
};

// Closed-form operators for the charge linear recurrence:
// q(v) = q0*eta(v) + sum_{w<=v} psi(v,w) * (beta_plus*chi_plus(w) -
// beta_minus*chi_minus(w)), with eta(v) = alpha^v and psi(v,w) = alpha^(v-w).
// Indices are 1-based in the formulas; rows/cols here are 0-based slots.
struct CapacityOperators {
  Eigen::VectorXd eta;  // eta(i) = alpha^(i+1)
  Eigen::MatrixXd psi;  // lower triangular, psi(i,j) = alpha^(i-j), j <= i
  double beta_plus = 1.0;
  double beta_minus = 1.0;
};

// State-of-charge series; q has length H+1 with q[0] = q0.
struct ChargeTrajectory {
  Eigen::VectorXd q;
  bool capacity_ok = true;            // 0 <= q <= Q_M within 1e-9*Q_M
  double continuity_residual = 0.0;   // |q(H) - q(0)|
};

struct FeasibilityViolation {
  std::string kind;  // "undercharge" | "overcharge" | "continuity"
  int slot = -1;
  double magnitude = 0.0;
};

struct FeasibilityVerdict {
  bool feasible = true;
  bool capacity_ok = true;
  bool continuity_ok = true;
  double continuity_residual = 0.0;
  std::vector<FeasibilityViolation> violations;
};

double step_charge(double q_prev, double chi_plus, double chi_minus,
                   const CesParams& params);

ChargeTrajectory charge_trajectory(double q0, const FlowSplit& flows,
                                   const CesParams& params);

CapacityOperators capacity_operators(const CesParams& params, int slots);

FeasibilityVerdict check_feasible(const ChargeTrajectory& traj,
                                  const CesParams& params,
                                  double continuity_tol = 1e-6);

// plus = max(v, 0), minus = max(-v, 0); plus - minus reconstructs the input
// and plus.*minus == 0 per slot.
FlowSplit split_signed(const Eigen::VectorXd& series);

}  // namespace cesim::storage
