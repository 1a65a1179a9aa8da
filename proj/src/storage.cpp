#include "cesim/storage.hpp"

#include <cmath>
#include <stdexcept>

namespace cesim::storage {

void CesParams::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("CesParams: alpha must be in (0, 1]");
  if (!(beta_plus > 0.0 && beta_plus <= 1.0))
    throw std::invalid_argument("CesParams: beta_plus must be in (0, 1]");
  if (!(beta_minus >= 1.0))
    throw std::invalid_argument("CesParams: beta_minus must be >= 1");
  if (!(capacity >= 0.0))
    throw std::invalid_argument("CesParams: capacity must be >= 0");
  if (!(q0 >= 0.0 && q0 <= capacity))
    throw std::invalid_argument("CesParams: q0 must be in [0, capacity]");
}

double step_charge(double q_prev, double chi_plus, double chi_minus,
                   const CesParams& params) {
  return params.alpha * q_prev + params.beta_plus * chi_plus -
         params.beta_minus * chi_minus;
}

ChargeTrajectory charge_trajectory(double q0, const FlowSplit& flows,
                                   const CesParams& params) {
  const Eigen::Index h = flows.chi_plus.size();
  ChargeTrajectory traj;
  traj.q.resize(h + 1);
  traj.q[0] = q0;
  for (Eigen::Index t = 0; t < h; ++t)
    traj.q[t + 1] =
        step_charge(traj.q[t], flows.chi_plus[t], flows.chi_minus[t], params);

  const double cap_tol = 1e-9 * std::max(params.capacity, 1.0);
  traj.capacity_ok = true;
  for (Eigen::Index t = 0; t <= h; ++t)
    if (traj.q[t] < -cap_tol || traj.q[t] > params.capacity + cap_tol)
      traj.capacity_ok = false;
  traj.continuity_residual = std::abs(traj.q[h] - traj.q[0]);
  return traj;
}

CapacityOperators capacity_operators(const CesParams& params, int slots) {
  if (slots < 1) throw std::invalid_argument("capacity_operators: slots >= 1");
  CapacityOperators ops;
  ops.beta_plus = params.beta_plus;
  ops.beta_minus = params.beta_minus;
  ops.eta.resize(slots);
  ops.psi = Eigen::MatrixXd::Zero(slots, slots);
  for (int v = 0; v < slots; ++v) {
    ops.eta[v] = std::pow(params.alpha, v + 1);
    for (int w = 0; w <= v; ++w) ops.psi(v, w) = std::pow(params.alpha, v - w);
  }
  return ops;
}

FeasibilityVerdict check_feasible(const ChargeTrajectory& traj,
                                  const CesParams& params,
                                  double continuity_tol) {
  FeasibilityVerdict verdict;
  const double cap_tol = 1e-9 * std::max(params.capacity, 1.0);
  const Eigen::Index n = traj.q.size();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (traj.q[t] < -cap_tol)
      verdict.violations.push_back(
          {"undercharge", static_cast<int>(t), -traj.q[t]});
    if (traj.q[t] > params.capacity + cap_tol)
      verdict.violations.push_back(
          {"overcharge", static_cast<int>(t), traj.q[t] - params.capacity});
  }
  verdict.capacity_ok = verdict.violations.empty();
  verdict.continuity_residual = std::abs(traj.q[n - 1] - traj.q[0]);
  verdict.continuity_ok = verdict.continuity_residual <= continuity_tol;
  if (!verdict.continuity_ok)
    verdict.violations.push_back(
        {"continuity", static_cast<int>(n - 1), verdict.continuity_residual});
  verdict.feasible = verdict.capacity_ok && verdict.continuity_ok;
  return verdict;
}

FlowSplit split_signed(const Eigen::VectorXd& series) {
  FlowSplit split;
  split.chi_plus = series.cwiseMax(0.0);
  split.chi_minus = (-series).cwiseMax(0.0);
  return split;
}

}  // namespace cesim::storage
