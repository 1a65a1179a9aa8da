#include "cesim/pricing.hpp"

#include <cmath>
#include <sstream>

namespace cesim::pricing {

Tariff make_tariff(double phi_offpeak, double delta,
                   const scenario::TimeGrid& grid) {
  Tariff tariff;
  tariff.phi.resize(grid.slots);
  tariff.delta = Eigen::VectorXd::Constant(grid.slots, delta);
  for (int t = 0; t < grid.slots; ++t)
    tariff.phi[t] = grid.in_peak(t) ? 1.5 * phi_offpeak : phi_offpeak;
  validate_tariff(tariff, grid);
  return tariff;
}

void validate_tariff(const Tariff& tariff, const scenario::TimeGrid& grid) {
  if (tariff.phi.size() != grid.slots || tariff.delta.size() != grid.slots)
    throw calibration_error("tariff: series length must equal slots");
  if (tariff.phi.minCoeff() <= 0.0)
    throw calibration_error("tariff: phi must be > 0");
  if (tariff.delta.minCoeff() < 0.0)
    throw calibration_error("tariff: delta must be >= 0");
  double phi_offpeak = tariff.phi[0] / (grid.in_peak(0) ? 1.5 : 1.0);
  for (int t = 0; t < grid.slots; ++t)
    if (!grid.in_peak(t)) {
      phi_offpeak = tariff.phi[t];
      break;
    }
  for (int t = 0; t < grid.slots; ++t) {
    if (std::abs(tariff.delta[t] - tariff.delta[0]) > 1e-12)
      throw calibration_error("tariff: delta must be constant across slots");
    const double ratio = grid.in_peak(t) ? 1.5 : 1.0;
    if (std::abs(tariff.phi[t] - ratio * phi_offpeak) > 1e-9 * phi_offpeak)
      throw calibration_error("tariff: phi must be two-band with 1.5x peak");
  }
}

double grid_price(double load, const Tariff& tariff, int t) {
  return tariff.phi[t] * load + tariff.delta[t];
}

Eigen::VectorXd price_series(const Eigen::VectorXd& loads,
                             const Tariff& tariff) {
  return tariff.phi.cwiseProduct(loads) + tariff.delta;
}

Tariff calibrate_tariff(double ref_min, double ref_max, double ref_avg,
                        const Eigen::VectorXd& baseline_load,
                        const scenario::TimeGrid& grid) {
  if (!(ref_max > ref_min))
    throw calibration_error("calibration: reference range needs max > min");
  if (baseline_load.size() != grid.slots)
    throw calibration_error("calibration: load length must equal slots");
  if (baseline_load.minCoeff() <= 0.0)
    throw calibration_error("calibration: baseline load must be positive");
  const double spread_load =
      baseline_load.maxCoeff() - baseline_load.minCoeff();
  if (spread_load <= 1e-12 * baseline_load.maxCoeff())
    throw calibration_error(
        "calibration: constant baseline load, price spread unachievable "
        "within a tariff band");

  // p(t) = phi_t L(t) + delta with phi_t = w_t * phi_offpeak and w = 1.5 in
  // the peak window. delta shifts every price equally, so phi_offpeak alone
  // fixes the spread and delta then fixes the mean.
  Eigen::VectorXd weighted(grid.slots);
  for (int t = 0; t < grid.slots; ++t)
    weighted[t] = (grid.in_peak(t) ? 1.5 : 1.0) * baseline_load[t];
  const double spread = weighted.maxCoeff() - weighted.minCoeff();
  if (spread <= 0.0)
    throw calibration_error("calibration: weighted load spread is zero");
  const double phi_offpeak = (ref_max - ref_min) / spread;
  const double delta = ref_avg - phi_offpeak * weighted.mean();
  if (delta < 0.0) {
    std::ostringstream msg;
    msg << "calibration: average target " << ref_avg
        << " requires negative delta (" << delta
        << "); raise ref_avg or narrow the range";
    throw calibration_error(msg.str());
  }
  return make_tariff(phi_offpeak, delta, grid);
}

double total_grid_load(const scenario::Scenario& scenario,
                       const TradeProfile& trades, const Eigen::VectorXd& l_q,
                       int t) {
  double load = scenario.l_p[t] + l_q[t];
  for (int n = 0; n < scenario.participant_count(); ++n)
    load += trades.x(n, t) + scenario.users[n].demand[t] -
            scenario.users[n].generation[t];
  return load;
}

Eigen::VectorXd load_series(const scenario::Scenario& scenario,
                            const TradeProfile& trades,
                            const Eigen::VectorXd& l_q) {
  return trades.column_sum() - scenario.surplus_total() + l_q + scenario.l_p;
}

std::vector<std::string> load_diagnostics(const scenario::Scenario& scenario,
                                          const Eigen::VectorXd& loads) {
  std::vector<std::string> warnings;
  for (int t = 0; t < loads.size(); ++t) {
    if (loads[t] <= 0.0) {
      std::ostringstream msg;
      msg << "L(" << t << ") = " << loads[t] << " is non-positive";
      warnings.push_back(msg.str());
    } else if (loads[t] >= scenario.l_max) {
      std::ostringstream msg;
      msg << "L(" << t << ") = " << loads[t] << " reaches l_max "
          << scenario.l_max;
      warnings.push_back(msg.str());
    }
  }
  return warnings;
}

StageCostCoefficients stage_cost_coefficients(int n, double others_load,
                                              double a,
                                              const scenario::Scenario& s,
                                              int t) {
  StageCostCoefficients coeff;
  coeff.k2 = s.tariff.phi[t];
  coeff.k1 = s.tariff.phi[t] * others_load + s.tariff.delta[t] - a;
  coeff.k0 = -a * s.surplus(n, t);
  return coeff;
}

SlotCost user_cost(int n, const TradeProfile& trades,
                   const game::OperatorSignal& signal,
                   const scenario::Scenario& scenario, int t) {
  const double load = total_grid_load(scenario, trades, signal.l_q(), t);
  const double price = grid_price(load, scenario.tariff, t);
  const double own_load = trades.x(n, t) + scenario.users[n].demand[t] -
                          scenario.users[n].generation[t];
  return {price * own_load, -signal.a[t] * trades.x(n, t)};
}

CostBreakdown user_cost_series(int n, const TradeProfile& trades,
                               const game::OperatorSignal& signal,
                               const scenario::Scenario& scenario) {
  const int slots = scenario.grid.slots;
  CostBreakdown breakdown;
  breakdown.grid_component.resize(slots);
  breakdown.ces_component.resize(slots);
  for (int t = 0; t < slots; ++t) {
    const SlotCost cost = user_cost(n, trades, signal, scenario, t);
    breakdown.grid_component[t] = cost.grid_component;
    breakdown.ces_component[t] = cost.ces_component;
  }
  breakdown.total =
      breakdown.grid_component.sum() + breakdown.ces_component.sum();
  return breakdown;
}

double ces_revenue(const TradeProfile& trades,
                   const game::OperatorSignal& signal,
                   const Eigen::VectorXd& prices) {
  const Eigen::VectorXd traded = trades.column_sum();
  const Eigen::VectorXd l_q = signal.l_q();
  double revenue = 0.0;
  for (Eigen::Index t = 0; t < prices.size(); ++t)
    revenue += -signal.a[t] * traded[t] - prices[t] * l_q[t];
  return revenue;
}

OutcomeReport baseline_outcome(const scenario::Scenario& scenario) {
  const int slots = scenario.grid.slots;
  return evaluate_outcome(scenario, Model::baseline,
                          game::OperatorSignal::zero(slots),
                          TradeProfile::zero(scenario.participant_count(),
                                             slots));
}

}  // namespace cesim::pricing
