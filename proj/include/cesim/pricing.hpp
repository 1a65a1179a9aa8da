#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

#include "cesim/outcome.hpp"
#include "cesim/scenario.hpp"
#include "cesim/signal.hpp"
#include "cesim/trade.hpp"

namespace cesim::pricing {

struct calibration_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Builds the two-band tariff: phi = phi_offpeak outside the peak window,
// 1.5x inside; delta constant.
Tariff make_tariff(double phi_offpeak, double delta,
                   const scenario::TimeGrid& grid);
void validate_tariff(const Tariff& tariff, const scenario::TimeGrid& grid);

// p(t) = phi_t * L + delta_t
double grid_price(double load, const Tariff& tariff, int t);
Eigen::VectorXd price_series(const Eigen::VectorXd& loads,
                             const Tariff& tariff);

// Chooses phi_offpeak to reproduce the reference price spread on the given
// baseline load and delta to match the reference average; throws
// calibration_error naming the failed constraint.
Tariff calibrate_tariff(double ref_min, double ref_max, double ref_avg,
                        const Eigen::VectorXd& baseline_load,
                        const scenario::TimeGrid& grid);

// L(t) = sum_n l_n(t) + l_Q(t) + l_P(t) with l_n = x_n + e_n - g_n
double total_grid_load(const scenario::Scenario& scenario,
                       const TradeProfile& trades, const Eigen::VectorXd& l_q,
                       int t);
Eigen::VectorXd load_series(const scenario::Scenario& scenario,
                            const TradeProfile& trades,
                            const Eigen::VectorXd& l_q);
// Warning-level diagnostics for L(t) <= 0 or L(t) >= L_max.
std::vector<std::string> load_diagnostics(const scenario::Scenario& scenario,
                                          const Eigen::VectorXd& loads);

// Quadratic stage-cost coefficients in the user's own grid load:
// C_n = K2 l^2 + K1 l + K0 with K2 = phi_t, K1 = phi_t*L_others + delta_t - a,
// K0 = -a * s_n.
struct StageCostCoefficients {
  double k2 = 0.0;
  double k1 = 0.0;
  double k0 = 0.0;
  double eval(double own_load) const {
    return (k2 * own_load + k1) * own_load + k0;
  }
};
StageCostCoefficients stage_cost_coefficients(int n, double others_load,
                                              double a,
                                              const scenario::Scenario& s,
                                              int t);

struct SlotCost {
  double grid_component = 0.0;  // p(t) * l_n(t)
  double ces_component = 0.0;   // -a(t) * x_n(t)
  double total() const { return grid_component + ces_component; }
};
SlotCost user_cost(int n, const TradeProfile& trades,
                   const game::OperatorSignal& signal,
                   const scenario::Scenario& scenario, int t);

struct CostBreakdown {
  Eigen::VectorXd grid_component;
  Eigen::VectorXd ces_component;
  double total = 0.0;
};
CostBreakdown user_cost_series(int n, const TradeProfile& trades,
                               const game::OperatorSignal& signal,
                               const scenario::Scenario& scenario);

// R = sum_t ( -a(t) * sum_n x_n(t) - p(t) * l_Q(t) )
double ces_revenue(const TradeProfile& trades,
                   const game::OperatorSignal& signal,
                   const Eigen::VectorXd& prices);

// The no-CES system: x = 0 and l_Q = 0, same quadratic price model; surplus
// PV is sold straight to the grid through negative l_n.
OutcomeReport baseline_outcome(const scenario::Scenario& scenario);

}  // namespace cesim::pricing
