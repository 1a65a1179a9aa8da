#include "cesim/outcome.hpp"

#include <cmath>
#include <stdexcept>

#include "cesim/pricing.hpp"

namespace cesim {

namespace game {

OperatorSignal OperatorSignal::from_signed(Eigen::VectorXd price,
                                           const Eigen::VectorXd& lq_signed) {
  const storage::FlowSplit split = storage::split_signed(lq_signed);
  return {std::move(price), split.chi_plus, split.chi_minus};
}

OperatorSignal OperatorSignal::zero(Eigen::Index slots) {
  return {Eigen::VectorXd::Zero(slots), Eigen::VectorXd::Zero(slots),
          Eigen::VectorXd::Zero(slots)};
}

void OperatorSignal::validate() const {
  if (a.size() != lq_plus.size() || a.size() != lq_minus.size())
    throw std::invalid_argument("OperatorSignal: series length mismatch");
  if (!a.allFinite() || !lq_plus.allFinite() || !lq_minus.allFinite())
    throw std::invalid_argument("OperatorSignal: entries must be finite");
  if (lq_plus.minCoeff() < 0.0 || lq_minus.minCoeff() < 0.0)
    throw std::invalid_argument("OperatorSignal: split parts must be >= 0");
}

}  // namespace game

std::string to_string(Model model) {
  switch (model) {
    case Model::baseline:
      return "baseline";
    case Model::centralized:
      return "centralized";
    case Model::benevolent:
      return "benevolent";
    case Model::competitive:
      return "competitive";
  }
  return "unknown";
}

Model parse_model(const std::string& name) {
  if (name == "baseline") return Model::baseline;
  if (name == "centralized") return Model::centralized;
  if (name == "benevolent") return Model::benevolent;
  if (name == "competitive") return Model::competitive;
  throw std::invalid_argument("unknown model: " + name);
}

OutcomeReport evaluate_outcome(const scenario::Scenario& scenario, Model model,
                               const game::OperatorSignal& signal,
                               const TradeProfile& trades) {
  const int slots = scenario.grid.slots;
  const int users = scenario.participant_count();

  OutcomeReport report;
  report.model = model;
  report.signal = signal;
  report.trades = trades;

  const Eigen::VectorXd l_q = signal.l_q();
  report.loads = pricing::load_series(scenario, trades, l_q);
  report.prices = pricing::price_series(report.loads, scenario.tariff);
  report.warnings = pricing::load_diagnostics(scenario, report.loads);

  report.user_grid_load.resize(users, slots);
  report.user_cost.resize(users);
  for (int n = 0; n < users; ++n) {
    double total = 0.0;
    for (int t = 0; t < slots; ++t) {
      const double own = trades.x(n, t) + scenario.users[n].demand[t] -
                         scenario.users[n].generation[t];
      report.user_grid_load(n, t) = own;
      total += report.prices[t] * own - signal.a[t] * trades.x(n, t);
    }
    report.user_cost[n] = total;
  }
  report.nonparticipating_cost = report.prices.dot(scenario.l_p);
  report.revenue = pricing::ces_revenue(trades, signal, report.prices);
  report.community_grid_payment = report.prices.dot(report.loads);

  storage::FlowSplit flows;
  flows.chi_plus = trades.user_charge() + signal.lq_plus;
  flows.chi_minus = trades.user_discharge() + signal.lq_minus;
  report.trajectory =
      storage::charge_trajectory(scenario.ces.q0, flows, scenario.ces);
  return report;
}

}  // namespace cesim
