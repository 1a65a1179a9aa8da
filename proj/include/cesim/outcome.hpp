#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "cesim/scenario.hpp"
#include "cesim/signal.hpp"
#include "cesim/storage.hpp"
#include "cesim/trade.hpp"

namespace cesim {

enum class Model { baseline, centralized, benevolent, competitive };

std::string to_string(Model model);
Model parse_model(const std::string& name);  // throws std::invalid_argument

struct IterationRecord {
  int round = 0;
  double revenue = 0.0;
  double rho_rel_change = 0.0;
  game::OperatorSignal signal;
};

// Per-model result bundle: everything the CSV outputs and the metrics need.
struct OutcomeReport {
  Model model = Model::baseline;
  game::OperatorSignal signal;  // a identically 0 for baseline/centralized
  TradeProfile trades;
  Eigen::VectorXd loads;           // L(t), kWh
  Eigen::VectorXd prices;          // p(t), cents/kWh
  Eigen::MatrixXd user_grid_load;  // l_n(t), I x H
  Eigen::VectorXd user_cost;       // daily cost per participating user, cents
  double nonparticipating_cost = 0.0;    // aggregate over users P, cents
  double revenue = 0.0;                  // R, cents
  double community_grid_payment = 0.0;   // sum_t p(t) L(t), cents
  storage::ChargeTrajectory trajectory;
  std::vector<IterationRecord> iterations;  // competitive model only
  bool converged = true;
  std::vector<std::string> warnings;
};

// Evaluates loads, prices, costs, revenue and the charge trajectory for any
// model given its signal and trades. Baseline and centralized pass a == 0,
// which drops the a(t)x_n(t) term from the user cost and prices CES-grid
// exchange at the grid price.
OutcomeReport evaluate_outcome(const scenario::Scenario& scenario, Model model,
                               const game::OperatorSignal& signal,
                               const TradeProfile& trades);

}  // namespace cesim
