#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cesim/outcome.hpp"
#include "cesim/parallel.hpp"
#include "cesim/scenario.hpp"

namespace cesim::metrics {

// Peak-to-average ratio, max_t L(t) / mean_t L(t).
double par(const Eigen::VectorXd& load);

double par_reduction_pct(const Eigen::VectorXd& baseline_load,
                         const Eigen::VectorXd& model_load);

struct SavingsReport {
  Eigen::VectorXd per_user_pct;  // participating users; NaN when excluded
  std::vector<int> excluded;     // users with non-positive baseline cost
  double avg_participating_pct = 0.0;
  double nonparticipating_pct = 0.0;  // same for every aggregate P user
  double combined_pct = 0.0;          // all users, P weighted by head count
};

SavingsReport cost_savings(const OutcomeReport& model,
                           const OutcomeReport& baseline,
                           const scenario::Scenario& s);

// Community benefit two ways: per-user cost reductions plus CES revenue, and
// the reduction of the total payment to the grid. Identical by construction;
// both are exposed so the agreement stays checkable.
struct BenefitRoutes {
  double via_user_sum = 0.0;
  double via_grid_payment = 0.0;
};
BenefitRoutes community_benefit_routes(const OutcomeReport& model,
                                       const OutcomeReport& baseline,
                                       const scenario::Scenario& s);
double community_benefit(const OutcomeReport& model,
                         const OutcomeReport& baseline,
                         const scenario::Scenario& s);

struct ComparisonRow {
  Model model = Model::competitive;
  double participation_pct = 0.0;
  double avg_pu_saving_pct = 0.0;
  double ces_revenue = 0.0;
  double community_benefit = 0.0;
  double par_reduction_pct = 0.0;
};
ComparisonRow comparison_row(const OutcomeReport& model,
                             const OutcomeReport& baseline,
                             const scenario::Scenario& s,
                             double participation_pct);

struct SweepEntry {
  Model model = Model::competitive;
  bool ok = false;
  double benefit = 0.0;
  std::string error;
};
struct SweepPoint {
  double capacity = 0.0;
  std::vector<SweepEntry> entries;  // one per requested model
};

// Re-solves every model at each capacity (q0 scaled with the capacity ratio)
// and records the community benefit; per-point failures are recorded and the
// sweep continues.
std::vector<SweepPoint> capacity_sweep(const scenario::Scenario& s,
                                       const std::vector<double>& capacities,
                                       const std::vector<Model>& models,
                                       double tau = 0.002,
                                       exec mode = default_exec());

struct ArgmaxEntry {
  Model model;
  double capacity;
  double benefit;
};
std::vector<ArgmaxEntry> sweep_argmax(const std::vector<SweepPoint>& points);

struct NoiseRow {
  double variance_pct = 0.0;
  double mape_pct = 0.0;  // variance_pct / 2 by the noise construction
  double avg_pu_saving_pct = 0.0;
  double combined_saving_pct = 0.0;
  double par_reduction_pct = 0.0;
  double clip_events_mean = 0.0;  // committed trades clipped ex post
  int trials = 0;
};

// Day-ahead commitment from noisy forecasts, realized costs on the true
// profiles. Committed trades leaving the true trade interval are clipped to
// it and counted; the committed l_Q stands as scheduled.
std::vector<NoiseRow> noise_study(const scenario::Scenario& s,
                                  const std::vector<double>& variance_pcts,
                                  int trials, std::uint64_t seed,
                                  double tau = 0.002,
                                  exec mode = default_exec());

}  // namespace cesim::metrics
