#pragma once

#include <Eigen/Core>

namespace cesim {

// CES transactions of the participating users: x(n, t) in kWh, positive when
// user n charges (sells to) the storage at slot t.
struct TradeProfile {
  Eigen::MatrixXd x;  // I x H

  Eigen::Index users() const { return x.rows(); }
  Eigen::Index slots() const { return x.cols(); }

  // Per-slot charge/discharge aggregates across users.
  Eigen::VectorXd user_charge() const {
    return x.cwiseMax(0.0).colwise().sum().transpose();
  }
  Eigen::VectorXd user_discharge() const {
    return (-x).cwiseMax(0.0).colwise().sum().transpose();
  }
  Eigen::VectorXd column_sum() const { return x.colwise().sum().transpose(); }

  static TradeProfile zero(Eigen::Index users, Eigen::Index slots) {
    return {Eigen::MatrixXd::Zero(users, slots)};
  }
};

}  // namespace cesim
