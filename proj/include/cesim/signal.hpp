#pragma once

#include <Eigen/Core>

namespace cesim::game {

// The operator's decision per slot: CES unit price a(t) and grid exchange
// l_Q(t), kept sign-split (both parts >= 0; l_Q = lq_plus - lq_minus).
struct OperatorSignal {
  Eigen::VectorXd a;
  Eigen::VectorXd lq_plus;
  Eigen::VectorXd lq_minus;

  Eigen::VectorXd l_q() const { return lq_plus - lq_minus; }
  Eigen::Index slots() const { return a.size(); }

  static OperatorSignal from_signed(Eigen::VectorXd price,
                                    const Eigen::VectorXd& lq_signed);
  static OperatorSignal zero(Eigen::Index slots);
  void validate() const;  // finite entries, non-negative split parts
};

}  // namespace cesim::game
