#pragma once

#include <Eigen/Dense>

#include "mflq/chain.hpp"
#include "mflq/linalg.hpp"
#include "mflq/model.hpp"

namespace mflq::internal {

/// Factorized solver for the closed-loop coupled Lyapunov equations at a
/// fixed gain pair. Channel 1 carries its own quadratic diffusion term; the
/// channel-2 equation is linear in P2 with the channel-1 solution entering
/// only through the right-hand side, so the coupling is triangular.
///
///   channel 1:  Lambda[P] + Ahat1' P + P Ahat1 + Chat1' P Chat1 = rhs
///   channel 2:  Lambda[P] + Ahat2' P + P Ahat2                  = rhs
class CoupledLyapunov {
 public:
  CoupledLyapunov(const DecomposedModel& dm, const SwitchedMatrix& Ahat1,
                  const SwitchedMatrix& Ahat2, const SwitchedMatrix& Chat1)
      : stack_(dm.generator.m0, dm.n) {
    const int m0 = dm.generator.m0;
    const Eigen::MatrixXd op1 = stack_.buildOperator([&](const SwitchedMatrix& P) {
      std::vector<Eigen::MatrixXd> out(m0);
      for (int r = 0; r < m0; ++r) {
        out[r] = Ahat1(r).transpose() * P(r) + P(r) * Ahat1(r) +
                 Chat1(r).transpose() * P(r) * Chat1(r);
      }
      SwitchedMatrix drift{std::move(out)};
      return drift + lambdaMap(P, dm.generator);
    });
    const Eigen::MatrixXd op2 = stack_.buildOperator([&](const SwitchedMatrix& P) {
      std::vector<Eigen::MatrixXd> out(m0);
      for (int r = 0; r < m0; ++r) {
        out[r] = Ahat2(r).transpose() * P(r) + P(r) * Ahat2(r);
      }
      SwitchedMatrix drift{std::move(out)};
      return drift + lambdaMap(P, dm.generator);
    });
    lu1_.setThreshold(1e-12);
    lu2_.setThreshold(1e-12);
    lu1_.compute(op1);
    lu2_.compute(op2);
  }

  bool invertible() const { return lu1_.isInvertible() && lu2_.isInvertible(); }

  SwitchedMatrix solveChannel1(const SwitchedMatrix& rhs) const {
    return stack_.unpack(lu1_.solve(stack_.pack(rhs)));
  }
  SwitchedMatrix solveChannel2(const SwitchedMatrix& rhs) const {
    return stack_.unpack(lu2_.solve(stack_.pack(rhs)));
  }

 private:
  SymStack stack_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu1_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu2_;
};

}  // namespace mflq::internal
