#pragma once

#include "mflq/riccati.hpp"

namespace mflq {

/// Solution of the infinite-horizon adjoint equations under the exponential
/// signal class. With every driver of the form e^{-kappa (t-s)} h(regime),
/// the costate is pi_i(t) = e^{-kappa (t-s)} pibar_i(alpha(t)): the Brownian
/// component eta vanishes identically and the jump component is determined by
/// the differences of pibar across regimes. In the supported class all
/// channel-1 drivers are zero, so pibar1 = 0.
struct AdjointSolution {
  ExpDecaySignal pibar1;  // identically zero in the supported class
  ExpDecaySignal pibar2;
  bool etaZero = true;
  double residual = 0.0;  // defect of the stacked drift identity

  /// Jump-measure coefficient nu(t, to) = pi(t, to) - pi(t, from) for the
  /// channel-2 costate, evaluated at elapsed time t - s.
  Eigen::VectorXd nuJump(double elapsed, int from, int to) const;
};

struct AdjointOptions {
  double resonanceTol = 1e-8;   // reject kappa this close to a closed-loop mode
  double rankTolFactor = 1e-9;  // pseudoinverse rank cut
  double tolRange = 1e-8;
};

/// Solves the stacked linear systems for pibar, one per distinct decay rate
/// among the drivers (superposition). Throws SolverError("resonant_decay_rate")
/// when a kappa matches a closed-loop decay mode, and
/// SolverError("unsupported_channel1_signals") outside the supported class.
AdjointSolution solveAdjoint(const DecomposedModel& dm, const RiccatiSolution& sol,
                             const AdjointOptions& opts = {});

/// The feedforward driver w_i = B_i' pi_i + D_i' P1 sigma_i + r_i as a signal
/// (the eta term is zero in this class).
ExpDecaySignal offsetDriver(const DecomposedModel& dm, const RiccatiSolution& sol,
                            const AdjointSolution& adj, int channel);

struct RangeConditionReport {
  std::vector<std::vector<bool>> ok;  // [channel-1][regime]
  double worstResidual = 0.0;
  bool allOk = true;
};

/// Nonhomogeneous range condition: every component of w_i lies in the column
/// space of R_i + D_i' P1 D_i per regime. The time factor is scalar, so one
/// check per component and regime decides the whole trajectory.
RangeConditionReport checkRangeCondition(const DecomposedModel& dm,
                                         const RiccatiSolution& sol,
                                         const AdjointSolution& adj,
                                         const AdjointOptions& opts = {});

/// Feedforward offsets -(R_i + D_i' P1 D_i + delta I)^{-1} w_i (pseudoinverse
/// at delta = 0, where the range condition must hold). Returns the complete
/// law: gains from `sol`, offsets attached.
FeedbackLaw optimalOffset(const DecomposedModel& dm, const RiccatiSolution& sol,
                          const AdjointSolution& adj, const AdjointOptions& opts = {});

/// Value of the (delta-regularized) problem at a deterministic initial state
/// (x1 = 0): the quadratic term in P2, the costate cross term, and the
/// closed-form exponential integrals with chain occupation handled by the
/// resolvent. Independent of the start time s within this signal class.
double analyticValue(const DecomposedModel& dm, const RiccatiSolution& sol,
                     const AdjointSolution& adj, int regime, const Eigen::VectorXd& x2,
                     const AdjointOptions& opts = {});

}  // namespace mflq
