#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mflq/stability.hpp"

namespace mflq {

struct RiccatiOptions {
  double tol = 1e-10;            // policy-iteration stop on ||P_k+1 - P_k||_inf
  int maxIterations = 100;
  double tolPd = 1e-10;          // semidefiniteness slack for R_i + D_i' P1 D_i
  double tolAbscissa = 1e-9;
  double tolRange = 1e-8;        // range-condition residual bound
  double rankTolFactor = 1e-9;   // pseudoinverse rank cut (relative to sigma_max)
  double thetaBlowupFactor = 1e3;
  double boundedPFactor = 10.0;  // "P stayed bounded" multiplier over the first solve
  int monotoneGraceSteps = 5;    // consecutive monotonicity violations tolerated
  double divergenceNorm = 1e10;  // ||P|| beyond this counts as divergence
  double cauchyTol = 1e-6;       // sweep-tail gap below this counts as converged
};

/// A solution of the coupled algebraic Riccati system at regularization
/// weight delta (delta = 0 is the pseudoinverse limit system).
struct RiccatiSolution {
  double delta = 0.0;
  SwitchedMatrix P1, P2;          // n x n symmetric per regime
  SwitchedMatrix Theta1, Theta2;  // m x n per regime
  double residualNorm = 0.0;
  double semidefMargin = 0.0;  // min eig of R_i + D_i' P1 D_i over channels/regimes
  StabilityCertificate certificate;
  int iterations = 0;
};

/// Closed-loop policy evaluation: the value of the (stabilizing) gain pair at
/// regularization delta, i.e. the linear coupled Lyapunov solve with the
/// gain-absorbed weights. Channel 1 is solved first; channel 2 couples to P1
/// through the diffusion.
std::pair<SwitchedMatrix, SwitchedMatrix> policyEvaluate(const DecomposedModel& dm,
                                                         const FeedbackLaw& law,
                                                         double delta,
                                                         const RiccatiOptions& opts = {});

/// Policy iteration at fixed delta > 0, warm-started from `init` (must be a
/// stabilizer). Alternates evaluation with the gain update
/// Theta_i = -(R_i + D_i' P1 D_i + delta I)^{-1}(B_i' P_i + D_i' P1 C_i + S_i).
/// Throws SolverError("improvement_singular") or
/// SolverError("not_finite_at_delta") on the documented failure modes.
RiccatiSolution solveRegularizedAre(const DecomposedModel& dm, double delta,
                                    const FeedbackLaw& init,
                                    const RiccatiOptions& opts = {});

/// Optional probe state for value columns in sweep tables.
struct ValueProbe {
  int regime = 0;
  Eigen::VectorXd x2;
};

struct SweepRow {
  double delta = 0.0;
  bool solved = false;
  std::string failureCode;  // empty when solved
  double normP = 0.0;
  double normTheta = 0.0;
  double semidefMargin = 0.0;
  double valueProbe = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::optional<RiccatiSolution>> solutions;  // aligned with rows
  bool blowup = false;    // gains grew by thetaBlowupFactor while P stayed bounded
  bool pBounded = true;
  bool allSolved = false;
  bool cauchy = false;    // last two solved P's within tol of one another
  double lastGap = std::numeric_limits<double>::quiet_NaN();
  /// Index into rows/solutions of the last successful solve, or -1.
  int lastSolved = -1;
};

std::vector<double> defaultDeltaSchedule();

/// Warm-started sweep over a strictly decreasing schedule of deltas. Solve
/// failures are recorded per row and the sweep continues with the last good
/// gain. When `probe` is set, each row carries the value of the regularized
/// problem at the probe state.
SweepResult deltaSweep(const DecomposedModel& dm, const std::vector<double>& deltas,
                       const FeedbackLaw& init, const RiccatiOptions& opts = {},
                       const std::optional<ValueProbe>& probe = std::nullopt);

struct LimitSolveResult {
  bool success = false;
  std::string failureCause;  // empty on success
  RiccatiSolution solution;  // the delta = 0 candidate (also on range failures)
  bool haveCandidate = false;
  /// Range-condition flags and worst residual ||(I - G G^+) H|| per channel.
  std::vector<std::vector<bool>> rangeOk;  // [channel-1][regime], [channel-2][regime]
  double rangeResidual = 0.0;
  bool sweepCauchy = false;
  double sweepAgreementGap = std::numeric_limits<double>::quiet_NaN();
};

/// The delta -> 0 limit system: direct policy iteration with pseudoinverse
/// gain updates, cross-checked against the sweep limit when one is supplied.
/// Succeeds iff the candidate passes semidefiniteness, the range condition,
/// the residual bound and the minimum-norm gain is a stabilizer.
LimitSolveResult solveLimitAre(const DecomposedModel& dm, const FeedbackLaw& init,
                               const RiccatiOptions& opts = {},
                               const SweepResult* sweep = nullptr);

enum class SolvabilityVerdict { ClosedLoopSolvable, FiniteNotSolvable, Undetermined };

std::string toString(SolvabilityVerdict verdict);

struct SolvabilityReport {
  SolvabilityVerdict verdict = SolvabilityVerdict::Undetermined;
  SweepResult sweep;
  LimitSolveResult limit;
  bool blowup = false;
  std::string diagnostics;
};

/// Full classification: sweep, limit attempt, verdict per the equivalence
/// between closed-loop solvability and the limit system.
SolvabilityReport classifySolvability(const DecomposedModel& dm, const FeedbackLaw& init,
                                      const RiccatiOptions& opts = {},
                                      const std::optional<ValueProbe>& probe = std::nullopt);

/// Residual of the algebraic system at (P1, P2, delta): max infinity-norm of
/// the defect over channels and regimes (pseudoinverse form at delta = 0).
double riccatiResidual(const DecomposedModel& dm, const SwitchedMatrix& P1,
                       const SwitchedMatrix& P2, double delta,
                       const RiccatiOptions& opts = {});

/// G_i = R_i + D_i' P1 D_i and H_i = B_i' P_i + D_i' P1 C_i + S_i per regime.
Eigen::MatrixXd gainDenominator(const DecomposedModel& dm, const SwitchedMatrix& P1,
                                int channel, int regime);
Eigen::MatrixXd gainNumerator(const DecomposedModel& dm, const SwitchedMatrix& P1,
                              const SwitchedMatrix& Pi, int channel, int regime);

}  // namespace mflq
