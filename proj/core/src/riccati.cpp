#include "mflq/riccati.hpp"

#include <cmath>
#include <sstream>

#include "coupled_lyapunov.hpp"
#include "mflq/adjoint.hpp"
#include "mflq/chain.hpp"
#include "mflq/linalg.hpp"

namespace mflq {

namespace {

SwitchedMatrix symmetrized(const SwitchedMatrix& mat) {
  std::vector<Eigen::MatrixXd> out(mat.regimes());
  for (int r = 0; r < mat.regimes(); ++r) out[r] = 0.5 * (mat(r) + mat(r).transpose());
  return SwitchedMatrix(std::move(out));
}

double pairNorm(const SwitchedMatrix& a, const SwitchedMatrix& b) {
  return std::max(a.maxNorm(), b.maxNorm());
}

/// Gain-absorbed running-cost weight Q_i + Th' S_i + S_i' Th + Th'(R_i + d I)Th.
Eigen::MatrixXd shiftedWeight(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& S,
                              const Eigen::MatrixXd& R, const Eigen::MatrixXd& Theta,
                              double delta) {
  Eigen::MatrixXd effR = R;
  effR.diagonal().array() += delta;
  return Q + Theta.transpose() * S + S.transpose() * Theta +
         Theta.transpose() * effR * Theta;
}

std::pair<SwitchedMatrix, SwitchedMatrix> evaluateGains(const DecomposedModel& dm,
                                                        const FeedbackLaw& law,
                                                        double delta) {
  const int m0 = dm.generator.m0;
  const SwitchedMatrix Ahat1 = closedLoopA(dm, law, 1);
  const SwitchedMatrix Ahat2 = closedLoopA(dm, law, 2);
  const SwitchedMatrix Chat1 = closedLoopC(dm, law, 1);
  const SwitchedMatrix Chat2 = closedLoopC(dm, law, 2);

  internal::CoupledLyapunov solver(dm, Ahat1, Ahat2, Chat1);
  if (!solver.invertible()) {
    throw SolverError("marginal_system",
                      "policy evaluation: stacked Lyapunov system is singular");
  }

  std::vector<Eigen::MatrixXd> rhs1(m0);
  for (int r = 0; r < m0; ++r) {
    rhs1[r] = -shiftedWeight(dm.Q1(r), dm.S1(r), dm.R1(r), law.Theta1(r), delta);
  }
  SwitchedMatrix P1 = symmetrized(solver.solveChannel1(SwitchedMatrix(std::move(rhs1))));

  std::vector<Eigen::MatrixXd> rhs2(m0);
  for (int r = 0; r < m0; ++r) {
    rhs2[r] = -(Chat2(r).transpose() * P1(r) * Chat2(r) +
                shiftedWeight(dm.Q2(r), dm.S2(r), dm.R2(r), law.Theta2(r), delta));
  }
  SwitchedMatrix P2 = symmetrized(solver.solveChannel2(SwitchedMatrix(std::move(rhs2))));
  return {std::move(P1), std::move(P2)};
}

FeedbackLaw improvedGains(const DecomposedModel& dm, const SwitchedMatrix& P1,
                          const SwitchedMatrix& P2, double delta, bool usePinv,
                          const RiccatiOptions& opts) {
  const int m0 = dm.generator.m0;
  FeedbackLaw law = FeedbackLaw::zero(m0, dm.n, dm.m);
  for (int channel = 1; channel <= 2; ++channel) {
    const SwitchedMatrix& Pi = channel == 1 ? P1 : P2;
    for (int r = 0; r < m0; ++r) {
      const Eigen::MatrixXd G = gainDenominator(dm, P1, channel, r);
      const Eigen::MatrixXd H = gainNumerator(dm, P1, Pi, channel, r);
      Eigen::MatrixXd theta;
      if (usePinv) {
        theta = -pseudoInverse(G, opts.rankTolFactor) * H;
      } else {
        Eigen::MatrixXd regularized = G;
        regularized.diagonal().array() += delta;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(regularized);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) {
          throw SolverError("improvement_singular",
                            "policy improvement: R_i + D_i' P1 D_i + delta I is singular");
        }
        theta = -lu.solve(H);
      }
      (channel == 1 ? law.Theta1 : law.Theta2)(r) = std::move(theta);
    }
  }
  return law;
}

double semidefMargin(const DecomposedModel& dm, const SwitchedMatrix& P1) {
  double margin = std::numeric_limits<double>::infinity();
  for (int channel = 1; channel <= 2; ++channel) {
    for (int r = 0; r < dm.generator.m0; ++r) {
      margin = std::min(margin,
                        minSymEigenvalue(gainDenominator(dm, P1, channel, r)));
    }
  }
  return margin;
}

struct IterationSettings {
  double delta = 0.0;
  bool usePinv = false;
  bool monotoneGuard = true;
};

RiccatiSolution policyIteration(const DecomposedModel& dm, const FeedbackLaw& init,
                                const IterationSettings& settings,
                                const RiccatiOptions& opts) {
  FeedbackLaw law = init;
  if (momentAbscissa(dm, law) >= -opts.tolAbscissa) {
    throw SolverError("init_not_stabilizer",
                      "policy iteration requires a stabilizing initial gain pair");
  }

  SwitchedMatrix P1;
  SwitchedMatrix P2;
  bool havePrev = false;
  SwitchedMatrix prevP1;
  SwitchedMatrix prevP2;
  int monotoneViolations = 0;
  int iterations = 0;
  bool converged = false;

  for (int k = 0; k < opts.maxIterations; ++k) {
    iterations = k + 1;
    std::tie(P1, P2) = evaluateGains(dm, law, settings.delta);
    const double normP = pairNorm(P1, P2);
    if (!P1.allFinite() || !P2.allFinite() || normP > opts.divergenceNorm) {
      throw SolverError("not_finite_at_delta", "policy value diverged");
    }
    if (havePrev) {
      const double gap =
          std::max((P1 - prevP1).maxNorm(), (P2 - prevP2).maxNorm());
      if (settings.monotoneGuard) {
        const double slack = 1e-8 * (1.0 + normP);
        const double decrease = std::min(minSymEigenvalue(prevP1 - P1),
                                         minSymEigenvalue(prevP2 - P2));
        if (decrease < -slack) {
          if (++monotoneViolations > opts.monotoneGraceSteps) {
            throw SolverError("not_finite_at_delta",
                              "policy iteration lost monotone decrease");
          }
        } else {
          monotoneViolations = 0;
        }
      }
      if (gap <= opts.tol) {
        converged = true;
        break;
      }
    }
    prevP1 = P1;
    prevP2 = P2;
    havePrev = true;

    law = improvedGains(dm, P1, P2, settings.delta, settings.usePinv, opts);
    if (momentAbscissa(dm, law) >= -opts.tolAbscissa) {
      throw SolverError(settings.usePinv ? "gain_not_stabilizing" : "not_finite_at_delta",
                        "improved gain pair is not a stabilizer");
    }
  }
  if (!converged) {
    throw SolverError("max_iterations", "policy iteration did not converge");
  }

  RiccatiSolution sol;
  sol.delta = settings.delta;
  sol.P1 = std::move(P1);
  sol.P2 = std::move(P2);
  // Final gains recomputed from the converged value so the gain identity
  // (G + delta I) Theta + H = 0 holds for the returned pair exactly.
  FeedbackLaw finalLaw =
      improvedGains(dm, sol.P1, sol.P2, settings.delta, settings.usePinv, opts);
  sol.Theta1 = finalLaw.Theta1;
  sol.Theta2 = finalLaw.Theta2;
  sol.iterations = iterations;
  sol.semidefMargin = semidefMargin(dm, sol.P1);
  sol.residualNorm = riccatiResidual(dm, sol.P1, sol.P2, settings.delta, opts);
  sol.certificate = isStabilizer(dm, finalLaw, {opts.tolAbscissa, opts.tolPd});
  if (!sol.certificate.isStable) {
    throw SolverError(settings.usePinv ? "gain_not_stabilizing" : "not_finite_at_delta",
                      "converged gain pair is not a stabilizer");
  }
  return sol;
}

double sweepValueProbe(const DecomposedModel& dm, const RiccatiSolution& sol,
                       const ValueProbe& probe) {
  try {
    const AdjointSolution adj = solveAdjoint(dm, sol);
    return analyticValue(dm, sol, adj, probe.regime, probe.x2);
  } catch (const SolverError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

Eigen::MatrixXd gainDenominator(const DecomposedModel& dm, const SwitchedMatrix& P1,
                                int channel, int regime) {
  const Eigen::MatrixXd& D = dm.Di(channel)(regime);
  Eigen::MatrixXd G = dm.Ri(channel)(regime) + D.transpose() * P1(regime) * D;
  return 0.5 * (G + G.transpose());
}

Eigen::MatrixXd gainNumerator(const DecomposedModel& dm, const SwitchedMatrix& P1,
                              const SwitchedMatrix& Pi, int channel, int regime) {
  const Eigen::MatrixXd& B = dm.Bi(channel)(regime);
  const Eigen::MatrixXd& D = dm.Di(channel)(regime);
  const Eigen::MatrixXd& C = dm.Ci(channel)(regime);
  return B.transpose() * Pi(regime) + D.transpose() * P1(regime) * C +
         dm.Si(channel)(regime);
}

double riccatiResidual(const DecomposedModel& dm, const SwitchedMatrix& P1,
                       const SwitchedMatrix& P2, double delta,
                       const RiccatiOptions& opts) {
  const SwitchedMatrix lambdaP1 = lambdaMap(P1, dm.generator);
  const SwitchedMatrix lambdaP2 = lambdaMap(P2, dm.generator);
  double worst = 0.0;
  for (int channel = 1; channel <= 2; ++channel) {
    const SwitchedMatrix& Pi = channel == 1 ? P1 : P2;
    const SwitchedMatrix& lambdaPi = channel == 1 ? lambdaP1 : lambdaP2;
    for (int r = 0; r < dm.generator.m0; ++r) {
      const Eigen::MatrixXd& A = dm.Ai(channel)(r);
      const Eigen::MatrixXd& C = dm.Ci(channel)(r);
      const Eigen::MatrixXd G = gainDenominator(dm, P1, channel, r);
      const Eigen::MatrixXd H = gainNumerator(dm, P1, Pi, channel, r);
      Eigen::MatrixXd kernel;
      if (delta > 0.0) {
        Eigen::MatrixXd regularized = G;
        regularized.diagonal().array() += delta;
        kernel = regularized.partialPivLu().solve(H);
      } else {
        kernel = pseudoInverse(G, opts.rankTolFactor) * H;
      }
      const Eigen::MatrixXd defect = lambdaPi(r) + Pi(r) * A + A.transpose() * Pi(r) +
                                     C.transpose() * P1(r) * C + dm.Qi(channel)(r) -
                                     H.transpose() * kernel;
      worst = std::max(worst, defect.lpNorm<Eigen::Infinity>());
    }
  }
  return worst;
}

std::pair<SwitchedMatrix, SwitchedMatrix> policyEvaluate(const DecomposedModel& dm,
                                                         const FeedbackLaw& law,
                                                         double delta,
                                                         const RiccatiOptions& opts) {
  if (momentAbscissa(dm, law) >= -opts.tolAbscissa) {
    throw SolverError("not_stabilizer", "policy evaluation requires a stabilizer");
  }
  return evaluateGains(dm, law, delta);
}

RiccatiSolution solveRegularizedAre(const DecomposedModel& dm, double delta,
                                    const FeedbackLaw& init,
                                    const RiccatiOptions& opts) {
  if (delta <= 0.0) {
    throw std::invalid_argument("solveRegularizedAre: delta must be positive");
  }
  IterationSettings settings;
  settings.delta = delta;
  settings.usePinv = false;
  settings.monotoneGuard = true;
  return policyIteration(dm, init, settings, opts);
}

std::vector<double> defaultDeltaSchedule() {
  std::vector<double> deltas;
  double value = 1.0;
  for (int k = 0; k <= 10; ++k) {
    deltas.push_back(value);
    value *= 0.25;
  }
  return deltas;
}

SweepResult deltaSweep(const DecomposedModel& dm, const std::vector<double>& deltas,
                       const FeedbackLaw& init, const RiccatiOptions& opts,
                       const std::optional<ValueProbe>& probe) {
  if (deltas.empty()) throw std::invalid_argument("deltaSweep: empty schedule");
  for (size_t k = 0; k + 1 < deltas.size(); ++k) {
    if (deltas[k + 1] >= deltas[k]) {
      throw std::invalid_argument("deltaSweep: schedule must be strictly decreasing");
    }
  }
  if (deltas.back() <= 0.0) {
    throw std::invalid_argument("deltaSweep: deltas must be positive");
  }

  SweepResult sweep;
  FeedbackLaw warm = init;
  double firstNormP = std::numeric_limits<double>::quiet_NaN();
  double firstNormTheta = std::numeric_limits<double>::quiet_NaN();
  double maxNormP = 0.0;
  double maxNormTheta = 0.0;

  sweep.allSolved = true;
  for (double delta : deltas) {
    SweepRow row;
    row.delta = delta;
    try {
      RiccatiSolution sol = solveRegularizedAre(dm, delta, warm, opts);
      row.solved = true;
      row.normP = pairNorm(sol.P1, sol.P2);
      row.normTheta = pairNorm(sol.Theta1, sol.Theta2);
      row.semidefMargin = sol.semidefMargin;
      if (probe) row.valueProbe = sweepValueProbe(dm, sol, *probe);

      if (std::isnan(firstNormP)) {
        firstNormP = row.normP;
        firstNormTheta = row.normTheta;
      }
      maxNormP = std::max(maxNormP, row.normP);
      maxNormTheta = std::max(maxNormTheta, row.normTheta);

      warm.Theta1 = sol.Theta1;
      warm.Theta2 = sol.Theta2;
      sweep.solutions.emplace_back(std::move(sol));
      sweep.lastSolved = static_cast<int>(sweep.rows.size());
    } catch (const SolverError& err) {
      row.solved = false;
      row.failureCode = err.code();
      sweep.solutions.emplace_back(std::nullopt);
      sweep.allSolved = false;
    }
    sweep.rows.push_back(std::move(row));
  }

  // Gap between the last two consecutive successful solves.
  for (size_t k = 0; k + 1 < sweep.solutions.size(); ++k) {
    if (sweep.solutions[k] && sweep.solutions[k + 1]) {
      const RiccatiSolution& a = *sweep.solutions[k];
      const RiccatiSolution& b = *sweep.solutions[k + 1];
      sweep.lastGap = std::max((a.P1 - b.P1).maxNorm(), (a.P2 - b.P2).maxNorm());
    }
  }
  sweep.cauchy = !std::isnan(sweep.lastGap) && sweep.lastGap <= opts.cauchyTol;

  if (!std::isnan(firstNormP)) {
    sweep.pBounded = maxNormP <= opts.boundedPFactor * (firstNormP + 1.0);
    const double reference = std::max(firstNormTheta, 1e-6);
    sweep.blowup = sweep.pBounded && maxNormTheta > opts.thetaBlowupFactor * reference;
  } else {
    sweep.pBounded = false;
  }
  return sweep;
}

LimitSolveResult solveLimitAre(const DecomposedModel& dm, const FeedbackLaw& init,
                               const RiccatiOptions& opts, const SweepResult* sweep) {
  LimitSolveResult result;
  FeedbackLaw start = init;
  const RiccatiSolution* sweepLimit = nullptr;
  if (sweep && sweep->lastSolved >= 0 && sweep->solutions[sweep->lastSolved]) {
    sweepLimit = &*sweep->solutions[sweep->lastSolved];
    start.Theta1 = sweepLimit->Theta1;
    start.Theta2 = sweepLimit->Theta2;
    result.sweepCauchy = sweep->cauchy;
  }

  IterationSettings settings;
  settings.delta = 0.0;
  settings.usePinv = true;
  settings.monotoneGuard = false;
  try {
    result.solution = policyIteration(dm, start, settings, opts);
    result.haveCandidate = true;
  } catch (const SolverError& err) {
    if (sweepLimit == nullptr || err.code() == "init_not_stabilizer") {
      result.failureCause = err.code();
      return result;
    }
    // Retry once from the caller-provided gain; warm starts from deep in the
    // sweep can sit on the wrong side of a pseudoinverse rank cut.
    try {
      result.solution = policyIteration(dm, init, settings, opts);
      result.haveCandidate = true;
    } catch (const SolverError& retryErr) {
      result.failureCause = retryErr.code();
      return result;
    }
  }

  // (a) semidefiniteness of R_i + D_i' P1 D_i.
  if (result.solution.semidefMargin < -opts.tolPd) {
    result.failureCause = "semidefiniteness_violated";
    return result;
  }

  // (b) range condition ||(I - G G^+) H|| per channel and regime.
  result.rangeOk.assign(2, std::vector<bool>(dm.generator.m0, true));
  bool rangeHolds = true;
  for (int channel = 1; channel <= 2; ++channel) {
    const SwitchedMatrix& Pi = channel == 1 ? result.solution.P1 : result.solution.P2;
    for (int r = 0; r < dm.generator.m0; ++r) {
      const Eigen::MatrixXd G = gainDenominator(dm, result.solution.P1, channel, r);
      const Eigen::MatrixXd H = gainNumerator(dm, result.solution.P1, Pi, channel, r);
      const Eigen::MatrixXd projector =
          Eigen::MatrixXd::Identity(dm.m, dm.m) -
          G * pseudoInverse(G, opts.rankTolFactor);
      const double residual = (projector * H).norm();
      result.rangeResidual = std::max(result.rangeResidual, residual);
      if (residual > opts.tolRange) {
        result.rangeOk[channel - 1][r] = false;
        rangeHolds = false;
      }
    }
  }
  if (!rangeHolds) {
    result.failureCause = "range_condition_violated";
    return result;
  }

  // (c) residual of the limit system.
  if (result.solution.residualNorm > 10.0 * opts.tol) {
    result.failureCause = "residual_too_large";
    return result;
  }

  // (d) the minimum-norm gain is a stabilizer (already certified during the
  // iteration; re-derive the flag from the certificate).
  if (!result.solution.certificate.isStable) {
    result.failureCause = "gain_not_stabilizing";
    return result;
  }

  if (sweepLimit != nullptr && result.sweepCauchy) {
    result.sweepAgreementGap =
        std::max((result.solution.P1 - sweepLimit->P1).maxNorm(),
                 (result.solution.P2 - sweepLimit->P2).maxNorm());
  }
  result.success = true;
  return result;
}

std::string toString(SolvabilityVerdict verdict) {
  switch (verdict) {
    case SolvabilityVerdict::ClosedLoopSolvable:
      return "closed_loop_solvable";
    case SolvabilityVerdict::FiniteNotSolvable:
      return "finite_not_solvable";
    case SolvabilityVerdict::Undetermined:
      return "undetermined";
  }
  return "undetermined";
}

SolvabilityReport classifySolvability(const DecomposedModel& dm, const FeedbackLaw& init,
                                      const RiccatiOptions& opts,
                                      const std::optional<ValueProbe>& probe) {
  SolvabilityReport report;
  try {
    report.sweep = deltaSweep(dm, defaultDeltaSchedule(), init, opts, probe);
  } catch (const SolverError& err) {
    report.verdict = SolvabilityVerdict::Undetermined;
    report.diagnostics = "sweep failed: " + err.code();
    return report;
  }
  report.blowup = report.sweep.blowup;

  report.limit = solveLimitAre(dm, init, opts, &report.sweep);
  if (report.limit.success) {
    report.verdict = SolvabilityVerdict::ClosedLoopSolvable;
    report.diagnostics = "limit system solvable; gains attached";
    return report;
  }

  const bool rangeFailed = report.limit.failureCause == "range_condition_violated";
  if (report.sweep.allSolved && report.sweep.pBounded &&
      (report.sweep.blowup || rangeFailed)) {
    report.verdict = SolvabilityVerdict::FiniteNotSolvable;
    std::ostringstream msg;
    msg << "regularized solves bounded";
    if (report.sweep.blowup) msg << "; gain blow-up along the sweep";
    if (rangeFailed) {
      msg << "; range condition fails at the limit candidate (residual "
          << report.limit.rangeResidual << ")";
    }
    report.diagnostics = msg.str();
    return report;
  }

  report.verdict = SolvabilityVerdict::Undetermined;
  std::ostringstream msg;
  msg << "limit solve failed (" << report.limit.failureCause << ")";
  if (!report.sweep.allSolved) {
    msg << "; regularized solves failed at deltas:";
    for (const auto& row : report.sweep.rows) {
      if (!row.solved) msg << " " << row.delta << " (" << row.failureCode << ")";
    }
  }
  if (!report.sweep.pBounded) msg << "; P grew unbounded along the sweep";
  report.diagnostics = msg.str();
  return report;
}

}  // namespace mflq
