#pragma once

#include "mflq/model.hpp"

namespace mflq {

struct StabilityOptions {
  double tolAbscissa = 1e-9;  // |abscissa| below this is reported as marginal
  double tolPd = 1e-10;       // positive-definiteness margin for certificates
};

/// Verdict of the stabilizer test. `abscissa` is the largest real part of the
/// closed-loop second-moment generator spectrum; negative iff mean-square
/// stable. When stable, a coupled-Lyapunov certificate (P1, P2) with
/// right-hand side -I is attached and pdMargin is the least eigenvalue over
/// both families.
struct StabilityCertificate {
  bool isStable = false;
  bool marginal = false;
  double abscissa = 0.0;
  bool hasLyapunov = false;
  SwitchedMatrix lyapunovP1;
  SwitchedMatrix lyapunovP2;
  double pdMargin = 0.0;
};

struct DissipativityResult {
  bool success = false;
  bool marginalSolve = false;  // stacked linear system numerically singular
  SwitchedMatrix P1;
  SwitchedMatrix P2;
  double pdMargin = 0.0;
};

/// Largest real part of the spectrum of the closed-loop second-moment flow.
/// The flow is block-triangular: the chain-adapted channel evolves on its own,
/// the fluctuation channel is fed by it through the diffusion, and cross
/// moments vanish by orthogonality. Both blocks act on regime-stacked
/// symmetric matrices.
double momentAbscissa(const DecomposedModel& dm, const FeedbackLaw& law);

/// Solves the coupled Lyapunov certificate equations with right-hand side -I
/// (channel 1 first; channel 2 couples to P1 through the diffusion term).
/// Succeeds iff both solutions are positive definite beyond tolPd.
DissipativityResult dissipativityCertificate(const DecomposedModel& dm,
                                             const FeedbackLaw& law,
                                             const StabilityOptions& opts = {});

/// Stabilizer membership by the spectral test, with the dissipativity
/// certificate attached when stable. |abscissa| <= tolAbscissa is marginal.
StabilityCertificate isStabilizer(const DecomposedModel& dm, const FeedbackLaw& law,
                                  const StabilityOptions& opts = {});

/// A_i + B_i Theta_i and C_i + D_i Theta_i per regime, channel in {1, 2}.
SwitchedMatrix closedLoopA(const DecomposedModel& dm, const FeedbackLaw& law,
                           int channel);
SwitchedMatrix closedLoopC(const DecomposedModel& dm, const FeedbackLaw& law,
                           int channel);

}  // namespace mflq
