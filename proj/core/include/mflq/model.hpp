#pragma once

#include "mflq/types.hpp"

namespace mflq {

/// Full problem data: an n-dimensional controlled diffusion whose drift and
/// diffusion mix the state and control with their chain-conditional means,
/// plus a quadratic running cost with (possibly indefinite) weights. All
/// coefficient matrices are regime-indexed; nonhomogeneous terms belong to
/// the exponential class (see ExpDecaySignal).
struct MeanFieldModel {
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  MarkovGenerator generator;

  SwitchedMatrix A, Abar, C, Cbar;  // n x n
  SwitchedMatrix B, Bbar, D, Dbar;  // n x m
  SwitchedMatrix Q, Qbar;           // n x n, symmetric
  SwitchedMatrix S, Sbar;           // m x n
  SwitchedMatrix R, Rbar;           // m x m, symmetric

  ExpDecaySignal b, sigma, q, qbar;  // R^n
  ExpDecaySignal r, rbar;            // R^m

  /// Optional stabilizer supplied with the model; the solvers need one when
  /// the zero gain pair is not stabilizing.
  FeedbackLaw initFeedback;
  bool hasInitFeedback = false;

  /// All-zero model of the given dimensions (valid by construction).
  static MeanFieldModel zero(int n, int m, const MarkovGenerator& generator);
};

/// The two-channel system produced by the orthogonal decomposition: channel 2
/// carries the chain-conditional mean (a switched linear ODE), channel 1 the
/// fluctuation around it (a switched diffusion fed by channel 2 through the
/// diffusion coefficients). All solvers consume this form.
struct DecomposedModel {
  int n = 0;
  int m = 0;
  MarkovGenerator generator;

  SwitchedMatrix A1, A2, C1, C2;  // n x n
  SwitchedMatrix B1, B2, D1, D2;  // n x m
  SwitchedMatrix Q1, Q2;          // n x n, symmetric
  SwitchedMatrix S1, S2;          // m x n
  SwitchedMatrix R1, R2;          // m x m, symmetric

  ExpDecaySignal q1, q2, b1, b2, sigma1, sigma2;  // R^n
  ExpDecaySignal r1, r2;                          // R^m

  FeedbackLaw initFeedback;
  bool hasInitFeedback = false;

  static DecomposedModel zero(int n, int m, const MarkovGenerator& generator);

  /// Per-channel accessors, channel in {1, 2}.
  const SwitchedMatrix& Ai(int channel) const { return channel == 1 ? A1 : A2; }
  const SwitchedMatrix& Bi(int channel) const { return channel == 1 ? B1 : B2; }
  const SwitchedMatrix& Ci(int channel) const { return channel == 1 ? C1 : C2; }
  const SwitchedMatrix& Di(int channel) const { return channel == 1 ? D1 : D2; }
  const SwitchedMatrix& Qi(int channel) const { return channel == 1 ? Q1 : Q2; }
  const SwitchedMatrix& Si(int channel) const { return channel == 1 ? S1 : S2; }
  const SwitchedMatrix& Ri(int channel) const { return channel == 1 ? R1 : R2; }
  const ExpDecaySignal& qi(int channel) const { return channel == 1 ? q1 : q2; }
  const ExpDecaySignal& ri(int channel) const { return channel == 1 ? r1 : r2; }
  const ExpDecaySignal& bi(int channel) const { return channel == 1 ? b1 : b2; }
};

/// Collects every constraint violation in `raw`; empty means valid.
std::vector<std::string> validationIssues(const MeanFieldModel& raw);

/// Returns a validated copy (weights symmetrized when the asymmetry is below
/// 1e-10); throws ValidationError listing every violation otherwise.
MeanFieldModel validateModel(const MeanFieldModel& raw);

/// Orthogonal decomposition into the two channels: coefficient rule
/// Y1 = Y, Y2 = Y + Ybar for Y in {A,B,C,D,Q,S,R}. Signals in the supported
/// class are chain-adapted, so they land entirely in channel 2.
DecomposedModel decompose(const MeanFieldModel& model);

/// Closed-loop reparametrization u_i = hatTheta_i x_i + v_i: absorbs the gains
/// into the coefficients and cost weights, leaving B, D, R and r unchanged.
DecomposedModel feedbackShift(const DecomposedModel& dm, const FeedbackLaw& hat);

}  // namespace mflq
