#pragma once

#include <cstdint>
#include <optional>

#include "mflq/adjoint.hpp"
#include "mflq/chain.hpp"
#include "mflq/riccati.hpp"

namespace mflq {

struct SimConfig {
  double dt = 1e-3;
  double T = 0.0;  // <= 0 requests auto-sizing from the stability certificate
  int nPaths = 10000;
  std::uint64_t seed = 0;
  int startRegime = 0;
  Eigen::VectorXd x2;     // deterministic initial state; channel 1 starts at 0
  double tailTol = 1e-6;  // target for the auto-sized truncation tail
  double delta = 0.0;     // adds delta |u|^2 to the estimated running cost
  int threads = 1;
  /// Brownian increments are drawn at this resolution and summed per step;
  /// 0 means dt. Refinement studies keep it fixed while dt varies so all
  /// levels share one Brownian path (jump-free models only).
  double noiseDt = 0.0;
  /// Record full state samples for the first `samplePaths` paths, every
  /// `sampleStride` mesh points (for CSV dumps).
  int samplePaths = 0;
  int sampleStride = 1;
  /// When set, record X1 and X2 for every path at the first mesh time >= this.
  double recordStateAt = -1.0;
};

struct CostEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  int nPaths = 0;
  double truncationBound = 0.0;
  double T = 0.0;
  double dt = 0.0;
};

/// Deterministic open-loop probe direction added on top of a feedback law:
/// channel 2 receives the exponential signal v2; channel 1 receives
/// v1(t) * W(t_act)/sqrt(t_act) for t >= t_act (adapted and conditionally
/// mean-zero, as channel-1 perturbations must be).
struct ProbeDirection {
  ExpDecaySignal v1;
  ExpDecaySignal v2;
  double v1ActivationTime = 1.0;
};

struct PathSample {
  int pathId = 0;
  double t = 0.0;
  int regime = 0;
  Eigen::VectorXd x1, x2, u1, u2;
};

struct PathEnsemble {
  std::vector<double> pathCosts;
  double T = 0.0;
  double dt = 0.0;
  std::uint64_t seed = 0;
  double truncationBound = 0.0;
  std::vector<PathSample> samples;
  std::vector<Eigen::VectorXd> x1Recorded;  // per path, when recordStateAt is set
  std::vector<Eigen::VectorXd> x2Recorded;
};

/// Simulates the closed-loop two-channel system: exact chain, channel 2 by
/// regime-frozen exponential steps (exact for its linear ODE), channel 1 by
/// Euler-Maruyama on a mesh refined to include the jump times. Deterministic
/// given the seed; paths use independent counter-based streams.
PathEnsemble simulatePaths(const DecomposedModel& dm, const FeedbackLaw& law,
                           const SimConfig& cfg,
                           const ProbeDirection* probe = nullptr, double eps = 0.0);

/// Trapezoidal per-path cost integrals averaged with pairwise summation.
CostEstimate estimateCost(const PathEnsemble& ensemble);

struct ConvexityEstimate {
  double coefficient = 0.0;  // second-difference estimate of the quadratic form
  double stderr_ = 0.0;
  double directionNormSq = 0.0;  // exact L2 norm^2 of the direction
  double eps = 0.0;
};

/// Second central difference [J(u+eps v) - 2 J(u) + J(u-eps v)] / (2 eps^2)
/// under common random numbers; exact in eps up to Monte Carlo noise because
/// the cost is quadratic along any direction.
ConvexityEstimate convexityProbe(const DecomposedModel& dm, const FeedbackLaw& base,
                                 const ProbeDirection& direction, double eps,
                                 const SimConfig& cfg);

/// Exact conditional L2 norm^2 of a probe direction given the start regime.
double probeDirectionNormSq(const DecomposedModel& dm, const ProbeDirection& direction,
                            const SimConfig& cfg);

struct FiniteHorizonOptions {
  double escapeNorm = 1e8;
};

/// Classic fourth-order backward integration of the coupled Riccati flow from
/// P(T) = 0; returns (P1, P2) at time 0. Aborts when R + D'P1D + delta I
/// loses definiteness or the solution escapes in finite time.
std::pair<SwitchedMatrix, SwitchedMatrix> finiteHorizonOracle(
    const DecomposedModel& dm, double delta, double T, double dt,
    const FiniteHorizonOptions& opts = {});

/// Horizon such that e^{abscissa T} scale <= tailTol, given a stability
/// certificate abscissa and the slowest signal decay.
double autoHorizon(const DecomposedModel& dm, const FeedbackLaw& law, const SimConfig& cfg,
                   double abscissa);

}  // namespace mflq
