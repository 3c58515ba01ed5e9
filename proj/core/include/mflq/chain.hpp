#pragma once

#include <cstdint>
#include <vector>

#include "mflq/types.hpp"

namespace mflq {

/// One realized trajectory of the chain on [s, T]: piecewise constant, with
/// jump_times[0] == s and states[k] held on [jump_times[k], jump_times[k+1]).
struct ChainPath {
  std::vector<double> jumpTimes;
  std::vector<int> states;  // 0-based regimes
  double horizon = 0.0;

  int regimeAt(double t) const;
  /// Total time spent in `regime` up to the horizon.
  double occupationTime(int regime) const;
  /// Number of jumps regime `from` -> `to`.
  int jumpCount(int from, int to) const;
};

/// The coupling operator of the switched equations:
/// (lambdaMap Sigma)(i) = sum_j lambda_ij Sigma(j).
SwitchedMatrix lambdaMap(const SwitchedMatrix& sigma, const MarkovGenerator& gen);

/// Exact event-driven simulation: exponential holding times with rate
/// -lambda_ii, next regime j with probability lambda_ij / (-lambda_ii).
/// Deterministic given (seed, stream); an absorbing regime holds to T.
ChainPath simulateChain(const MarkovGenerator& gen, int start, double s, double T,
                        std::uint64_t seed, std::uint64_t stream = 0);

/// Sample mean and standard error of the compensated jump counts
/// M_ij(T) = N_ij(T) - lambda_ij * (occupation time of i) over an ensemble.
/// Means should be statistically zero; used as a chain-simulation diagnostic.
struct MartingaleResidual {
  Eigen::MatrixXd mean;    // m0 x m0, diagonal fixed at 0
  Eigen::MatrixXd stderr_;  // m0 x m0
  int nPaths = 0;
};

MartingaleResidual martingaleResidual(const std::vector<ChainPath>& paths,
                                      const MarkovGenerator& gen);

/// M_ij(T) recomputed for a single path.
double martingaleValue(const ChainPath& path, const MarkovGenerator& gen, int from,
                       int to);

}  // namespace mflq
