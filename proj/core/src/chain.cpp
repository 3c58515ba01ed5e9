#include "mflq/chain.hpp"

#include <cmath>
#include <stdexcept>

#include "mflq/rng.hpp"

namespace mflq {

int ChainPath::regimeAt(double t) const {
  if (jumpTimes.empty()) throw std::logic_error("ChainPath: empty path");
  // Last jump time <= t.
  int lo = 0;
  int hi = static_cast<int>(jumpTimes.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (jumpTimes[mid] <= t) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return states[lo];
}

double ChainPath::occupationTime(int regime) const {
  double total = 0.0;
  for (size_t k = 0; k < states.size(); ++k) {
    const double segEnd = (k + 1 < jumpTimes.size()) ? jumpTimes[k + 1] : horizon;
    if (states[k] == regime) total += segEnd - jumpTimes[k];
  }
  return total;
}

int ChainPath::jumpCount(int from, int to) const {
  int count = 0;
  for (size_t k = 0; k + 1 < states.size(); ++k) {
    if (states[k] == from && states[k + 1] == to) ++count;
  }
  return count;
}

SwitchedMatrix lambdaMap(const SwitchedMatrix& sigma, const MarkovGenerator& gen) {
  if (sigma.regimes() != gen.m0) {
    throw std::invalid_argument("lambdaMap: regime count mismatch");
  }
  std::vector<Eigen::MatrixXd> out(gen.m0);
  for (int i = 0; i < gen.m0; ++i) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(sigma.rows(), sigma.cols());
    for (int j = 0; j < gen.m0; ++j) acc += gen.lambda(i, j) * sigma(j);
    out[i] = std::move(acc);
  }
  return SwitchedMatrix(std::move(out));
}

ChainPath simulateChain(const MarkovGenerator& gen, int start, double s, double T,
                        std::uint64_t seed, std::uint64_t stream) {
  if (T <= s) throw std::invalid_argument("simulateChain: need T > s");
  if (start < 0 || start >= gen.m0) throw std::invalid_argument("simulateChain: bad start regime");

  CounterRng rng(seed, stream, /*substream=*/0);
  ChainPath path;
  path.horizon = T;
  path.jumpTimes.push_back(s);
  path.states.push_back(start);

  double t = s;
  int regime = start;
  while (true) {
    const double rate = -gen.lambda(regime, regime);
    if (rate <= 0.0) break;  // absorbing regime, hold to T
    t += rng.exponential(rate);
    if (t >= T) break;
    // Next regime with probability lambda(regime, j) / rate.
    const double u = rng.uniform() * rate;
    double acc = 0.0;
    int next = regime;
    for (int j = 0; j < gen.m0; ++j) {
      if (j == regime) continue;
      acc += gen.lambda(regime, j);
      if (u <= acc) {
        next = j;
        break;
      }
    }
    if (next == regime) {
      // Numerical edge of the inverse-CDF scan; take the last positive rate.
      for (int j = gen.m0 - 1; j >= 0; --j) {
        if (j != regime && gen.lambda(regime, j) > 0.0) {
          next = j;
          break;
        }
      }
      if (next == regime) break;
    }
    path.jumpTimes.push_back(t);
    path.states.push_back(next);
    regime = next;
  }
  return path;
}

double martingaleValue(const ChainPath& path, const MarkovGenerator& gen, int from,
                       int to) {
  if (from == to) return 0.0;
  return path.jumpCount(from, to) - gen.lambda(from, to) * path.occupationTime(from);
}

MartingaleResidual martingaleResidual(const std::vector<ChainPath>& paths,
                                      const MarkovGenerator& gen) {
  const int m0 = gen.m0;
  MartingaleResidual result;
  result.nPaths = static_cast<int>(paths.size());
  result.mean = Eigen::MatrixXd::Zero(m0, m0);
  result.stderr_ = Eigen::MatrixXd::Zero(m0, m0);
  if (paths.empty()) return result;

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m0, m0);
  Eigen::MatrixXd sumSq = Eigen::MatrixXd::Zero(m0, m0);
  for (const auto& path : paths) {
    for (int i = 0; i < m0; ++i) {
      for (int j = 0; j < m0; ++j) {
        if (i == j) continue;
        const double value = martingaleValue(path, gen, i, j);
        sum(i, j) += value;
        sumSq(i, j) += value * value;
      }
    }
  }
  const double count = static_cast<double>(paths.size());
  result.mean = sum / count;
  if (paths.size() > 1) {
    for (int i = 0; i < m0; ++i) {
      for (int j = 0; j < m0; ++j) {
        if (i == j) continue;
        const double variance =
            std::max(0.0, (sumSq(i, j) - count * result.mean(i, j) * result.mean(i, j)) /
                              (count - 1.0));
        result.stderr_(i, j) = std::sqrt(variance / count);
      }
    }
  }
  return result;
}

}  // namespace mflq
