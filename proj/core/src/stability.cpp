#include "mflq/stability.hpp"

#include <cmath>

#include "coupled_lyapunov.hpp"
#include "mflq/chain.hpp"
#include "mflq/linalg.hpp"

namespace mflq {

namespace {

SwitchedMatrix withGain(const SwitchedMatrix& base, const SwitchedMatrix& input,
                        const SwitchedMatrix& gain) {
  std::vector<Eigen::MatrixXd> out(base.regimes());
  for (int r = 0; r < base.regimes(); ++r) out[r] = base(r) + input(r) * gain(r);
  return SwitchedMatrix(std::move(out));
}

/// Forward coupling (sum_j lambda_ji Y(j)): adjoint of the lambda map.
SwitchedMatrix lambdaMapTransposed(const SwitchedMatrix& sigma,
                                   const MarkovGenerator& gen) {
  std::vector<Eigen::MatrixXd> out(gen.m0);
  for (int i = 0; i < gen.m0; ++i) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(sigma.rows(), sigma.cols());
    for (int j = 0; j < gen.m0; ++j) acc += gen.lambda(j, i) * sigma(j);
    out[i] = std::move(acc);
  }
  return SwitchedMatrix(std::move(out));
}

}  // namespace

SwitchedMatrix closedLoopA(const DecomposedModel& dm, const FeedbackLaw& law,
                           int channel) {
  return withGain(dm.Ai(channel), dm.Bi(channel),
                  channel == 1 ? law.Theta1 : law.Theta2);
}

SwitchedMatrix closedLoopC(const DecomposedModel& dm, const FeedbackLaw& law,
                           int channel) {
  return withGain(dm.Ci(channel), dm.Di(channel),
                  channel == 1 ? law.Theta1 : law.Theta2);
}

double momentAbscissa(const DecomposedModel& dm, const FeedbackLaw& law) {
  if (law.Theta1.rows() != dm.m || law.Theta1.cols() != dm.n ||
      law.Theta1.regimes() != dm.generator.m0) {
    throw std::invalid_argument("momentAbscissa: gain shape mismatch");
  }
  const SwitchedMatrix Ahat1 = closedLoopA(dm, law, 1);
  const SwitchedMatrix Ahat2 = closedLoopA(dm, law, 2);
  const SwitchedMatrix Chat1 = closedLoopC(dm, law, 1);
  const int m0 = dm.generator.m0;
  SymStack stack(m0, dm.n);

  // Second-moment flow of the chain-adapted channel (no diffusion of its own).
  const Eigen::MatrixXd gen2 = stack.buildOperator([&](const SwitchedMatrix& Y) {
    std::vector<Eigen::MatrixXd> out(m0);
    for (int r = 0; r < m0; ++r) {
      out[r] = Ahat2(r) * Y(r) + Y(r) * Ahat2(r).transpose();
    }
    SwitchedMatrix drift{std::move(out)};
    return drift + lambdaMapTransposed(Y, dm.generator);
  });
  // Fluctuation channel; the feed from channel 2 through the diffusion is a
  // source term, so it does not enter this block's spectrum.
  const Eigen::MatrixXd gen1 = stack.buildOperator([&](const SwitchedMatrix& Y) {
    std::vector<Eigen::MatrixXd> out(m0);
    for (int r = 0; r < m0; ++r) {
      out[r] = Ahat1(r) * Y(r) + Y(r) * Ahat1(r).transpose() +
               Chat1(r) * Y(r) * Chat1(r).transpose();
    }
    SwitchedMatrix drift{std::move(out)};
    return drift + lambdaMapTransposed(Y, dm.generator);
  });

  return std::max(maxRealEigenvalue(gen1), maxRealEigenvalue(gen2));
}

DissipativityResult dissipativityCertificate(const DecomposedModel& dm,
                                             const FeedbackLaw& law,
                                             const StabilityOptions& opts) {
  const int m0 = dm.generator.m0;
  const SwitchedMatrix Ahat1 = closedLoopA(dm, law, 1);
  const SwitchedMatrix Ahat2 = closedLoopA(dm, law, 2);
  const SwitchedMatrix Chat1 = closedLoopC(dm, law, 1);
  const SwitchedMatrix Chat2 = closedLoopC(dm, law, 2);

  DissipativityResult result;
  internal::CoupledLyapunov solver(dm, Ahat1, Ahat2, Chat1);
  if (!solver.invertible()) {
    result.marginalSolve = true;
    return result;
  }

  const SwitchedMatrix negIdentity =
      SwitchedMatrix::constant(m0, -Eigen::MatrixXd::Identity(dm.n, dm.n));
  result.P1 = solver.solveChannel1(negIdentity);

  std::vector<Eigen::MatrixXd> rhs2(m0);
  for (int r = 0; r < m0; ++r) {
    rhs2[r] = -Eigen::MatrixXd::Identity(dm.n, dm.n) -
              Chat2(r).transpose() * result.P1(r) * Chat2(r);
  }
  result.P2 = solver.solveChannel2(SwitchedMatrix(std::move(rhs2)));

  result.pdMargin = std::min(minSymEigenvalue(result.P1), minSymEigenvalue(result.P2));
  result.success = result.pdMargin > opts.tolPd;
  return result;
}

StabilityCertificate isStabilizer(const DecomposedModel& dm, const FeedbackLaw& law,
                                  const StabilityOptions& opts) {
  StabilityCertificate cert;
  cert.abscissa = momentAbscissa(dm, law);
  cert.marginal = std::abs(cert.abscissa) <= opts.tolAbscissa;
  cert.isStable = cert.abscissa < -opts.tolAbscissa;
  if (cert.isStable) {
    DissipativityResult diss = dissipativityCertificate(dm, law, opts);
    if (diss.success) {
      cert.hasLyapunov = true;
      cert.lyapunovP1 = std::move(diss.P1);
      cert.lyapunovP2 = std::move(diss.P2);
      cert.pdMargin = diss.pdMargin;
    }
  }
  return cert;
}

}  // namespace mflq
