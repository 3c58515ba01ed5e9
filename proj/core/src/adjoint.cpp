#include "mflq/adjoint.hpp"

#include <cmath>
#include <map>

#include "mflq/linalg.hpp"

namespace mflq {

namespace {

/// Per-kappa right-hand side of the stacked pibar2 system:
/// rhs(i) = (C2+D2 Th2)(i)' P1(i) sigmabar(i) + P2(i) bbar(i) + qbar(i) + Th2(i)' rbar(i).
struct KappaDriver {
  std::vector<Eigen::VectorXd> rhs;  // one per regime
};

void accumulate(std::map<double, KappaDriver>& drivers, const ExpDecaySignal& sig,
                const std::function<Eigen::VectorXd(const Eigen::VectorXd&, int)>& weight,
                int m0, int n) {
  for (const auto& c : sig.components()) {
    auto& driver = drivers[c.kappa];
    if (driver.rhs.empty()) driver.rhs.assign(m0, Eigen::VectorXd::Zero(n));
    for (int r = 0; r < m0; ++r) driver.rhs[r] += weight(c.h[r], r);
  }
}

}  // namespace

Eigen::VectorXd AdjointSolution::nuJump(double elapsed, int from, int to) const {
  if (pibar2.isZero()) return Eigen::VectorXd();
  return pibar2.eval(elapsed, to) - pibar2.eval(elapsed, from);
}

AdjointSolution solveAdjoint(const DecomposedModel& dm, const RiccatiSolution& sol,
                             const AdjointOptions& opts) {
  if (!dm.q1.isZero() || !dm.r1.isZero() || !dm.b1.isZero() || !dm.sigma1.isZero()) {
    throw SolverError("unsupported_channel1_signals",
                      "channel-1 drivers must vanish in the exponential signal class");
  }

  const int m0 = dm.generator.m0;
  const int n = dm.n;
  AdjointSolution adj;
  adj.pibar1 = ExpDecaySignal::zero();
  adj.etaZero = true;

  FeedbackLaw gains = FeedbackLaw::zero(m0, n, dm.m);
  gains.Theta1 = sol.Theta1;
  gains.Theta2 = sol.Theta2;
  const SwitchedMatrix Ahat2 = closedLoopA(dm, gains, 2);
  const SwitchedMatrix Chat2 = closedLoopC(dm, gains, 2);

  std::map<double, KappaDriver> drivers;
  accumulate(drivers, dm.sigma2,
             [&](const Eigen::VectorXd& h, int r) {
               return Eigen::VectorXd(Chat2(r).transpose() * (sol.P1(r) * h));
             },
             m0, n);
  accumulate(drivers, dm.b2,
             [&](const Eigen::VectorXd& h, int r) {
               return Eigen::VectorXd(sol.P2(r) * h);
             },
             m0, n);
  accumulate(drivers, dm.q2, [&](const Eigen::VectorXd& h, int) { return h; }, m0, n);
  accumulate(drivers, dm.r2,
             [&](const Eigen::VectorXd& h, int r) {
               return Eigen::VectorXd(sol.Theta2(r).transpose() * h);
             },
             m0, n);

  std::vector<ExpComponent> components;
  double worstResidual = 0.0;
  for (const auto& [kappa, driver] : drivers) {
    // Stacked operator M = Lambda (x) I - kappa I + blockdiag(Ahat2(i)').
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(m0 * n, m0 * n);
    Eigen::VectorXd rhs(m0 * n);
    for (int i = 0; i < m0; ++i) {
      for (int j = 0; j < m0; ++j) {
        op.block(i * n, j * n, n, n) =
            dm.generator.lambda(i, j) * Eigen::MatrixXd::Identity(n, n);
      }
      op.block(i * n, i * n, n, n) +=
          Ahat2(i).transpose() - kappa * Eigen::MatrixXd::Identity(n, n);
      rhs.segment(i * n, n) = -driver.rhs[i];
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(op, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double sigmaMax = svd.singularValues()(0);
    const double sigmaMin = svd.singularValues()(svd.singularValues().size() - 1);
    if (sigmaMin <= opts.resonanceTol * std::max(sigmaMax, 1.0)) {
      throw SolverError("resonant_decay_rate",
                        "decay rate coincides with a closed-loop mode of the stacked "
                        "costate system");
    }
    const Eigen::VectorXd stacked = svd.solve(rhs);

    ExpComponent component;
    component.kappa = kappa;
    component.h.resize(m0);
    for (int i = 0; i < m0; ++i) component.h[i] = stacked.segment(i * n, n);
    worstResidual = std::max(worstResidual, (op * stacked - rhs).lpNorm<Eigen::Infinity>());
    components.push_back(std::move(component));
  }

  adj.pibar2 = ExpDecaySignal::fromComponents(std::move(components));
  adj.residual = worstResidual;
  return adj;
}

ExpDecaySignal offsetDriver(const DecomposedModel& dm, const RiccatiSolution& sol,
                            const AdjointSolution& adj, int channel) {
  const int m0 = dm.generator.m0;
  const ExpDecaySignal& pibar = channel == 1 ? adj.pibar1 : adj.pibar2;
  const ExpDecaySignal& sigma = channel == 1 ? dm.sigma1 : dm.sigma2;
  const ExpDecaySignal& r = channel == 1 ? dm.r1 : dm.r2;

  std::vector<Eigen::MatrixXd> bT(m0), dTP1(m0);
  for (int reg = 0; reg < m0; ++reg) {
    bT[reg] = dm.Bi(channel)(reg).transpose();
    dTP1[reg] = dm.Di(channel)(reg).transpose() * sol.P1(reg);
  }
  return pibar.mapped(SwitchedMatrix(std::move(bT))) +
         sigma.mapped(SwitchedMatrix(std::move(dTP1))) + r;
}

RangeConditionReport checkRangeCondition(const DecomposedModel& dm,
                                         const RiccatiSolution& sol,
                                         const AdjointSolution& adj,
                                         const AdjointOptions& opts) {
  const int m0 = dm.generator.m0;
  RangeConditionReport report;
  report.ok.assign(2, std::vector<bool>(m0, true));
  for (int channel = 1; channel <= 2; ++channel) {
    const ExpDecaySignal w = offsetDriver(dm, sol, adj, channel);
    for (int r = 0; r < m0; ++r) {
      const Eigen::MatrixXd G = gainDenominator(dm, sol.P1, channel, r);
      const Eigen::MatrixXd projector = Eigen::MatrixXd::Identity(dm.m, dm.m) -
                                        G * pseudoInverse(G, opts.rankTolFactor);
      for (const auto& c : w.components()) {
        const double residual = (projector * c.h[r]).norm();
        report.worstResidual = std::max(report.worstResidual, residual);
        if (residual > opts.tolRange) {
          report.ok[channel - 1][r] = false;
          report.allOk = false;
        }
      }
    }
  }
  return report;
}

FeedbackLaw optimalOffset(const DecomposedModel& dm, const RiccatiSolution& sol,
                          const AdjointSolution& adj, const AdjointOptions& opts) {
  if (sol.delta <= 0.0) {
    const RangeConditionReport range = checkRangeCondition(dm, sol, adj, opts);
    if (!range.allOk) {
      throw SolverError("range_condition_violated",
                        "offsets at delta = 0 require the range condition");
    }
  }

  const int m0 = dm.generator.m0;
  FeedbackLaw law;
  law.Theta1 = sol.Theta1;
  law.Theta2 = sol.Theta2;
  for (int channel = 1; channel <= 2; ++channel) {
    std::vector<Eigen::MatrixXd> kernel(m0);
    for (int r = 0; r < m0; ++r) {
      Eigen::MatrixXd G = gainDenominator(dm, sol.P1, channel, r);
      if (sol.delta > 0.0) {
        G.diagonal().array() += sol.delta;
        kernel[r] = -G.partialPivLu().solve(Eigen::MatrixXd::Identity(dm.m, dm.m));
      } else {
        kernel[r] = -pseudoInverse(G, opts.rankTolFactor);
      }
    }
    const ExpDecaySignal offset = offsetDriver(dm, sol, adj, channel)
                                      .mapped(SwitchedMatrix(std::move(kernel)));
    (channel == 1 ? law.offset1 : law.offset2) = offset;
  }
  return law;
}

namespace {

/// E[ integral_s^inf <W(alpha) x(t), y(t)> dt | alpha(s) = regime ] for two
/// exponential signals; every component pair contributes through the
/// resolvent at the summed decay rate.
double expQuadIntegral(const MarkovGenerator& gen, int regime, const ExpDecaySignal& x,
                       const ExpDecaySignal& y, const SwitchedMatrix& W) {
  double total = 0.0;
  for (const auto& cx : x.components()) {
    for (const auto& cy : y.components()) {
      Eigen::VectorXd g(gen.m0);
      for (int r = 0; r < gen.m0; ++r) g(r) = cy.h[r].dot(W(r) * cx.h[r]);
      total += chainResolvent(gen, cx.kappa + cy.kappa, g)(regime);
    }
  }
  return total;
}

}  // namespace

double analyticValue(const DecomposedModel& dm, const RiccatiSolution& sol,
                     const AdjointSolution& adj, int regime, const Eigen::VectorXd& x2,
                     const AdjointOptions& opts) {
  if (x2.size() != dm.n) throw std::invalid_argument("analyticValue: x2 has wrong size");
  const int m0 = dm.generator.m0;

  double value = x2.dot(sol.P2(regime) * x2);
  if (!adj.pibar2.isZero()) value += 2.0 * adj.pibar2.eval(0.0, regime).dot(x2);

  // The diffusion carries both channels' signals, so the quadratic signal
  // term pairs with P1 for each channel.
  value += expQuadIntegral(dm.generator, regime, dm.sigma1, dm.sigma1, sol.P1);
  value += expQuadIntegral(dm.generator, regime, dm.sigma2, dm.sigma2, sol.P1);

  const SwitchedMatrix identity =
      SwitchedMatrix::constant(m0, Eigen::MatrixXd::Identity(dm.n, dm.n));
  value += 2.0 * expQuadIntegral(dm.generator, regime, adj.pibar2, dm.b2, identity);
  value += 2.0 * expQuadIntegral(dm.generator, regime, adj.pibar1, dm.b1, identity);

  for (int channel = 1; channel <= 2; ++channel) {
    const ExpDecaySignal w = offsetDriver(dm, sol, adj, channel);
    if (w.isZero()) continue;
    std::vector<Eigen::MatrixXd> kernel(m0);
    for (int r = 0; r < m0; ++r) {
      Eigen::MatrixXd G = gainDenominator(dm, sol.P1, channel, r);
      if (sol.delta > 0.0) {
        G.diagonal().array() += sol.delta;
        kernel[r] = G.partialPivLu().solve(Eigen::MatrixXd::Identity(dm.m, dm.m));
      } else {
        kernel[r] = pseudoInverse(G, opts.rankTolFactor);
      }
    }
    value -= expQuadIntegral(dm.generator, regime, w, w, SwitchedMatrix(std::move(kernel)));
  }
  return value;
}

}  // namespace mflq
