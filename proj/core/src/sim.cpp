#include "mflq/sim.hpp"

#include <cmath>
#include <thread>
#include <unsupported/Eigen/MatrixFunctions>

#include "mflq/linalg.hpp"
#include "mflq/rng.hpp"

namespace mflq {

namespace {

double pairwiseSum(const double* data, size_t count) {
  if (count <= 8) {
    double acc = 0.0;
    for (size_t i = 0; i < count; ++i) acc += data[i];
    return acc;
  }
  const size_t half = count / 2;
  return pairwiseSum(data, half) + pairwiseSum(data + half, count - half);
}

double signalMinKappa(const ExpDecaySignal& sig, double fallback) {
  double least = fallback;
  for (const auto& c : sig.components()) least = std::min(least, c.kappa);
  return least;
}

/// Forcing data for the exact channel-2 step in one regime: the augmented
/// generator [[Ahat2, f_1..f_K], [0, -diag(kappa)]] whose exponential advances
/// state and exponential forcings together.
struct Channel2Stepper {
  std::vector<double> kappas;
  std::vector<Eigen::MatrixXd> augmented;  // per regime
  std::vector<Eigen::MatrixXd> cachedExp;  // per regime, step dt
  double cachedH = -1.0;
  int n = 0;

  void build(const DecomposedModel& dm, const SwitchedMatrix& Ahat2,
             const ExpDecaySignal& forcing, double dt) {
    n = dm.n;
    const int m0 = dm.generator.m0;
    for (const auto& c : forcing.components()) kappas.push_back(c.kappa);
    const int K = static_cast<int>(kappas.size());
    augmented.resize(m0);
    for (int r = 0; r < m0; ++r) {
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + K, n + K);
      M.topLeftCorner(n, n) = Ahat2(r);
      for (int j = 0; j < K; ++j) {
        M.block(0, n + j, n, 1) = forcing.components()[j].h[r];
        M(n + j, n + j) = -kappas[j];
      }
      augmented[r] = std::move(M);
    }
    cachedExp.resize(m0);
    for (int r = 0; r < m0; ++r) cachedExp[r] = (augmented[r] * dt).exp();
    cachedH = dt;
  }

  void advance(Eigen::VectorXd& x2, int regime, double t, double h) const {
    const Eigen::MatrixXd& E = (std::abs(h - cachedH) < 1e-15)
                                   ? cachedExp[regime]
                                   : Eigen::MatrixXd((augmented[regime] * h).exp());
    Eigen::VectorXd out = E.topLeftCorner(n, n) * x2;
    for (size_t j = 0; j < kappas.size(); ++j) {
      out += E.block(0, n + static_cast<int>(j), n, 1) * std::exp(-kappas[j] * t);
    }
    x2 = std::move(out);
  }
};

/// All per-run precomputation shared across paths.
struct RunData {
  const DecomposedModel* dm = nullptr;
  SwitchedMatrix Ahat1, Chat1, Chat2, Ahat2;
  Channel2Stepper stepper;

  // Channel-1 drift and diffusion forcings split into the deterministic part
  // and the Brownian-modulated probe part (multiplied by z at run time).
  ExpDecaySignal drift1Base, drift1Probe;
  ExpDecaySignal diffBase, diffProbe;
  // Control offsets entering the cost (and the controls themselves).
  ExpDecaySignal u1Base, u1Probe, u2Base;

  bool hasProbe1 = false;
  double tAct = 0.0;

  double T = 0.0;
  double dt = 0.0;
  double noiseDt = 0.0;
  int noiseStepsPerDt = 1;
  double delta = 0.0;
};

double costIntegrand(const RunData& run, int regime, const Eigen::VectorXd& x1,
                     const Eigen::VectorXd& x2, const Eigen::VectorXd& u1,
                     const Eigen::VectorXd& u2, double t) {
  const DecomposedModel& dm = *run.dm;
  double c = x1.dot(dm.Q1(regime) * x1) + 2.0 * u1.dot(dm.S1(regime) * x1) +
             u1.dot(dm.R1(regime) * u1) + x2.dot(dm.Q2(regime) * x2) +
             2.0 * u2.dot(dm.S2(regime) * x2) + u2.dot(dm.R2(regime) * u2);
  if (!dm.q1.isZero()) c += 2.0 * dm.q1.eval(t, regime).dot(x1);
  if (!dm.q2.isZero()) c += 2.0 * dm.q2.eval(t, regime).dot(x2);
  if (!dm.r1.isZero()) c += 2.0 * dm.r1.eval(t, regime).dot(u1);
  if (!dm.r2.isZero()) c += 2.0 * dm.r2.eval(t, regime).dot(u2);
  if (run.delta > 0.0) c += run.delta * (u1.squaredNorm() + u2.squaredNorm());
  return c;
}

struct PathOutputs {
  double cost = 0.0;
  std::vector<PathSample> samples;
  Eigen::VectorXd x1Recorded, x2Recorded;
  bool recorded = false;
};

PathOutputs simulateOnePath(const RunData& run, const SimConfig& cfg,
                            const FeedbackLaw& law, int pathId) {
  const DecomposedModel& dm = *run.dm;
  const int n = dm.n;
  const int m = dm.m;
  const ChainPath chain = simulateChain(dm.generator, cfg.startRegime, 0.0, run.T,
                                        cfg.seed, static_cast<std::uint64_t>(pathId));
  CounterRng rngW(cfg.seed, static_cast<std::uint64_t>(pathId), /*substream=*/1);

  Eigen::VectorXd x1 = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd x2 = cfg.x2.size() == n ? cfg.x2 : Eigen::VectorXd::Zero(n);

  PathOutputs out;
  const bool collectSamples = pathId < cfg.samplePaths;
  const bool record = cfg.recordStateAt >= 0.0;

  double t = 0.0;
  long uniformIdx = 0;
  size_t jumpIdx = 1;
  double sumW = 0.0;
  double z = 0.0;
  bool zActive = false;
  double cost = 0.0;
  long stepCounter = 0;

  auto controlAt = [&](double time, int regime, const Eigen::VectorXd& s1,
                       const Eigen::VectorXd& s2, Eigen::VectorXd& u1,
                       Eigen::VectorXd& u2) {
    u1 = law.Theta1(regime) * s1;
    if (!run.u1Base.isZero()) u1 += run.u1Base.eval(time, regime);
    if (run.hasProbe1 && zActive) u1 += z * run.u1Probe.eval(time, regime);
    u2 = law.Theta2(regime) * s2;
    if (!run.u2Base.isZero()) u2 += run.u2Base.eval(time, regime);
  };

  Eigen::VectorXd u1(m), u2(m);
  while (t < run.T - 1e-12) {
    const int regime = chain.states[jumpIdx - 1];
    const double tNextUniform = static_cast<double>(uniformIdx + 1) * run.dt;
    const double tNextJump =
        jumpIdx < chain.jumpTimes.size() ? chain.jumpTimes[jumpIdx] : run.T;
    const double tb = std::min({tNextUniform, tNextJump, run.T});
    const double h = tb - t;

    controlAt(t, regime, x1, x2, u1, u2);
    const double fa = costIntegrand(run, regime, x1, x2, u1, u2, t);
    if (collectSamples && stepCounter % cfg.sampleStride == 0) {
      out.samples.push_back({pathId, t, regime, x1, x2, u1, u2});
    }

    // Channel-1 Euler-Maruyama with channel-2 and signal feeds in the noise.
    Eigen::VectorXd drift = run.Ahat1(regime) * x1;
    if (!run.drift1Base.isZero()) drift += run.drift1Base.eval(t, regime);
    if (run.hasProbe1 && zActive && !run.drift1Probe.isZero()) {
      drift += z * run.drift1Probe.eval(t, regime);
    }
    Eigen::VectorXd diffusion = run.Chat1(regime) * x1 + run.Chat2(regime) * x2;
    if (!run.diffBase.isZero()) diffusion += run.diffBase.eval(t, regime);
    if (run.hasProbe1 && zActive && !run.diffProbe.isZero()) {
      diffusion += z * run.diffProbe.eval(t, regime);
    }

    double dW = 0.0;
    if (run.noiseStepsPerDt == 1 || std::abs(h - run.dt) > 1e-15) {
      dW = std::sqrt(h) * rngW.normal();
    } else {
      const double sub = std::sqrt(run.noiseDt);
      for (int j = 0; j < run.noiseStepsPerDt; ++j) dW += sub * rngW.normal();
    }
    x1 += h * drift + dW * diffusion;
    run.stepper.advance(x2, regime, t, h);

    sumW += dW;
    t = tb;
    ++stepCounter;
    if (run.hasProbe1 && !zActive && t >= run.tAct - 1e-12) {
      z = sumW / std::sqrt(run.tAct);
      zActive = true;
    }
    if (record && !out.recorded && t >= cfg.recordStateAt) {
      out.x1Recorded = x1;
      out.x2Recorded = x2;
      out.recorded = true;
    }

    controlAt(t, regime, x1, x2, u1, u2);
    const double fb = costIntegrand(run, regime, x1, x2, u1, u2, t);
    cost += 0.5 * h * (fa + fb);

    if (std::abs(tb - tNextUniform) < 1e-12 * (1.0 + tb)) ++uniformIdx;
    if (jumpIdx < chain.jumpTimes.size() &&
        std::abs(tb - tNextJump) < 1e-12 * (1.0 + tb)) {
      ++jumpIdx;
    }
  }
  out.cost = cost;
  return out;
}

}  // namespace

double autoHorizon(const DecomposedModel& dm, const FeedbackLaw& law, const SimConfig& cfg,
                   double abscissa) {
  if (abscissa >= 0.0) {
    throw SolverError("unstable_closed_loop",
                      "cannot auto-size the horizon: closed loop is not mean-square stable");
  }
  double rate = -abscissa;
  double signalScale = 0.0;
  for (const ExpDecaySignal* sig : {&dm.b2, &dm.sigma2, &dm.q2, &dm.r2, &law.offset1,
                                    &law.offset2}) {
    if (sig->isZero()) continue;
    rate = std::min(rate, 2.0 * signalMinKappa(*sig, rate));
    signalScale = std::max(signalScale, sig->maxNorm());
  }
  const double x2Scale = cfg.x2.size() > 0 ? cfg.x2.squaredNorm() : 0.0;
  const double scale = std::max(1.0, x2Scale + signalScale * signalScale);
  return std::max(1.0, std::log(scale / cfg.tailTol) / rate);
}

PathEnsemble simulatePaths(const DecomposedModel& dm, const FeedbackLaw& law,
                           const SimConfig& cfg, const ProbeDirection* probe,
                           double eps) {
  if (cfg.dt <= 0.0) throw std::invalid_argument("simulatePaths: dt must be positive");
  if (cfg.nPaths < 1) throw std::invalid_argument("simulatePaths: nPaths must be >= 1");

  RunData run;
  run.dm = &dm;
  run.Ahat1 = closedLoopA(dm, law, 1);
  run.Ahat2 = closedLoopA(dm, law, 2);
  run.Chat1 = closedLoopC(dm, law, 1);
  run.Chat2 = closedLoopC(dm, law, 2);
  run.dt = cfg.dt;
  run.delta = cfg.delta;

  const double maxA = std::max(run.Ahat1.maxNorm(), run.Ahat2.maxNorm());
  if (maxA * cfg.dt > 0.1) {
    throw std::invalid_argument(
        "simulatePaths: step rejected, ||A + B Theta|| * dt exceeds 0.1");
  }

  const double abscissa = momentAbscissa(dm, law);
  run.T = cfg.T > 0.0 ? cfg.T : autoHorizon(dm, law, cfg, abscissa);

  run.noiseDt = cfg.noiseDt > 0.0 ? cfg.noiseDt : cfg.dt;
  const double ratio = cfg.dt / run.noiseDt;
  run.noiseStepsPerDt = static_cast<int>(std::llround(ratio));
  if (run.noiseStepsPerDt < 1 || std::abs(ratio - run.noiseStepsPerDt) > 1e-9) {
    throw std::invalid_argument("simulatePaths: dt must be an integer multiple of noiseDt");
  }
  if (run.noiseStepsPerDt > 1 && dm.generator.lambda.cwiseAbs().maxCoeff() > 0.0) {
    throw std::invalid_argument(
        "simulatePaths: sub-step noise requires a jump-free chain (refinement studies)");
  }

  ExpDecaySignal v2scaled, v1scaled;
  if (probe != nullptr && eps != 0.0) {
    v2scaled = probe->v2.scaled(eps);
    v1scaled = probe->v1.scaled(eps);
  }
  run.u1Base = law.offset1;
  run.u1Probe = v1scaled;
  run.u2Base = law.offset2 + v2scaled;
  run.hasProbe1 = !v1scaled.isZero();
  if (run.hasProbe1) {
    const double t0 = std::max(probe->v1ActivationTime, cfg.dt);
    run.tAct = std::ceil(t0 / cfg.dt - 1e-12) * cfg.dt;
  }

  run.drift1Base = run.u1Base.mapped(dm.B1) + dm.b1;
  run.drift1Probe = run.u1Probe.mapped(dm.B1);
  run.diffBase = run.u1Base.mapped(dm.D1) + run.u2Base.mapped(dm.D2) + dm.sigma1 +
                 dm.sigma2;
  run.diffProbe = run.u1Probe.mapped(dm.D1);

  const ExpDecaySignal forcing2 = run.u2Base.mapped(dm.B2) + dm.b2;
  run.stepper.build(dm, run.Ahat2, forcing2, cfg.dt);

  PathEnsemble ensemble;
  ensemble.T = run.T;
  ensemble.dt = cfg.dt;
  ensemble.seed = cfg.seed;
  ensemble.pathCosts.resize(cfg.nPaths);
  if (cfg.recordStateAt >= 0.0) {
    ensemble.x1Recorded.resize(cfg.nPaths);
    ensemble.x2Recorded.resize(cfg.nPaths);
  }

  // Rough tail bound: the integrand decays like the moment abscissa once the
  // signals have died out; reported as a diagnostic next to the estimate.
  if (abscissa < 0.0) {
    double weightScale = std::max({dm.Q1.maxNorm(), dm.Q2.maxNorm(), dm.R1.maxNorm(),
                                   dm.R2.maxNorm(), dm.S1.maxNorm(), dm.S2.maxNorm()});
    const double gainScale = 1.0 + std::max(law.Theta1.maxNorm(), law.Theta2.maxNorm());
    const double x2Scale = std::max(1.0, cfg.x2.size() > 0 ? cfg.x2.squaredNorm() : 0.0);
    ensemble.truncationBound = weightScale * gainScale * gainScale * x2Scale *
                               std::exp(abscissa * run.T) / (-abscissa);
  } else {
    ensemble.truncationBound = std::numeric_limits<double>::infinity();
  }

  const int threads = std::max(1, cfg.threads);
  std::vector<std::vector<PathSample>> samplesPerPath(
      std::min(cfg.samplePaths, cfg.nPaths));

  auto worker = [&](int begin, int end) {
    for (int pathId = begin; pathId < end; ++pathId) {
      PathOutputs out = simulateOnePath(run, cfg, law, pathId);
      ensemble.pathCosts[pathId] = out.cost;
      if (pathId < cfg.samplePaths) samplesPerPath[pathId] = std::move(out.samples);
      if (cfg.recordStateAt >= 0.0 && out.recorded) {
        ensemble.x1Recorded[pathId] = std::move(out.x1Recorded);
        ensemble.x2Recorded[pathId] = std::move(out.x2Recorded);
      }
    }
  };

  if (threads == 1) {
    worker(0, cfg.nPaths);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (cfg.nPaths + threads - 1) / threads;
    for (int k = 0; k < threads; ++k) {
      const int begin = k * chunk;
      const int end = std::min(cfg.nPaths, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  for (auto& samples : samplesPerPath) {
    ensemble.samples.insert(ensemble.samples.end(), samples.begin(), samples.end());
  }
  return ensemble;
}

CostEstimate estimateCost(const PathEnsemble& ensemble) {
  CostEstimate est;
  est.nPaths = static_cast<int>(ensemble.pathCosts.size());
  est.truncationBound = ensemble.truncationBound;
  est.T = ensemble.T;
  est.dt = ensemble.dt;
  if (est.nPaths == 0) return est;

  const double total = pairwiseSum(ensemble.pathCosts.data(), ensemble.pathCosts.size());
  est.mean = total / est.nPaths;
  if (est.nPaths > 1) {
    std::vector<double> sq(ensemble.pathCosts.size());
    for (size_t i = 0; i < sq.size(); ++i) {
      const double d = ensemble.pathCosts[i] - est.mean;
      sq[i] = d * d;
    }
    const double variance = pairwiseSum(sq.data(), sq.size()) / (est.nPaths - 1);
    est.stderr_ = std::sqrt(variance / est.nPaths);
  }
  return est;
}

double probeDirectionNormSq(const DecomposedModel& dm, const ProbeDirection& direction,
                            const SimConfig& cfg) {
  const MarkovGenerator& gen = dm.generator;
  double normSq = 0.0;
  for (const auto& cx : direction.v2.components()) {
    for (const auto& cy : direction.v2.components()) {
      Eigen::VectorXd g(gen.m0);
      for (int r = 0; r < gen.m0; ++r) g(r) = cx.h[r].dot(cy.h[r]);
      normSq += chainResolvent(gen, cx.kappa + cy.kappa, g)(cfg.startRegime);
    }
  }
  if (!direction.v1.isZero()) {
    const double t0 = std::max(direction.v1ActivationTime, cfg.dt);
    const double tAct = std::ceil(t0 / cfg.dt - 1e-12) * cfg.dt;
    for (const auto& cx : direction.v1.components()) {
      for (const auto& cy : direction.v1.components()) {
        Eigen::VectorXd g(gen.m0);
        for (int r = 0; r < gen.m0; ++r) g(r) = cx.h[r].dot(cy.h[r]);
        const double a = cx.kappa + cy.kappa;
        // E int_{tAct}^inf e^{-a t} g(alpha(t)) dt = e^{(Lambda - aI) tAct} (aI-Lambda)^{-1} g.
        const Eigen::MatrixXd weight =
            ((gen.lambda - a * Eigen::MatrixXd::Identity(gen.m0, gen.m0)) * tAct).exp();
        normSq += (weight * chainResolvent(gen, a, g))(cfg.startRegime);
      }
    }
  }
  return normSq;
}

ConvexityEstimate convexityProbe(const DecomposedModel& dm, const FeedbackLaw& base,
                                 const ProbeDirection& direction, double eps,
                                 const SimConfig& cfg) {
  if (eps <= 0.0) throw std::invalid_argument("convexityProbe: eps must be positive");
  const PathEnsemble plus = simulatePaths(dm, base, cfg, &direction, eps);
  const PathEnsemble center = simulatePaths(dm, base, cfg, nullptr, 0.0);
  const PathEnsemble minus = simulatePaths(dm, base, cfg, &direction, -eps);

  const size_t count = center.pathCosts.size();
  std::vector<double> secondDiff(count);
  for (size_t i = 0; i < count; ++i) {
    secondDiff[i] = (plus.pathCosts[i] - 2.0 * center.pathCosts[i] + minus.pathCosts[i]) /
                    (2.0 * eps * eps);
  }

  ConvexityEstimate est;
  est.eps = eps;
  est.coefficient = pairwiseSum(secondDiff.data(), count) / static_cast<double>(count);
  if (count > 1) {
    std::vector<double> sq(count);
    for (size_t i = 0; i < count; ++i) {
      const double d = secondDiff[i] - est.coefficient;
      sq[i] = d * d;
    }
    const double variance =
        pairwiseSum(sq.data(), count) / static_cast<double>(count - 1);
    est.stderr_ = std::sqrt(variance / static_cast<double>(count));
  }
  est.directionNormSq = probeDirectionNormSq(dm, direction, cfg);
  return est;
}

std::pair<SwitchedMatrix, SwitchedMatrix> finiteHorizonOracle(
    const DecomposedModel& dm, double delta, double T, double dt,
    const FiniteHorizonOptions& opts) {
  if (T <= 0.0 || dt <= 0.0) {
    throw std::invalid_argument("finiteHorizonOracle: need T > 0 and dt > 0");
  }
  const int m0 = dm.generator.m0;
  const int n = dm.n;

  // dP/dtau = rhs(P) in reversed time tau = T - t, P(tau = 0) = 0.
  auto flow = [&](const SwitchedMatrix& P1, const SwitchedMatrix& P2, double tau,
                  SwitchedMatrix& dP1, SwitchedMatrix& dP2) {
    const SwitchedMatrix lambdaP1 = lambdaMap(P1, dm.generator);
    const SwitchedMatrix lambdaP2 = lambdaMap(P2, dm.generator);
    std::vector<Eigen::MatrixXd> out1(m0), out2(m0);
    for (int channel = 1; channel <= 2; ++channel) {
      const SwitchedMatrix& Pi = channel == 1 ? P1 : P2;
      const SwitchedMatrix& lambdaPi = channel == 1 ? lambdaP1 : lambdaP2;
      for (int r = 0; r < m0; ++r) {
        Eigen::MatrixXd G = gainDenominator(dm, P1, channel, r);
        G.diagonal().array() += delta;
        if (minSymEigenvalue(G) <= 0.0) {
          throw SolverError("oracle_indefinite",
                            "R + D'P1D + delta I lost definiteness at tau = " +
                                std::to_string(tau));
        }
        const Eigen::MatrixXd H = gainNumerator(dm, P1, Pi, channel, r);
        const Eigen::MatrixXd& A = dm.Ai(channel)(r);
        const Eigen::MatrixXd& C = dm.Ci(channel)(r);
        Eigen::MatrixXd d = lambdaPi(r) + Pi(r) * A + A.transpose() * Pi(r) +
                            C.transpose() * P1(r) * C + dm.Qi(channel)(r) -
                            H.transpose() * G.ldlt().solve(H);
        (channel == 1 ? out1 : out2)[r] = 0.5 * (d + d.transpose());
      }
    }
    dP1 = SwitchedMatrix(std::move(out1));
    dP2 = SwitchedMatrix(std::move(out2));
  };

  SwitchedMatrix P1 = SwitchedMatrix::zero(m0, n, n);
  SwitchedMatrix P2 = SwitchedMatrix::zero(m0, n, n);
  const long steps = static_cast<long>(std::ceil(T / dt - 1e-12));
  double tau = 0.0;
  SwitchedMatrix k1a, k1b, k2a, k2b, k3a, k3b, k4a, k4b;
  for (long s = 0; s < steps; ++s) {
    const double h = std::min(dt, T - tau);
    flow(P1, P2, tau, k1a, k1b);
    flow(P1 + k1a * (0.5 * h), P2 + k1b * (0.5 * h), tau + 0.5 * h, k2a, k2b);
    flow(P1 + k2a * (0.5 * h), P2 + k2b * (0.5 * h), tau + 0.5 * h, k3a, k3b);
    flow(P1 + k3a * h, P2 + k3b * h, tau + h, k4a, k4b);
    P1 = P1 + (k1a + k2a * 2.0 + k3a * 2.0 + k4a) * (h / 6.0);
    P2 = P2 + (k1b + k2b * 2.0 + k3b * 2.0 + k4b) * (h / 6.0);
    tau += h;
    if (std::max(P1.maxNorm(), P2.maxNorm()) > opts.escapeNorm) {
      throw SolverError("finite_time_escape",
                        "backward Riccati flow escaped at tau = " + std::to_string(tau));
    }
  }
  return {std::move(P1), std::move(P2)};
}

}  // namespace mflq
