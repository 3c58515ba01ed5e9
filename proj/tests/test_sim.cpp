#include <catch2/catch_amalgamated.hpp>
#include <mflq/sim.hpp>

#include "support/instances.hpp"

using namespace mflq;
using mflq::testing::exampleModel;

namespace {

ExpDecaySignal constantSignal(double kappa, int m0, int dim, double value) {
  std::vector<Eigen::VectorXd> h(m0, Eigen::VectorXd::Constant(dim, value));
  return ExpDecaySignal::single(kappa, std::move(h));
}

FeedbackLaw optimalLaw(const DecomposedModel& dm, RiccatiSolution* solOut = nullptr) {
  const LimitSolveResult limit =
      solveLimitAre(dm, FeedbackLaw::zero(dm.generator.m0, dm.n, dm.m));
  REQUIRE(limit.success);
  if (solOut != nullptr) *solOut = limit.solution;
  const AdjointSolution adj = solveAdjoint(dm, limit.solution);
  return optimalOffset(dm, limit.solution, adj);
}

}  // namespace

TEST_CASE("zero dynamics and zero noise give constant paths") {
  DecomposedModel dm = DecomposedModel::zero(2, 1, MarkovGenerator::single());
  SimConfig cfg;
  cfg.dt = 0.01;
  cfg.T = 1.0;
  cfg.nPaths = 2;
  cfg.x2 = Eigen::VectorXd::Constant(2, 1.5);
  cfg.samplePaths = 1;
  const PathEnsemble ensemble =
      simulatePaths(dm, FeedbackLaw::zero(1, 2, 1), cfg);
  for (const auto& s : ensemble.samples) {
    REQUIRE(s.x2(0) == Catch::Approx(1.5).margin(0.0));
    REQUIRE(s.x1.lpNorm<Eigen::Infinity>() == 0.0);
  }
  REQUIRE(estimateCost(ensemble).mean == Catch::Approx(0.0).margin(0.0));
}

TEST_CASE("example channel 2 follows the exact exponential") {
  const DecomposedModel dm = decompose(exampleModel());
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.T = 5.0;
  cfg.nPaths = 1;
  cfg.x2 = Eigen::VectorXd::Ones(1);
  cfg.samplePaths = 1;
  const PathEnsemble ensemble = simulatePaths(dm, FeedbackLaw::zero(1, 1, 1), cfg);
  REQUIRE_FALSE(ensemble.samples.empty());
  for (const auto& s : ensemble.samples) {
    REQUIRE(s.x2(0) == Catch::Approx(std::exp(-s.t)).margin(1e-12));
  }
}

TEST_CASE("ensembles are deterministic given the seed and thread count") {
  CounterRng rng(61, 0);
  mflq::testing::InstanceOptions opt;
  opt.m0 = 2;
  const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
  const FeedbackLaw law = FeedbackLaw::zero(2, dm.n, dm.m);
  SimConfig cfg;
  cfg.dt = 5e-3;
  cfg.T = 4.0;
  cfg.nPaths = 64;
  cfg.seed = 99;
  cfg.x2 = Eigen::VectorXd::Ones(dm.n);

  const PathEnsemble a = simulatePaths(dm, law, cfg);
  const PathEnsemble b = simulatePaths(dm, law, cfg);
  REQUIRE(a.pathCosts == b.pathCosts);

  cfg.threads = 2;
  const PathEnsemble c = simulatePaths(dm, law, cfg);
  REQUIRE(a.pathCosts == c.pathCosts);

  cfg.seed = 100;
  const PathEnsemble d = simulatePaths(dm, law, cfg);
  REQUIRE(a.pathCosts != d.pathCosts);
}

TEST_CASE("step size rejection guards the scheme") {
  DecomposedModel dm = DecomposedModel::zero(1, 1, MarkovGenerator::single());
  dm.A1(0)(0, 0) = -30.0;
  dm.A2(0)(0, 0) = -30.0;
  SimConfig cfg;
  cfg.dt = 0.01;  // 30 * 0.01 = 0.3 > 0.1
  cfg.T = 1.0;
  cfg.nPaths = 1;
  cfg.x2 = Eigen::VectorXd::Ones(1);
  REQUIRE_THROWS_AS(simulatePaths(dm, FeedbackLaw::zero(1, 1, 1), cfg),
                    std::invalid_argument);
}

TEST_CASE("uncontrolled example cost matches the exact integral") {
  const DecomposedModel dm = decompose(exampleModel());
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.nPaths = 3;  // deterministic: all paths identical
  cfg.x2 = Eigen::VectorXd::Ones(1);
  const PathEnsemble ensemble = simulatePaths(dm, FeedbackLaw::zero(1, 1, 1), cfg);
  const CostEstimate est = estimateCost(ensemble);
  // Integral of e^{-2t} is 1/2; the estimate carries only trapezoid bias and
  // the truncation tail.
  REQUIRE(std::abs(est.mean - 0.5) <= 1e-5);
  REQUIRE(est.stderr_ <= 1e-12);
  REQUIRE(est.truncationBound < 1e-4);
}

TEST_CASE("Monte Carlo agrees with the analytic value, homogeneous switching case") {
  CounterRng rng(62, 0);
  mflq::testing::InstanceOptions opt;
  opt.m0 = 2;
  opt.n = 2;
  opt.diffusionScale = 0.0;  // chain randomness only: channel 1 stays zero
  const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
  RiccatiSolution sol;
  const FeedbackLaw law = optimalLaw(dm, &sol);
  const AdjointSolution adj = solveAdjoint(dm, sol);

  SimConfig cfg;
  cfg.dt = 2e-3;
  cfg.nPaths = 4000;
  cfg.seed = 7;
  cfg.x2 = Eigen::VectorXd::Ones(dm.n);
  cfg.startRegime = 0;
  cfg.threads = 2;
  const CostEstimate est = estimateCost(simulatePaths(dm, law, cfg));
  const double analytic = analyticValue(dm, sol, adj, 0, cfg.x2);
  REQUIRE(std::abs(est.mean - analytic) <= 3.0 * est.stderr_ + 2e-4);
}

TEST_CASE("Monte Carlo arbitrates the signal quadratic term in the value") {
  // Scalar nonhomogeneous case: sigma feeds channel 1 through the common
  // noise, so the value must carry the P1-weighted signal integral
  // P2 x^2 + P1 sigma^2 / (2 kappa), clearly distinct from a P2 pairing.
  MeanFieldModel model = MeanFieldModel::zero(1, 1, MarkovGenerator::single());
  model.A(0)(0, 0) = -1.0;
  model.Bbar(0)(0, 0) = 1.0;
  model.Q(0)(0, 0) = 1.0;
  model.R(0)(0, 0) = 1.0;
  model.sigma = constantSignal(1.0, 1, 1, 0.5);
  const DecomposedModel dm = decompose(validateModel(model));

  RiccatiSolution sol;
  const FeedbackLaw law = optimalLaw(dm, &sol);
  const AdjointSolution adj = solveAdjoint(dm, sol);
  REQUIRE(sol.P2(0)(0, 0) == Catch::Approx(std::sqrt(2.0) - 1.0).margin(1e-9));
  REQUIRE(sol.P1(0)(0, 0) == Catch::Approx(0.5).margin(1e-9));

  const double analytic = analyticValue(dm, sol, adj, 0, Eigen::VectorXd::Ones(1));
  const double p1Pairing = (std::sqrt(2.0) - 1.0) + 0.5 * 0.25 / 2.0;
  REQUIRE(analytic == Catch::Approx(p1Pairing).margin(1e-9));

  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.nPaths = 4000;
  cfg.seed = 11;
  cfg.x2 = Eigen::VectorXd::Ones(1);
  cfg.threads = 2;
  const CostEstimate est = estimateCost(simulatePaths(dm, law, cfg));
  REQUIRE(std::abs(est.mean - analytic) <= 3.0 * est.stderr_ + 5e-4);
}

TEST_CASE("regularized value with offsets matches Monte Carlo") {
  // Nonhomogeneous instance at delta > 0: the simulated cost of the
  // regularized-optimal law (gains plus feedforward offsets), including the
  // delta |u|^2 term, must land on the analytic value.
  CounterRng rng(68, 0);
  mflq::testing::InstanceOptions opt;
  opt.m0 = 2;
  opt.withSignals = true;
  opt.diffusionScale = 0.2;
  const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
  const double delta = 0.5;
  const RiccatiSolution sol =
      solveRegularizedAre(dm, delta, FeedbackLaw::zero(2, dm.n, dm.m));
  const AdjointSolution adj = solveAdjoint(dm, sol);
  const FeedbackLaw law = optimalOffset(dm, sol, adj);

  SimConfig cfg;
  cfg.dt = 2e-3;
  cfg.nPaths = 4000;
  cfg.seed = 21;
  cfg.x2 = Eigen::VectorXd::Ones(dm.n);
  cfg.delta = delta;
  cfg.threads = 2;
  const CostEstimate est = estimateCost(simulatePaths(dm, law, cfg));
  const double analytic = analyticValue(dm, sol, adj, 0, cfg.x2);
  REQUIRE(std::abs(est.mean - analytic) <= 3.0 * est.stderr_ + 2e-3);
}

TEST_CASE("convexity probe on the example has the exact variational coefficient") {
  const DecomposedModel dm = decompose(exampleModel());
  const FeedbackLaw zero = FeedbackLaw::zero(1, 1, 1);
  SimConfig cfg;
  cfg.dt = 1e-3;
  cfg.nPaths = 8;
  cfg.x2 = Eigen::VectorXd::Ones(1);
  cfg.delta = 0.5;

  ProbeDirection dir;
  dir.v2 = constantSignal(2.0, 1, 1, 1.0);  // v(t) = e^{-2t}
  const ConvexityEstimate est = convexityProbe(dm, zero, dir, 0.1, cfg);
  // Variational state (d/dt) xv = -xv + v gives xv = e^{-t} - e^{-2t} and
  // int xv^2 = 1/12; the delta term adds delta ||v||^2 = delta / 4.
  REQUIRE(est.directionNormSq == Catch::Approx(0.25).margin(1e-12));
  REQUIRE(est.coefficient ==
          Catch::Approx(1.0 / 12.0 + 0.5 * 0.25).margin(1e-4));
  REQUIRE(est.coefficient >= cfg.delta * est.directionNormSq - 3.0 * est.stderr_);

  const ConvexityEstimate half = convexityProbe(dm, zero, dir, 0.05, cfg);
  REQUIRE(std::abs(half.coefficient - est.coefficient) <=
          3.0 * (half.stderr_ + est.stderr_) + 1e-9);
}

TEST_CASE("convexity probe covers Brownian-modulated channel-1 directions") {
  CounterRng rng(63, 0);
  mflq::testing::InstanceOptions opt;
  opt.m0 = 2;
  const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
  const FeedbackLaw zero = FeedbackLaw::zero(2, dm.n, dm.m);
  SimConfig cfg;
  cfg.dt = 5e-3;
  cfg.nPaths = 2000;
  cfg.seed = 3;
  cfg.x2 = Eigen::VectorXd::Ones(dm.n);
  cfg.delta = 0.3;
  cfg.threads = 2;

  ProbeDirection dir;
  dir.v1 = constantSignal(0.9, 2, dm.m, 0.8);
  dir.v1ActivationTime = 1.0;
  const ConvexityEstimate est = convexityProbe(dm, zero, dir, 0.1, cfg);
  REQUIRE(est.directionNormSq > 0.0);
  REQUIRE(est.coefficient >= cfg.delta * est.directionNormSq - 3.0 * est.stderr_);
}

TEST_CASE("perturbing the optimal law cannot lower the estimated cost") {
  CounterRng rng(64, 0);
  mflq::testing::InstanceOptions opt;
  opt.m0 = 2;
  const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
  const FeedbackLaw law = optimalLaw(dm);
  SimConfig cfg;
  cfg.dt = 5e-3;
  cfg.nPaths = 2000;
  cfg.seed = 17;
  cfg.x2 = Eigen::VectorXd::Ones(dm.n);
  cfg.threads = 2;

  ProbeDirection dir;
  dir.v2 = constantSignal(1.1, 2, dm.m, 1.0);
  const double eps = 0.2;
  const PathEnsemble perturbed = simulatePaths(dm, law, cfg, &dir, eps);
  const PathEnsemble base = simulatePaths(dm, law, cfg);
  std::vector<double> diff(base.pathCosts.size());
  for (size_t i = 0; i < diff.size(); ++i) {
    diff[i] = perturbed.pathCosts[i] - base.pathCosts[i];
  }
  double mean = 0.0;
  for (double d : diff) mean += d;
  mean /= diff.size();
  double var = 0.0;
  for (double d : diff) var += (d - mean) * (d - mean);
  var /= (diff.size() - 1);
  const double stderr_ = std::sqrt(var / diff.size());
  REQUIRE(mean >= -3.0 * stderr_);
}

TEST_CASE("channel correlation vanishes across the ensemble") {
  CounterRng rng(65, 0);
  mflq::testing::InstanceOptions opt;
  opt.m0 = 2;
  opt.n = 2;
  opt.diffusionScale = 0.5;
  const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
  const FeedbackLaw law = FeedbackLaw::zero(2, dm.n, dm.m);
  SimConfig cfg;
  cfg.dt = 5e-3;
  cfg.nPaths = 4000;
  cfg.seed = 29;
  cfg.x2 = Eigen::VectorXd::Ones(dm.n);
  cfg.T = 6.0;
  cfg.recordStateAt = 3.0;
  cfg.threads = 2;
  const PathEnsemble ensemble = simulatePaths(dm, law, cfg);

  for (int i = 0; i < dm.n; ++i) {
    for (int j = 0; j < dm.n; ++j) {
      double mx = 0.0, my = 0.0;
      for (int k = 0; k < cfg.nPaths; ++k) {
        mx += ensemble.x1Recorded[k](i);
        my += ensemble.x2Recorded[k](j);
      }
      mx /= cfg.nPaths;
      my /= cfg.nPaths;
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (int k = 0; k < cfg.nPaths; ++k) {
        const double dx = ensemble.x1Recorded[k](i) - mx;
        const double dy = ensemble.x2Recorded[k](j) - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
      }
      if (sxx <= 0.0 || syy <= 0.0) continue;
      const double corr = sxy / std::sqrt(sxx * syy);
      REQUIRE(std::abs(corr) <= 3.0 / std::sqrt(static_cast<double>(cfg.nPaths)));
    }
  }
}

TEST_CASE("cost estimates refine at weak order one") {
  // Jump-free multiplicative-noise instance so all levels share one Brownian
  // path through the sub-step noise grid.
  DecomposedModel dm = DecomposedModel::zero(1, 1, MarkovGenerator::single());
  dm.A1(0)(0, 0) = -1.0;
  dm.A2(0)(0, 0) = -1.0;
  dm.C1(0)(0, 0) = 0.8;
  dm.Q1(0)(0, 0) = 1.0;
  dm.sigma2 = constantSignal(0.5, 1, 1, 1.0);

  SimConfig cfg;
  cfg.nPaths = 4000;
  cfg.seed = 5;
  cfg.x2 = Eigen::VectorXd::Zero(1);
  cfg.T = 8.0;
  cfg.noiseDt = 0.01;
  cfg.threads = 2;
  const FeedbackLaw zero = FeedbackLaw::zero(1, 1, 1);

  auto meanAt = [&](double dt) {
    SimConfig level = cfg;
    level.dt = dt;
    return estimateCost(simulatePaths(dm, zero, level)).mean;
  };
  const double coarse = meanAt(0.08);
  const double mid = meanAt(0.04);
  const double fine = meanAt(0.02);
  const double ratio = std::abs(mid - fine) / std::abs(coarse - mid);
  REQUIRE(ratio >= 0.3);
  REQUIRE(ratio <= 0.7);
}

TEST_CASE("path-wise cost is invariant under the feedback reparametrization") {
  CounterRng rng(66, 0);
  mflq::testing::InstanceOptions opt;
  opt.m0 = 2;
  opt.withSignals = true;
  const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
  FeedbackLaw hat = FeedbackLaw::zero(2, dm.n, dm.m);
  for (int r = 0; r < 2; ++r) {
    hat.Theta1(r) = mflq::testing::randomMatrix(rng, dm.m, dm.n, 0.2);
    hat.Theta2(r) = mflq::testing::randomMatrix(rng, dm.m, dm.n, 0.2);
  }
  const ExpDecaySignal v = constantSignal(0.7, 2, dm.m, 0.5);
  FeedbackLaw original = hat;
  original.offset1 = v;
  original.offset2 = v;
  FeedbackLaw shiftedLaw = FeedbackLaw::zero(2, dm.n, dm.m);
  shiftedLaw.offset1 = v;
  shiftedLaw.offset2 = v;

  SimConfig cfg;
  cfg.dt = 5e-3;
  cfg.nPaths = 16;
  cfg.seed = 13;
  cfg.T = 6.0;
  cfg.x2 = Eigen::VectorXd::Ones(dm.n);

  const PathEnsemble a = simulatePaths(dm, original, cfg);
  const PathEnsemble b = simulatePaths(feedbackShift(dm, hat), shiftedLaw, cfg);
  for (size_t k = 0; k < a.pathCosts.size(); ++k) {
    REQUIRE(a.pathCosts[k] ==
            Catch::Approx(b.pathCosts[k]).margin(1e-8 * (1.0 + std::abs(a.pathCosts[k]))));
  }
}

TEST_CASE("finite-horizon backward integration reaches the algebraic solutions") {
  SECTION("example at delta = 1") {
    const DecomposedModel dm = decompose(exampleModel());
    const auto [P1, P2] = finiteHorizonOracle(dm, 1.0, 40.0, 0.01);
    REQUIRE(P2(0)(0, 0) == Catch::Approx(std::sqrt(2.0) - 1.0).margin(1e-6));
  }
  SECTION("zero weights stay at zero") {
    DecomposedModel dm = DecomposedModel::zero(2, 1, MarkovGenerator::single());
    dm.A1(0) = -Eigen::MatrixXd::Identity(2, 2);
    dm.A2(0) = -Eigen::MatrixXd::Identity(2, 2);
    const auto [P1, P2] = finiteHorizonOracle(dm, 0.5, 10.0, 0.01);
    REQUIRE(P1.maxNorm() <= 1e-14);
    REQUIRE(P2.maxNorm() <= 1e-14);
  }
  SECTION("random strictly convex instance matches the limit solve") {
    CounterRng rng(67, 0);
    const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, {});
    const LimitSolveResult limit =
        solveLimitAre(dm, FeedbackLaw::zero(dm.generator.m0, dm.n, dm.m));
    REQUIRE(limit.success);
    const double T = 50.0 / std::abs(limit.solution.certificate.abscissa);
    const auto [P1, P2] = finiteHorizonOracle(dm, 0.0, T, 0.01);
    REQUIRE((P1 - limit.solution.P1).maxNorm() <= 1e-4);
    REQUIRE((P2 - limit.solution.P2).maxNorm() <= 1e-4);
  }
}
