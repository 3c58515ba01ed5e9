// Acceptance suite: runs every release criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.
// Usage: acceptance_tests [path-to-mflq-cli]

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>
#include <mflq/json_io.hpp>
#include <mflq/linalg.hpp>
#include <mflq/sim.hpp>

#include "support/instances.hpp"

using namespace mflq;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
  int id;
  std::string name;
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

class Report {
 public:
  Criterion& add(int id, const std::string& name) {
    criteria_.push_back(std::make_unique<Criterion>());
    criteria_.back()->id = id;
    criteria_.back()->name = name;
    return *criteria_.back();
  }

  int finish() {
    bool all = true;
    for (const auto& c : criteria_) {
      std::cout << (c->pass ? "PASS" : "FAIL") << " criterion " << c->id << ": "
                << c->name << c->detail.str() << std::endl;
      all = all && c->pass;
    }
    std::cout << (all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << std::endl;
    return all ? 0 : 1;
  }

 private:
  std::vector<std::unique_ptr<Criterion>> criteria_;
};

double seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double closedFormP2(double delta) { return std::sqrt(delta * delta + delta) - delta; }

std::vector<double> deepSchedule() {
  std::vector<double> deltas;
  double value = 1.0;
  for (int k = 0; k <= 14; ++k) {
    deltas.push_back(value);
    value *= 0.25;
  }
  return deltas;
}

struct NamedInstance {
  DecomposedModel dm;
  FeedbackLaw zero;
};

std::vector<NamedInstance> convexInstances(int count, std::uint64_t seed) {
  std::vector<NamedInstance> out;
  CounterRng rng(seed, 0);
  while (static_cast<int>(out.size()) < count) {
    mflq::testing::InstanceOptions opt = mflq::testing::randomDims(rng, {});
    opt.rFloor = 0.1;
    NamedInstance inst{mflq::testing::randomStableDecomposed(rng, opt), {}};
    inst.zero = FeedbackLaw::zero(inst.dm.generator.m0, inst.dm.n, inst.dm.m);
    out.push_back(std::move(inst));
  }
  return out;
}

int runCli(const std::string& cli, const std::string& argsLine) {
  const std::string command = cli + " " + argsLine + " >/dev/null 2>/dev/null";
  const int status = std::system(command.c_str());
  if (status == -1) return -1;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string exampleModelJson() {
  return R"({"n":1,"m":1,"m0":1,"lambda":[0],
             "A":[[-1]],"B":[[0]],"Bbar":[[1]],
             "Q":[[0]],"Qbar":[[1]],"R":[[0]]})";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  Report report;

  // ------------------------------------------------------------------
  {
    Criterion& c = report.add(1, "closed-form reproduction at the reference deltas");
    const auto start = Clock::now();
    try {
      const DecomposedModel dm = decompose(mflq::testing::exampleModel());
      const FeedbackLaw zero = FeedbackLaw::zero(1, 1, 1);
      FeedbackLaw warm = zero;
      for (double delta : {1.0, 0.25, 0.01, 0.001}) {
        const RiccatiSolution sol = solveRegularizedAre(dm, delta, warm);
        const double wantP = closedFormP2(delta);
        const double wantTheta = -wantP / delta;
        c.require(std::abs(sol.P2(0)(0, 0) - wantP) <= 1e-8, "P2 at delta");
        c.require(std::abs(sol.Theta2(0)(0, 0) - wantTheta) <= 1e-8, "Theta2 at delta");
        warm.Theta1 = sol.Theta1;
        warm.Theta2 = sol.Theta2;
      }
      const double elapsed = seconds(start);
      c.require(elapsed < 1.0, "runtime under 1 s");
      c.detail << " (max |err| <= 1e-8, " << elapsed << " s)";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  // ------------------------------------------------------------------
  {
    Criterion& c = report.add(2, "non-solvability detection through the CLI");
    const auto start = Clock::now();
    try {
      if (cli.empty()) {
        c.require(false, "CLI path not supplied");
      } else {
        const auto dir = std::filesystem::temp_directory_path() / "mflq_acceptance";
        std::filesystem::create_directories(dir);
        const auto modelPath = dir / "example.json";
        std::ofstream(modelPath) << exampleModelJson();

        const int code = runCli(cli, "check-solvability " + modelPath.string() +
                                         " --out-dir " + dir.string());
        c.require(code == 0, "check-solvability exit code");
        std::ifstream in(dir / "solvability.json");
        nlohmann::json doc;
        in >> doc;
        c.require(doc.at("verdict") == "finite_not_solvable", "verdict");
        c.require(doc.at("blowup").get<bool>(), "blow-up flag");
        const double residual = doc.at("limit").at("range_residual").get<double>();
        c.require(std::abs(residual - 0.5) <= 1e-6, "range residual = 1/2");

        const int repro = runCli(cli, "reproduce-example --out-dir " +
                                          (dir / "repro").string());
        c.require(repro == 0, "reproduce-example exit code");

        // Determinism: identical run parameters give byte-identical outputs.
        auto readAll = [](const std::filesystem::path& p) {
          std::ifstream f(p, std::ios::binary);
          std::ostringstream buf;
          buf << f.rdbuf();
          return buf.str();
        };
        const std::string simArgs = "simulate " + modelPath.string() +
                                    " --law zero --n-paths 200 --dt 5e-3 --seed 11"
                                    " --threads 2 --out-dir ";
        c.require(runCli(cli, simArgs + (dir / "sim_a").string()) == 0, "simulate run A");
        c.require(runCli(cli, simArgs + (dir / "sim_b").string()) == 0, "simulate run B");
        c.require(readAll(dir / "sim_a" / "simulate.json") ==
                      readAll(dir / "sim_b" / "simulate.json"),
                  "byte-identical simulate.json across runs");

        const auto badPath = dir / "bad.json";
        std::ofstream(badPath) << R"({"n":1,"m":1,"m0":2,
          "lambda":[-1,0.5,1,-1],"A":[[-1],[-1]],"B":[[1],[1]],
          "Q":[[1],[1]],"R":[[1],[1]]})";
        c.require(runCli(cli, "validate " + badPath.string() + " --out-dir " +
                                  dir.string()) == 2,
                  "validate exits 2 on row-sum violation");
      }
      const double elapsed = seconds(start);
      c.require(elapsed < 5.0, "runtime under 5 s");
      c.detail << " (" << elapsed << " s)";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  // ------------------------------------------------------------------
  std::vector<NamedInstance> instances = convexInstances(20, 0xA11CE);
  std::vector<SweepResult> sweeps;
  std::vector<LimitSolveResult> limits;
  {
    Criterion& c = report.add(3, "sweep limit vs direct pseudoinverse solve on 20 instances");
    try {
      double worstGap = 0.0;
      double worstResidual = 0.0;
      for (auto& inst : instances) {
        const std::optional<ValueProbe> probe =
            ValueProbe{0, Eigen::VectorXd::Ones(inst.dm.n)};
        SweepResult sweep = deltaSweep(inst.dm, deepSchedule(), inst.zero, {}, probe);
        c.require(sweep.allSolved, "all regularized solves succeed");
        LimitSolveResult limit = solveLimitAre(inst.dm, inst.zero, {}, &sweep);
        c.require(limit.success, "limit solve succeeds");
        if (limit.success && sweep.lastSolved >= 0) {
          const RiccatiSolution& tail = *sweep.solutions[sweep.lastSolved];
          const double gap = std::max((limit.solution.P1 - tail.P1).maxNorm(),
                                      (limit.solution.P2 - tail.P2).maxNorm());
          worstGap = std::max(worstGap, gap);
          worstResidual = std::max(worstResidual, limit.solution.residualNorm);
          for (const auto& sol : sweep.solutions) {
            worstResidual = std::max(worstResidual, sol->residualNorm);
          }
        }
        sweeps.push_back(std::move(sweep));
        limits.push_back(std::move(limit));
      }
      c.require(worstGap <= 1e-6, "limit agreement within 1e-6");
      c.require(worstResidual <= 1e-8, "residuals within 1e-8");
      c.detail << " (worst gap " << worstGap << ", worst residual " << worstResidual
               << ")";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  // ------------------------------------------------------------------
  {
    Criterion& c = report.add(4, "finite-horizon oracle equals the algebraic solution");
    const auto start = Clock::now();
    try {
      double worst = 0.0;
      for (size_t k = 0; k < instances.size(); ++k) {
        if (!limits[k].success) continue;
        const double abscissa = limits[k].solution.certificate.abscissa;
        const double T = 50.0 / std::abs(abscissa);
        const auto [P1, P2] = finiteHorizonOracle(instances[k].dm, 0.0, T, 0.02);
        const double gap = std::max((P1 - limits[k].solution.P1).maxNorm(),
                                    (P2 - limits[k].solution.P2).maxNorm());
        worst = std::max(worst, gap);
      }
      const double elapsed = seconds(start);
      c.require(worst <= 1e-4, "oracle gap within 1e-4");
      c.require(elapsed < 60.0, "runtime under 1 min");
      c.detail << " (worst gap " << worst << ", " << elapsed << " s)";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  // ------------------------------------------------------------------
  {
    Criterion& c = report.add(5, "monotone decrease of P and the probe value along sweeps");
    try {
      double worstEig = 0.0;
      double worstValueStep = 0.0;
      double worstValueTail = 0.0;
      auto checkSweep = [&](const SweepResult& sweep) {
        double lastValueGap = std::numeric_limits<double>::quiet_NaN();
        for (size_t k = 0; k + 1 < sweep.solutions.size(); ++k) {
          if (!sweep.solutions[k] || !sweep.solutions[k + 1]) continue;
          const RiccatiSolution& a = *sweep.solutions[k];
          const RiccatiSolution& b = *sweep.solutions[k + 1];
          worstEig = std::min({worstEig, minSymEigenvalue(a.P1 - b.P1),
                               minSymEigenvalue(a.P2 - b.P2)});
          if (!std::isnan(sweep.rows[k].valueProbe) &&
              !std::isnan(sweep.rows[k + 1].valueProbe)) {
            worstValueStep = std::max(
                worstValueStep, sweep.rows[k + 1].valueProbe - sweep.rows[k].valueProbe);
            lastValueGap =
                std::abs(sweep.rows[k + 1].valueProbe - sweep.rows[k].valueProbe);
          }
        }
        if (!std::isnan(lastValueGap)) {
          worstValueTail = std::max(worstValueTail, lastValueGap);
        }
      };
      for (const auto& sweep : sweeps) checkSweep(sweep);
      const DecomposedModel example = decompose(mflq::testing::exampleModel());
      checkSweep(deltaSweep(example, deepSchedule(), FeedbackLaw::zero(1, 1, 1), {},
                            ValueProbe{0, Eigen::VectorXd::Ones(1)}));
      c.require(worstEig >= -1e-8, "P monotone within 1e-8");
      c.require(worstValueStep <= 1e-8, "value nonincreasing within 1e-8");
      c.require(worstValueTail <= 1e-4, "value sequence settles (Cauchy tail)");
      c.detail << " (worst eigenvalue " << worstEig << ", worst value step "
               << worstValueStep << ", value tail " << worstValueTail << ")";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  // ------------------------------------------------------------------
  {
    Criterion& c = report.add(6, "Monte Carlo value check at n_paths = 10^4, dt = 1e-3");
    const auto start = Clock::now();
    try {
      CounterRng rng(0xBEEF, 0);
      mflq::testing::InstanceOptions opt;
      opt.n = 2;
      opt.m = 1;
      opt.m0 = 2;
      opt.diffusionScale = 0.3;
      const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
      const FeedbackLaw zero = FeedbackLaw::zero(2, dm.n, dm.m);
      const LimitSolveResult limit = solveLimitAre(dm, zero);
      c.require(limit.success, "homogeneous instance solves");
      FeedbackLaw law = zero;
      law.Theta1 = limit.solution.Theta1;
      law.Theta2 = limit.solution.Theta2;

      SimConfig cfg;
      cfg.dt = 1e-3;
      cfg.nPaths = 10000;
      cfg.seed = 2024;
      cfg.x2 = Eigen::VectorXd::Ones(dm.n);
      cfg.threads = 2;
      const CostEstimate est = estimateCost(simulatePaths(dm, law, cfg));
      const double analytic = cfg.x2.dot(limit.solution.P2(0) * cfg.x2);
      c.require(std::abs(est.mean - analytic) <= 3.0 * est.stderr_,
                "optimal cost within 3 standard errors");
      c.detail << " (estimate " << est.mean << " +- " << est.stderr_ << ", value "
               << analytic << ")";

      // Uncontrolled degenerate example: integral of e^{-2t} = 1/2.
      const DecomposedModel example = decompose(mflq::testing::exampleModel());
      SimConfig exCfg;
      exCfg.dt = 1e-3;
      exCfg.nPaths = 64;
      exCfg.x2 = Eigen::VectorXd::Ones(1);
      const CostEstimate exEst =
          estimateCost(simulatePaths(example, FeedbackLaw::zero(1, 1, 1), exCfg));
      const double dtBias = exCfg.dt * exCfg.dt / 6.0 + exEst.truncationBound + 1e-9;
      c.require(std::abs(exEst.mean - 0.5) <= 3.0 * exEst.stderr_ + dtBias,
                "uncontrolled example within 3 stderr + dt bias of 1/2");
      const double elapsed = seconds(start);
      c.require(elapsed < 300.0, "runtime under 5 min");
      c.detail << " (example " << exEst.mean << ", " << elapsed << " s)";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  // ------------------------------------------------------------------
  {
    Criterion& c = report.add(7, "convexity probe bound and eps independence");
    try {
      const DecomposedModel dm = decompose(mflq::testing::exampleModel());
      const FeedbackLaw zero = FeedbackLaw::zero(1, 1, 1);
      SimConfig cfg;
      cfg.dt = 2e-3;
      cfg.nPaths = 500;
      cfg.seed = 31;
      cfg.x2 = Eigen::VectorXd::Ones(1);
      cfg.delta = 0.25;
      cfg.threads = 2;

      CounterRng rng(0xCAFE, 0);
      double worstSlack = std::numeric_limits<double>::infinity();
      double worstEpsGap = 0.0;
      for (int k = 0; k < 10; ++k) {
        ProbeDirection dir;
        const double kappa2 = 0.4 + 1.6 * rng.uniform();
        dir.v2 = ExpDecaySignal::single(
            kappa2, {Eigen::VectorXd::Constant(1, 2.0 * rng.uniform() - 1.0)});
        if (k % 2 == 1) {
          const double kappa1 = 0.4 + 1.6 * rng.uniform();
          dir.v1 = ExpDecaySignal::single(
              kappa1, {Eigen::VectorXd::Constant(1, 2.0 * rng.uniform() - 1.0)});
        }
        const ConvexityEstimate a = convexityProbe(dm, zero, dir, 0.1, cfg);
        const ConvexityEstimate b = convexityProbe(dm, zero, dir, 0.05, cfg);
        const double slack =
            a.coefficient - (cfg.delta * a.directionNormSq - 3.0 * a.stderr_);
        worstSlack = std::min(worstSlack, slack);
        const double epsGap = std::abs(a.coefficient - b.coefficient) -
                              3.0 * (a.stderr_ + b.stderr_);
        worstEpsGap = std::max(worstEpsGap, epsGap);
      }
      c.require(worstSlack >= 0.0, "coefficient >= delta ||v||^2 - 3 stderr");
      c.require(worstEpsGap <= 1e-9, "eps independence within 3 stderr");
      c.detail << " (worst slack " << worstSlack << ", worst eps gap " << worstEpsGap
               << ")";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  // ------------------------------------------------------------------
  {
    Criterion& c = report.add(8, "abscissa test vs dissipativity certificate on 100 instances");
    try {
      CounterRng rng(0xD15C, 0);
      const StabilityOptions opts;
      int disagreements = 0;
      int outsideBand = 0;
      for (int trial = 0; trial < 100; ++trial) {
        mflq::testing::InstanceOptions opt = mflq::testing::randomDims(rng, {});
        opt.stabilityMargin = (trial % 2 == 0) ? 0.8 : -0.8;
        const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
        FeedbackLaw law = FeedbackLaw::zero(dm.generator.m0, dm.n, dm.m);
        if (trial % 3 == 0) {
          for (int r = 0; r < dm.generator.m0; ++r) {
            law.Theta1(r) = mflq::testing::randomMatrix(rng, dm.m, dm.n, 0.3);
            law.Theta2(r) = mflq::testing::randomMatrix(rng, dm.m, dm.n, 0.3);
          }
        }
        const double abscissa = momentAbscissa(dm, law);
        if (std::abs(abscissa) <= 10.0 * opts.tolAbscissa) continue;
        ++outsideBand;
        const DissipativityResult cert = dissipativityCertificate(dm, law, opts);
        if ((abscissa < 0.0) != cert.success) ++disagreements;
      }
      c.require(disagreements == 0, "zero disagreements");
      c.require(outsideBand >= 95, "instances land outside the marginal band");
      c.detail << " (" << outsideBand << " instances, " << disagreements
               << " disagreements)";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  // ------------------------------------------------------------------
  {
    Criterion& c = report.add(9, "adjoint drift residual, jump consistency and decay");
    try {
      CounterRng rng(0xADA, 0);
      mflq::testing::InstanceOptions opt;
      opt.withSignals = true;
      opt.m0 = 2;
      const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
      const FeedbackLaw zero = FeedbackLaw::zero(2, dm.n, dm.m);
      const LimitSolveResult limit = solveLimitAre(dm, zero);
      c.require(limit.success, "instance solves");
      const RiccatiSolution& sol = limit.solution;
      const AdjointSolution adj = solveAdjoint(dm, sol);
      c.require(adj.etaZero && adj.pibar1.isZero(), "eta and pibar1 vanish");

      FeedbackLaw gains = zero;
      gains.Theta1 = sol.Theta1;
      gains.Theta2 = sol.Theta2;
      const SwitchedMatrix Ahat2 = closedLoopA(dm, gains, 2);
      const SwitchedMatrix Chat2 = closedLoopC(dm, gains, 2);
      const double kappa = adj.pibar2.components().at(0).kappa;
      auto driver = [&](double t, int regime) {
        Eigen::VectorXd F = Ahat2(regime).transpose() * adj.pibar2.eval(t, regime);
        F += Chat2(regime).transpose() * (sol.P1(regime) * dm.sigma2.eval(t, regime));
        F += sol.P2(regime) * dm.b2.eval(t, regime);
        F += dm.q2.eval(t, regime);
        F += sol.Theta2(regime).transpose() * dm.r2.eval(t, regime);
        return F;
      };

      // Drift identity at 100 random (t, regime).
      double worstDrift = 0.0;
      for (int check = 0; check < 100; ++check) {
        const double t = 6.0 * rng.uniform();
        const int regime = check % dm.generator.m0;
        Eigen::VectorXd residual = -kappa * adj.pibar2.eval(t, regime) + driver(t, regime);
        for (int j = 0; j < dm.generator.m0; ++j) {
          if (j != regime) {
            residual += dm.generator.lambda(regime, j) *
                        (adj.pibar2.eval(t, j) - adj.pibar2.eval(t, regime));
          }
        }
        // Zero row sums let the generator act through jump differences.
        worstDrift = std::max(worstDrift, residual.lpNorm<Eigen::Infinity>());
      }
      c.require(worstDrift <= 1e-10, "drift residual within 1e-10");

      // Path-wise consistency on 100 simulated chains.
      double worstPath = 0.0;
      for (int pathId = 0; pathId < 100; ++pathId) {
        const ChainPath path =
            simulateChain(dm.generator, pathId % dm.generator.m0, 0.0, 4.0, 77, pathId);
        for (size_t seg = 0; seg < path.states.size(); ++seg) {
          const double ta = path.jumpTimes[seg];
          const double tb =
              (seg + 1 < path.jumpTimes.size()) ? path.jumpTimes[seg + 1] : 4.0;
          const int regime = path.states[seg];
          const double weight =
              (std::exp(-kappa * ta) - std::exp(-kappa * tb)) / kappa;
          const double scale = weight / std::exp(-kappa * ta);
          Eigen::VectorXd rhs = -scale * driver(ta, regime);
          for (int j = 0; j < dm.generator.m0; ++j) {
            if (j == regime) continue;
            rhs -= dm.generator.lambda(regime, j) * scale * adj.nuJump(ta, regime, j);
          }
          const Eigen::VectorXd lhs =
              adj.pibar2.eval(tb, regime) - adj.pibar2.eval(ta, regime);
          worstPath = std::max(worstPath, (lhs - rhs).lpNorm<Eigen::Infinity>());
          if (seg + 1 < path.states.size()) {
            const int next = path.states[seg + 1];
            const Eigen::VectorXd jump =
                adj.pibar2.eval(tb, next) - adj.pibar2.eval(tb, regime);
            worstPath = std::max(
                worstPath, (jump - adj.nuJump(tb, regime, next)).lpNorm<Eigen::Infinity>());
          }
        }
      }
      c.require(worstPath <= 1e-10, "path-wise jump/drift identity within 1e-10");

      // Analytic decay of E |pi(t)|^2.
      Eigen::VectorXd normSq(dm.generator.m0);
      for (int r = 0; r < dm.generator.m0; ++r) {
        normSq(r) = adj.pibar2.eval(0.0, r).squaredNorm();
      }
      const double late =
          std::exp(-2.0 * kappa * 20.0) *
          chainExpectation(dm.generator, 20.0, normSq).maxCoeff();
      c.require(late <= 1e-8 * std::max(1.0, normSq.maxCoeff()), "E|pi|^2 decays to zero");
      c.detail << " (drift " << worstDrift << ", path " << worstPath << ")";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  // ------------------------------------------------------------------
  {
    Criterion& c = report.add(10, "gain recovery through the feedback shift on 10 instances");
    try {
      CounterRng rng(0x5317, 0);
      int tested = 0;
      double worst = 0.0;
      while (tested < 10) {
        mflq::testing::InstanceOptions opt = mflq::testing::randomDims(rng, {});
        const DecomposedModel dm = mflq::testing::randomStableDecomposed(rng, opt);
        const int m0 = dm.generator.m0;
        FeedbackLaw hat = FeedbackLaw::zero(m0, dm.n, dm.m);
        for (int r = 0; r < m0; ++r) {
          hat.Theta1(r) = mflq::testing::randomMatrix(rng, dm.m, dm.n, 0.2);
          hat.Theta2(r) = mflq::testing::randomMatrix(rng, dm.m, dm.n, 0.2);
        }
        if (momentAbscissa(dm, hat) >= -1e-3) continue;
        ++tested;

        const FeedbackLaw zero = FeedbackLaw::zero(m0, dm.n, dm.m);
        const LimitSolveResult direct = solveLimitAre(dm, zero);
        const LimitSolveResult shifted = solveLimitAre(feedbackShift(dm, hat), zero);
        c.require(direct.success && shifted.success, "both routes solve");
        if (!direct.success || !shifted.success) continue;
        for (int r = 0; r < m0; ++r) {
          worst = std::max(worst, (hat.Theta1(r) + shifted.solution.Theta1(r) -
                                   direct.solution.Theta1(r))
                                      .lpNorm<Eigen::Infinity>());
          worst = std::max(worst, (hat.Theta2(r) + shifted.solution.Theta2(r) -
                                   direct.solution.Theta2(r))
                                      .lpNorm<Eigen::Infinity>());
        }
        worst = std::max(worst,
                         (shifted.solution.P1 - direct.solution.P1).maxNorm());
        worst = std::max(worst,
                         (shifted.solution.P2 - direct.solution.P2).maxNorm());
      }
      c.require(worst <= 1e-8, "mapped-back gains within 1e-8");
      c.detail << " (worst gap " << worst << ")";
    } catch (const std::exception& err) {
      c.require(false, err.what());
    }
  }

  return report.finish();
}
