#include "mflq/model.hpp"

#include <cmath>
#include <sstream>

namespace mflq {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kSymmetryTol = 1e-10;

void checkShape(std::vector<std::string>& issues, const SwitchedMatrix& mat,
                const char* name, int regimes, int rows, int cols) {
  if (mat.regimes() != regimes) {
    std::ostringstream msg;
    msg << name << ": expected " << regimes << " regime entries, got " << mat.regimes();
    issues.push_back(msg.str());
    return;
  }
  if (mat.rows() != rows || mat.cols() != cols) {
    std::ostringstream msg;
    msg << name << ": expected shape " << rows << "x" << cols << ", got " << mat.rows()
        << "x" << mat.cols();
    issues.push_back(msg.str());
  }
  if (!mat.allFinite()) {
    issues.push_back(std::string(name) + ": non-finite entry");
  }
}

void checkSignal(std::vector<std::string>& issues, const ExpDecaySignal& sig,
                 const char* name, int regimes, int dim) {
  for (const auto& c : sig.components()) {
    if (c.regimes() != regimes || c.dim() != dim) {
      std::ostringstream msg;
      msg << name << ": expected " << regimes << " vectors of size " << dim;
      issues.push_back(msg.str());
      return;
    }
    for (const auto& v : c.h) {
      if (!v.allFinite()) {
        issues.push_back(std::string(name) + ": non-finite entry");
        return;
      }
    }
  }
}

double asymmetry(const SwitchedMatrix& mat) {
  double worst = 0.0;
  for (int i = 0; i < mat.regimes(); ++i) {
    worst = std::max(worst, (mat(i) - mat(i).transpose()).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

SwitchedMatrix symmetrized(const SwitchedMatrix& mat) {
  std::vector<Eigen::MatrixXd> out(mat.regimes());
  for (int i = 0; i < mat.regimes(); ++i) out[i] = 0.5 * (mat(i) + mat(i).transpose());
  return SwitchedMatrix(std::move(out));
}

}  // namespace

MeanFieldModel MeanFieldModel::zero(int n, int m, const MarkovGenerator& generator) {
  MeanFieldModel model;
  model.n = n;
  model.m = m;
  model.generator = generator;
  const int m0 = generator.m0;
  model.A = model.Abar = model.C = model.Cbar = SwitchedMatrix::zero(m0, n, n);
  model.B = model.Bbar = model.D = model.Dbar = SwitchedMatrix::zero(m0, n, m);
  model.Q = model.Qbar = SwitchedMatrix::zero(m0, n, n);
  model.S = model.Sbar = SwitchedMatrix::zero(m0, m, n);
  model.R = model.Rbar = SwitchedMatrix::zero(m0, m, m);
  return model;
}

DecomposedModel DecomposedModel::zero(int n, int m, const MarkovGenerator& generator) {
  DecomposedModel dm;
  dm.n = n;
  dm.m = m;
  dm.generator = generator;
  const int m0 = generator.m0;
  dm.A1 = dm.A2 = dm.C1 = dm.C2 = SwitchedMatrix::zero(m0, n, n);
  dm.B1 = dm.B2 = dm.D1 = dm.D2 = SwitchedMatrix::zero(m0, n, m);
  dm.Q1 = dm.Q2 = SwitchedMatrix::zero(m0, n, n);
  dm.S1 = dm.S2 = SwitchedMatrix::zero(m0, m, n);
  dm.R1 = dm.R2 = SwitchedMatrix::zero(m0, m, m);
  return dm;
}

std::vector<std::string> validationIssues(const MeanFieldModel& raw) {
  std::vector<std::string> issues;
  const int n = raw.n;
  const int m = raw.m;
  const int m0 = raw.generator.m0;

  if (n < 1) issues.push_back("state dimension n must be >= 1");
  if (m < 1) issues.push_back("control dimension m must be >= 1");
  if (m0 < 1) issues.push_back("number of regimes m0 must be >= 1");
  if (raw.generator.lambda.rows() != m0 || raw.generator.lambda.cols() != m0) {
    issues.push_back("generator: lambda must be m0 x m0");
    return issues;
  }
  for (int i = 0; i < m0; ++i) {
    for (int j = 0; j < m0; ++j) {
      if (i != j && raw.generator.lambda(i, j) < 0.0) {
        std::ostringstream msg;
        msg << "generator: negative off-diagonal rate lambda(" << i + 1 << "," << j + 1
            << ") = " << raw.generator.lambda(i, j);
        issues.push_back(msg.str());
      }
    }
    const double rowSum = raw.generator.lambda.row(i).sum();
    if (std::abs(rowSum) > kRowSumTol) {
      std::ostringstream msg;
      msg << "generator: row " << i + 1 << " sum " << rowSum << " != 0";
      issues.push_back(msg.str());
    }
  }

  checkShape(issues, raw.A, "A", m0, n, n);
  checkShape(issues, raw.Abar, "Abar", m0, n, n);
  checkShape(issues, raw.C, "C", m0, n, n);
  checkShape(issues, raw.Cbar, "Cbar", m0, n, n);
  checkShape(issues, raw.B, "B", m0, n, m);
  checkShape(issues, raw.Bbar, "Bbar", m0, n, m);
  checkShape(issues, raw.D, "D", m0, n, m);
  checkShape(issues, raw.Dbar, "Dbar", m0, n, m);
  checkShape(issues, raw.Q, "Q", m0, n, n);
  checkShape(issues, raw.Qbar, "Qbar", m0, n, n);
  checkShape(issues, raw.S, "S", m0, m, n);
  checkShape(issues, raw.Sbar, "Sbar", m0, m, n);
  checkShape(issues, raw.R, "R", m0, m, m);
  checkShape(issues, raw.Rbar, "Rbar", m0, m, m);

  const std::pair<const SwitchedMatrix*, const char*> weights[] = {
      {&raw.Q, "Q"}, {&raw.Qbar, "Qbar"}, {&raw.R, "R"}, {&raw.Rbar, "Rbar"}};
  for (const auto& [weight, name] : weights) {
    const double a = asymmetry(*weight);
    if (a > kSymmetryTol) {
      std::ostringstream msg;
      msg << name << ": asymmetry " << a << " exceeds tolerance " << kSymmetryTol;
      issues.push_back(msg.str());
    }
  }

  checkSignal(issues, raw.b, "b", m0, n);
  checkSignal(issues, raw.sigma, "sigma", m0, n);
  checkSignal(issues, raw.q, "q", m0, n);
  checkSignal(issues, raw.qbar, "qbar", m0, n);
  checkSignal(issues, raw.r, "r", m0, m);
  checkSignal(issues, raw.rbar, "rbar", m0, m);

  if (raw.hasInitFeedback) {
    checkShape(issues, raw.initFeedback.Theta1, "initFeedback.Theta1", m0, m, n);
    checkShape(issues, raw.initFeedback.Theta2, "initFeedback.Theta2", m0, m, n);
  }
  return issues;
}

MeanFieldModel validateModel(const MeanFieldModel& raw) {
  auto issues = validationIssues(raw);
  if (!issues.empty()) throw ValidationError(std::move(issues));
  MeanFieldModel model = raw;
  model.Q = symmetrized(model.Q);
  model.Qbar = symmetrized(model.Qbar);
  model.R = symmetrized(model.R);
  model.Rbar = symmetrized(model.Rbar);
  return model;
}

DecomposedModel decompose(const MeanFieldModel& model) {
  DecomposedModel dm;
  dm.n = model.n;
  dm.m = model.m;
  dm.generator = model.generator;

  dm.A1 = model.A;
  dm.A2 = model.A + model.Abar;
  dm.B1 = model.B;
  dm.B2 = model.B + model.Bbar;
  dm.C1 = model.C;
  dm.C2 = model.C + model.Cbar;
  dm.D1 = model.D;
  dm.D2 = model.D + model.Dbar;
  dm.Q1 = model.Q;
  dm.Q2 = model.Q + model.Qbar;
  dm.S1 = model.S;
  dm.S2 = model.S + model.Sbar;
  dm.R1 = model.R;
  dm.R2 = model.R + model.Rbar;

  // The signal class is chain-adapted, so the conditional-mean projection
  // fixes every signal: the orthogonal-complement channel gets zero.
  dm.q1 = ExpDecaySignal::zero();
  dm.q2 = model.q + model.qbar;
  dm.r1 = ExpDecaySignal::zero();
  dm.r2 = model.r + model.rbar;
  dm.b1 = ExpDecaySignal::zero();
  dm.b2 = model.b;
  dm.sigma1 = ExpDecaySignal::zero();
  dm.sigma2 = model.sigma;

  dm.initFeedback = model.initFeedback;
  dm.hasInitFeedback = model.hasInitFeedback;
  if (!dm.hasInitFeedback) {
    dm.initFeedback = FeedbackLaw::zero(model.generator.m0, model.n, model.m);
  }
  return dm;
}

namespace {

void shiftChannel(const SwitchedMatrix& Theta, SwitchedMatrix& A, SwitchedMatrix& C,
                  SwitchedMatrix& Q, SwitchedMatrix& S, const SwitchedMatrix& B,
                  const SwitchedMatrix& D, const SwitchedMatrix& R, ExpDecaySignal& q,
                  const ExpDecaySignal& r) {
  const int m0 = A.regimes();
  std::vector<Eigen::MatrixXd> thetaT(m0);
  for (int i = 0; i < m0; ++i) thetaT[i] = Theta(i).transpose();
  const SwitchedMatrix ThetaT{thetaT};

  for (int i = 0; i < m0; ++i) {
    const Eigen::MatrixXd& th = Theta(i);
    Q(i) = Q(i) + th.transpose() * S(i) + S(i).transpose() * th +
           th.transpose() * R(i) * th;
    S(i) = S(i) + R(i) * th;
    A(i) = A(i) + B(i) * th;
    C(i) = C(i) + D(i) * th;
  }
  q = q + r.mapped(ThetaT);
}

}  // namespace

DecomposedModel feedbackShift(const DecomposedModel& dm, const FeedbackLaw& hat) {
  if (hat.Theta1.regimes() != dm.generator.m0 || hat.Theta1.rows() != dm.m ||
      hat.Theta1.cols() != dm.n || !hat.Theta1.sameShape(hat.Theta2)) {
    throw std::invalid_argument("feedbackShift: gain shape mismatch");
  }
  DecomposedModel out = dm;
  shiftChannel(hat.Theta1, out.A1, out.C1, out.Q1, out.S1, dm.B1, dm.D1, dm.R1, out.q1,
               dm.r1);
  shiftChannel(hat.Theta2, out.A2, out.C2, out.Q2, out.S2, dm.B2, dm.D2, dm.R2, out.q2,
               dm.r2);
  return out;
}

}  // namespace mflq
