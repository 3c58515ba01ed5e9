#include "mflq/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace mflq {

SymStack::SymStack(int regimes, int n)
    : regimes_(regimes), n_(n), perRegime_(n * (n + 1) / 2) {}

Eigen::VectorXd SymStack::pack(const SwitchedMatrix& sym) const {
  Eigen::VectorXd stacked(dim());
  int idx = 0;
  for (int r = 0; r < regimes_; ++r) {
    const Eigen::MatrixXd& mat = sym(r);
    for (int i = 0; i < n_; ++i) {
      for (int j = i; j < n_; ++j) stacked(idx++) = mat(i, j);
    }
  }
  return stacked;
}

SwitchedMatrix SymStack::unpack(const Eigen::VectorXd& stacked) const {
  std::vector<Eigen::MatrixXd> out(regimes_, Eigen::MatrixXd::Zero(n_, n_));
  int idx = 0;
  for (int r = 0; r < regimes_; ++r) {
    for (int i = 0; i < n_; ++i) {
      for (int j = i; j < n_; ++j) {
        out[r](i, j) = stacked(idx);
        out[r](j, i) = stacked(idx);
        ++idx;
      }
    }
  }
  return SwitchedMatrix(std::move(out));
}

Eigen::MatrixXd SymStack::buildOperator(
    const std::function<SwitchedMatrix(const SwitchedMatrix&)>& map) const {
  const int d = dim();
  Eigen::MatrixXd op(d, d);
  Eigen::VectorXd basis = Eigen::VectorXd::Zero(d);
  for (int k = 0; k < d; ++k) {
    basis(k) = 1.0;
    op.col(k) = pack(map(unpack(basis)));
    basis(k) = 0.0;
  }
  return op;
}

Eigen::MatrixXd pseudoInverse(const Eigen::MatrixXd& mat, double rankTolFactor) {
  if (mat.rows() == 0 || mat.cols() == 0) return mat.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = rankTolFactor * (sv.size() > 0 ? sv(0) : 0.0);
  Eigen::VectorXd inverted = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff && sv(i) > 0.0) inverted(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inverted.asDiagonal() * svd.matrixU().transpose();
}

double maxRealEigenvalue(const Eigen::MatrixXd& mat) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(mat, /*computeEigenvectors=*/false);
  return solver.eigenvalues().real().maxCoeff();
}

double minSymEigenvalue(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double minSymEigenvalue(const SwitchedMatrix& sym) {
  double least = std::numeric_limits<double>::infinity();
  for (int r = 0; r < sym.regimes(); ++r) {
    least = std::min(least, minSymEigenvalue(0.5 * (sym(r) + sym(r).transpose())));
  }
  return least;
}

double maxSymEigenvalue(const SwitchedMatrix& sym) {
  double largest = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < sym.regimes(); ++r) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        0.5 * (sym(r) + sym(r).transpose()), Eigen::EigenvaluesOnly);
    largest = std::max(largest, solver.eigenvalues().maxCoeff());
  }
  return largest;
}

Eigen::VectorXd chainResolvent(const MarkovGenerator& gen, double a,
                               const Eigen::VectorXd& g) {
  if (a <= 0.0) throw std::invalid_argument("chainResolvent: need a > 0");
  const Eigen::MatrixXd shifted =
      a * Eigen::MatrixXd::Identity(gen.m0, gen.m0) - gen.lambda;
  return shifted.partialPivLu().solve(g);
}

Eigen::VectorXd chainExpectation(const MarkovGenerator& gen, double t,
                                 const Eigen::VectorXd& g) {
  const Eigen::MatrixXd transition = (gen.lambda * t).exp();
  return transition * g;
}

}  // namespace mflq
