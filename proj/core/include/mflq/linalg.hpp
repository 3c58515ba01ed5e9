#pragma once

#include <functional>

#include "mflq/types.hpp"

namespace mflq {

/// Coordinates for regime-stacked symmetric n x n matrices: per regime the
/// upper triangle (i <= j) in row-major order, regimes concatenated.
class SymStack {
 public:
  SymStack(int regimes, int n);

  int dim() const { return regimes_ * perRegime_; }
  int regimes() const { return regimes_; }
  int n() const { return n_; }

  Eigen::VectorXd pack(const SwitchedMatrix& sym) const;
  SwitchedMatrix unpack(const Eigen::VectorXd& stacked) const;

  /// Dense matrix of a linear map acting on regime-stacked symmetric matrices,
  /// built by applying `map` to every basis element.
  Eigen::MatrixXd
  buildOperator(const std::function<SwitchedMatrix(const SwitchedMatrix&)>& map) const;

 private:
  int regimes_;
  int n_;
  int perRegime_;
};

/// Moore-Penrose pseudoinverse with singular values below
/// rankTolFactor * sigma_max treated as zero.
Eigen::MatrixXd pseudoInverse(const Eigen::MatrixXd& mat, double rankTolFactor = 1e-9);

/// Largest real part over the spectrum.
double maxRealEigenvalue(const Eigen::MatrixXd& mat);

/// Smallest eigenvalue of a symmetric matrix.
double minSymEigenvalue(const Eigen::MatrixXd& sym);

/// Smallest and largest eigenvalue over all regimes of a symmetric family.
double minSymEigenvalue(const SwitchedMatrix& sym);
double maxSymEigenvalue(const SwitchedMatrix& sym);

/// Expectation of exp-weighted chain functionals: component (i) of the result
/// is E[ integral_0^inf e^{-a t} g(alpha(t)) dt | alpha(0) = i ], computed as
/// (a I - Lambda)^{-1} g. Requires a > 0 so the resolvent exists.
Eigen::VectorXd chainResolvent(const MarkovGenerator& gen, double a,
                               const Eigen::VectorXd& g);

/// E[g(alpha(t)) | alpha(0) = i] for every start regime i, i.e. exp(Lambda t) g.
Eigen::VectorXd chainExpectation(const MarkovGenerator& gen, double t,
                                 const Eigen::VectorXd& g);

}  // namespace mflq
