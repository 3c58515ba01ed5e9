#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace mflq {

/// Generator of a continuous-time Markov chain on the regimes {1..m0}.
/// Rates are stored 0-based: lambda(i, j) is the jump rate from regime i+1
/// to regime j+1. Off-diagonal entries are nonnegative and rows sum to zero.
struct MarkovGenerator {
  int m0 = 1;
  Eigen::MatrixXd lambda;  // m0 x m0

  static MarkovGenerator single();
  static MarkovGenerator fromRates(const Eigen::MatrixXd& rates);
};

/// A regime-indexed family of real matrices of one common shape.
class SwitchedMatrix {
 public:
  SwitchedMatrix() = default;
  explicit SwitchedMatrix(std::vector<Eigen::MatrixXd> entries);

  static SwitchedMatrix zero(int regimes, int rows, int cols);
  /// Same matrix in every regime.
  static SwitchedMatrix constant(int regimes, const Eigen::MatrixXd& value);

  int regimes() const { return static_cast<int>(entries_.size()); }
  int rows() const { return entries_.empty() ? 0 : static_cast<int>(entries_[0].rows()); }
  int cols() const { return entries_.empty() ? 0 : static_cast<int>(entries_[0].cols()); }

  const Eigen::MatrixXd& operator()(int regime) const { return entries_.at(regime); }
  Eigen::MatrixXd& operator()(int regime) { return entries_.at(regime); }
  const std::vector<Eigen::MatrixXd>& entries() const { return entries_; }

  SwitchedMatrix operator+(const SwitchedMatrix& other) const;
  SwitchedMatrix operator-(const SwitchedMatrix& other) const;
  SwitchedMatrix operator*(double scale) const;

  /// Largest infinity-norm over the regimes.
  double maxNorm() const;
  bool allFinite() const;
  bool sameShape(const SwitchedMatrix& other) const;

 private:
  std::vector<Eigen::MatrixXd> entries_;
};

/// One exponentially decaying, regime-modulated term e^{-kappa (t-s)} h(regime).
struct ExpComponent {
  double kappa = 1.0;
  std::vector<Eigen::VectorXd> h;  // one vector per regime

  int regimes() const { return static_cast<int>(h.size()); }
  int dim() const { return h.empty() ? 0 : static_cast<int>(h[0].size()); }
};

/// Signal of the form sum_c e^{-kappa_c (t-s)} h_c(regime). The common case is
/// a single component (one decay rate shared by the whole model); sums of
/// components arise from superposition and from feedback shifts.
class ExpDecaySignal {
 public:
  ExpDecaySignal() = default;

  static ExpDecaySignal zero();
  static ExpDecaySignal single(double kappa, std::vector<Eigen::VectorXd> h);
  static ExpDecaySignal fromComponents(std::vector<ExpComponent> components);

  bool isZero() const { return components_.empty(); }
  const std::vector<ExpComponent>& components() const { return components_; }

  /// kappa of the unique component; throws if the signal has several.
  double kappa() const;

  /// Value at elapsed time (t - s) in the given regime (0-based).
  Eigen::VectorXd eval(double elapsed, int regime) const;

  ExpDecaySignal operator+(const ExpDecaySignal& other) const;
  /// Left-multiply every component by a regime-indexed matrix.
  ExpDecaySignal mapped(const SwitchedMatrix& weight) const;
  ExpDecaySignal scaled(double factor) const;

  double maxNorm() const;

 private:
  std::vector<ExpComponent> components_;
};

/// Per-regime gains for the two channels plus exponential feedforward offsets.
struct FeedbackLaw {
  SwitchedMatrix Theta1;  // m x n per regime
  SwitchedMatrix Theta2;
  ExpDecaySignal offset1;  // R^m, zero for homogeneous problems
  ExpDecaySignal offset2;

  static FeedbackLaw zero(int regimes, int n, int m);
  bool hasOffsets() const { return !offset1.isZero() || !offset2.isZero(); }
};

/// Thrown when problem data fails validation; carries one message per issue.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Thrown by the solvers; `code` is a stable short identifier such as
/// "not_finite_at_delta" or "resonant_decay_rate".
class SolverError : public std::runtime_error {
 public:
  SolverError(std::string code, const std::string& message);
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

}  // namespace mflq
