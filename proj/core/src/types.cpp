#include "mflq/types.hpp"

#include <cmath>
#include <utility>

namespace mflq {

MarkovGenerator MarkovGenerator::single() {
  MarkovGenerator gen;
  gen.m0 = 1;
  gen.lambda = Eigen::MatrixXd::Zero(1, 1);
  return gen;
}

MarkovGenerator MarkovGenerator::fromRates(const Eigen::MatrixXd& rates) {
  MarkovGenerator gen;
  gen.m0 = static_cast<int>(rates.rows());
  gen.lambda = rates;
  return gen;
}

SwitchedMatrix::SwitchedMatrix(std::vector<Eigen::MatrixXd> entries)
    : entries_(std::move(entries)) {
  for (const auto& e : entries_) {
    if (e.rows() != entries_[0].rows() || e.cols() != entries_[0].cols()) {
      throw std::invalid_argument("SwitchedMatrix: entries differ in shape");
    }
  }
}

SwitchedMatrix SwitchedMatrix::zero(int regimes, int rows, int cols) {
  std::vector<Eigen::MatrixXd> entries(regimes, Eigen::MatrixXd::Zero(rows, cols));
  return SwitchedMatrix(std::move(entries));
}

SwitchedMatrix SwitchedMatrix::constant(int regimes, const Eigen::MatrixXd& value) {
  std::vector<Eigen::MatrixXd> entries(regimes, value);
  return SwitchedMatrix(std::move(entries));
}

SwitchedMatrix SwitchedMatrix::operator+(const SwitchedMatrix& other) const {
  if (!sameShape(other)) throw std::invalid_argument("SwitchedMatrix: shape mismatch in +");
  std::vector<Eigen::MatrixXd> out(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) out[i] = entries_[i] + other.entries_[i];
  return SwitchedMatrix(std::move(out));
}

SwitchedMatrix SwitchedMatrix::operator-(const SwitchedMatrix& other) const {
  if (!sameShape(other)) throw std::invalid_argument("SwitchedMatrix: shape mismatch in -");
  std::vector<Eigen::MatrixXd> out(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) out[i] = entries_[i] - other.entries_[i];
  return SwitchedMatrix(std::move(out));
}

SwitchedMatrix SwitchedMatrix::operator*(double scale) const {
  std::vector<Eigen::MatrixXd> out(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) out[i] = entries_[i] * scale;
  return SwitchedMatrix(std::move(out));
}

double SwitchedMatrix::maxNorm() const {
  double norm = 0.0;
  for (const auto& e : entries_) norm = std::max(norm, e.lpNorm<Eigen::Infinity>());
  return norm;
}

bool SwitchedMatrix::allFinite() const {
  for (const auto& e : entries_) {
    if (!e.allFinite()) return false;
  }
  return true;
}

bool SwitchedMatrix::sameShape(const SwitchedMatrix& other) const {
  return regimes() == other.regimes() && rows() == other.rows() && cols() == other.cols();
}

ExpDecaySignal ExpDecaySignal::zero() { return ExpDecaySignal(); }

ExpDecaySignal ExpDecaySignal::single(double kappa, std::vector<Eigen::VectorXd> h) {
  ExpComponent c;
  c.kappa = kappa;
  c.h = std::move(h);
  return fromComponents({std::move(c)});
}

ExpDecaySignal ExpDecaySignal::fromComponents(std::vector<ExpComponent> components) {
  ExpDecaySignal sig;
  for (auto& c : components) {
    if (c.kappa <= 0.0) throw std::invalid_argument("ExpDecaySignal: kappa must be positive");
    bool allZero = true;
    for (const auto& v : c.h) {
      if (v.size() != c.h[0].size()) {
        throw std::invalid_argument("ExpDecaySignal: component vectors differ in size");
      }
      if (v.lpNorm<Eigen::Infinity>() != 0.0) allZero = false;
    }
    if (allZero) continue;
    // Merge with an existing component of the same decay rate.
    bool merged = false;
    for (auto& existing : sig.components_) {
      if (existing.kappa == c.kappa && existing.dim() == c.dim() &&
          existing.regimes() == c.regimes()) {
        for (int i = 0; i < c.regimes(); ++i) existing.h[i] += c.h[i];
        merged = true;
        break;
      }
    }
    if (!merged) sig.components_.push_back(std::move(c));
  }
  return sig;
}

double ExpDecaySignal::kappa() const {
  if (components_.size() != 1) {
    throw std::logic_error("ExpDecaySignal::kappa: signal does not have exactly one component");
  }
  return components_[0].kappa;
}

Eigen::VectorXd ExpDecaySignal::eval(double elapsed, int regime) const {
  if (components_.empty()) return Eigen::VectorXd();
  Eigen::VectorXd value = Eigen::VectorXd::Zero(components_[0].dim());
  for (const auto& c : components_) {
    value += std::exp(-c.kappa * elapsed) * c.h.at(regime);
  }
  return value;
}

ExpDecaySignal ExpDecaySignal::operator+(const ExpDecaySignal& other) const {
  std::vector<ExpComponent> all = components_;
  all.insert(all.end(), other.components_.begin(), other.components_.end());
  return fromComponents(std::move(all));
}

ExpDecaySignal ExpDecaySignal::mapped(const SwitchedMatrix& weight) const {
  std::vector<ExpComponent> out;
  out.reserve(components_.size());
  for (const auto& c : components_) {
    ExpComponent mappedComponent;
    mappedComponent.kappa = c.kappa;
    mappedComponent.h.resize(c.h.size());
    for (size_t i = 0; i < c.h.size(); ++i) {
      mappedComponent.h[i] = weight(static_cast<int>(i)) * c.h[i];
    }
    out.push_back(std::move(mappedComponent));
  }
  return fromComponents(std::move(out));
}

ExpDecaySignal ExpDecaySignal::scaled(double factor) const {
  std::vector<ExpComponent> out = components_;
  for (auto& c : out) {
    for (auto& v : c.h) v *= factor;
  }
  return fromComponents(std::move(out));
}

double ExpDecaySignal::maxNorm() const {
  double norm = 0.0;
  for (const auto& c : components_) {
    for (const auto& v : c.h) norm = std::max(norm, v.lpNorm<Eigen::Infinity>());
  }
  return norm;
}

FeedbackLaw FeedbackLaw::zero(int regimes, int n, int m) {
  FeedbackLaw law;
  law.Theta1 = SwitchedMatrix::zero(regimes, m, n);
  law.Theta2 = SwitchedMatrix::zero(regimes, m, n);
  return law;
}

namespace {
std::string joinIssues(const std::vector<std::string>& issues) {
  std::string joined = "model validation failed:";
  for (const auto& issue : issues) joined += "\n  - " + issue;
  return joined;
}
}  // namespace

ValidationError::ValidationError(std::vector<std::string> issues)
    : std::runtime_error(joinIssues(issues)), issues_(std::move(issues)) {}

SolverError::SolverError(std::string code, const std::string& message)
    : std::runtime_error(message), code_(std::move(code)) {}

}  // namespace mflq
