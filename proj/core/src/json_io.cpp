#include "mflq/json_io.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace mflq {

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw ValidationError({message});
}

SwitchedMatrix parseSwitched(const nlohmann::json& doc, const std::string& key, int m0,
                             int rows, int cols, bool required) {
  if (!doc.contains(key)) {
    if (required) fail("missing field '" + key + "'");
    return SwitchedMatrix::zero(m0, rows, cols);
  }
  const auto& arr = doc.at(key);
  if (!arr.is_array() || static_cast<int>(arr.size()) != m0) {
    fail("field '" + key + "' must be an array of " + std::to_string(m0) + " matrices");
  }
  std::vector<Eigen::MatrixXd> entries;
  entries.reserve(m0);
  for (int r = 0; r < m0; ++r) {
    const auto& flat = arr.at(r);
    if (!flat.is_array() || static_cast<int>(flat.size()) != rows * cols) {
      fail("field '" + key + "' regime " + std::to_string(r + 1) + " must hold " +
           std::to_string(rows * cols) + " numbers (row-major)");
    }
    Eigen::MatrixXd mat(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        mat(i, j) = flat.at(i * cols + j).get<double>();
      }
    }
    entries.push_back(std::move(mat));
  }
  return SwitchedMatrix(std::move(entries));
}

ExpDecaySignal parseSignal(const nlohmann::json& signals, const std::string& key,
                           double kappa, int m0, int dim) {
  if (!signals.contains(key)) return ExpDecaySignal::zero();
  const auto& arr = signals.at(key);
  if (!arr.is_array() || static_cast<int>(arr.size()) != m0) {
    fail("signal '" + key + "' must be an array of " + std::to_string(m0) + " vectors");
  }
  std::vector<Eigen::VectorXd> h(m0);
  for (int r = 0; r < m0; ++r) {
    const auto& vec = arr.at(r);
    if (!vec.is_array() || static_cast<int>(vec.size()) != dim) {
      fail("signal '" + key + "' regime " + std::to_string(r + 1) + " must hold " +
           std::to_string(dim) + " numbers");
    }
    h[r] = Eigen::VectorXd(dim);
    for (int i = 0; i < dim; ++i) h[r](i) = vec.at(i).get<double>();
  }
  return ExpDecaySignal::single(kappa, std::move(h));
}

OrderedJson flatMatrix(const Eigen::MatrixXd& mat) {
  OrderedJson flat = OrderedJson::array();
  for (int i = 0; i < mat.rows(); ++i) {
    for (int j = 0; j < mat.cols(); ++j) flat.push_back(mat(i, j));
  }
  return flat;
}

}  // namespace

MeanFieldModel modelFromJson(const nlohmann::json& doc) {
  for (const char* key : {"n", "m", "m0", "lambda"}) {
    if (!doc.contains(key)) fail(std::string("missing field '") + key + "'");
  }
  MeanFieldModel model;
  model.n = doc.at("n").get<int>();
  model.m = doc.at("m").get<int>();
  const int m0 = doc.at("m0").get<int>();
  if (model.n < 1 || model.m < 1 || m0 < 1) fail("n, m and m0 must be positive");

  const auto& lam = doc.at("lambda");
  if (!lam.is_array() || static_cast<int>(lam.size()) != m0 * m0) {
    fail("field 'lambda' must hold m0*m0 numbers (row-major)");
  }
  Eigen::MatrixXd rates(m0, m0);
  for (int i = 0; i < m0; ++i) {
    for (int j = 0; j < m0; ++j) rates(i, j) = lam.at(i * m0 + j).get<double>();
  }
  model.generator = MarkovGenerator::fromRates(rates);

  const int n = model.n;
  const int m = model.m;
  model.A = parseSwitched(doc, "A", m0, n, n, true);
  model.Abar = parseSwitched(doc, "Abar", m0, n, n, false);
  model.B = parseSwitched(doc, "B", m0, n, m, true);
  model.Bbar = parseSwitched(doc, "Bbar", m0, n, m, false);
  model.C = parseSwitched(doc, "C", m0, n, n, false);
  model.Cbar = parseSwitched(doc, "Cbar", m0, n, n, false);
  model.D = parseSwitched(doc, "D", m0, n, m, false);
  model.Dbar = parseSwitched(doc, "Dbar", m0, n, m, false);
  model.Q = parseSwitched(doc, "Q", m0, n, n, true);
  model.Qbar = parseSwitched(doc, "Qbar", m0, n, n, false);
  model.S = parseSwitched(doc, "S", m0, m, n, false);
  model.Sbar = parseSwitched(doc, "Sbar", m0, m, n, false);
  model.R = parseSwitched(doc, "R", m0, m, m, true);
  model.Rbar = parseSwitched(doc, "Rbar", m0, m, m, false);

  if (doc.contains("signals")) {
    const auto& signals = doc.at("signals");
    if (!signals.contains("kappa")) fail("signals block requires 'kappa'");
    const double kappa = signals.at("kappa").get<double>();
    if (kappa <= 0.0) fail("signals.kappa must be positive");
    model.b = parseSignal(signals, "b", kappa, m0, n);
    model.sigma = parseSignal(signals, "sigma", kappa, m0, n);
    model.q = parseSignal(signals, "q", kappa, m0, n);
    model.qbar = parseSignal(signals, "qbar", kappa, m0, n);
    model.r = parseSignal(signals, "r", kappa, m0, m);
    model.rbar = parseSignal(signals, "rbar", kappa, m0, m);
  }

  if (doc.contains("init_feedback")) {
    const auto& fb = doc.at("init_feedback");
    model.initFeedback.Theta1 = parseSwitched(fb, "Theta1", m0, m, n, true);
    model.initFeedback.Theta2 = parseSwitched(fb, "Theta2", m0, m, n, true);
    model.hasInitFeedback = true;
  }
  return model;
}

MeanFieldModel loadModelFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open model file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& err) {
    fail("model file '" + path + "' is not valid JSON: " + err.what());
  }
  return validateModel(modelFromJson(doc));
}

OrderedJson switchedToJson(const SwitchedMatrix& mat) {
  OrderedJson arr = OrderedJson::array();
  for (int r = 0; r < mat.regimes(); ++r) arr.push_back(flatMatrix(mat(r)));
  return arr;
}

OrderedJson signalToJson(const ExpDecaySignal& sig) {
  OrderedJson components = OrderedJson::array();
  for (const auto& c : sig.components()) {
    OrderedJson entry;
    entry["kappa"] = c.kappa;
    OrderedJson vectors = OrderedJson::array();
    for (const auto& v : c.h) {
      OrderedJson vec = OrderedJson::array();
      for (int i = 0; i < v.size(); ++i) vec.push_back(v(i));
      vectors.push_back(std::move(vec));
    }
    entry["h"] = std::move(vectors);
    components.push_back(std::move(entry));
  }
  return components;
}

OrderedJson decomposedToJson(const DecomposedModel& dm) {
  OrderedJson doc;
  doc["n"] = dm.n;
  doc["m"] = dm.m;
  doc["m0"] = dm.generator.m0;
  doc["lambda"] = flatMatrix(dm.generator.lambda);
  doc["A1"] = switchedToJson(dm.A1);
  doc["A2"] = switchedToJson(dm.A2);
  doc["B1"] = switchedToJson(dm.B1);
  doc["B2"] = switchedToJson(dm.B2);
  doc["C1"] = switchedToJson(dm.C1);
  doc["C2"] = switchedToJson(dm.C2);
  doc["D1"] = switchedToJson(dm.D1);
  doc["D2"] = switchedToJson(dm.D2);
  doc["Q1"] = switchedToJson(dm.Q1);
  doc["Q2"] = switchedToJson(dm.Q2);
  doc["S1"] = switchedToJson(dm.S1);
  doc["S2"] = switchedToJson(dm.S2);
  doc["R1"] = switchedToJson(dm.R1);
  doc["R2"] = switchedToJson(dm.R2);
  doc["q2"] = signalToJson(dm.q2);
  doc["r2"] = signalToJson(dm.r2);
  doc["b2"] = signalToJson(dm.b2);
  doc["sigma2"] = signalToJson(dm.sigma2);
  return doc;
}

OrderedJson certificateToJson(const StabilityCertificate& cert) {
  OrderedJson doc;
  doc["is_stable"] = cert.isStable;
  doc["marginal"] = cert.marginal;
  doc["abscissa"] = cert.abscissa;
  doc["margin"] = cert.pdMargin;
  if (cert.hasLyapunov) {
    doc["lyapunov_P1"] = switchedToJson(cert.lyapunovP1);
    doc["lyapunov_P2"] = switchedToJson(cert.lyapunovP2);
  }
  return doc;
}

OrderedJson riccatiSolutionToJson(const RiccatiSolution& sol) {
  OrderedJson doc;
  doc["delta"] = sol.delta;
  doc["P1"] = switchedToJson(sol.P1);
  doc["P2"] = switchedToJson(sol.P2);
  doc["Theta1"] = switchedToJson(sol.Theta1);
  doc["Theta2"] = switchedToJson(sol.Theta2);
  doc["residual"] = sol.residualNorm;
  doc["semidef_margin"] = sol.semidefMargin;
  doc["iterations"] = sol.iterations;
  doc["abscissa"] = sol.certificate.abscissa;
  return doc;
}

OrderedJson sweepToJson(const SweepResult& sweep) {
  OrderedJson rows = OrderedJson::array();
  for (const auto& row : sweep.rows) {
    OrderedJson entry;
    entry["delta"] = row.delta;
    entry["solved"] = row.solved;
    if (!row.solved) entry["failure"] = row.failureCode;
    entry["normP"] = row.normP;
    entry["normTheta"] = row.normTheta;
    entry["margin"] = row.semidefMargin;
    if (!std::isnan(row.valueProbe)) entry["V_probe"] = row.valueProbe;
    rows.push_back(std::move(entry));
  }
  OrderedJson doc;
  doc["rows"] = std::move(rows);
  doc["blowup"] = sweep.blowup;
  doc["p_bounded"] = sweep.pBounded;
  doc["all_solved"] = sweep.allSolved;
  doc["cauchy"] = sweep.cauchy;
  if (!std::isnan(sweep.lastGap)) doc["last_gap"] = sweep.lastGap;
  return doc;
}

OrderedJson solvabilityToJson(const SolvabilityReport& report) {
  OrderedJson doc;
  doc["verdict"] = toString(report.verdict);
  doc["blowup"] = report.blowup;
  doc["diagnostics"] = report.diagnostics;
  doc["sweep"] = sweepToJson(report.sweep);
  OrderedJson limit;
  limit["success"] = report.limit.success;
  if (!report.limit.failureCause.empty()) limit["failure_cause"] = report.limit.failureCause;
  limit["range_residual"] = report.limit.rangeResidual;
  if (!report.limit.rangeOk.empty()) {
    OrderedJson flags = OrderedJson::array();
    for (const auto& channel : report.limit.rangeOk) {
      OrderedJson perRegime = OrderedJson::array();
      for (bool ok : channel) perRegime.push_back(ok);
      flags.push_back(std::move(perRegime));
    }
    limit["range_ok"] = std::move(flags);
  }
  if (report.limit.haveCandidate) limit["solution"] = riccatiSolutionToJson(report.limit.solution);
  doc["limit"] = std::move(limit);
  return doc;
}

OrderedJson adjointToJson(const AdjointSolution& adj, const FeedbackLaw& offsets) {
  OrderedJson doc;
  doc["pibar1"] = signalToJson(adj.pibar1);
  doc["pibar2"] = signalToJson(adj.pibar2);
  doc["eta_zero"] = adj.etaZero;
  doc["residual"] = adj.residual;
  doc["offset1"] = signalToJson(offsets.offset1);
  doc["offset2"] = signalToJson(offsets.offset2);
  return doc;
}

std::string contentHash(const std::string& bytes) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char byte : bytes) {
    hash ^= byte;
    hash *= 1099511628211ull;
  }
  std::ostringstream hex;
  hex << std::hex << hash;
  return hex.str();
}

}  // namespace mflq
