#pragma once

#include <string>

#include <json.hpp>

#include "mflq/adjoint.hpp"
#include "mflq/model.hpp"
#include "mflq/riccati.hpp"

namespace mflq {

using OrderedJson = nlohmann::ordered_json;

/// Parses the model document: scalars n, m, m0, the generator `lambda` as a
/// flat row-major array, each coefficient family as an array of m0 row-major
/// matrices, an optional `signals` object {kappa, b, sigma, q, qbar, r, rbar}
/// with per-regime vectors, and an optional `init_feedback` {Theta1, Theta2}
/// stabilizer. Throws ValidationError on malformed input.
MeanFieldModel modelFromJson(const nlohmann::json& doc);

/// Reads, parses and validates a model file.
MeanFieldModel loadModelFile(const std::string& path);

OrderedJson switchedToJson(const SwitchedMatrix& mat);
OrderedJson signalToJson(const ExpDecaySignal& sig);
OrderedJson decomposedToJson(const DecomposedModel& dm);
OrderedJson riccatiSolutionToJson(const RiccatiSolution& sol);
OrderedJson certificateToJson(const StabilityCertificate& cert);
OrderedJson sweepToJson(const SweepResult& sweep);
OrderedJson solvabilityToJson(const SolvabilityReport& report);
OrderedJson adjointToJson(const AdjointSolution& adj, const FeedbackLaw& offsets);

/// FNV-1a 64-bit content hash, hex-encoded; identifies input files in run
/// manifests.
std::string contentHash(const std::string& bytes);

}  // namespace mflq
