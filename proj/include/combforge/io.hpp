#pragma once

// JSON interchange for operators, combs, testers, ensembles and reports.
//
// Operator: {"systems":[{"index":0,"dim":2},...], "matrix":[[re,im],...]}
//   with the matrix flattened row-major.
// Comb: operator fields plus "slots".
// Tester: {"slots":n, "effects":[operator,...]}.
// Collection: {"testers":[tester,...]}.
// Ensemble: {"weights":[...], "combs":[comb,...]}.
// Ensemble collection: {"weights":[...], "ensembles":[ensemble,...]}.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "combforge/games.hpp"
#include "combforge/incompat.hpp"

namespace combforge::io {

using json = nlohmann::json;

inline constexpr const char* kLibraryVersion = "0.1.0";

/// Rounds to 12 significant digits; non-finite values pass through.
double round12(double x);
/// Locale-independent 12-significant-digit text; "nan" / "inf" for non-finite values.
std::string format_number(double x);
/// JSON number rounded to 12 digits, or null when not finite.
json number(double x);

json to_json(const HermitianOperator& op);
HermitianOperator operator_from_json(const json& j);

json to_json(const QuantumComb& comb);
/// Validates the chain.
QuantumComb comb_from_json(const json& j);

json to_json(const QuantumTester& tester);
/// Validates effects and normalization chain.
QuantumTester tester_from_json(const json& j);

json to_json(const TesterCollection& collection);
TesterCollection collection_from_json(const json& j);

json to_json(const CombEnsemble& ensemble);
CombEnsemble ensemble_from_json(const json& j);

json to_json(const EnsembleCollection& games);
EnsembleCollection ensemble_collection_from_json(const json& j);

json to_json(const SdpHealth& health);
json to_json(const RobustnessCertificate& cert, bool include_blocks = true);
json to_json(const WeightCertificate& cert, bool include_blocks = true);
json to_json(const CompatibilityResult& result);
json to_json(const SlaterReport& report);
json to_json(const GameReport& report, bool include_ensemble = true);
json to_json(const TesterResiduals& residuals);
json to_json(const CombResiduals& residuals);

json read_json_file(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace combforge::io
