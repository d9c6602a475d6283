#include "combforge/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <locale>
#include <sstream>

namespace combforge::io {

double round12(double x) {
  if (!std::isfinite(x) || x == 0.0) return x;
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(12) << x;
  return std::stod(os.str());
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << std::setprecision(12) << x;
  return os.str();
}

json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return round12(x);
}

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorKind::invalid_input, what); }

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field \"") + key + "\"");
  return j.at(key);
}

int as_int(const json& j, const char* what) {
  if (!j.is_number_integer()) bad(std::string(what) + " must be an integer");
  return j.get<int>();
}

std::vector<double> as_weights(const json& j) {
  if (!j.is_array()) bad("weights must be an array");
  std::vector<double> w;
  for (const auto& x : j) {
    if (!x.is_number()) bad("weights must be numbers");
    w.push_back(x.get<double>());
  }
  return w;
}

json weights_json(const std::vector<double>& w) {
  json a = json::array();
  for (double x : w) a.push_back(number(x));
  return a;
}

json operator_list(const std::vector<HermitianOperator>& ops) {
  json a = json::array();
  for (const auto& op : ops) a.push_back(to_json(op));
  return a;
}

json double_list(const std::vector<double>& v) { return weights_json(v); }

}  // namespace

json to_json(const HermitianOperator& op) {
  json systems = json::array();
  for (const auto& s : op.signature().systems()) systems.push_back({{"index", s.index}, {"dim", s.dim}});
  json entries = json::array();
  const auto& m = op.matrix();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) entries.push_back({number(m(r, c).real()), number(m(r, c).imag())});
  return {{"systems", systems}, {"matrix", entries}};
}

HermitianOperator operator_from_json(const json& j) {
  const auto& systems = field(j, "systems");
  if (!systems.is_array()) bad("systems must be an array");
  std::vector<System> sys;
  for (const auto& s : systems) {
    const int index = as_int(field(s, "index"), "system index");
    const int dim = as_int(field(s, "dim"), "system dim");
    if (index < 0 || dim < 1) bad("system index must be >= 0 and dim >= 1");
    sys.push_back({index, dim});
  }
  Signature sig(std::move(sys));
  const auto d = static_cast<Eigen::Index>(sig.total_dim());
  const auto& entries = field(j, "matrix");
  if (!entries.is_array() || static_cast<Eigen::Index>(entries.size()) != d * d) {
    bad("matrix must hold " + std::to_string(d * d) + " [re, im] entries");
  }
  Matrix m(d, d);
  for (Eigen::Index k = 0; k < d * d; ++k) {
    const auto& e = entries[static_cast<std::size_t>(k)];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) bad("matrix entries must be [re, im]");
    m(k / d, k % d) = Complex(e[0].get<double>(), e[1].get<double>());
  }
  return HermitianOperator(std::move(sig), std::move(m));
}

json to_json(const QuantumComb& comb) {
  json j = to_json(comb.choi);
  j["slots"] = comb.slots;
  return j;
}

QuantumComb comb_from_json(const json& j) {
  return validate_comb(operator_from_json(j), as_int(field(j, "slots"), "slots"));
}

json to_json(const QuantumTester& tester) {
  return {{"slots", tester.slots}, {"effects", operator_list(tester.effects)}};
}

QuantumTester tester_from_json(const json& j) {
  const int slots = as_int(field(j, "slots"), "slots");
  const auto& effects = field(j, "effects");
  if (!effects.is_array() || effects.empty()) bad("effects must be a non-empty array");
  std::vector<HermitianOperator> ops;
  for (const auto& e : effects) ops.push_back(operator_from_json(e));
  return validate_tester(ops, slots);
}

json to_json(const TesterCollection& collection) {
  json a = json::array();
  for (const auto& t : collection.testers) a.push_back(to_json(t));
  return {{"testers", a}};
}

TesterCollection collection_from_json(const json& j) {
  const auto& testers = field(j, "testers");
  if (!testers.is_array() || testers.empty()) bad("testers must be a non-empty array");
  std::vector<QuantumTester> out;
  for (const auto& t : testers) out.push_back(tester_from_json(t));
  return make_collection(std::move(out));
}

json to_json(const CombEnsemble& ensemble) {
  json a = json::array();
  for (const auto& c : ensemble.combs) a.push_back(to_json(c));
  return {{"weights", weights_json(ensemble.weights)}, {"combs", a}};
}

CombEnsemble ensemble_from_json(const json& j) {
  const auto& combs = field(j, "combs");
  if (!combs.is_array()) bad("combs must be an array");
  std::vector<QuantumComb> out;
  for (const auto& c : combs) out.push_back(comb_from_json(c));
  return make_ensemble(std::move(out), as_weights(field(j, "weights")));
}

json to_json(const EnsembleCollection& games) {
  json a = json::array();
  for (const auto& e : games.ensembles) a.push_back(to_json(e));
  return {{"weights", weights_json(games.weights)}, {"ensembles", a}};
}

EnsembleCollection ensemble_collection_from_json(const json& j) {
  const auto& ensembles = field(j, "ensembles");
  if (!ensembles.is_array() || ensembles.empty()) bad("ensembles must be a non-empty array");
  std::vector<CombEnsemble> out;
  for (const auto& e : ensembles) out.push_back(ensemble_from_json(e));
  return make_ensemble_collection(std::move(out), as_weights(field(j, "weights")));
}

json to_json(const SdpHealth& h) {
  return {{"status", to_string(h.status)},
          {"gap", number(h.gap)},
          {"primal_residual", number(h.primal_residual)},
          {"dual_residual", number(h.dual_residual)},
          {"complementary_slackness", number(h.complementary_slackness)},
          {"iterations", h.iterations},
          {"message", h.message}};
}

json to_json(const RobustnessCertificate& cert, bool include_blocks) {
  json j = {{"value", number(cert.value)},
            {"scale", number(cert.scale)},
            {"dual_objective", number(cert.dual_objective)},
            {"dual_bound_pairing", number(cert.dual_bound_pairing)},
            {"dual_constraint_margin", number(cert.dual_constraint_margin)},
            {"noise_testers_valid", cert.noise_testers_valid},
            {"noise_testers_coincide", cert.noise_testers_coincide},
            {"vectors", cert.vectors},
            {"health", to_json(cert.health)},
            {"diagnostics", cert.diagnostics}};
  if (include_blocks) {
    json blocks = json::object();
    for (std::size_t i = 0; i < cert.parent_blocks.size(); ++i) blocks["Q" + std::to_string(i)] = to_json(cert.parent_blocks[i]);
    const std::size_t n = cert.chain_blocks.size();
    for (std::size_t k = 0; k < n; ++k) blocks["Theta" + std::to_string(n - k)] = to_json(cert.chain_blocks[k]);
    j["blocks"] = blocks;
    json duals = json::array();
    for (const auto& row : cert.dual_effects) duals.push_back(operator_list(row));
    j["dual_effects"] = duals;
    if (cert.noise_testers) j["noise_testers"] = to_json(*cert.noise_testers);
  }
  return j;
}

json to_json(const WeightCertificate& cert, bool include_blocks) {
  json j = {{"value", number(cert.value)},
            {"free_fraction", number(cert.free_fraction)},
            {"witness_objective", number(cert.witness_objective)},
            {"min_remainder_eigenvalue", number(cert.min_remainder_eigenvalue)},
            {"vectors", cert.vectors},
            {"health", to_json(cert.health)},
            {"diagnostics", cert.diagnostics}};
  if (include_blocks) {
    json blocks = json::object();
    for (std::size_t i = 0; i < cert.generators.size(); ++i) blocks["G" + std::to_string(i)] = to_json(cert.generators[i]);
    const std::size_t n = cert.chain_blocks.size();
    for (std::size_t k = 0; k < n; ++k) blocks["Theta" + std::to_string(n - k)] = to_json(cert.chain_blocks[k]);
    j["blocks"] = blocks;
    json witness = json::array();
    for (const auto& row : cert.witness) witness.push_back(operator_list(row));
    j["witness"] = witness;
  }
  return j;
}

json to_json(const CompatibilityResult& r) {
  json j = {{"verdict", to_string(r.verdict)},
            {"stage", r.stage},
            {"chain_disagreement", number(r.chain_disagreement)},
            {"parent_validated", r.parent_validated}};
  if (r.stage == "feasibility") {
    j["feasibility"] = {{"verdict", to_string(r.feasibility.verdict)},
                        {"violation", number(r.feasibility.violation)},
                        {"threshold_feasible", number(r.feasibility.threshold_feasible)},
                        {"threshold_infeasible", number(r.feasibility.threshold_infeasible)},
                        {"interior_margin", number(r.feasibility.interior_margin)},
                        {"strictly_interior", r.feasibility.strictly_interior},
                        {"solver_status", to_string(r.feasibility.solver_status)},
                        {"gap", number(r.feasibility.gap)}};
  }
  if (r.parent) {
    j["parent"] = to_json(*r.parent);
    j["postprocessing"] = r.postprocessing;
  }
  return j;
}

json to_json(const SlaterReport& r) {
  return {{"family", r.family},
          {"primal_strict", r.primal_strict},
          {"dual_strict", r.dual_strict},
          {"primal_margin", number(r.primal_margin)},
          {"primal_residual", number(r.primal_residual)},
          {"dual_margin", number(r.dual_margin)},
          {"dual_residual", number(r.dual_residual)}};
}

json to_json(const GameReport& r, bool include_ensemble) {
  json bounds = json::array();
  for (const auto& b : r.bounds) {
    json e = {{"index", b.index},
              {"seed", b.seed},
              {"incompatible_value", number(b.incompatible_value)},
              {"compatible_value", number(b.compatible_value)},
              {"ratio", number(b.ratio)},
              {"violated", b.violated}};
    if (r.theorem == "exclusion") e["success_ratio"] = number(b.side_ratio);
    bounds.push_back(e);
  }
  json checks = json::array();
  for (const auto& row : r.witness.checks) {
    json a = json::array();
    for (const auto& c : row) {
      a.push_back({{"valid", c.valid},
                   {"placeholder", c.placeholder},
                   {"min_eigenvalue", number(c.min_eigenvalue)},
                   {"max_chain_residual", number(c.max_chain_residual)}});
    }
    checks.push_back(a);
  }
  json j = {{"game", r.theorem},
            {"measure", number(r.measure)},
            {"incompatible_value", number(r.incompatible_value)},
            {"compatible_value", number(r.compatible_value)},
            {"ratio", number(r.ratio)},
            {"predicted_ratio", number(r.predicted_ratio)},
            {"degenerate", r.degenerate},
            {"exact_checked", r.exact_checked},
            {"exact_ok", r.exact_ok},
            {"witness_valid", r.witness_valid},
            {"witness_checks", checks},
            {"bound_checks", bounds},
            {"bound_violations", r.bound_violations},
            {"worst_bound_margin", number(r.worst_bound_margin)},
            {"health", to_json(r.health)},
            {"diagnostics", r.diagnostics}};
  if (!r.exclusion_convention.empty()) j["exclusion_convention"] = r.exclusion_convention;
  if (include_ensemble && !r.witness.games.ensembles.empty()) j["witness_ensemble"] = to_json(r.witness.games);
  return j;
}

json to_json(const TesterResiduals& r) {
  return {{"effect_min_eigenvalues", double_list(r.effect_min_eigenvalues)},
          {"levels", double_list(r.levels)},
          {"probe_trace_error", number(r.probe_trace_error)}};
}

json to_json(const CombResiduals& r) {
  return {{"min_eigenvalue", number(r.min_eigenvalue)}, {"levels", double_list(r.levels)}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    bad(path.string() + ": " + e.what());
  }
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const auto tmp = dir / ("." + path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::invalid_input, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::invalid_input, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace combforge::io
