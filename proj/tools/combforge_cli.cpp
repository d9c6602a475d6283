#include <chrono>
#include <ctime>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "combforge/games.hpp"
#include "combforge/io.hpp"
#include "combforge/kernels.hpp"
#include "combforge/random.hpp"

using namespace combforge;
using combforge::io::json;

namespace {

enum Exit { kOk = 0, kValidation = 2, kSolver = 3, kCap = 4 };

struct Config {
  std::string command;
  std::uint64_t seed = 1;
  std::string collection, tester, comb, ensembles;
  std::string out, csv;
  std::size_t cap_outcomes = 64;
  std::size_t cap_guesses = 81;
  std::size_t cap_dim = 64;
  double tolerance_gap = 1e-7;
  double ratio_tolerance = 1e-4;
  bool random = false;
  int slots = 1;
  std::size_t outcomes = 2;
  std::size_t testers = 2;
  bool probe_trivial = false;
  bool relaxed_exclusion = false;
  std::size_t instances = 1;
  std::size_t bound_ensembles = 20;
};

struct Outcome {
  json result;
  int exit_code = kOk;
  std::vector<std::vector<std::string>> csv;
};

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::cap_exceeded:
      return kCap;
    case ErrorKind::numerical_failure:
    case ErrorKind::zero_dual:
    case ErrorKind::degenerate_robustness:
      return kSolver;
    default:
      return kValidation;
  }
}

json config_json(const Config& c) {
  json j = {{"seed", c.seed},
            {"cap_outcomes", c.cap_outcomes},
            {"cap_guesses", c.cap_guesses},
            {"cap_dim", c.cap_dim},
            {"random", c.random},
            {"instances", c.instances},
            {"bound_ensembles", c.bound_ensembles},
            {"relaxed_exclusion", c.relaxed_exclusion}};
  if (c.random) {
    j["slots"] = c.slots;
    j["outcomes"] = c.outcomes;
    j["testers"] = c.testers;
    j["probe_trivial"] = c.probe_trivial;
  }
  for (const auto& [key, value] : {std::pair<const char*, const std::string*>{"collection", &c.collection},
                                   {"tester", &c.tester},
                                   {"comb", &c.comb},
                                   {"ensembles", &c.ensembles}}) {
    if (!value->empty()) j[key] = *value;
  }
  return j;
}

SolverOptions solver_options(const Config& c) {
  SolverOptions s;
  s.ipm.accept_gap = c.tolerance_gap;
  s.ipm.tolerance = std::min(s.ipm.tolerance, c.tolerance_gap);
  return s;
}

json tolerances_json(const Config& c) {
  const auto s = solver_options(c);
  const Tolerances t;
  return {{"ipm_tolerance", io::number(s.ipm.tolerance)},
          {"accept_gap", io::number(s.ipm.accept_gap)},
          {"accept_infeasibility", io::number(s.ipm.accept_infeasibility)},
          {"ratio", io::number(c.ratio_tolerance)},
          {"hermiticity", io::number(t.hermiticity)},
          {"psd", io::number(t.psd)},
          {"chain", io::number(t.chain)},
          {"channel", io::number(t.channel)}};
}

GameOptions game_options(const Config& c, std::uint64_t seed) {
  GameOptions g;
  g.cap_outcomes = c.cap_outcomes;
  g.cap_guesses = c.cap_guesses;
  g.solver = solver_options(c);
  g.random_ensembles = c.bound_ensembles;
  g.seed = seed;
  g.relaxed_exclusion = c.relaxed_exclusion;
  g.ratio_tolerance = c.ratio_tolerance;
  return g;
}

IncompatOptions incompat_options(const Config& c) { return {c.cap_outcomes, solver_options(c)}; }

TesterCollection random_collection(const Config& c, std::uint64_t seed) {
  std::vector<int> dims(static_cast<std::size_t>(2 * c.slots));
  for (std::size_t i = 0; i < dims.size(); ++i) dims[i] = (c.probe_trivial && i % 2 == 0) ? 1 : 2;
  const std::vector<int> memory(static_cast<std::size_t>(c.slots), c.probe_trivial ? 1 : 2);
  Rng rng(seed);
  std::vector<QuantumTester> t;
  const Signature effect({{1, 2}});
  for (std::size_t i = 0; i < c.testers; ++i) {
    if (c.probe_trivial && c.slots == 1 && c.outcomes == 2) {
      t.push_back(probe_trivial_tester(random_projective_povm(effect, rng)));
    } else {
      t.push_back(random_tester(dims, c.outcomes, memory, rng));
    }
  }
  return make_collection(std::move(t));
}

void check_dim_cap(const Config& c, const TesterCollection& t) {
  const auto d = t.signature().total_dim();
  if (d > c.cap_dim) {
    throw Error(ErrorKind::cap_exceeded,
                "tester dimension " + std::to_string(d) + " exceeds cap " + std::to_string(c.cap_dim));
  }
}

TesterCollection load_collection(const Config& c, std::uint64_t seed) {
  TesterCollection t;
  if (!c.collection.empty()) {
    t = io::collection_from_json(io::read_json_file(c.collection));
  } else if (c.random) {
    t = random_collection(c, seed);
  } else {
    throw Error(ErrorKind::invalid_input, "need --collection or --random");
  }
  check_dim_cap(c, t);
  return t;
}

EnsembleCollection load_ensembles(const Config& c, const TesterCollection& t, std::uint64_t seed) {
  if (!c.ensembles.empty()) return io::ensemble_collection_from_json(io::read_json_file(c.ensembles));
  if (!c.random) throw Error(ErrorKind::invalid_input, "need --ensembles or --random");
  return random_ensemble_collection(comb_signature_for(t.signature()), t.size(), t.outcomes(), seed ^ 0x5bd1e995ULL);
}

json error_json(const Error& e) {
  json j = {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}};
  if (e.level() >= 0) j["level"] = e.level();
  return j;
}

// validate

json check_tester(const json& j, bool& ok) {
  json r = {{"kind", "tester"}};
  try {
    const int slots = j.at("slots").get<int>();
    std::vector<HermitianOperator> effects;
    for (const auto& e : j.at("effects")) effects.push_back(io::operator_from_json(e));
    if (effects.empty()) throw Error(ErrorKind::invalid_input, "tester has no effects");
    try {
      r["residuals"] = io::to_json(tester_residuals(effects, slots));
    } catch (const Error&) {
    }
    validate_tester(effects, slots);
    r["valid"] = true;
  } catch (const Error& e) {
    r["valid"] = false;
    r["error"] = error_json(e);
    ok = false;
  } catch (const json::exception& e) {
    r["valid"] = false;
    r["error"] = {{"kind", "invalid_input"}, {"message", e.what()}};
    ok = false;
  }
  return r;
}

json check_comb(const json& j, bool& ok) {
  json r = {{"kind", "comb"}};
  try {
    const int slots = j.at("slots").get<int>();
    const auto op = io::operator_from_json(j);
    try {
      r["residuals"] = io::to_json(comb_residuals(op, slots));
    } catch (const Error&) {
    }
    validate_comb(op, slots);
    r["valid"] = true;
  } catch (const Error& e) {
    r["valid"] = false;
    r["error"] = error_json(e);
    ok = false;
  } catch (const json::exception& e) {
    r["valid"] = false;
    r["error"] = {{"kind", "invalid_input"}, {"message", e.what()}};
    ok = false;
  }
  return r;
}

Outcome cmd_validate(const Config& c) {
  Outcome o;
  bool ok = true;
  json items = json::array();
  if (!c.tester.empty()) items.push_back(check_tester(io::read_json_file(c.tester), ok));
  if (!c.comb.empty()) items.push_back(check_comb(io::read_json_file(c.comb), ok));
  if (!c.collection.empty()) {
    const auto j = io::read_json_file(c.collection);
    json members = json::array();
    if (!j.contains("testers") || !j["testers"].is_array()) throw Error(ErrorKind::invalid_input, "missing testers array");
    for (const auto& t : j["testers"]) members.push_back(check_tester(t, ok));
    json entry = {{"kind", "collection"}, {"members", members}};
    if (ok) {
      try {
        io::collection_from_json(j);
      } catch (const Error& e) {
        ok = false;
        entry["error"] = error_json(e);
      }
    }
    entry["valid"] = ok;
    items.push_back(entry);
  }
  if (!c.ensembles.empty()) {
    json entry = {{"kind", "ensembles"}};
    try {
      const auto g = io::ensemble_collection_from_json(io::read_json_file(c.ensembles));
      entry["valid"] = true;
      entry["ensembles"] = g.size();
      entry["combs_per_ensemble"] = g.combs_per_ensemble();
    } catch (const Error& e) {
      ok = false;
      entry["valid"] = false;
      entry["error"] = error_json(e);
    }
    items.push_back(entry);
  }
  if (items.empty()) throw Error(ErrorKind::invalid_input, "validate needs --tester, --comb, --collection or --ensembles");
  o.result = {{"valid", ok}, {"items", items}};
  o.exit_code = ok ? kOk : kValidation;
  return o;
}

// certification

Outcome cmd_robustness(const Config& c) {
  Outcome o;
  const auto t = load_collection(c, c.seed);
  const auto cert = robustness(t, incompat_options(c));
  o.result = {{"collection", io::to_json(t)},
              {"robustness", io::to_json(cert)},
              {"slater", io::to_json(robustness_slater(t, c.cap_outcomes))}};
  o.exit_code = cert.solved() ? kOk : kSolver;
  o.csv.push_back({"0", io::format_number(cert.value), "", io::format_number(1.0 + cert.value),
                   io::format_number(cert.health.gap), "", ""});
  return o;
}

Outcome cmd_weight(const Config& c) {
  Outcome o;
  const auto t = load_collection(c, c.seed);
  const auto cert = convex_weight(t, incompat_options(c));
  o.result = {{"collection", io::to_json(t)},
              {"weight", io::to_json(cert)},
              {"slater", io::to_json(weight_slater(t, c.cap_outcomes))}};
  o.exit_code = cert.solved() ? kOk : kSolver;
  o.csv.push_back({"0", io::format_number(cert.value), "", io::format_number(1.0 - cert.value),
                   io::format_number(cert.health.gap), "", ""});
  return o;
}

Outcome cmd_compatible(const Config& c) {
  Outcome o;
  const auto t = load_collection(c, c.seed);
  const auto r = is_compatible_collection(t, incompat_options(c));
  o.result = {{"collection", io::to_json(t)}, {"compatibility", io::to_json(r)}};
  o.exit_code = r.verdict == CompatibilityVerdict::undecided ? kSolver : kOk;
  return o;
}

Outcome cmd_theorem(const Config& c, bool first) {
  Outcome o;
  json instances = json::array();
  std::size_t exact_failures = 0, violations = 0, unsolved = 0;
  for (std::size_t i = 0; i < c.instances; ++i) {
    const std::uint64_t seed = c.seed + i;
    const auto t = load_collection(c, seed);
    const auto start = std::chrono::steady_clock::now();
    const auto rep = first ? verify_theorem1(t, game_options(c, seed)) : verify_theorem2(t, game_options(c, seed));
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (rep.health.status != SolveStatus::optimal) ++unsolved;
    if (rep.exact_checked && !rep.exact_ok) ++exact_failures;
    violations += rep.bound_violations;
    json entry = {{"instance", i}, {"seed", seed}, {"report", io::to_json(rep)}};
    if (!c.random || c.instances == 1) entry["collection"] = io::to_json(t);
    instances.push_back(entry);
    o.csv.push_back({std::to_string(i), io::format_number(rep.measure), io::format_number(rep.ratio),
                     io::format_number(rep.predicted_ratio), io::format_number(rep.health.gap),
                     rep.witness_valid ? "true" : "false", io::format_number(wall)});
  }
  o.result = {{"theorem", first ? "theorem1" : "theorem2"},
              {"instances", instances},
              {"summary",
               {{"count", c.instances},
                {"exact_failures", exact_failures},
                {"bound_violations", violations},
                {"unsolved", unsolved}}}};
  o.exit_code = unsolved ? kSolver : kOk;
  return o;
}

json strategy_json(const QcdStrategy& s) { return {{"choice", s.choice}, {"guess", s.guess}}; }

Outcome cmd_game(const Config& c) {
  Outcome o;
  const auto t = load_collection(c, c.seed);
  const auto g = load_ensembles(c, t, c.seed);
  QcdStrategy s;
  const double inc = qcd_value_incompatible(g, t, &s);
  const double comp = qcd_value_compatible(g, game_options(c, c.seed));
  o.result = {{"game", "discrimination"},
              {"incompatible_value", io::number(inc)},
              {"compatible_value", io::number(comp)},
              {"ratio", io::number(comp > 1e-12 ? inc / comp : std::numeric_limits<double>::quiet_NaN())},
              {"strategy", strategy_json(s)},
              {"collection", io::to_json(t)},
              {"ensembles", io::to_json(g)}};
  return o;
}

Outcome cmd_exclusion(const Config& c) {
  Outcome o;
  const auto t = load_collection(c, c.seed);
  const auto g = load_ensembles(c, t, c.seed);
  const double inc = exclusion_value(g, t, c.relaxed_exclusion);
  const double comp = exclusion_value_compatible(g, game_options(c, c.seed));
  o.result = {{"game", "exclusion"},
              {"convention", c.relaxed_exclusion ? "relaxed (exploratory): player picks the tester per ensemble"
                                                 : "matched: tester beta answers ensemble beta; error when outcome b "
                                                   "names the comb sent"},
              {"incompatible_error", io::number(inc)},
              {"compatible_error", io::number(comp)},
              {"incompatible_success", io::number(1.0 - inc)},
              {"compatible_success", io::number(1.0 - comp)},
              {"ratio", io::number(comp > 1e-12 ? inc / comp : std::numeric_limits<double>::quiet_NaN())},
              {"collection", io::to_json(t)},
              {"ensembles", io::to_json(g)}};
  return o;
}

TesterCollection sharp_mub_pair() {
  const Signature effect({{1, 2}});
  Matrix x(2, 2), z(2, 2);
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  const Matrix eye = Matrix::Identity(2, 2);
  std::vector<QuantumTester> t;
  for (const Matrix* s : {&x, &z}) {
    t.push_back(probe_trivial_tester(
        make_povm({HermitianOperator(effect, (eye + *s) / 2.0), HermitianOperator(effect, (eye - *s) / 2.0)})));
  }
  return make_collection(std::move(t));
}

Outcome cmd_demo(const Config& c) {
  Outcome o;
  const auto t = sharp_mub_pair();
  const auto io_opts = incompat_options(c);
  const auto compat = is_compatible_collection(t, io_opts);
  const auto r = robustness(t, io_opts);
  const auto w = convex_weight(t, io_opts);
  const auto t1 = verify_theorem1(t, game_options(c, c.seed));
  const auto t2 = verify_theorem2(t, game_options(c, c.seed));
  o.result = {{"instance", "sharp qubit X/Z measurements behind a trivial probe"},
              {"collection", io::to_json(t)},
              {"compatibility", io::to_json(compat)},
              {"robustness", io::to_json(r, false)},
              {"weight", io::to_json(w, false)},
              {"theorem1", io::to_json(t1)},
              {"theorem2", io::to_json(t2)}};
  const bool solved = r.solved() && w.solved() && t1.health.status == SolveStatus::optimal &&
                      t2.health.status == SolveStatus::optimal;
  o.exit_code = solved ? kOk : kSolver;
  return o;
}

Outcome dispatch(const Config& c) {
  if (c.command == "validate") return cmd_validate(c);
  if (c.command == "robustness") return cmd_robustness(c);
  if (c.command == "weight") return cmd_weight(c);
  if (c.command == "compatible") return cmd_compatible(c);
  if (c.command == "theorem1") return cmd_theorem(c, true);
  if (c.command == "theorem2") return cmd_theorem(c, false);
  if (c.command == "game") return cmd_game(c);
  if (c.command == "exclusion") return cmd_exclusion(c);
  return cmd_demo(c);
}

std::string csv_text(const Outcome& o) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os << "instance,measure,ratio,predicted,gap,witness_valid,wall_time_s\n";
  for (const auto& row : o.csv) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void add_common(CLI::App* sub, Config& c) {
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--collection", c.collection, "Tester collection JSON");
  sub->add_option("--out", c.out, "Report path (stdout when omitted)");
  sub->add_option("--csv", c.csv, "CSV summary path");
  sub->add_option("--cap-outcomes", c.cap_outcomes, "Cap on parent outcomes o^m")->check(CLI::PositiveNumber);
  sub->add_option("--cap-guesses", c.cap_guesses, "Cap on guess vectors m^s")->check(CLI::PositiveNumber);
  sub->add_option("--cap-dim", c.cap_dim, "Cap on the total tester dimension")->check(CLI::PositiveNumber);
  sub->add_option("--tolerance-gap", c.tolerance_gap, "Accepted relative duality gap")
      ->check(CLI::Validator(
          [](std::string& s) -> std::string {
            double v = 0.0;
            std::istringstream is(s);
            is.imbue(std::locale::classic());
            if (!(is >> v) || !(v > 0.0 && v < 1e-2)) return "tolerance must lie in (0, 1e-2)";
            return {};
          },
          "(0,1e-2)"));
  sub->add_option("--tolerance-ratio", c.ratio_tolerance, "Ratio tolerance for theorem checks")
      ->check(CLI::Range(1e-12, 1e-2));
  sub->add_flag("--random", c.random, "Generate a random collection");
  sub->add_option("--slots", c.slots, "Tester slots (random mode)")->check(CLI::Range(1, 3));
  sub->add_option("--outcomes", c.outcomes, "Outcomes per tester (random mode)")->check(CLI::Range(1, 16));
  sub->add_option("--testers", c.testers, "Collection size (random mode)")->check(CLI::Range(1, 8));
  sub->add_flag("--probe-trivial", c.probe_trivial, "Force every even dimension to 1 (random mode)");
}

}  // namespace

int main(int argc, char** argv) {
  Config c;
  CLI::App app{"combforge: incompatibility of quantum testers and comb games"};
  app.set_version_flag("--version", std::string(io::kLibraryVersion));
  app.require_subcommand(1);

  struct Spec {
    const char* name;
    const char* help;
  };
  const Spec specs[] = {
      {"validate", "Validate tester, comb, collection or ensemble files"},
      {"robustness", "Robustness of incompatibility with certificate"},
      {"weight", "Convex weight of incompatibility with certificate"},
      {"compatible", "Decide compatibility and return a parent"},
      {"theorem1", "Discrimination advantage versus 1 + R"},
      {"theorem2", "Exclusion advantage versus 1 - W"},
      {"game", "Discrimination game values for given ensembles"},
      {"exclusion", "Exclusion game values for given ensembles"},
      {"demo", "Sharp qubit X/Z showcase end to end"},
  };
  for (const auto& s : specs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, c);
    const std::string name = s.name;
    if (name == "validate") {
      sub->add_option("--tester", c.tester, "Tester JSON");
      sub->add_option("--comb", c.comb, "Comb JSON");
    }
    if (name == "validate" || name == "game" || name == "exclusion") {
      sub->add_option("--ensembles", c.ensembles, "Ensemble collection JSON");
    }
    if (name == "theorem1" || name == "theorem2") {
      sub->add_option("--instances", c.instances, "Random instances (seeds seed, seed+1, ...)")->check(CLI::Range(1, 10000));
      sub->add_option("--bound-ensembles", c.bound_ensembles, "Random ensembles for the bound checks");
    }
    if (name == "theorem2" || name == "exclusion" || name == "demo") {
      sub->add_flag("--relaxed-exclusion", c.relaxed_exclusion, "Player picks the tester per ensemble (non-standard)");
    }
    sub->callback([&c, name] { c.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kValidation;
  }
  if (c.instances > 1 && c.collection.size()) {
    std::cerr << "--instances requires --random\n";
    return kValidation;
  }

  json report = {{"tool", "combforge"},
                 {"version", io::kLibraryVersion},
                 {"command", c.command},
                 {"seed", c.seed},
                 {"config", config_json(c)},
                 {"tolerances", tolerances_json(c)}};
  const auto start = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    outcome = dispatch(c);
    report["status"] = outcome.exit_code == kOk ? "ok" : "failed";
    report["result"] = outcome.result;
  } catch (const Error& e) {
    outcome.exit_code = exit_for(e.kind());
    report["status"] = "error";
    report["error"] = error_json(e);
  } catch (const json::exception& e) {
    outcome.exit_code = kValidation;
    report["status"] = "error";
    report["error"] = {{"kind", "invalid_input"}, {"message", e.what()}};
  } catch (const std::exception& e) {
    outcome.exit_code = kSolver;
    report["status"] = "error";
    report["error"] = {{"kind", "numerical_failure"}, {"message", e.what()}};
  }
  report["exit_code"] = outcome.exit_code;
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  try {
    const std::string body = report.dump(2) + "\n";
    if (c.out.empty()) {
      std::cout << body;
    } else {
      io::write_atomic(c.out, body);
      const json timing = {{"command", c.command},
                           {"wall_seconds", wall},
                           {"finished_utc", utc_timestamp()},
                           {"threads", thread_budget()}};
      io::write_atomic(c.out + ".timing.json", timing.dump(2) + "\n");
    }
    if (!c.csv.empty()) io::write_atomic(c.csv, csv_text(outcome));
  } catch (const std::exception& e) {
    std::cerr << "combforge: cannot write output: " << e.what() << "\n";
    return kValidation;
  }
  if (report.contains("error")) std::cerr << "combforge: " << report["error"]["message"].get<std::string>() << "\n";
  return outcome.exit_code;
}
