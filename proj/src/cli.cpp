#include "conjsim/cli.hpp"

#include "conjsim/io.hpp"
#include "conjsim/selftest.hpp"
#include "conjsim/simfamily.hpp"
#include "conjsim/sixstate.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <numbers>
#include <optional>

#ifndef CONJSIM_VERSION
#define CONJSIM_VERSION "0.0.0"
#endif

namespace conjsim::cli {

namespace {

using io::json;

class UsageError : public Error {
 public:
  using Error::Error;
};

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw UsageError(what + ": not a number: " + text);
  return value;
}

std::uint64_t parse_u64(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    if (!text.empty() && text[0] != '-') value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw UsageError(what + ": not an unsigned integer: " + text);
  return value;
}

std::pair<std::string, std::string> split_kv(const std::string& token, const std::string& what) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError(what + ": expected key=value, got " + token);
  return {token.substr(0, eq), token.substr(eq + 1)};
}

// a=.. c=.. | c_re=.. c_im=.. | c_abs=.. c_phase=..
json family_tokens(const std::vector<std::string>& tokens, const std::string& what) {
  json out = json::object();
  std::optional<double> re, im;
  for (const auto& t : tokens) {
    const auto [k, v] = split_kv(t, what);
    if (k == "a" || k == "c_abs" || k == "c_phase")
      out[k] = parse_number(v, what + " " + k);
    else if (k == "c" || k == "c_re")
      re = parse_number(v, what + " " + k);
    else if (k == "c_im")
      im = parse_number(v, what + " " + k);
    else
      throw UsageError(what + ": unknown key " + k);
  }
  if (!out.contains("a")) throw UsageError(what + ": a=<value> is required");
  if (re || im) out["c"] = json::array({re.value_or(0.0), im.value_or(0.0)});
  return out;
}

json strategy_tokens(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw UsageError("--strategy: missing strategy type");
  const auto& type = tokens.front();
  const std::vector<std::string> rest(tokens.begin() + 1, tokens.end());
  json out;
  if (type == "honest" || type == "zpremeasure") {
    out = family_tokens(rest, "--strategy " + type);
    out["type"] = type;
  } else if (type == "conjugate") {
    if (!rest.empty()) throw UsageError("--strategy conjugate takes no arguments");
    out = json{{"type", type}};
  } else if (type == "mismatched") {
    if (rest.size() != 2) throw UsageError("--strategy mismatched takes two flag bits");
    out = json{{"type", type},
               {"flag_a", parse_u64(rest[0], "flag_a")},
               {"flag_b", parse_u64(rest[1], "flag_b")}};
  } else if (type == "custom") {
    if (rest.size() != 1) throw UsageError("--strategy custom takes one JSON path");
    const auto file = io::read_json_file(rest[0]);
    out = json{{"type", type}, {"density", file.is_object() ? file.at("density") : file}};
  } else {
    throw UsageError("--strategy: unknown type " + type);
  }
  return out;
}

json sampled_tokens(const std::vector<std::string>& tokens) {
  json out = json::object();
  for (const auto& t : tokens) {
    const auto [k, v] = split_kv(t, "--sampled");
    if (k == "n" || k == "seed")
      out[k] = parse_u64(v, "--sampled " + k);
    else if (k == "n_sigma")
      out[k] = parse_number(v, "--sampled n_sigma");
    else
      throw UsageError("--sampled: unknown key " + k);
  }
  return out;
}

json load_config(const std::string& path) {
  auto cfg = io::read_json_file(path);
  if (!cfg.is_object()) throw io::FormatError(path + ": config must be a JSON object");
  return cfg;
}

template <class T>
T get_or(const json& cfg, const char* key, T fallback) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) return fallback;
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw io::FormatError(std::string("config key \"") + key + "\" has the wrong type");
  }
}

json report_envelope(const std::string& command, const json& cfg) {
  json effective = cfg;
  for (const char* transient : {"out", "workers", "config", "transcript", "command"})
    effective.erase(transient);
  return json{{"tool", "conjsim"}, {"version", version()}, {"command", command}, {"config", effective}};
}

std::optional<SampledMode> sampled_mode(const json& cfg, unsigned workers) {
  if (!cfg.contains("sampled") || cfg.at("sampled").is_null()) return std::nullopt;
  const auto& s = cfg.at("sampled");
  if (!s.contains("seed")) throw UsageError("sampled mode requires an explicit seed");
  SampledMode mode;
  mode.n_per_pair = get_or<std::size_t>(s, "n", mode.n_per_pair);
  mode.seed = get_or<std::uint64_t>(s, "seed", 0);
  mode.n_sigma = get_or<double>(s, "n_sigma", mode.n_sigma);
  mode.workers = workers;
  if (mode.n_per_pair == 0) throw UsageError("sampled mode requires n >= 1");
  return mode;
}

struct Emitter {
  std::ostream& out;
  std::ostream& err;
  std::optional<std::string> path;

  void emit(const std::string& text, const std::string& summary) const {
    if (path) {
      io::write_text_file(*path, text);
      out << summary << '\n';
    } else {
      out << text;
      err << summary << '\n';
    }
  }
};

// ---------------------------------------------------------------------------

int cmd_props(json cfg, const Emitter& emit) {
  CPropertyConfig pc;
  pc.dim = get_or<std::size_t>(cfg, "dim", pc.dim);
  pc.trials = get_or<std::size_t>(cfg, "trials", pc.trials);
  pc.seed = get_or<std::uint64_t>(cfg, "seed", pc.seed);
  pc.tol = get_or<double>(cfg, "tol", pc.tol);
  if (pc.dim == 0 || pc.dim > kMaxPropertyDim)
    throw UsageError("dim must be between 1 and " + std::to_string(kMaxPropertyDim) + ", got " +
                     std::to_string(pc.dim));
  if (pc.trials == 0) throw UsageError("trials must be >= 1");
  if (cfg.contains("fixture")) {
    json fixture = cfg.at("fixture");
    if (fixture.is_string()) fixture = io::read_json_file(fixture.get<std::string>());
    if (!fixture.is_object()) throw io::FormatError("fixture must be an object");
    for (const auto& [key, value] : fixture.items()) {
      const Matrix m = io::matrix_from_json(value);
      if (m.rows() != m.cols()) throw io::FormatError("fixture " + key + " is not square");
      if (key == "hermitian") pc.hermitian_fixture = m;
      else if (key == "unitary") pc.unitary_fixture = m;
      else if (key == "psd") pc.psd_fixture = m;
      else throw io::FormatError("unknown fixture kind: " + key);
    }
  }
  cfg["dim"] = pc.dim;
  cfg["trials"] = pc.trials;
  cfg["seed"] = pc.seed;
  cfg["tol"] = pc.tol;

  const auto report = c_property_suite(pc);

  const std::size_t hdim = std::min<std::size_t>(pc.dim, 4);
  const double htol = 1e-8;
  double hmax = 0.0;
  std::size_t hchecks = 0;
  for (std::size_t k = 0; k < pc.trials; ++k) {
    Rng rng = Rng::stream(pc.seed ^ 0x4841u, k);
    const Matrix h = random::hermitian(hdim, rng);
    for (double t : {0.1, 1.0, std::numbers::pi}) {
      hmax = std::max(hmax, hamiltonian_identity_residual(h, t));
      ++hchecks;
    }
  }
  const bool hpass = hmax <= htol;
  const bool pass = report.passed() && hpass;

  json j = report_envelope("props", cfg);
  j["verdict"] = pass ? "pass" : "fail";
  j["c_property"] = io::to_json(report);
  j["hamiltonian"] = json{{"dim", hdim},
                          {"times", json::array({0.1, 1.0, std::numbers::pi})},
                          {"checks", hchecks},
                          {"max_residual", hmax},
                          {"tol", htol},
                          {"passed", hpass}};
  std::string summary = std::string("props: ") + (pass ? "pass" : "fail");
  for (const auto& it : report.items)
    if (!it.passed) summary += " [" + it.name + "]";
  if (!hpass) summary += " [hamiltonian]";
  emit.emit(io::dump(j), summary);
  return pass ? kExitPass : kExitCheckFailed;
}

Experiment experiment_for(const json& cfg, TestKind kind) {
  const bool has_family = cfg.contains("family") && !cfg.at("family").is_null();
  const bool has_experiment = cfg.contains("experiment") && !cfg.at("experiment").is_null();
  if (has_family && has_experiment) throw UsageError("give either --family or --experiment, not both");
  if (has_experiment) {
    json e = cfg.at("experiment");
    if (e.is_string()) e = io::read_json_file(e.get<std::string>());
    return io::experiment_from_json(e);
  }
  if (has_family) return family_experiment(kind, io::params_from_json(cfg.at("family")));
  throw UsageError("selftest needs --family or --experiment");
}

TestKind kind_for(json& cfg) {
  if (!cfg.contains("kind") && cfg.contains("experiment")) {
    json e = cfg.at("experiment");
    if (e.is_string()) e = io::read_json_file(e.get<std::string>());
    if (e.is_object() && e.contains("kind")) cfg["kind"] = e.at("kind");
  }
  const auto kind = kind_from_string(get_or<std::string>(cfg, "kind", "mayersyao"));
  cfg["kind"] = to_string(kind);
  return kind;
}

int cmd_selftest(json cfg, const Emitter& emit, unsigned workers) {
  const auto kind = kind_for(cfg);
  const auto exp = experiment_for(cfg, kind);
  SelfTestOptions options;
  options.kind = kind;
  options.tol = get_or<double>(cfg, "tol", options.tol);
  options.include_cross = get_or<bool>(cfg, "cross", false);
  options.sampled = sampled_mode(cfg, workers);
  cfg["tol"] = options.tol;

  const auto report = run_selftest(exp, options);
  std::string summary = std::string("selftest: ") + (report.pass ? "pass" : "fail");
  if (!report.pass) {
    summary += " at " + report.failing_stage;
    const auto& st = report.stage(report.failing_stage);
    if (report.failing_stage == "statistics")
      summary += " (worst " + report.statistics.worst.entry + ")";
    else if (!st.failing.empty())
      summary += " (" + st.failing.front() + ")";
  }
  if (get_or<std::string>(cfg, "format", "json") == "csv") {
    emit.emit(io::correlations_csv(report.table), summary);
  } else {
    json j = report_envelope("selftest", cfg);
    const auto body = io::to_json(report);
    for (const auto& [k, v] : body.items()) j[k] = v;
    emit.emit(io::dump(j), summary);
  }
  return report.pass ? kExitPass : kExitCheckFailed;
}

int cmd_simulate(json cfg, const Emitter& emit, unsigned workers) {
  const auto kind = kind_for(cfg);
  if (!cfg.contains("family")) cfg["family"] = json{{"a", 1.0}, {"c", 0.0}};
  const auto params = io::params_from_json(cfg.at("family"));
  const auto exp = family_experiment(kind, params);
  const bool cross = get_or<bool>(cfg, "cross", false);
  const double tol = get_or<double>(cfg, "tol", 1e-10);
  cfg["tol"] = tol;
  const auto schedule = test_schedule(kind, cross);
  const auto exact = correlations(exp, schedule);
  const auto verdict = check_against_reference(exact, kind, tol, cross);
  const auto mode = sampled_mode(cfg, workers);
  std::optional<CorrelationTable> sampled;
  if (mode) sampled = sampled_correlations(exp, schedule, mode->n_per_pair, mode->seed, mode->workers);

  const std::string summary = std::string("simulate: ") +
                              (verdict.pass ? "matches reference" : "differs from reference") +
                              " (worst " + verdict.worst.entry + ")";
  if (get_or<std::string>(cfg, "format", "json") == "csv") {
    emit.emit(io::correlations_csv(sampled ? *sampled : exact), summary);
  } else {
    json j = report_envelope("simulate", cfg);
    j["verdict"] = verdict.pass ? "pass" : "fail";
    j["family"] = io::to_json(params);
    j["exact"] = io::to_json(exact);
    j["statistics"] = io::to_json(verdict);
    if (sampled) j["sampled"] = io::to_json(*sampled);
    emit.emit(io::dump(j), summary);
  }
  return verdict.pass ? kExitPass : kExitCheckFailed;
}

int cmd_qkd(json cfg, const Emitter& emit, unsigned workers) {
  if (!cfg.contains("strategy")) throw UsageError("qkd needs --strategy");
  if (!cfg.contains("seed")) throw UsageError("qkd needs an explicit --seed");
  const auto strat = io::strategy_from_json(cfg.at("strategy"));
  validate(strat);
  const auto n = get_or<std::size_t>(cfg, "n", 1000);
  if (n == 0) throw UsageError("--n must be >= 1");
  const auto seed = get_or<std::uint64_t>(cfg, "seed", 0);
  AnalysisConfig ac;
  ac.expected_rate = get_or<double>(cfg, "expected_rate", ac.expected_rate);
  ac.n_sigma = get_or<double>(cfg, "n_sigma", ac.n_sigma);
  const auto expect = get_or<std::string>(cfg, "expect", "consistent");
  if (expect != "consistent" && expect != "inconsistent")
    throw UsageError("--expect must be consistent or inconsistent");
  cfg["n"] = n;
  cfg["strategy"] = io::to_json(strat);
  cfg["expect"] = expect;

  const auto transcript = run_rounds(strat, n, seed, workers);
  const auto analysis = analyze(transcript, ac);
  const bool consistent = analysis.verdict == Verdict::Consistent;
  const bool pass = consistent == (expect == "consistent");

  if (cfg.contains("transcript")) {
    const auto path = cfg.at("transcript").get<std::string>();
    const bool as_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    io::write_text_file(path, as_json ? io::dump(io::to_json(transcript)) : io::transcript_csv(transcript));
  }

  std::string summary = "qkd: " + to_string(analysis.verdict);
  for (auto b : analysis.flagged) summary += " [" + to_string(b) + "]";
  summary += pass ? " (as expected)" : " (unexpected)";
  if (get_or<std::string>(cfg, "format", "json") == "csv") {
    emit.emit(io::transcript_csv(transcript), summary);
  } else {
    json j = report_envelope("qkd", cfg);
    j["verdict"] = pass ? "pass" : "fail";
    j["strategy"] = transcript.strategy;
    j["analysis"] = io::to_json(analysis);
    const bool has_flags = std::any_of(transcript.rounds.begin(), transcript.rounds.end(),
                                       [](const RoundRecord& r) { return r.flags.has_value(); });
    if (has_flags) j["eve_corrected"] = io::to_json(eve_flip_correction(transcript));
    emit.emit(io::dump(j), summary);
  }
  return pass ? kExitPass : kExitCheckFailed;
}

}  // namespace

std::string version() { return CONJSIM_VERSION; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Conjugation-family self-testing and six-state QKD toolkit", "conjsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version());

  std::string config_path, out_path, format;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config; flags override its keys");
    sub->add_option("--out", out_path, "Write the report to this path");
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--tol", tol, "Pass/fail tolerance");
    sub->add_option("--workers", workers, "Worker threads (does not change results)")
        ->check(CLI::Range(1u, 256u));
  };

  auto* props = app.add_subcommand("props", "Check the C(.) lifting properties");
  common(props);
  std::optional<std::size_t> dim, trials;
  std::string fixture;
  props->add_option("--dim", dim, "Matrix dimension");
  props->add_option("--trials", trials, "Random inputs per item");
  props->add_option("--seed", seed, "Root seed");
  props->add_option("--fixture", fixture, "JSON with hermitian/unitary/psd matrices to inject");

  std::vector<std::string> family, sampled, strat;
  std::string kind, experiment, expect, transcript;
  std::optional<std::size_t> rounds;
  bool cross = false;

  auto* selftest = app.add_subcommand("selftest", "Run the self-test pipeline");
  common(selftest);
  selftest->add_option("--family", family, "Family member: a=<v> c=<v> [c_im=<v>]")->expected(1, 4);
  selftest->add_option("--experiment", experiment, "Experiment JSON file");
  selftest->add_option("--kind", kind, "mayersyao or extended");
  selftest->add_option("--sampled", sampled, "Sampled statistics: n=<count> seed=<u64>")->expected(1, 3);
  selftest->add_flag("--cross", cross, "Include cross sub-test pairs");

  auto* simulate = app.add_subcommand("simulate", "Dump family-member statistics");
  common(simulate);
  simulate->add_option("--family", family, "Family member: a=<v> c=<v>")->expected(1, 4);
  simulate->add_option("--kind", kind, "mayersyao or extended");
  simulate->add_option("--sampled", sampled, "n=<count> seed=<u64>")->expected(1, 3);
  simulate->add_flag("--cross", cross, "Include cross sub-test pairs");

  auto* qkd = app.add_subcommand("qkd", "Run the six-state protocol");
  common(qkd);
  qkd->add_option("--strategy", strat, "honest|conjugate|zpremeasure|mismatched|custom ...")
      ->expected(1, 4);
  qkd->add_option("--n", rounds, "Number of rounds");
  qkd->add_option("--seed", seed, "Root seed (required)");
  qkd->add_option("--transcript", transcript, "Transcript path (.csv or .json)");
  qkd->add_option("--expect", expect, "consistent or inconsistent");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }

  try {
    json cfg = config_path.empty() ? json::object() : load_config(config_path);
    auto* sub = app.get_subcommands().front();
    auto set = [&](const char* name, const json& value) {
      if (sub->get_option_no_throw(name) && sub->count(name) > 0) cfg[std::string(name).substr(2)] = value;
    };
    set("--tol", tol.value_or(0.0));
    set("--format", format);
    set("--out", out_path);
    set("--workers", workers);
    if (cfg.contains("workers")) workers = get_or<unsigned>(cfg, "workers", 1);
    if (workers == 0) throw UsageError("workers must be >= 1");

    Emitter emit{out, err, std::nullopt};
    if (cfg.contains("out")) emit.path = cfg.at("out").get<std::string>();

    const std::string name = sub->get_name();
    if (name == "props") {
      set("--dim", dim.value_or(0));
      set("--trials", trials.value_or(0));
      set("--seed", seed.value_or(0));
      set("--fixture", fixture);
      return cmd_props(cfg, emit);
    }
    set("--kind", kind);
    set("--cross", cross);
    if (sub->get_option_no_throw("--family") && sub->count("--family") > 0)
      cfg["family"] = family_tokens(family, "--family");
    if (sub->get_option_no_throw("--sampled") && sub->count("--sampled") > 0)
      cfg["sampled"] = sampled_tokens(sampled);
    if (name == "selftest") {
      if (sub->count("--experiment") > 0) {
        cfg["experiment"] = experiment;
        if (sub->count("--family") == 0) cfg.erase("family");
      }
      return cmd_selftest(cfg, emit, workers);
    }
    if (name == "simulate") return cmd_simulate(cfg, emit, workers);
    set("--n", rounds.value_or(0));
    set("--seed", seed.value_or(0));
    set("--transcript", transcript);
    set("--expect", expect);
    if (sub->count("--strategy") > 0) cfg["strategy"] = strategy_tokens(strat);
    return cmd_qkd(cfg, emit, workers);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
  } catch (const io::FormatError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
  }
  return kExitUsage;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace conjsim::cli
