#include "conjsim/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace conjsim::io {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const json& require(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw FormatError(std::string(where) + ": missing key \"" + key + "\"");
  return j.at(key);
}

Dims dims_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw FormatError("dims must be a non-empty array");
  Dims out;
  for (const auto& d : j) {
    if (!d.is_number_unsigned() || d.get<std::size_t>() == 0)
      throw FormatError("dims entries must be positive integers");
    out.push_back(d.get<std::size_t>());
  }
  return out;
}

json dims_to_json(const Dims& dims) {
  json out = json::array();
  for (auto d : dims) out.push_back(d);
  return out;
}

json num(double x) {
  // Clean -0 so reports are stable under sign noise.
  return x == 0.0 ? 0.0 : x;
}

std::string settings_key(const MarginalKey& k) { return to_string(k.second) + "_" + to_string(k.first); }

PartyRegisters party_from_json(const json& j, const char* who) {
  PartyRegisters regs;
  regs.dims = dims_from_json(require(j, "dims", who));
  if (j.contains("flag") && !j.at("flag").is_null()) regs.flag = j.at("flag").get<std::size_t>();
  const auto& obs = require(j, "observables", who);
  if (!obs.is_object()) throw FormatError(std::string(who) + ": observables must be an object");
  for (const auto& [label, value] : obs.items()) {
    Setting s;
    try {
      s = setting_from_string(label);
    } catch (const Error& e) {
      throw FormatError(std::string(who) + ": " + e.what());
    }
    regs.observables[s] = observable_from_json(value);
  }
  return regs;
}

json party_to_json(const PartyRegisters& regs) {
  json out;
  out["dims"] = dims_to_json(regs.dims);
  if (regs.flag) out["flag"] = *regs.flag;
  json obs = json::object();
  for (const auto& [s, m] : regs.observables) obs[to_string(s)] = to_json(m);
  out["observables"] = obs;
  return out;
}

json deviation_to_json(const Deviation& d) {
  return json{{"entry", d.entry},
              {"value", num(d.value)},
              {"reference", num(d.reference)},
              {"deviation", num(d.deviation)},
              {"allowed", num(d.allowed)}};
}

json y_to_json(const YCoefficients& y) {
  return json{{"i_norm", num(y.i_norm)},
              {"x_norm", num(y.x_norm)},
              {"y_norm", num(y.y_norm)},
              {"z_norm", num(y.z_norm)},
              {"normal_form_residual", num(y.normal_form_residual)},
              {"sign_expectation", num(y.sign_expectation)},
              {"pass", y.pass}};
}

json basis_stats_to_json(const BasisStats& b) {
  return json{{"sifted", b.sifted}, {"errors", b.errors}, {"rate", num(b.rate())}};
}

}  // namespace

// ---------------------------------------------------------------------------

json to_json(cplx z) { return json::array({num(z.real()), num(z.imag())}); }

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const StateVector& psi) {
  json amps = json::array();
  for (Eigen::Index k = 0; k < psi.amplitudes().size(); ++k) amps.push_back(to_json(psi.amplitudes()(k)));
  return json{{"dims", dims_to_json(psi.dims())}, {"amplitudes", amps}};
}

json to_json(const SimParams& p) { return json{{"a", num(p.a)}, {"c", to_json(p.c)}}; }

cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw FormatError("complex numbers must be a number or [re, im]");
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw FormatError("matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw FormatError("matrix rows must have equal length");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = complex_from_json(row[static_cast<std::size_t>(c)]);
  }
  return m;
}

StateVector state_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "phi_plus") return phi_plus();
    throw FormatError("unknown named state: " + j.get<std::string>());
  }
  const auto dims = dims_from_json(require(j, "dims", "state"));
  const auto& amps = require(j, "amplitudes", "state");
  if (!amps.is_array()) throw FormatError("state: amplitudes must be an array");
  Vector v(static_cast<Eigen::Index>(amps.size()));
  for (std::size_t k = 0; k < amps.size(); ++k) v(static_cast<Eigen::Index>(k)) = complex_from_json(amps[k]);
  if (j.value("normalize", false)) return StateVector::normalized(dims, v);
  return StateVector(dims, v);
}

SimParams params_from_json(const json& j) {
  if (!j.is_object()) throw FormatError("family parameters must be an object");
  const double a = require(j, "a", "family").get<double>();
  SimParams p;
  if (j.contains("c_abs") || j.contains("c_phase"))
    p = SimParams::from_polar(a, j.value("c_abs", 0.0), j.value("c_phase", 0.0));
  else
    p = SimParams{a, j.contains("c") ? complex_from_json(j.at("c")) : cplx(0.0)};
  return p;
}

Matrix observable_from_json(const json& j) {
  if (!j.is_string()) return matrix_from_json(j);
  std::string name = j.get<std::string>();
  bool lifted = false;
  if (name.size() > 3 && name.rfind("C(", 0) == 0 && name.back() == ')') {
    lifted = true;
    name = name.substr(2, name.size() - 3);
  }
  Matrix m;
  if (name == "X") m = reference_observable(Party::A, Setting::X);
  else if (name == "Y") m = reference_observable(Party::A, Setting::Y);
  else if (name == "Z") m = reference_observable(Party::A, Setting::Z);
  else if (name == "-Y" || name == "Y_B") m = reference_observable(Party::B, Setting::Y);
  else if (name == "D") m = reference_observable(Party::A, Setting::D);
  else if (name == "E") m = reference_observable(Party::A, Setting::E);
  else if (name == "F") m = reference_observable(Party::A, Setting::F);
  else if (name == "E_B") m = reference_observable(Party::B, Setting::E);
  else if (name == "F_B") m = reference_observable(Party::B, Setting::F);
  else throw FormatError("unknown named observable: " + j.get<std::string>());
  return lifted ? c_of(m) : m;
}

Experiment experiment_from_json(const json& j) {
  const auto& parties = require(j, "parties", "experiment");
  auto alice = party_from_json(require(parties, "A", "experiment.parties"), "party A");
  auto bob = party_from_json(require(parties, "B", "experiment.parties"), "party B");
  const auto& state = require(j, "state", "experiment");
  if (state.is_object() && state.contains("density")) {
    Dims dims = state.contains("dims") ? dims_from_json(state.at("dims")) : alice.dims;
    if (!state.contains("dims")) dims.insert(dims.end(), bob.dims.begin(), bob.dims.end());
    return Experiment::purified(DensityMatrix(dims, matrix_from_json(state.at("density"))),
                                std::move(alice), std::move(bob));
  }
  return Experiment(state_from_json(state), std::move(alice), std::move(bob));
}

json to_json(const Experiment& exp) {
  return json{{"state", to_json(exp.state())},
              {"parties",
               json{{"A", party_to_json(exp.party(Party::A))},
                    {"B", party_to_json(exp.party(Party::B))}}}};
}

EveStrategy strategy_from_json(const json& j) {
  const auto type = require(j, "type", "strategy").get<std::string>();
  EveStrategy s;
  if (type == "honest")
    s = strategy::Honest{params_from_json(j)};
  else if (type == "conjugate")
    s = strategy::Conjugate{};
  else if (type == "zpremeasure")
    s = strategy::ZPremeasure{params_from_json(j)};
  else if (type == "mismatched")
    s = strategy::MismatchedFlags{require(j, "flag_a", "strategy").get<int>(),
                                  require(j, "flag_b", "strategy").get<int>()};
  else if (type == "custom")
    s = strategy::CustomState{matrix_from_json(require(j, "density", "strategy"))};
  else
    throw FormatError("unknown strategy type: " + type);
  return s;
}

json to_json(const EveStrategy& s) {
  return std::visit(
      overloaded{
          [](const strategy::Honest& h) {
            return json{{"type", "honest"}, {"a", num(h.params.a)}, {"c", to_json(h.params.c)}};
          },
          [](const strategy::Conjugate&) { return json{{"type", "conjugate"}}; },
          [](const strategy::ZPremeasure& z) {
            return json{{"type", "zpremeasure"}, {"a", num(z.params.a)}, {"c", to_json(z.params.c)}};
          },
          [](const strategy::MismatchedFlags& m) {
            return json{{"type", "mismatched"}, {"flag_a", m.flag_a}, {"flag_b", m.flag_b}};
          },
          [](const strategy::CustomState& c) {
            return json{{"type", "custom"}, {"density", to_json(c.rho)}};
          },
      },
      s);
}

// ---------------------------------------------------------------------------

json to_json(const CPropertyReport& r) {
  json items = json::array();
  for (const auto& it : r.items)
    items.push_back(json{{"name", it.name},
                         {"max_residual", num(it.max_residual)},
                         {"checks", it.checks},
                         {"passed", it.passed}});
  return json{{"passed", r.passed()}, {"items", items}};
}

json to_json(const CorrelationTable& t) {
  auto entry = [](const CorrelationEntry& e) {
    json out{{"value", num(e.value)}};
    if (e.stderr_) {
      out["stderr"] = num(*e.stderr_);
      out["samples"] = e.samples;
    }
    return out;
  };
  json marginals = json::object(), joints = json::object();
  for (const auto& [k, e] : t.marginals) marginals[entry_name(k)] = entry(e);
  for (const auto& [k, e] : t.joints) joints[entry_name(k)] = entry(e);
  return json{{"marginals", marginals}, {"joints", joints}};
}

json to_json(const StatisticsVerdict& v) {
  json devs = json::array();
  for (const auto& d : v.deviations) devs.push_back(deviation_to_json(d));
  return json{{"pass", v.pass}, {"worst", deviation_to_json(v.worst)}, {"deviations", devs}};
}

json to_json(const ResidualReport& r) {
  json out = json::object();
  for (const auto& e : r.entries) out[e.name] = num(e.value);
  return out;
}

json to_json(const EquivalenceReport& r) {
  json fid = json::object();
  for (const auto& [k, f] : r.action_fidelities) fid[settings_key(k)] = num(f);
  json anti = json::object();
  for (const auto& [k, v] : r.anticommutators) anti[k] = num(v);
  json out{{"kind", to_string(r.kind)},
           {"tol", num(r.tol)},
           {"pass", r.pass},
           {"state_fidelity", num(r.state_fidelity)},
           {"action_fidelities", fid},
           {"anticommutators", anti}};
  if (r.y_alice) out["y_coefficients_A"] = y_to_json(*r.y_alice);
  if (r.y_bob) out["y_coefficients_B"] = y_to_json(*r.y_bob);
  if (r.family) {
    json fam{{"population_0", num(r.family->population_0)},
             {"population_1", num(r.family->population_1)},
             {"leak", num(r.family->leak)}};
    if (r.family->coherence_resolved) fam["coherence"] = num(r.family->coherence);
    out["flag_populations"] = fam;
  }
  return out;
}

json to_json(const SelfTestReport& r) {
  json stages = json::array();
  for (const auto& s : r.stages) {
    json st{{"name", s.name}, {"ran", s.ran}, {"pass", s.pass}, {"worst", num(s.worst)}};
    st["failing"] = s.failing;
    stages.push_back(st);
  }
  json anti = json::object();
  for (const auto& [k, v] : r.anticommutators)
    anti[k] = json{{"raw", num(v.raw)}, {"support", num(v.support)}};
  json out{{"verdict", r.pass ? "pass" : "fail"}};
  out["failing_stage"] = r.failing_stage.empty() ? json(nullptr) : json(r.failing_stage);
  out["failing_checks"] = r.failing_checks();
  out["stages"] = stages;
  out["statistics"] = to_json(r.statistics);
  out["correlations"] = to_json(r.table);
  out["residuals"] = json{{"state_equalities", to_json(r.equalities)},
                          {"d_collapse", to_json(r.d_collapse)},
                          {"anticommutators", anti}};
  if (r.equivalence) out["equivalence"] = to_json(*r.equivalence);
  return out;
}

json to_json(const QberReport& r) {
  json bases = json::object();
  for (auto b : {Basis::X, Basis::Y, Basis::Z}) bases[to_string(b)] = basis_stats_to_json(r[b]);
  json out{{"rounds", r.rounds},
           {"sifted", r.sifted},
           {"sift_fraction", num(r.sift_fraction)},
           {"bases", bases}};
  if (r.flag_rounds > 0)
    out["flags"] = json{{"rounds", r.flag_rounds},
                        {"agreements", r.flag_agreements},
                        {"mismatches", r.flag_mismatches}};
  return out;
}

json to_json(const Analysis& a) {
  json flagged = json::array();
  for (auto b : a.flagged) flagged.push_back(to_string(b));
  json thresholds = json::object();
  for (auto b : {Basis::X, Basis::Y, Basis::Z})
    thresholds[to_string(b)] = a.thresholds[static_cast<std::size_t>(b)];
  return json{{"verdict", to_string(a.verdict)},
              {"flagged", flagged},
              {"expected_rate", num(a.config.expected_rate)},
              {"n_sigma", num(a.config.n_sigma)},
              {"thresholds", thresholds},
              {"qber", to_json(a.report)}};
}

json to_json(const Transcript& t) {
  json rounds = json::array();
  for (const auto& r : t.rounds) {
    json row{{"round", r.index},
             {"basis_a", to_string(r.basis_a)},
             {"basis_b", to_string(r.basis_b)},
             {"outcome_a", r.outcome_a},
             {"outcome_b", r.outcome_b}};
    if (r.flags) row["flags"] = json::array({r.flags->first, r.flags->second});
    rounds.push_back(row);
  }
  return json{{"seed", t.seed}, {"strategy", t.strategy}, {"rounds", rounds}};
}

json to_json(const ZPremeasureComparison& c) {
  json diff = json::object();
  for (auto b : {Basis::X, Basis::Y, Basis::Z}) {
    const auto k = static_cast<std::size_t>(b);
    diff[to_string(b)] = json{{"difference", num(c.difference[k])}, {"allowed", num(c.allowed[k])}};
  }
  return json{{"pass", c.pass},
              {"honest", to_json(c.honest)},
              {"premeasured", to_json(c.premeasured)},
              {"rate_differences", diff}};
}

// ---------------------------------------------------------------------------

std::string format_double(double x) {
  if (x == 0.0) return "0";
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string correlations_csv(const CorrelationTable& t) {
  std::ostringstream os;
  os << "setting_a,setting_b,value,stderr\n";
  auto tail = [&](const CorrelationEntry& e) {
    os << format_double(e.value) << ',' << (e.stderr_ ? format_double(*e.stderr_) : "") << '\n';
  };
  for (const auto& [k, e] : t.marginals) {
    const auto name = to_string(k.second) + "_" + to_string(k.first);
    os << (k.first == Party::A ? name + "," : "," + name) << ',';
    tail(e);
  }
  for (const auto& [k, e] : t.joints) {
    os << to_string(k.first) << "_A," << to_string(k.second) << "_B,";
    tail(e);
  }
  return os.str();
}

std::string transcript_csv(const Transcript& t) {
  std::ostringstream os;
  os << "round,basis_a,basis_b,outcome_a,outcome_b\n";
  for (const auto& r : t.rounds)
    os << r.index << ',' << to_string(r.basis_a) << ',' << to_string(r.basis_b) << ','
       << r.outcome_a << ',' << r.outcome_b << '\n';
  return os.str();
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace conjsim::io
