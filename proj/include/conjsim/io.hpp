#pragma once

// JSON and CSV serialization for experiments, strategies and reports.
//
// Complex numbers are [re, im] pairs; matrices are row-major arrays of rows.
// Reports use insertion-ordered objects so output is byte-stable.

#include "conjsim/matcore.hpp"
#include "conjsim/selftest.hpp"
#include "conjsim/simfamily.hpp"
#include "conjsim/sixstate.hpp"

#include <json.hpp>

#include <string>

namespace conjsim::io {

using json = nlohmann::ordered_json;

/// Parse or structural error in user-supplied JSON.
class FormatError : public Error {
 public:
  using Error::Error;
};

json to_json(cplx z);
json to_json(const Matrix& m);
json to_json(const StateVector& psi);
json to_json(const SimParams& p);

cplx complex_from_json(const json& j);
Matrix matrix_from_json(const json& j);
StateVector state_from_json(const json& j);
/// {"a": .., "c": ..} with c real or [re, im], or {"a", "c_abs", "c_phase"}.
SimParams params_from_json(const json& j);

/// Named observables: X, Y, Z, -Y, D, E, F, E_B, F_B, with an optional
/// "C(...)" wrapper for the lifted form; anything else must be a matrix.
Matrix observable_from_json(const json& j);

/// {"state": .., "parties": {"A": {"dims", "observables", "flag"?}, "B": ..}}.
/// A "density" state is purified onto Alice.
Experiment experiment_from_json(const json& j);
json to_json(const Experiment& exp);

/// {"type": "honest", "a": .., "c": ..} and friends; see strategy_types().
EveStrategy strategy_from_json(const json& j);
json to_json(const EveStrategy& s);

json to_json(const CPropertyReport& r);
json to_json(const CorrelationTable& t);
json to_json(const StatisticsVerdict& v);
json to_json(const ResidualReport& r);
json to_json(const EquivalenceReport& r);
json to_json(const SelfTestReport& r);
json to_json(const QberReport& r);
json to_json(const Analysis& a);
json to_json(const Transcript& t);
json to_json(const ZPremeasureComparison& c);

/// Shortest round-trip decimal form of x.
std::string format_double(double x);

/// Columns setting_a, setting_b, value, stderr; marginals leave the other
/// party's setting empty.
std::string correlations_csv(const CorrelationTable& t);
/// Columns round, basis_a, basis_b, outcome_a, outcome_b.
std::string transcript_csv(const Transcript& t);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);
/// Two-space indented dump with a trailing newline.
std::string dump(const json& j);

}  // namespace conjsim::io
