#pragma once

// Entanglement-based six-state QKD run on a simulation-family source.
//
// The source lives on [flag_A, data_A, flag_B, data_B]. Each party measures the
// lifted observable C(P) for its basis P; Bob's Y is the -Y convention so the
// honest protocol agrees in every basis. Outcome +1 is bit 0, -1 is bit 1.

#include "conjsim/matcore.hpp"
#include "conjsim/simfamily.hpp"

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace conjsim {

enum class Basis { X, Y, Z };

std::string to_string(Basis b);
Basis basis_from_string(std::string_view text);

namespace strategy {
struct Honest {
  SimParams params;
};
/// The fully conjugated branch (a = 0, c = 0).
struct Conjugate {};
/// Eve measures both flag registers in Z before every round.
struct ZPremeasure {
  SimParams params;
};
/// Flags pinned to |flag_a>|flag_b>.
struct MismatchedFlags {
  int flag_a = 0;
  int flag_b = 1;
};
/// Arbitrary 16x16 source on [flag_A, data_A, flag_B, data_B].
struct CustomState {
  Matrix rho;
};
}  // namespace strategy

using EveStrategy = std::variant<strategy::Honest, strategy::Conjugate, strategy::ZPremeasure,
                                 strategy::MismatchedFlags, strategy::CustomState>;

/// Short stable descriptor, e.g. "honest(a=0.25,c=0+0i)".
std::string describe(const EveStrategy& s);
/// Throws PreconditionError on infeasible parameters or a malformed custom state.
void validate(const EveStrategy& s);

using FlagPair = std::pair<int, int>;

/// Source state before any premeasurement.
DensityMatrix source_state(const EveStrategy& s);

/// Lifted observable of a party for a basis, on that party's (flag, data).
Matrix party_observable(bool bob, Basis b);

/// P(outcome_A, outcome_B) for the bit pairs 00, 01, 10, 11.
std::array<double, 4> joint_distribution(const DensityMatrix& source, Basis a, Basis b);

struct RoundRecord {
  std::size_t index = 0;
  Basis basis_a = Basis::X;
  Basis basis_b = Basis::X;
  int outcome_a = 0;
  int outcome_b = 0;
  /// Diagnostic only: the flag eigenvalues when the strategy fixes them.
  std::optional<FlagPair> flags;

  bool operator==(const RoundRecord&) const = default;
};

struct Transcript {
  std::vector<RoundRecord> rounds;
  std::uint64_t seed = 0;
  std::string strategy;
};

/// Round r draws both bases, then (ZPremeasure) the flag pair, then the
/// outcomes from Rng::stream(seed, r); workers only shard the rounds.
Transcript run_rounds(const EveStrategy& s, std::size_t n, std::uint64_t seed,
                      unsigned workers = 1);

struct BasisStats {
  std::size_t sifted = 0;
  std::size_t errors = 0;

  double rate() const { return sifted == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(sifted); }
};

struct QberReport {
  std::array<BasisStats, 3> bases{};  // indexed by Basis
  std::size_t rounds = 0;
  std::size_t sifted = 0;
  double sift_fraction = 0.0;
  std::size_t flag_rounds = 0;
  std::size_t flag_agreements = 0;
  std::size_t flag_mismatches = 0;

  const BasisStats& operator[](Basis b) const { return bases[static_cast<std::size_t>(b)]; }
  BasisStats& operator[](Basis b) { return bases[static_cast<std::size_t>(b)]; }
};

/// Keeps rounds with matching bases and counts disagreements per basis.
QberReport sift(const Transcript& t);

/// Eve's view: with exactly one flag set, every sifted Y bit pair is flipped
/// once, so the Y error count becomes sifted - errors. Equal flags leave the
/// report unchanged.
QberReport eve_flip_correction(const QberReport& report, FlagPair known_flags);
/// Per-round version using the flags recorded in the transcript; rounds
/// without recorded flags are left as they are.
QberReport eve_flip_correction(const Transcript& t);

enum class Verdict { Consistent, Inconsistent, InsufficientData };
std::string to_string(Verdict v);

struct AnalysisConfig {
  double expected_rate = 0.0;
  double n_sigma = 5.0;
};

struct Analysis {
  QberReport report;
  AnalysisConfig config;
  std::array<std::size_t, 3> thresholds{};  // max tolerated errors per basis
  std::vector<Basis> flagged;
  Verdict verdict = Verdict::InsufficientData;
};

/// Basis b is flagged when errors > q n + n_sigma sqrt(n q (1 - q)).
Analysis analyze(const Transcript& t, const AnalysisConfig& config = {});
Analysis analyze(const QberReport& report, const AnalysisConfig& config = {});

struct ZPremeasureComparison {
  QberReport honest;
  QberReport premeasured;
  std::array<double, 3> difference{};  // premeasured - honest rate
  std::array<double, 3> allowed{};
  bool pass = false;
};

/// Runs Honest(p) and ZPremeasure(p) with the same seed and compares per-basis
/// error rates within 5 binomial sigma.
ZPremeasureComparison zpremeasure_analysis(const SimParams& p, std::size_t n, std::uint64_t seed,
                                           unsigned workers = 1);

}  // namespace conjsim
