#include "conjsim/sixstate.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace conjsim;

TEST_SUITE("sixstate") {

TEST_CASE("strategy validation") {
  CHECK_THROWS_AS(validate(strategy::Honest{{0.5, 0.9}}), PreconditionError);
  CHECK_THROWS_AS(validate(strategy::MismatchedFlags{0, 2}), PreconditionError);
  CHECK_THROWS_AS(validate(strategy::CustomState{Matrix::Identity(4, 4) / 4.0}), PreconditionError);
  CHECK_NOTHROW(validate(strategy::CustomState{Matrix::Identity(16, 16) / 16.0}));
  CHECK_THROWS_AS(run_rounds(strategy::Conjugate{}, 0, 1), PreconditionError);
  CHECK(describe(strategy::MismatchedFlags{0, 1}) == "mismatched(0,1)");
}

TEST_CASE("honest family is indistinguishable from the reference, exactly") {
  const auto ref = source_state(strategy::Honest{{1.0, 0.0}});
  for (const auto& g : oracle::family_grid()) {
    const auto src = source_state(strategy::Honest{{g.a, g.c}});
    for (auto a : {Basis::X, Basis::Y, Basis::Z})
      for (auto b : {Basis::X, Basis::Y, Basis::Z}) {
        const auto got = joint_distribution(src, a, b);
        const auto want = joint_distribution(ref, a, b);
        for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-10);
      }
  }
  // Same-basis outcomes agree with probability 1, mismatched bases are uniform.
  for (auto a : {Basis::X, Basis::Y, Basis::Z})
    for (auto b : {Basis::X, Basis::Y, Basis::Z}) {
      const auto p = joint_distribution(ref, a, b);
      if (a == b) {
        CHECK(p[0] + p[3] == doctest::Approx(1.0).epsilon(1e-12));
      } else {
        for (double x : p) CHECK(x == doctest::Approx(0.25).epsilon(1e-12));
      }
    }
}

TEST_CASE("honest rounds never disagree on matching bases") {
  for (const auto& g : oracle::family_grid()) {
    const auto t = run_rounds(strategy::Honest{{g.a, g.c}}, 3000, 5);
    const auto r = sift(t);
    for (auto b : {Basis::X, Basis::Y, Basis::Z}) CHECK(r[b].errors == 0);
    CHECK(analyze(t).verdict == Verdict::Consistent);
  }
  const auto conj = sift(run_rounds(strategy::Conjugate{}, 3000, 2));
  for (auto b : {Basis::X, Basis::Y, Basis::Z}) CHECK(conj[b].errors == 0);
}

TEST_CASE("mismatched flags flip only the Y basis") {
  const auto t = run_rounds(strategy::MismatchedFlags{0, 1}, 1000, 1);
  const auto r = sift(t);
  CHECK(r[Basis::X].errors == 0);
  CHECK(r[Basis::Z].errors == 0);
  CHECK(r[Basis::Y].sifted > 0);
  CHECK(r[Basis::Y].errors == r[Basis::Y].sifted);
  CHECK(r[Basis::Y].rate() == 1.0);

  CHECK(eve_flip_correction(r, {0, 1})[Basis::Y].errors == 0);
  CHECK(eve_flip_correction(t)[Basis::Y].errors == 0);
  const auto unchanged = eve_flip_correction(r, {0, 0});
  CHECK(unchanged[Basis::Y].errors == r[Basis::Y].errors);

  const auto both = sift(run_rounds(strategy::MismatchedFlags{1, 1}, 1000, 1));
  CHECK(both[Basis::Y].errors == 0);
  CHECK(eve_flip_correction(both, {1, 1})[Basis::Y].errors == 0);

  const auto a = analyze(t);
  CHECK(a.verdict == Verdict::Inconsistent);
  REQUIRE(a.flagged.size() == 1);
  CHECK(a.flagged[0] == Basis::Y);
}

TEST_CASE("Z premeasurement") {
  for (const auto& g : oracle::family_grid()) {
    const auto t = run_rounds(strategy::ZPremeasure{{g.a, g.c}}, 2000, 3);
    const auto r = sift(t);
    CHECK(r.flag_rounds == 2000);
    CHECK(r.flag_mismatches == 0);
    for (auto b : {Basis::X, Basis::Y, Basis::Z}) CHECK(r[b].errors == 0);
  }
  // a = 1: flags always (0, 0) and the transcript matches Honest outcome for outcome.
  const auto h = run_rounds(strategy::Honest{{1.0, 0.0}}, 500, 9);
  const auto z = run_rounds(strategy::ZPremeasure{{1.0, 0.0}}, 500, 9);
  for (const auto& rr : z.rounds) CHECK(*rr.flags == FlagPair{0, 0});
  for (std::size_t k = 0; k < 500; ++k) {
    CHECK(h.rounds[k].basis_a == z.rounds[k].basis_a);
    CHECK(h.rounds[k].basis_b == z.rounds[k].basis_b);
  }
  const auto zero = run_rounds(strategy::ZPremeasure{{0.0, 0.0}}, 500, 9);
  for (const auto& rr : zero.rounds) CHECK(*rr.flags == FlagPair{1, 1});
  for (auto b : {Basis::X, Basis::Y, Basis::Z}) CHECK(sift(zero)[b].errors == 0);

  const auto cmp = zpremeasure_analysis({0.5, 0.5}, 30000, 4);
  CHECK(cmp.pass);
  for (std::size_t b = 0; b < 3; ++b) CHECK(std::abs(cmp.difference[b]) <= cmp.allowed[b]);
  CHECK(cmp.premeasured.flag_agreements == 30000);
}

TEST_CASE("sifting and analysis edge cases") {
  Transcript all_same;
  for (std::size_t k = 0; k < 30; ++k)
    all_same.rounds.push_back({k, static_cast<Basis>(k % 3), static_cast<Basis>(k % 3), 1, 1, std::nullopt});
  const auto r = sift(all_same);
  CHECK(r.sift_fraction == 1.0);
  for (auto b : {Basis::X, Basis::Y, Basis::Z}) CHECK(r[b].rate() == 0.0);

  const auto empty = analyze(Transcript{});
  CHECK(empty.verdict == Verdict::InsufficientData);
  CHECK(empty.report.rounds == 0);
  CHECK(empty.report.sifted == 0);

  // A nonzero expected rate widens the threshold.
  QberReport q;
  q[Basis::X] = {100, 12};
  q.sifted = 100;
  q.rounds = 300;
  CHECK(analyze(q).verdict == Verdict::Inconsistent);
  CHECK(analyze(q, {0.1, 5.0}).verdict == Verdict::Consistent);
}

TEST_CASE("custom product source is rejected by the error test") {
  // Flags |00>, data |00>: X-basis outcomes are uncorrelated.
  Matrix rho = Matrix::Zero(16, 16);
  rho(0, 0) = 1.0;
  const auto a = analyze(run_rounds(strategy::CustomState{rho}, 3000, 8));
  CHECK(a.verdict == Verdict::Inconsistent);
  const bool x_flagged = std::find(a.flagged.begin(), a.flagged.end(), Basis::X) != a.flagged.end();
  CHECK(x_flagged);
}

TEST_CASE("sift fraction and determinism") {
  const auto t = run_rounds(strategy::Honest{{0.25, 0.0}}, 30000, 1);
  const auto r = sift(t);
  const double n = 30000.0;
  CHECK(std::abs(r.sift_fraction - 1.0 / 3.0) <= 5.0 * std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / n));

  const auto again = run_rounds(strategy::Honest{{0.25, 0.0}}, 30000, 1);
  const auto sharded = run_rounds(strategy::Honest{{0.25, 0.0}}, 30000, 1, 3);
  CHECK(t.rounds == again.rounds);
  CHECK(t.rounds == sharded.rounds);
  const auto other = run_rounds(strategy::Honest{{0.25, 0.0}}, 30000, 2);
  CHECK_FALSE(t.rounds == other.rounds);
}

}  // TEST_SUITE
