#include "conjsim/sixstate.hpp"

#include <cmath>
#include <sstream>
#include <thread>

namespace conjsim {

namespace {

constexpr std::size_t kFlagA = 0;
constexpr std::size_t kFlagB = 2;
const Dims kSourceDims{2, 2, 2, 2};

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Matrix reference_basis(bool bob, Basis b) {
  switch (b) {
    case Basis::X: return pauli::X();
    case Basis::Y: return bob ? Matrix(-pauli::Y()) : pauli::Y();
    case Basis::Z: return pauli::Z();
  }
  throw Error("unknown basis");
}

std::string format_params(const SimParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "a=" << p.a << ",c=" << p.c.real() << (p.c.imag() < 0 ? "-" : "+") << std::abs(p.c.imag())
     << "i";
  return os.str();
}

DensityMatrix pinned_flags(int fa, int fb) {
  Vector flags = Vector::Zero(4);
  flags(2 * fa + fb) = 1.0;
  // [fA, fB, dA, dB] -> [fA, dA, fB, dB]
  const auto psi = StateVector::normalized({2, 2, 2, 2}, tensor(flags, phi_plus().amplitudes()));
  return DensityMatrix::from_pure(permute_subsystems(psi, {0, 2, 1, 3}));
}

Matrix flag_pair_projector(int fa, int fb) {
  Matrix pa = Matrix::Zero(2, 2), pb = Matrix::Zero(2, 2);
  pa(fa, fa) = 1.0;
  pb(fb, fb) = 1.0;
  return tensor(std::vector<Matrix>{pa, pauli::identity(2), pb, pauli::identity(2)});
}

// Probabilities per basis pair, flattened as 3 * basis_a + basis_b.
using DistributionTable = std::array<std::array<double, 4>, 9>;

DistributionTable distribution_table(const DensityMatrix& rho) {
  DistributionTable out{};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      out[static_cast<std::size_t>(3 * a + b)] =
          joint_distribution(rho, static_cast<Basis>(a), static_cast<Basis>(b));
  return out;
}

struct Sampler {
  bool premeasure = false;
  std::optional<FlagPair> pinned;
  std::array<double, 4> flag_probs{};
  // One table per flag pair (premeasure) or a single table in slot 0.
  std::array<std::optional<DistributionTable>, 4> tables;
};

Sampler make_sampler(const EveStrategy& s) {
  Sampler out;
  const auto rho = source_state(s);
  if (const auto* z = std::get_if<strategy::ZPremeasure>(&s)) {
    (void)z;
    out.premeasure = true;
    for (int k = 0; k < 4; ++k) {
      const Matrix proj = flag_pair_projector(k / 2, k % 2);
      const Matrix branch = proj * rho.matrix() * proj;
      const double p = branch.trace().real();
      out.flag_probs[static_cast<std::size_t>(k)] = p;
      if (p > kStateTol)
        out.tables[static_cast<std::size_t>(k)] =
            distribution_table(DensityMatrix(kSourceDims, branch / p));
    }
  } else {
    if (const auto* m = std::get_if<strategy::MismatchedFlags>(&s))
      out.pinned = FlagPair{m->flag_a, m->flag_b};
    out.tables[0] = distribution_table(rho);
  }
  return out;
}

RoundRecord sample_round(const Sampler& sampler, std::uint64_t seed, std::size_t index) {
  Rng rng = Rng::stream(seed, index);
  RoundRecord r;
  r.index = index;
  const auto ba = rng.below(3);
  const auto bb = rng.below(3);
  r.basis_a = static_cast<Basis>(ba);
  r.basis_b = static_cast<Basis>(bb);
  std::size_t slot = 0;
  if (sampler.premeasure) {
    slot = sample_index(sampler.flag_probs.data(), 4, rng.uniform());
    r.flags = FlagPair{static_cast<int>(slot / 2), static_cast<int>(slot % 2)};
  } else {
    r.flags = sampler.pinned;
  }
  const auto& probs = (*sampler.tables[slot])[3 * ba + bb];
  const auto outcome = sample_index(probs.data(), 4, rng.uniform());
  r.outcome_a = static_cast<int>(outcome / 2);
  r.outcome_b = static_cast<int>(outcome % 2);
  return r;
}

}  // namespace

std::string to_string(Basis b) {
  switch (b) {
    case Basis::X: return "X";
    case Basis::Y: return "Y";
    case Basis::Z: return "Z";
  }
  return "?";
}

Basis basis_from_string(std::string_view text) {
  if (text == "X") return Basis::X;
  if (text == "Y") return Basis::Y;
  if (text == "Z") return Basis::Z;
  throw Error("unknown basis: " + std::string(text));
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Consistent: return "protocol-consistent";
    case Verdict::Inconsistent: return "inconsistent";
    case Verdict::InsufficientData: return "insufficient-data";
  }
  return "?";
}

std::string describe(const EveStrategy& s) {
  return std::visit(
      overloaded{
          [](const strategy::Honest& h) { return "honest(" + format_params(h.params) + ")"; },
          [](const strategy::Conjugate&) { return std::string("conjugate"); },
          [](const strategy::ZPremeasure& z) {
            return "zpremeasure(" + format_params(z.params) + ")";
          },
          [](const strategy::MismatchedFlags& m) {
            return "mismatched(" + std::to_string(m.flag_a) + "," + std::to_string(m.flag_b) + ")";
          },
          [](const strategy::CustomState&) { return std::string("custom"); },
      },
      s);
}

void validate(const EveStrategy& s) {
  std::visit(overloaded{
                 [](const strategy::Honest& h) { h.params.validate(); },
                 [](const strategy::Conjugate&) {},
                 [](const strategy::ZPremeasure& z) { z.params.validate(); },
                 [](const strategy::MismatchedFlags& m) {
                   if ((m.flag_a != 0 && m.flag_a != 1) || (m.flag_b != 0 && m.flag_b != 1))
                     throw PreconditionError("mismatched flags must be bits");
                 },
                 [](const strategy::CustomState& c) {
                   if (c.rho.rows() != 16 || c.rho.cols() != 16)
                     throw PreconditionError(
                         "custom state must be 16x16 on [flag_A, data_A, flag_B, data_B]");
                   DensityMatrix check(kSourceDims, c.rho);
                 },
             },
             s);
}

DensityMatrix source_state(const EveStrategy& s) {
  validate(s);
  return std::visit(
      overloaded{
          [](const strategy::Honest& h) { return multiparty_sim_state(phi_plus(), 2, h.params); },
          [](const strategy::Conjugate&) {
            return multiparty_sim_state(phi_plus(), 2, SimParams{0.0, 0.0});
          },
          [](const strategy::ZPremeasure& z) {
            return multiparty_sim_state(phi_plus(), 2, z.params);
          },
          [](const strategy::MismatchedFlags& m) { return pinned_flags(m.flag_a, m.flag_b); },
          [](const strategy::CustomState& c) { return DensityMatrix(kSourceDims, c.rho); },
      },
      s);
}

Matrix party_observable(bool bob, Basis b) { return lift_local_observable(reference_basis(bob, b)); }

std::array<double, 4> joint_distribution(const DensityMatrix& source, Basis a, Basis b) {
  if (source.dims() != kSourceDims)
    throw DimensionError("joint_distribution: source must live on [2, 2, 2, 2]");
  const Matrix ma = party_observable(false, a);
  const Matrix mb = party_observable(true, b);
  const Matrix id = pauli::identity(4);
  std::array<double, 4> out{};
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      const Matrix pa = (id + (x == 0 ? 1.0 : -1.0) * ma) / 2.0;
      const Matrix pb = (id + (y == 0 ? 1.0 : -1.0) * mb) / 2.0;
      const double p = (source.matrix() * tensor(pa, pb)).trace().real();
      out[static_cast<std::size_t>(2 * x + y)] = std::max(0.0, p);
    }
  return out;
}

Transcript run_rounds(const EveStrategy& s, std::size_t n, std::uint64_t seed, unsigned workers) {
  if (n == 0) throw PreconditionError("run_rounds: n must be >= 1");
  const auto sampler = make_sampler(s);
  Transcript t;
  t.seed = seed;
  t.strategy = describe(s);
  t.rounds.resize(n);
  workers = std::max(1u, workers);
  if (workers == 1) {
    for (std::size_t r = 0; r < n; ++r) t.rounds[r] = sample_round(sampler, seed, r);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < n; r += workers) t.rounds[r] = sample_round(sampler, seed, r);
      });
    for (auto& th : pool) th.join();
  }
  return t;
}

QberReport sift(const Transcript& t) {
  QberReport out;
  out.rounds = t.rounds.size();
  for (const auto& r : t.rounds) {
    if (r.flags) {
      ++out.flag_rounds;
      if (r.flags->first == r.flags->second)
        ++out.flag_agreements;
      else
        ++out.flag_mismatches;
    }
    if (r.basis_a != r.basis_b) continue;
    auto& stats = out[r.basis_a];
    ++stats.sifted;
    ++out.sifted;
    if (r.outcome_a != r.outcome_b) ++stats.errors;
  }
  out.sift_fraction =
      out.rounds == 0 ? 0.0 : static_cast<double>(out.sifted) / static_cast<double>(out.rounds);
  return out;
}

QberReport eve_flip_correction(const QberReport& report, FlagPair known_flags) {
  QberReport out = report;
  if (known_flags.first != known_flags.second) {
    auto& y = out[Basis::Y];
    y.errors = y.sifted - y.errors;
  }
  return out;
}

QberReport eve_flip_correction(const Transcript& t) {
  Transcript corrected = t;
  for (auto& r : corrected.rounds)
    if (r.flags && r.flags->first != r.flags->second && r.basis_a == Basis::Y &&
        r.basis_b == Basis::Y)
      r.outcome_b ^= 1;
  return sift(corrected);
}

Analysis analyze(const QberReport& report, const AnalysisConfig& config) {
  Analysis out;
  out.report = report;
  out.config = config;
  const double q = config.expected_rate;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto n = static_cast<double>(report.bases[b].sifted);
    const double bound = q * n + config.n_sigma * std::sqrt(n * q * (1.0 - q));
    out.thresholds[b] = static_cast<std::size_t>(std::floor(bound + 1e-9));
    if (report.bases[b].errors > out.thresholds[b]) out.flagged.push_back(static_cast<Basis>(b));
  }
  if (report.sifted == 0)
    out.verdict = Verdict::InsufficientData;
  else
    out.verdict = out.flagged.empty() ? Verdict::Consistent : Verdict::Inconsistent;
  return out;
}

Analysis analyze(const Transcript& t, const AnalysisConfig& config) {
  return analyze(sift(t), config);
}

ZPremeasureComparison zpremeasure_analysis(const SimParams& p, std::size_t n, std::uint64_t seed,
                                           unsigned workers) {
  p.validate();
  ZPremeasureComparison out;
  out.honest = sift(run_rounds(strategy::Honest{p}, n, seed, workers));
  out.premeasured = sift(run_rounds(strategy::ZPremeasure{p}, n, seed, workers));
  out.pass = out.premeasured.flag_mismatches == 0;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto& h = out.honest.bases[b];
    const auto& z = out.premeasured.bases[b];
    const double rh = h.rate(), rz = z.rate();
    const double var = (h.sifted ? rh * (1.0 - rh) / static_cast<double>(h.sifted) : 0.0) +
                       (z.sifted ? rz * (1.0 - rz) / static_cast<double>(z.sifted) : 0.0);
    out.difference[b] = rz - rh;
    out.allowed[b] = 5.0 * std::sqrt(var) + 1e-12;
    out.pass = out.pass && std::abs(out.difference[b]) <= out.allowed[b];
  }
  return out;
}

}  // namespace conjsim
