#pragma once
// CHSH functionals, marginal-law residuals, local-polytope membership and the
// overall classification of a behavior.

#include "bellbox/error.hpp"
#include "bellbox/number.hpp"
#include "bellbox/scenario.hpp"
#include "bellbox/simplex.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bellbox {

/// Tolerance on the no-signaling residual of floating behaviors.
inline constexpr double kSignalingTolerance = 1e-9;
/// Largest denominator used when snapping floating input to rationals.
inline constexpr std::int64_t kSnapDenominator = 1'000'000;

// ---------------------------------------------------------------------------
// CHSH

/// Signs applied to E(x0,y0), E(x0,y1), E(x1,y0), E(x1,y1), with an odd
/// number of minus signs.
struct ChshArrangement {
  std::array<int, 4> signs{+1, +1, +1, -1};

  std::string str() const {
    std::string s;
    for (int v : signs)
      s += v > 0 ? '+' : '-';
    return s;
  }
  bool operator==(const ChshArrangement &) const = default;
};

/// The eight admissible arrangements ordered by their printed form ('+'
/// before '-'); the standard +++- comes first.
inline const std::array<ChshArrangement, 8> &chsh_arrangements() {
  static const std::array<ChshArrangement, 8> all = [] {
    std::array<ChshArrangement, 8> out{};
    std::size_t k = 0;
    for (unsigned bits = 0; bits < 16; ++bits) {
      ChshArrangement a;
      int minus = 0;
      for (int i = 0; i < 4; ++i) {
        const bool neg = (bits >> (3 - i)) & 1u;
        a.signs[i] = neg ? -1 : +1;
        minus += neg;
      }
      if (minus % 2 == 1)
        out[k++] = a;
    }
    return out;
  }();
  return all;
}

inline void require_chsh_shape(const Scenario &s) {
  if (!s.is_chsh_shape())
    throw Error(ErrorCode::ScenarioShape,
                "needs two settings per party with two outcomes each");
}

inline Number chsh_value(const Behavior &b, const ChshArrangement &arr) {
  require_chsh_shape(b.scenario());
  const auto contexts = b.scenario().contexts();
  Number total(0);
  for (std::size_t i = 0; i < 4; ++i) {
    const Number e = expectation(b, contexts[i]);
    total += arr.signs[i] > 0 ? e : -e;
  }
  return total;
}

struct ChshMax {
  /// max |CHSH| over the eight arrangements
  Number value;
  ChshArrangement arrangement;
  /// CHSH at that arrangement (sign kept)
  Number signed_value;
};

/// Ties go to the arrangement listed first by chsh_arrangements().
inline ChshMax chsh_max(const Behavior &b) {
  std::optional<ChshMax> best;
  for (const auto &arr : chsh_arrangements()) {
    const Number v = chsh_value(b, arr);
    if (!best || v.abs() > best->value)
      best = ChshMax{v.abs(), arr, v};
  }
  return *best;
}

// ---------------------------------------------------------------------------
// No-signaling

/// One marginal compared across two co-settings of the other party.
struct MarginalPair {
  Party party;
  std::size_t own_setting;
  std::size_t outcome; // 1-based
  std::size_t co_setting_1;
  std::size_t co_setting_2;
  Number value_1;
  Number value_2;
  Number difference() const { return (value_1 - value_2).abs(); }
};

inline std::vector<MarginalPair> marginal_pairs(const Behavior &b) {
  const MarginalTable mt = marginals(b);
  const Scenario &s = b.scenario();
  std::vector<MarginalPair> out;
  for (Party p : kParties)
    for (std::size_t own = 0; own < s.setting_count(p); ++own)
      for (std::size_t o = 1; o <= s.outcomes(p, own); ++o)
        for (std::size_t t1 = 0; t1 < s.setting_count(other(p)); ++t1)
          for (std::size_t t2 = t1 + 1; t2 < s.setting_count(other(p)); ++t2)
            out.push_back({p, own, o, t1, t2, mt.at(p, own, t1, o),
                           mt.at(p, own, t2, o)});
  return out;
}

/// Largest |marginal difference| over parties, settings, outcomes and pairs
/// of co-settings. Exactly zero for no-signaling rational behaviors.
inline Number nosignaling_residual(const Behavior &b) {
  Number worst(0);
  bool floating = !b.is_exact();
  for (const auto &mp : marginal_pairs(b)) {
    const Number d = mp.difference();
    if (d > worst)
      worst = d;
  }
  if (floating && worst.is_exact())
    return Number::floating(worst.to_double());
  return worst;
}

inline bool is_signaling(const Number &residual) {
  if (residual.is_exact())
    return residual.sign() > 0;
  return residual.to_double() > kSignalingTolerance;
}

// ---------------------------------------------------------------------------
// Deterministic strategies and the local polytope

/// A fixed outcome (1-based) for every setting of each party.
struct DeterministicStrategy {
  std::array<std::vector<std::size_t>, 2> outcomes;

  std::size_t of(Party p, std::size_t setting) const {
    return outcomes[index_of(p)].at(setting);
  }
  std::string str(const Scenario &s) const {
    std::string out;
    for (Party p : kParties) {
      if (p == Party::Bob)
        out += " ";
      for (std::size_t i = 0; i < s.setting_count(p); ++i) {
        if (i)
          out += ",";
        out += s.setting(p, i).label + "=" + std::to_string(of(p, i));
      }
    }
    return out;
  }
  bool operator==(const DeterministicStrategy &) const = default;
};

/// All strategy pairs, Alice's assignment varying slowest and the first
/// setting slowest within a party.
inline std::vector<DeterministicStrategy> enumerate_strategies(const Scenario &s) {
  auto assignments = [&](Party p) {
    std::vector<std::vector<std::size_t>> out{{}};
    for (std::size_t i = 0; i < s.setting_count(p); ++i) {
      std::vector<std::vector<std::size_t>> next;
      for (const auto &prefix : out)
        for (std::size_t o = 1; o <= s.outcomes(p, i); ++o) {
          auto v = prefix;
          v.push_back(o);
          next.push_back(std::move(v));
        }
      out = std::move(next);
    }
    return out;
  };
  std::vector<DeterministicStrategy> out;
  for (const auto &a : assignments(Party::Alice))
    for (const auto &b : assignments(Party::Bob))
      out.push_back({{a, b}});
  return out;
}

inline Behavior strategy_behavior(const Scenario &s, const DeterministicStrategy &st) {
  Behavior out = Behavior::zeros(s);
  for (const auto &c : s.contexts())
    out.at(c).at(st.of(Party::Alice, c.alice) - 1, st.of(Party::Bob, c.bob) - 1) =
        Number(1);
  return out;
}

struct LocalDecomposition {
  std::vector<std::pair<DeterministicStrategy, Number>> terms;

  Behavior reconstruct(const Scenario &s) const {
    Behavior out = Behavior::zeros(s);
    for (const auto &[st, w] : terms)
      for (const auto &c : s.contexts()) {
        Number &cell =
            out.at(c).at(st.of(Party::Alice, c.alice) - 1, st.of(Party::Bob, c.bob) - 1);
        cell += w;
      }
    return out;
  }
};

/// A linear functional on behaviors (one coefficient per table entry) whose
/// maximum over deterministic strategies is below its value on the behavior.
struct InfeasibilityCertificate {
  Behavior coefficients; // same shape as the behavior, entries are weights
  Number local_bound;    // max over deterministic strategies
  Number value;          // value on the (snapped) behavior

  static Number apply(const Behavior &coefficients, const Behavior &b) {
    Number total(0);
    for (const auto &c : b.scenario().contexts()) {
      const ProbMatrix &w = coefficients.at(c), &p = b.at(c);
      for (std::size_t i = 0; i < p.rows(); ++i)
        for (std::size_t j = 0; j < p.cols(); ++j)
          total += w.at(i, j) * p.at(i, j);
    }
    return total;
  }
  /// Recomputes the local bound from scratch and checks the separation.
  bool verify(const Behavior &b) const {
    const Scenario &s = b.scenario();
    std::optional<Number> bound;
    for (const auto &st : enumerate_strategies(s)) {
      const Number v = apply(coefficients, strategy_behavior(s, st));
      if (!bound || v > *bound)
        bound = v;
    }
    return *bound == local_bound && apply(coefficients, b) == value &&
           value > local_bound;
  }
};

struct SnapResult {
  Behavior behavior;
  double error = 0.0; // max |snapped - original| over entries
};

/// Rational stand-in for a floating behavior. No-signaling input (residual
/// within kSignalingTolerance) is snapped through its marginals and
/// P(1,1|x,y), so the result stays exactly normalized and exactly
/// no-signaling; anything else is snapped entry by entry with the
/// normalization residue put on each context's largest entry.
inline SnapResult snap_to_rational(const Behavior &b) {
  const Scenario &s = b.scenario();
  auto snap = [](double v) { return Number(best_rational(v, kSnapDenominator)); };
  Behavior out = Behavior::zeros(s);

  const bool nosig_path =
      s.is_chsh_shape() && !is_signaling(nosignaling_residual(b));
  if (nosig_path) {
    std::array<std::array<double, 2>, 2> marg{}; // [party][setting], outcome 1
    for (const auto &c : s.contexts()) {
      const ProbMatrix &m = b.at(c);
      marg[0][c.alice] += (m.at(0, 0).to_double() + m.at(0, 1).to_double()) / 2;
      marg[1][c.bob] += (m.at(0, 0).to_double() + m.at(1, 0).to_double()) / 2;
    }
    std::array<std::array<Number, 2>, 2> pm;
    for (int p = 0; p < 2; ++p)
      for (int x = 0; x < 2; ++x)
        pm[p][x] = snap(std::clamp(marg[p][x], 0.0, 1.0));
    for (const auto &c : s.contexts()) {
      const Number &pa = pm[0][c.alice], &pb = pm[1][c.bob];
      Number joint = snap(b.at(c).at(0, 0).to_double());
      const Number lo = std::max(Number(0), pa + pb - Number(1));
      const Number hi = std::min(pa, pb);
      joint = std::clamp(joint, lo, hi);
      ProbMatrix &m = out.at(c);
      m.at(0, 0) = joint;
      m.at(0, 1) = pa - joint;
      m.at(1, 0) = pb - joint;
      m.at(1, 1) = Number(1) - pa - pb + joint;
    }
  } else {
    for (const auto &c : s.contexts()) {
      const ProbMatrix &src = b.at(c);
      ProbMatrix &m = out.at(c);
      std::size_t largest = 0;
      for (std::size_t k = 0; k < src.data().size(); ++k) {
        m.at(k / m.cols(), k % m.cols()) =
            snap(std::max(0.0, src.data()[k].to_double()));
        if (src.data()[k] > src.data()[largest])
          largest = k;
      }
      const Number residue = Number(1) - m.sum();
      m.at(largest / m.cols(), largest % m.cols()) += residue;
    }
  }
  double err = 0.0;
  for (const auto &c : s.contexts())
    for (std::size_t k = 0; k < out.at(c).data().size(); ++k)
      err = std::max(err, std::fabs(out.at(c).data()[k].to_double() -
                                    b.at(c).data()[k].to_double()));
  return {std::move(out), err};
}

struct MembershipResult {
  bool local = false;
  std::optional<LocalDecomposition> decomposition;
  std::optional<InfeasibilityCertificate> certificate;
  /// The exact behavior handed to the solver (the input itself when rational).
  Behavior solved;
  bool snapped = false;
  double snap_error = 0.0;
  std::size_t pivots = 0;
};

/// Decides whether the behavior is a mixture of deterministic strategies by
/// exact phase-1 simplex over the strategy weights. Returns the weights, or a
/// separating functional verified against every deterministic strategy.
inline MembershipResult local_membership(const Behavior &b) {
  const Scenario &s = b.scenario();
  require_chsh_shape(s);

  MembershipResult r;
  if (b.is_exact()) {
    validate_behavior(b).throw_if_invalid();
    r.solved = b;
  } else {
    const ValidationResult v = validate_behavior(b);
    if (!v) {
      if (v.code == ErrorCode::UnnormalizedContext || v.code == ErrorCode::NegativeEntry)
        throw Error(ErrorCode::NumericInputUnnormalized, v.message);
      v.throw_if_invalid();
    }
    SnapResult snap = snap_to_rational(b);
    r.solved = std::move(snap.behavior);
    r.snapped = true;
    r.snap_error = snap.error;
  }

  const auto strategies = enumerate_strategies(s);
  const auto contexts = s.contexts();
  // One row per table entry (contexts in order, then a, then b), plus the
  // normalization row.
  std::vector<std::vector<Rational>> a;
  std::vector<Rational> rhs;
  for (const auto &c : contexts)
    for (std::size_t i = 1; i <= 2; ++i)
      for (std::size_t j = 1; j <= 2; ++j) {
        std::vector<Rational> row;
        for (const auto &st : strategies)
          row.push_back(st.of(Party::Alice, c.alice) == i &&
                                st.of(Party::Bob, c.bob) == j
                            ? Rational(1)
                            : Rational(0));
        a.push_back(std::move(row));
        rhs.push_back(r.solved.p(i, j, c).exact());
      }
  a.emplace_back(strategies.size(), Rational(1));
  rhs.emplace_back(1);

  const auto lp = solve_feasibility(a, rhs);
  r.pivots = lp.pivots;
  if (lp.feasible) {
    LocalDecomposition d;
    for (std::size_t k = 0; k < strategies.size(); ++k)
      if (lp.solution[k] != 0)
        d.terms.emplace_back(strategies[k], Number(lp.solution[k]));
    if (!d.reconstruct(s).identical(r.solved))
      throw Error(ErrorCode::InvariantViolation,
                  "local decomposition does not reproduce the behavior");
    r.local = true;
    r.decomposition = std::move(d);
    return r;
  }

  InfeasibilityCertificate cert{Behavior::zeros(s), Number(0), Number(0)};
  std::size_t row = 0;
  for (const auto &c : contexts)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j)
        cert.coefficients.at(c).at(i, j) = Number(lp.farkas[row++]);
  std::optional<Number> bound;
  for (const auto &st : strategies) {
    const Number v =
        InfeasibilityCertificate::apply(cert.coefficients, strategy_behavior(s, st));
    if (!bound || v > *bound)
      bound = v;
  }
  cert.local_bound = *bound;
  cert.value = InfeasibilityCertificate::apply(cert.coefficients, r.solved);
  if (!cert.verify(r.solved))
    throw Error(ErrorCode::InvariantViolation,
                "infeasibility certificate does not separate the behavior");
  r.certificate = std::move(cert);
  return r;
}

// ---------------------------------------------------------------------------
// Classification

enum class Classification { Local, NonlocalNoSignaling, Signaling };

constexpr const char *to_string(Classification c) {
  switch (c) {
  case Classification::Local: return "LOCAL";
  case Classification::NonlocalNoSignaling: return "NONLOCAL_NOSIGNALING";
  case Classification::Signaling: return "SIGNALING";
  }
  return "?";
}

struct AnalysisReport {
  std::vector<std::pair<Context, Number>> expectations;
  std::vector<std::pair<ChshArrangement, Number>> chsh_values;
  std::optional<ChshMax> chsh;
  Number nosignaling_residual;
  Classification classification = Classification::Signaling;
  std::optional<MembershipResult> membership;
};

/// SIGNALING if the residual is nonzero (beyond 1e-9 for floating input),
/// otherwise LOCAL or NONLOCAL_NOSIGNALING by membership.
inline AnalysisReport classify(const Behavior &b) {
  validate_behavior(b).throw_if_invalid();
  const Scenario &s = b.scenario();
  AnalysisReport r;
  for (const auto &c : s.contexts())
    if (s.outcomes(Party::Alice, c.alice) == 2 && s.outcomes(Party::Bob, c.bob) == 2)
      r.expectations.emplace_back(c, expectation(b, c));
  if (s.is_chsh_shape()) {
    for (const auto &arr : chsh_arrangements())
      r.chsh_values.emplace_back(arr, chsh_value(b, arr));
    r.chsh = chsh_max(b);
  }
  r.nosignaling_residual = nosignaling_residual(b);
  if (is_signaling(r.nosignaling_residual)) {
    r.classification = Classification::Signaling;
    return r;
  }
  r.membership = local_membership(b);
  r.classification = r.membership->local ? Classification::Local
                                         : Classification::NonlocalNoSignaling;
  return r;
}

} // namespace bellbox
