#pragma once
// Measurement scenarios, contexts and the behavior (probability table) algebra.

#include "bellbox/error.hpp"
#include "bellbox/number.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bellbox {

enum class Party : std::size_t { Alice = 0, Bob = 1 };

inline constexpr std::array<Party, 2> kParties{Party::Alice, Party::Bob};

constexpr std::size_t index_of(Party p) { return static_cast<std::size_t>(p); }
constexpr Party other(Party p) {
  return p == Party::Alice ? Party::Bob : Party::Alice;
}
constexpr const char *party_name(Party p) {
  return p == Party::Alice ? "alice" : "bob";
}

struct Setting {
  std::string label;
  std::size_t outcomes = 2;
  bool operator==(const Setting &) const = default;
};

/// A pair of setting indices, one per party. Ordered lexicographically by
/// (alice, bob), which is the iteration order used everywhere.
struct Context {
  std::size_t alice = 0;
  std::size_t bob = 0;
  std::size_t of(Party p) const { return p == Party::Alice ? alice : bob; }
  auto operator<=>(const Context &) const = default;
};

/// Two parties, each with a list of uniquely-labelled settings.
class Scenario {
public:
  Scenario() = default;
  Scenario(std::vector<Setting> alice, std::vector<Setting> bob)
      : settings_{std::move(alice), std::move(bob)} {
    for (Party p : kParties) {
      const auto &list = settings_[index_of(p)];
      if (list.empty())
        throw Error(ErrorCode::InvalidScenario,
                    std::string(party_name(p)) + " has no settings");
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].outcomes < 2)
          throw Error(ErrorCode::InvalidScenario,
                      "setting '" + list[i].label + "' has fewer than 2 outcomes");
        if (list[i].label.empty())
          throw Error(ErrorCode::InvalidScenario, "empty setting label");
        for (std::size_t j = 0; j < i; ++j)
          if (list[j].label == list[i].label)
            throw Error(ErrorCode::InvalidScenario,
                        "duplicate setting label '" + list[i].label + "' for " +
                            party_name(p));
      }
    }
  }

  /// Every setting two-outcome.
  static Scenario binary(const std::vector<std::string> &alice,
                         const std::vector<std::string> &bob) {
    std::vector<Setting> a, b;
    for (const auto &l : alice)
      a.push_back({l, 2});
    for (const auto &l : bob)
      b.push_back({l, 2});
    return Scenario(std::move(a), std::move(b));
  }

  static constexpr std::size_t party_count() { return 2; }

  const std::vector<Setting> &settings(Party p) const {
    return settings_[index_of(p)];
  }
  std::size_t setting_count(Party p) const { return settings(p).size(); }
  const Setting &setting(Party p, std::size_t i) const {
    return settings(p).at(i);
  }
  std::size_t outcomes(Party p, std::size_t i) const {
    return setting(p, i).outcomes;
  }

  std::optional<std::size_t> find_setting(Party p,
                                          std::string_view label) const {
    const auto &list = settings(p);
    for (std::size_t i = 0; i < list.size(); ++i)
      if (list[i].label == label)
        return i;
    return std::nullopt;
  }

  bool valid(const Context &c) const {
    return c.alice < setting_count(Party::Alice) &&
           c.bob < setting_count(Party::Bob);
  }

  std::vector<Context> contexts() const {
    std::vector<Context> out;
    for (std::size_t x = 0; x < setting_count(Party::Alice); ++x)
      for (std::size_t y = 0; y < setting_count(Party::Bob); ++y)
        out.push_back({x, y});
    return out;
  }

  std::string label(const Context &c) const {
    return setting(Party::Alice, c.alice).label + "," +
           setting(Party::Bob, c.bob).label;
  }

  /// Two settings per party, two outcomes per setting.
  bool is_chsh_shape() const {
    for (Party p : kParties) {
      if (setting_count(p) != 2)
        return false;
      for (const auto &s : settings(p))
        if (s.outcomes != 2)
          return false;
    }
    return true;
  }

  bool operator==(const Scenario &) const = default;

private:
  std::array<std::vector<Setting>, 2> settings_;
};

/// Signed value attached to an outcome of a two-outcome setting:
/// index 1 maps to +1, index 2 to -1.
struct OutcomeValue {
  std::size_t index = 1;
  int value = +1;

  static OutcomeValue of(std::size_t index, std::size_t outcome_count) {
    if (outcome_count != 2)
      throw Error(ErrorCode::NonBinarySetting,
                  "outcome values are defined for two-outcome settings only");
    if (index != 1 && index != 2)
      throw Error(ErrorCode::NonBinarySetting,
                  "outcome index must be 1 or 2");
    return {index, index == 1 ? +1 : -1};
  }
};

/// Dense row-major matrix P[a][b]; indices are 0-based (outcome index i is
/// row i-1).
class ProbMatrix {
public:
  ProbMatrix() = default;
  ProbMatrix(std::size_t rows, std::size_t cols, Number fill = Number(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  ProbMatrix(std::size_t rows, std::size_t cols, std::vector<Number> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
      throw std::invalid_argument("ProbMatrix: data size mismatch");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Number &at(std::size_t a, std::size_t b) { return data_.at(a * cols_ + b); }
  const Number &at(std::size_t a, std::size_t b) const {
    return data_.at(a * cols_ + b);
  }
  const std::vector<Number> &data() const { return data_; }

  Number sum() const {
    Number s(0);
    for (const auto &v : data_)
      s += v;
    return s;
  }
  bool is_exact() const {
    for (const auto &v : data_)
      if (!v.is_exact())
        return false;
    return true;
  }
  bool identical(const ProbMatrix &o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      return false;
    for (std::size_t i = 0; i < data_.size(); ++i)
      if (!data_[i].identical(o.data_[i]))
        return false;
    return true;
  }
  bool operator==(const ProbMatrix &o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Number> data_;
};

/// Joint probability table P(a,b|x,y) over the contexts of a scenario.
/// Construction does not validate; see validate_behavior.
class Behavior {
public:
  Behavior() = default;
  explicit Behavior(Scenario s) : scenario_(std::move(s)) {}
  Behavior(Scenario s, std::map<Context, ProbMatrix> table)
      : scenario_(std::move(s)), table_(std::move(table)) {}

  /// All-zero matrices of the right shape for every context.
  static Behavior zeros(const Scenario &s) {
    Behavior b(s);
    for (const auto &c : s.contexts())
      b.table_[c] = ProbMatrix(s.outcomes(Party::Alice, c.alice),
                               s.outcomes(Party::Bob, c.bob));
    return b;
  }

  const Scenario &scenario() const { return scenario_; }
  const std::map<Context, ProbMatrix> &table() const { return table_; }
  bool has(const Context &c) const { return table_.count(c) != 0; }
  const ProbMatrix &at(const Context &c) const {
    auto it = table_.find(c);
    if (it == table_.end())
      throw Error(ErrorCode::MissingContext,
                  "context " + std::to_string(c.alice) + "," +
                      std::to_string(c.bob) + " not in table");
    return it->second;
  }
  ProbMatrix &at(const Context &c) { return table_[c]; }

  /// P(a,b|x,y) with 1-based outcome indices.
  const Number &p(std::size_t a, std::size_t b, const Context &c) const {
    return at(c).at(a - 1, b - 1);
  }

  bool is_exact() const {
    for (const auto &[c, m] : table_)
      if (!m.is_exact())
        return false;
    return true;
  }

  /// Same scenario and bit-identical entries (representation included).
  bool identical(const Behavior &o) const {
    if (!(scenario_ == o.scenario_) || table_.size() != o.table_.size())
      return false;
    auto it = o.table_.begin();
    for (const auto &[c, m] : table_) {
      if (!(c == it->first) || !m.identical(it->second))
        return false;
      ++it;
    }
    return true;
  }
  bool operator==(const Behavior &o) const {
    return scenario_ == o.scenario_ && table_ == o.table_;
  }

private:
  Scenario scenario_;
  std::map<Context, ProbMatrix> table_;
};

struct ValidationResult {
  bool ok = true;
  std::optional<ErrorCode> code;
  std::optional<Context> context;
  std::string message;

  explicit operator bool() const { return ok; }
  void throw_if_invalid() const {
    if (!ok)
      throw Error(*code, message);
  }
};

inline bool within_tolerance_of_one(const Number &sum) {
  if (sum.is_exact())
    return sum.exact() == 1;
  return std::fabs(sum.to_double() - 1.0) <= kFloatTolerance;
}

/// Checks coverage, non-negativity and per-context normalization, reporting
/// the first violation in context order.
inline ValidationResult validate_behavior(const Behavior &b) {
  const Scenario &s = b.scenario();
  auto fail = [&](ErrorCode code, const Context &c, const std::string &msg) {
    return ValidationResult{false, code, c, "context " + s.label(c) + ": " + msg};
  };
  for (const auto &[c, m] : b.table())
    if (!s.valid(c))
      return ValidationResult{false, ErrorCode::MissingContext, c,
                              "table has a context outside the scenario"};
  for (const auto &c : s.contexts()) {
    if (!b.has(c))
      return fail(ErrorCode::MissingContext, c, "missing from table");
    const ProbMatrix &m = b.at(c);
    if (m.rows() != s.outcomes(Party::Alice, c.alice) ||
        m.cols() != s.outcomes(Party::Bob, c.bob))
      return fail(ErrorCode::MissingContext, c,
                  "table shape does not match the outcome counts");
    for (std::size_t a = 0; a < m.rows(); ++a)
      for (std::size_t bb = 0; bb < m.cols(); ++bb)
        if (m.at(a, bb).sign() < 0 || std::isnan(m.at(a, bb).to_double()))
          return fail(ErrorCode::NegativeEntry, c,
                      "entry (" + std::to_string(a + 1) + "," +
                          std::to_string(bb + 1) + ") = " + m.at(a, bb).str() +
                          " is negative");
    const Number sum = m.sum();
    if (!within_tolerance_of_one(sum))
      return fail(ErrorCode::UnnormalizedContext, c,
                  "entries sum to " + sum.str());
  }
  return {};
}

/// Per party, per own setting, per co-party setting, per outcome: the
/// marginal probability of the outcome given that the co-party measured the
/// co-setting.
class MarginalTable {
public:
  MarginalTable() = default;
  explicit MarginalTable(const Scenario &s) {
    for (Party p : kParties) {
      auto &per_own = values_[index_of(p)];
      per_own.resize(s.setting_count(p));
      for (std::size_t own = 0; own < s.setting_count(p); ++own) {
        per_own[own].assign(s.setting_count(other(p)),
                            std::vector<Number>(s.outcomes(p, own), Number(0)));
      }
    }
  }
  /// `outcome` is 1-based.
  const Number &at(Party p, std::size_t own, std::size_t co,
                   std::size_t outcome) const {
    return values_[index_of(p)].at(own).at(co).at(outcome - 1);
  }
  Number &at(Party p, std::size_t own, std::size_t co, std::size_t outcome) {
    return values_[index_of(p)].at(own).at(co).at(outcome - 1);
  }
  const std::vector<Number> &row(Party p, std::size_t own,
                                 std::size_t co) const {
    return values_[index_of(p)].at(own).at(co);
  }
  bool operator==(const MarginalTable &) const = default;

private:
  // [party][own setting][co-setting][outcome]
  std::array<std::vector<std::vector<std::vector<Number>>>, 2> values_;
};

inline MarginalTable marginals(const Behavior &b) {
  validate_behavior(b).throw_if_invalid();
  const Scenario &s = b.scenario();
  MarginalTable out(s);
  for (const auto &c : s.contexts()) {
    const ProbMatrix &m = b.at(c);
    for (std::size_t a = 0; a < m.rows(); ++a)
      for (std::size_t bb = 0; bb < m.cols(); ++bb) {
        out.at(Party::Alice, c.alice, c.bob, a + 1) += m.at(a, bb);
        out.at(Party::Bob, c.bob, c.alice, bb + 1) += m.at(a, bb);
      }
  }
  return out;
}

/// E = P(1,1) + P(2,2) - P(1,2) - P(2,1) for a two-outcome context.
inline Number expectation(const Behavior &b, const Context &c) {
  const Scenario &s = b.scenario();
  if (!s.valid(c))
    throw Error(ErrorCode::MissingContext, "context outside the scenario");
  if (s.outcomes(Party::Alice, c.alice) != 2 ||
      s.outcomes(Party::Bob, c.bob) != 2)
    throw Error(ErrorCode::NonBinarySetting,
                "expectation needs two-outcome settings in context " +
                    s.label(c));
  const ProbMatrix &m = b.at(c);
  Number e(0);
  for (std::size_t a = 1; a <= 2; ++a)
    for (std::size_t bb = 1; bb <= 2; ++bb) {
      const int sign = OutcomeValue::of(a, 2).value * OutcomeValue::of(bb, 2).value;
      e += sign > 0 ? m.at(a - 1, bb - 1) : -m.at(a - 1, bb - 1);
    }
  return e;
}

/// Convex combination of behaviors sharing one scenario.
inline Behavior mix(const std::vector<std::pair<Number, Behavior>> &parts) {
  if (parts.empty())
    throw Error(ErrorCode::BadWeights, "empty mixture");
  const Scenario &s = parts.front().second.scenario();
  Number total(0);
  for (const auto &[w, b] : parts) {
    if (!(b.scenario() == s))
      throw Error(ErrorCode::ScenarioMismatch,
                  "mixture components have different scenarios");
    if (w.sign() < 0)
      throw Error(ErrorCode::BadWeights, "negative weight " + w.str());
    total += w;
  }
  if (!within_tolerance_of_one(total))
    throw Error(ErrorCode::BadWeights, "weights sum to " + total.str());

  Behavior out = Behavior::zeros(s);
  for (const auto &[w, b] : parts) {
    validate_behavior(b).throw_if_invalid();
    for (const auto &c : s.contexts()) {
      ProbMatrix &dst = out.at(c);
      const ProbMatrix &src = b.at(c);
      for (std::size_t a = 0; a < dst.rows(); ++a)
        for (std::size_t bb = 0; bb < dst.cols(); ++bb)
          dst.at(a, bb) += w * src.at(a, bb);
    }
  }
  return out;
}

/// Whether every context factorizes as P(a,b) = P(a) P(b), exactly for
/// rational tables and within `tol` otherwise.
inline bool factorizes(const Behavior &b, double tol = kFloatTolerance) {
  const Scenario &s = b.scenario();
  for (const auto &c : s.contexts()) {
    const ProbMatrix &m = b.at(c);
    std::vector<Number> pa(m.rows(), Number(0)), pb(m.cols(), Number(0));
    for (std::size_t a = 0; a < m.rows(); ++a)
      for (std::size_t bb = 0; bb < m.cols(); ++bb) {
        pa[a] += m.at(a, bb);
        pb[bb] += m.at(a, bb);
      }
    for (std::size_t a = 0; a < m.rows(); ++a)
      for (std::size_t bb = 0; bb < m.cols(); ++bb) {
        const Number prod = pa[a] * pb[bb];
        if (prod.is_exact() && m.at(a, bb).is_exact()) {
          if (!(prod == m.at(a, bb)))
            return false;
        } else if (std::fabs(prod.to_double() - m.at(a, bb).to_double()) > tol) {
          return false;
        }
      }
  }
  return true;
}

} // namespace bellbox
