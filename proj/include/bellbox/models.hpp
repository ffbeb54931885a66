#pragma once
// Common-cause models: one cause set shared by all contexts (non-contextual)
// or one cause set per context (contextual).

#include "bellbox/error.hpp"
#include "bellbox/number.hpp"
#include "bellbox/scenario.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bellbox {

struct Cause {
  std::string id;
  Number weight;
  bool operator==(const Cause &) const = default;
};

/// One party's responses: (setting index, cause id) -> outcome distribution.
using ResponseKey = std::pair<std::size_t, std::string>;
using ResponseFunction = std::map<ResponseKey, std::vector<Number>>;

struct NonContextualModel {
  Scenario scenario;
  std::vector<Cause> causes;
  ResponseFunction alice;
  ResponseFunction bob;

  const ResponseFunction &response(Party p) const {
    return p == Party::Alice ? alice : bob;
  }
  ResponseFunction &response(Party p) { return p == Party::Alice ? alice : bob; }
  bool operator==(const NonContextualModel &) const = default;
};

/// Causes and responses that apply within a single context. Responses are
/// keyed by the context's own setting for each party.
struct ContextCauses {
  std::vector<Cause> causes;
  ResponseFunction alice;
  ResponseFunction bob;

  const ResponseFunction &response(Party p) const {
    return p == Party::Alice ? alice : bob;
  }
  ResponseFunction &response(Party p) { return p == Party::Alice ? alice : bob; }
  bool operator==(const ContextCauses &) const = default;
};

struct ContextualModel {
  Scenario scenario;
  std::map<Context, ContextCauses> contexts;
  bool operator==(const ContextualModel &) const = default;
};

using Model = std::variant<NonContextualModel, ContextualModel>;

inline const Scenario &scenario_of(const Model &m) {
  return std::visit([](const auto &x) -> const Scenario & { return x.scenario; },
                    m);
}

/// A cause as seen from one context: its weight and both parties' outcome
/// distributions for that context's settings.
struct ActiveCause {
  std::string id;
  Number weight;
  std::vector<Number> alice;
  std::vector<Number> bob;
};

namespace detail {

inline void check_distribution(const std::vector<Number> &dist,
                               std::size_t outcomes, const std::string &where) {
  if (dist.size() != outcomes)
    throw Error(ErrorCode::ModelInvalid,
                where + ": expected " + std::to_string(outcomes) +
                    " outcome probabilities, got " + std::to_string(dist.size()));
  Number sum(0);
  for (const auto &v : dist) {
    if (v.sign() < 0)
      throw Error(ErrorCode::ModelInvalid, where + ": negative probability");
    sum += v;
  }
  if (!within_tolerance_of_one(sum))
    throw Error(ErrorCode::ModelInvalid,
                where + ": probabilities sum to " + sum.str());
}

inline void check_cause_set(const std::vector<Cause> &causes,
                            const std::string &where) {
  if (causes.empty())
    throw Error(ErrorCode::ModelInvalid, where + ": empty cause set");
  std::set<std::string> ids;
  Number total(0);
  for (const auto &c : causes) {
    if (c.id.empty())
      throw Error(ErrorCode::ModelInvalid, where + ": empty cause id");
    if (!ids.insert(c.id).second)
      throw Error(ErrorCode::ModelInvalid,
                  where + ": duplicate cause id '" + c.id + "'");
    if (c.weight.sign() < 0)
      throw Error(ErrorCode::ModelInvalid,
                  where + ": negative weight for '" + c.id + "'");
    total += c.weight;
  }
  if (!within_tolerance_of_one(total))
    throw Error(ErrorCode::ModelInvalid,
                where + ": cause weights sum to " + total.str());
}

inline const std::vector<Number> &
lookup(const ResponseFunction &r, std::size_t setting, const std::string &cause,
       Party p, const Scenario &s) {
  auto it = r.find({setting, cause});
  if (it == r.end())
    throw Error(ErrorCode::ModelInvalid,
                std::string(party_name(p)) + " has no response for setting '" +
                    s.setting(p, setting).label + "' under cause '" + cause +
                    "'");
  return it->second;
}

} // namespace detail

/// Throws MODEL_INVALID on the first broken invariant.
inline void validate_model(const NonContextualModel &m) {
  detail::check_cause_set(m.causes, "cause set");
  for (Party p : kParties) {
    const auto &r = m.response(p);
    for (const auto &[key, dist] : r) {
      if (key.first >= m.scenario.setting_count(p))
        throw Error(ErrorCode::ModelInvalid,
                    std::string(party_name(p)) + " responds to an unknown setting");
      bool known = false;
      for (const auto &c : m.causes)
        known = known || c.id == key.second;
      if (!known)
        throw Error(ErrorCode::ModelInvalid,
                    std::string(party_name(p)) + " responds to unknown cause '" +
                        key.second + "'");
    }
    for (std::size_t s = 0; s < m.scenario.setting_count(p); ++s)
      for (const auto &c : m.causes) {
        const auto &dist = detail::lookup(r, s, c.id, p, m.scenario);
        detail::check_distribution(dist, m.scenario.outcomes(p, s),
                                   std::string(party_name(p)) + " " +
                                       m.scenario.setting(p, s).label + " / " +
                                       c.id);
      }
  }
}

inline void validate_model(const ContextualModel &m) {
  for (const auto &[c, cc] : m.contexts)
    if (!m.scenario.valid(c))
      throw Error(ErrorCode::ModelInvalid, "cause set for a context outside the scenario");
  for (const auto &c : m.scenario.contexts()) {
    auto it = m.contexts.find(c);
    if (it == m.contexts.end())
      throw Error(ErrorCode::ModelInvalid,
                  "no cause set for context " + m.scenario.label(c));
    const ContextCauses &cc = it->second;
    const std::string where = "context " + m.scenario.label(c);
    detail::check_cause_set(cc.causes, where);
    for (Party p : kParties) {
      const auto &r = cc.response(p);
      for (const auto &[key, dist] : r)
        if (key.first != c.of(p))
          throw Error(ErrorCode::ModelInvalid,
                      where + ": " + party_name(p) +
                          " responds to a setting outside the context");
      if (r.size() != cc.causes.size())
        throw Error(ErrorCode::ModelInvalid,
                    where + ": " + party_name(p) + " responses do not match causes");
      for (const auto &cause : cc.causes) {
        const auto &dist = detail::lookup(r, c.of(p), cause.id, p, m.scenario);
        detail::check_distribution(dist, m.scenario.outcomes(p, c.of(p)),
                                   where + " " + party_name(p) + " / " + cause.id);
      }
    }
  }
}

inline void validate_model(const Model &m) {
  std::visit([](const auto &x) { validate_model(x); }, m);
}

/// Causes in declaration order as seen from context `c`.
inline std::vector<ActiveCause> active_causes(const NonContextualModel &m,
                                              const Context &c) {
  std::vector<ActiveCause> out;
  for (const auto &cause : m.causes)
    out.push_back({cause.id, cause.weight,
                   detail::lookup(m.alice, c.alice, cause.id, Party::Alice, m.scenario),
                   detail::lookup(m.bob, c.bob, cause.id, Party::Bob, m.scenario)});
  return out;
}

inline std::vector<ActiveCause> active_causes(const ContextualModel &m,
                                              const Context &c) {
  auto it = m.contexts.find(c);
  if (it == m.contexts.end())
    throw Error(ErrorCode::ModelInvalid,
                "no cause set for context " + m.scenario.label(c));
  std::vector<ActiveCause> out;
  for (const auto &cause : it->second.causes)
    out.push_back({cause.id, cause.weight,
                   detail::lookup(it->second.alice, c.alice, cause.id, Party::Alice,
                                  m.scenario),
                   detail::lookup(it->second.bob, c.bob, cause.id, Party::Bob,
                                  m.scenario)});
  return out;
}

inline std::vector<ActiveCause> active_causes(const Model &m, const Context &c) {
  return std::visit([&](const auto &x) { return active_causes(x, c); }, m);
}

namespace detail {

inline ProbMatrix mixed_products(const std::vector<ActiveCause> &causes,
                                 std::size_t rows, std::size_t cols) {
  ProbMatrix out(rows, cols);
  for (const auto &cause : causes)
    for (std::size_t a = 0; a < rows; ++a)
      for (std::size_t b = 0; b < cols; ++b)
        out.at(a, b) += cause.weight * cause.alice[a] * cause.bob[b];
  return out;
}

template <class M> Behavior behavior_from_causes(const M &m) {
  validate_model(m);
  Behavior out(m.scenario);
  for (const auto &c : m.scenario.contexts())
    out.at(c) = mixed_products(active_causes(m, c),
                               m.scenario.outcomes(Party::Alice, c.alice),
                               m.scenario.outcomes(Party::Bob, c.bob));
  return out;
}

} // namespace detail

/// P(a,b|x,y) = sum_k w_k R_A(a|x,k) R_B(b|y,k) over the shared cause set.
inline Behavior exact_behavior_noncontextual(const NonContextualModel &m) {
  return detail::behavior_from_causes(m);
}

/// Same sum, but each context draws on its own cause set.
inline Behavior exact_behavior_contextual(const ContextualModel &m) {
  return detail::behavior_from_causes(m);
}

inline Behavior exact_behavior(const Model &m) {
  return std::visit([](const auto &x) { return detail::behavior_from_causes(x); },
                    m);
}

/// The behavior with one cause held fixed. Factorized in every context.
inline Behavior condition_on_cause(const NonContextualModel &m,
                                   const std::string &cause_id) {
  validate_model(m);
  for (const auto &cause : m.causes) {
    if (cause.id != cause_id)
      continue;
    NonContextualModel fixed = m;
    fixed.causes = {{cause.id, Number(1)}};
    for (Party p : kParties) {
      ResponseFunction only;
      for (const auto &[key, dist] : m.response(p))
        if (key.second == cause_id)
          only.emplace(key, dist);
      fixed.response(p) = std::move(only);
    }
    return detail::behavior_from_causes(fixed);
  }
  throw Error(ErrorCode::UnknownCause, "no cause '" + cause_id + "' in model");
}

/// The same model seen as a contextual one whose every context reuses the
/// shared cause set.
inline ContextualModel as_contextual(const NonContextualModel &m) {
  ContextualModel out{m.scenario, {}};
  for (const auto &c : m.scenario.contexts()) {
    ContextCauses cc;
    cc.causes = m.causes;
    for (const auto &cause : m.causes) {
      cc.alice[{c.alice, cause.id}] =
          detail::lookup(m.alice, c.alice, cause.id, Party::Alice, m.scenario);
      cc.bob[{c.bob, cause.id}] =
          detail::lookup(m.bob, c.bob, cause.id, Party::Bob, m.scenario);
    }
    out.contexts.emplace(c, std::move(cc));
  }
  return out;
}

/// Deterministic outcome distribution: probability 1 on `outcome` (1-based).
inline std::vector<Number> point_mass(std::size_t outcome, std::size_t outcomes = 2) {
  std::vector<Number> v(outcomes, Number(0));
  v.at(outcome - 1) = Number(1);
  return v;
}

} // namespace bellbox
