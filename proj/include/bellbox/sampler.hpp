#pragma once
// Seeded Monte Carlo runs of joint measurements against either model family.

#include "bellbox/error.hpp"
#include "bellbox/models.hpp"
#include "bellbox/random.hpp"
#include "bellbox/scenario.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace bellbox {

struct TrialRecord {
  std::uint64_t trial = 0;
  Context context;
  std::string cause;
  std::size_t alice = 1; // outcome index, 1-based
  std::size_t bob = 1;
  bool operator==(const TrialRecord &) const = default;
};

enum class Schedule { Fixed, UniformRandom, Cycle };

struct ExperimentPlan {
  std::uint64_t seed = 1;
  std::uint64_t trials = 1;
  Schedule schedule = Schedule::Cycle;
  Context fixed_context{}; // used by Schedule::Fixed
  unsigned threads = 1;
  bool keep_records = true;
};

/// Outcome counts per context.
class EmpiricalBehavior {
public:
  EmpiricalBehavior() = default;
  explicit EmpiricalBehavior(const Scenario &s) : scenario_(s) {
    for (const auto &c : s.contexts())
      counts_[c].assign(s.outcomes(Party::Alice, c.alice) * s.outcomes(Party::Bob, c.bob), 0);
  }

  const Scenario &scenario() const { return scenario_; }

  void add(const Context &c, std::size_t a, std::size_t b) {
    counts_.at(c).at((a - 1) * cols(c) + (b - 1)) += 1;
  }
  void merge(const EmpiricalBehavior &o) {
    for (auto &[c, v] : counts_)
      for (std::size_t i = 0; i < v.size(); ++i)
        v[i] += o.counts_.at(c)[i];
  }

  std::uint64_t count(const Context &c, std::size_t a, std::size_t b) const {
    return counts_.at(c).at((a - 1) * cols(c) + (b - 1));
  }
  std::uint64_t total(const Context &c) const {
    std::uint64_t t = 0;
    for (auto v : counts_.at(c))
      t += v;
    return t;
  }
  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto &[c, v] : counts_)
      t += total(c);
    return t;
  }
  /// Relative frequency; requires the context to have been sampled.
  double frequency(const Context &c, std::size_t a, std::size_t b) const {
    const std::uint64_t t = total(c);
    if (t == 0)
      throw Error(ErrorCode::UnsampledContext,
                  "context " + scenario_.label(c) + " was never sampled");
    return static_cast<double>(count(c, a, b)) / static_cast<double>(t);
  }

  /// Frequencies as a floating behavior (every context must be sampled).
  Behavior frequencies() const {
    Behavior out = Behavior::zeros(scenario_);
    for (const auto &c : scenario_.contexts()) {
      ProbMatrix &m = out.at(c);
      for (std::size_t a = 1; a <= m.rows(); ++a)
        for (std::size_t b = 1; b <= m.cols(); ++b)
          m.at(a - 1, b - 1) = Number::floating(frequency(c, a, b));
    }
    return out;
  }

  bool operator==(const EmpiricalBehavior &) const = default;

private:
  std::size_t cols(const Context &c) const {
    return scenario_.outcomes(Party::Bob, c.bob);
  }
  Scenario scenario_;
  std::map<Context, std::vector<std::uint64_t>> counts_;
};

namespace detail {

/// ceil(p * 2^53) for a probability p, so that k < threshold <=> k/2^53 < p.
inline std::uint64_t uniform_threshold(const Number &p) {
  if (p.is_exact()) {
    const Rational scaled = p.exact() * Rational(BigInt(kUniformSpan));
    BigInt q = boost::multiprecision::numerator(scaled) /
               boost::multiprecision::denominator(scaled);
    if (Rational(q) < scaled)
      q += 1;
    if (q > kUniformSpan)
      return kUniformSpan;
    return q < 0 ? 0 : q.convert_to<std::uint64_t>();
  }
  const double v = std::ceil(std::ldexp(p.to_double(), 53));
  if (!(v > 0))
    return 0;
  if (v >= static_cast<double>(kUniformSpan))
    return kUniformSpan;
  return static_cast<std::uint64_t>(v);
}

/// Inverse-CDF table over a distribution with zero-weight entries pruned.
struct CdfTable {
  std::vector<std::size_t> index;        // original position
  std::vector<std::uint64_t> thresholds; // increasing, last = 2^53

  static CdfTable build(const std::vector<Number> &weights) {
    CdfTable t;
    Number cumulative(0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i].is_zero())
        continue;
      cumulative += weights[i];
      t.index.push_back(i);
      t.thresholds.push_back(uniform_threshold(cumulative));
    }
    if (t.index.empty())
      throw Error(ErrorCode::ModelInvalid, "distribution with no positive weight");
    t.thresholds.back() = kUniformSpan;
    return t;
  }
  std::size_t pick(std::uint64_t k) const {
    const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), k);
    return index[static_cast<std::size_t>(it - thresholds.begin())];
  }
};

struct CompiledContext {
  std::vector<ActiveCause> causes;
  CdfTable cause_cdf;
  std::vector<CdfTable> alice_cdf, bob_cdf;
};

} // namespace detail

/// A model prepared for repeated sampling.
class Sampler {
public:
  explicit Sampler(Model model) : model_(std::move(model)) {
    validate_model(model_);
    const Scenario &s = scenario();
    for (const auto &c : s.contexts()) {
      detail::CompiledContext cc;
      cc.causes = active_causes(model_, c);
      std::vector<Number> weights;
      for (const auto &cause : cc.causes) {
        weights.push_back(cause.weight);
        cc.alice_cdf.push_back(detail::CdfTable::build(cause.alice));
        cc.bob_cdf.push_back(detail::CdfTable::build(cause.bob));
      }
      cc.cause_cdf = detail::CdfTable::build(weights);
      compiled_.emplace(c, std::move(cc));
    }
  }

  const Scenario &scenario() const { return scenario_of(model_); }
  const Model &model() const { return model_; }

  /// Draws the cause, then each party's outcome given that cause.
  TrialRecord sample(const Context &c, std::uint64_t trial, std::uint64_t seed) const {
    auto it = compiled_.find(c);
    if (it == compiled_.end())
      throw Error(ErrorCode::ModelInvalid, "context outside the scenario");
    const detail::CompiledContext &cc = it->second;
    const std::size_t k = cc.cause_cdf.pick(keyed_uniform53(seed, trial, Draw::Cause));
    TrialRecord r;
    r.trial = trial;
    r.context = c;
    r.cause = cc.causes[k].id;
    r.alice = cc.alice_cdf[k].pick(keyed_uniform53(seed, trial, Draw::AliceOutcome)) + 1;
    r.bob = cc.bob_cdf[k].pick(keyed_uniform53(seed, trial, Draw::BobOutcome)) + 1;
    return r;
  }

  Context context_for(const ExperimentPlan &plan, std::uint64_t trial) const {
    const auto contexts = scenario().contexts();
    switch (plan.schedule) {
    case Schedule::Fixed:
      return plan.fixed_context;
    case Schedule::Cycle:
      return contexts[trial % contexts.size()];
    case Schedule::UniformRandom: {
      const unsigned __int128 k = keyed_uniform53(plan.seed, trial, Draw::Context);
      return contexts[static_cast<std::size_t>((k * contexts.size()) >> 53)];
    }
    }
    return contexts.front();
  }

private:
  Model model_;
  std::map<Context, detail::CompiledContext> compiled_;
};

inline TrialRecord sample_trial(const Model &model, const Context &c,
                                std::uint64_t trial, std::uint64_t seed) {
  return Sampler(model).sample(c, trial, seed);
}

struct ExperimentResult {
  EmpiricalBehavior empirical;
  std::vector<TrialRecord> records; // in trial order (empty unless kept)
};

/// Runs plan.trials trials; the result does not depend on plan.threads.
inline ExperimentResult run_experiment(const Sampler &sampler, const ExperimentPlan &plan) {
  const Scenario &s = sampler.scenario();
  if (plan.trials < 1)
    throw Error(ErrorCode::InvalidPlan, "trials must be at least 1");
  if (plan.schedule == Schedule::Fixed && !s.valid(plan.fixed_context))
    throw Error(ErrorCode::InvalidPlan, "fixed context outside the scenario");

  ExperimentResult out{EmpiricalBehavior(s), {}};
  if (plan.keep_records)
    out.records.resize(plan.trials);

  const unsigned threads = static_cast<unsigned>(
      std::clamp<std::uint64_t>(plan.threads, 1, std::max<std::uint64_t>(1, plan.trials)));
  std::vector<EmpiricalBehavior> partial(threads, EmpiricalBehavior(s));
  auto work = [&](unsigned t) {
    const std::uint64_t begin = plan.trials * t / threads;
    const std::uint64_t end = plan.trials * (t + 1) / threads;
    for (std::uint64_t i = begin; i < end; ++i) {
      TrialRecord r = sampler.sample(sampler.context_for(plan, i), i, plan.seed);
      partial[t].add(r.context, r.alice, r.bob);
      if (plan.keep_records)
        out.records[i] = std::move(r);
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back(work, t);
    for (auto &th : pool)
      th.join();
  }
  for (const auto &p : partial)
    out.empirical.merge(p);
  return out;
}

inline ExperimentResult run_experiment(const Model &model, const ExperimentPlan &plan) {
  return run_experiment(Sampler(model), plan);
}

/// max over entries of |frequency - probability|.
inline double empirical_deviation(const EmpiricalBehavior &e, const Behavior &b) {
  if (!(e.scenario() == b.scenario()))
    throw Error(ErrorCode::ScenarioMismatch, "empirical and exact scenarios differ");
  double worst = 0.0;
  for (const auto &c : b.scenario().contexts()) {
    const ProbMatrix &m = b.at(c);
    for (std::size_t a = 1; a <= m.rows(); ++a)
      for (std::size_t bb = 1; bb <= m.cols(); ++bb)
        worst = std::max(worst, std::fabs(e.frequency(c, a, bb) -
                                          m.at(a - 1, bb - 1).to_double()));
  }
  return worst;
}

/// Header plus one line per record: trial,alice_setting,bob_setting,cause,a,b
inline void write_trials_csv(std::ostream &os, const Scenario &s,
                             const std::vector<TrialRecord> &records) {
  os << "trial,alice_setting,bob_setting,cause,a,b\n";
  for (const auto &r : records)
    os << r.trial << ',' << s.setting(Party::Alice, r.context.alice).label << ','
       << s.setting(Party::Bob, r.context.bob).label << ',' << r.cause << ','
       << r.alice << ',' << r.bob << '\n';
}

} // namespace bellbox
