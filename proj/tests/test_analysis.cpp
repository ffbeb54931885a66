#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace bellbox;

namespace {

const Scenario kChsh = Scenario::binary({"A", "A'"}, {"B", "B'"});

Behavior uniform() {
  Behavior b = Behavior::zeros(kChsh);
  for (const auto &c : kChsh.contexts())
    for (std::size_t k = 0; k < 4; ++k)
      b.at(c).at(k / 2, k % 2) = Number::rational(1, 4);
  return b;
}

ErrorCode code_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const Error &e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvariantViolation;
}

ChshArrangement standard() { return chsh_arrangements().front(); }

/// Random no-signaling behavior: a local model mixed with the PR box.
Behavior random_nosignaling(std::mt19937_64 &rng) {
  const Behavior local = exact_behavior(gen::random_noncontextual(rng, kChsh));
  const Behavior pr = exact_behavior(socks_off());
  const Number w = Number::rational(static_cast<long long>(rng() % 65), 64);
  return mix({{w, pr}, {Number(1) - w, local}});
}

} // namespace

TEST(Arrangements, EightOddParityInPrintedOrder) {
  std::vector<std::string> printed;
  for (const auto &a : chsh_arrangements()) {
    int minus = 0;
    for (int s : a.signs)
      minus += s < 0;
    EXPECT_EQ(minus % 2, 1);
    printed.push_back(a.str());
  }
  EXPECT_EQ(printed, (std::vector<std::string>{"+++-", "++-+", "+-++", "+---", "-+++", "-+--",
                                               "--+-", "---+"}));
}

TEST(ChshValue, Examples) {
  EXPECT_TRUE(chsh_value(exact_behavior(socks_on()), standard()).identical(Number(2)));
  EXPECT_TRUE(chsh_value(exact_behavior(socks_off()), standard()).identical(Number(4)));
  for (const auto &a : chsh_arrangements())
    EXPECT_TRUE(chsh_value(uniform(), a).identical(Number(0)));
}

TEST(ChshValue, ShapeErrors) {
  const Scenario s3({{"A", 2}, {"A'", 2}, {"A''", 2}}, {{"B", 2}, {"B'", 2}});
  Behavior b = Behavior::zeros(s3);
  EXPECT_EQ(code_of([&] { chsh_value(b, standard()); }), ErrorCode::ScenarioShape);
  EXPECT_EQ(code_of([&] { chsh_max(b); }), ErrorCode::ScenarioShape);
  EXPECT_EQ(code_of([&] { local_membership(b); }), ErrorCode::ScenarioShape);
}

TEST(ChshMax, Examples) {
  const auto off = chsh_max(exact_behavior(socks_off()));
  EXPECT_TRUE(off.value.identical(Number(4)));
  EXPECT_EQ(off.arrangement.str(), "+++-");
  const auto on = chsh_max(exact_behavior(socks_on()));
  EXPECT_TRUE(on.value.identical(Number(2)));
  EXPECT_EQ(on.arrangement.str(), "+++-"); // ties with +--- and the negations
  const auto q = chsh_max(singlet_behavior(singlet_optimal_directions()));
  EXPECT_NEAR(q.value.to_double(), 2 * std::numbers::sqrt2, 1e-9);
}

TEST(ChshMax, AgreesWithBruteForce) {
  std::mt19937_64 rng(31);
  for (int i = 0; i < 500; ++i) {
    const Behavior b = gen::random_behavior(rng, kChsh);
    const auto brute = oracle::chsh_brute(oracle::table_of(b));
    const auto got = chsh_max(b);
    EXPECT_EQ(got.value.exact(), brute.value);
    EXPECT_EQ(got.arrangement.signs, brute.signs);
  }
}

TEST(Residual, Examples) {
  EXPECT_TRUE(nosignaling_residual(exact_behavior(socks_off())).identical(Number(0)));
  EXPECT_TRUE(
      nosignaling_residual(exact_behavior(socks_color())).identical(Number::rational(1, 2)));
  std::mt19937_64 rng(32);
  for (int i = 0; i < 100; ++i) {
    NonContextualModel one = gen::random_noncontextual(rng, kChsh);
    const Behavior product = condition_on_cause(one, one.causes.front().id);
    EXPECT_TRUE(nosignaling_residual(product).is_zero());
  }
}

TEST(Residual, AgreesWithBruteForce) {
  std::mt19937_64 rng(33);
  for (int i = 0; i < 500; ++i) {
    const Behavior b = gen::random_behavior(rng, kChsh);
    EXPECT_EQ(nosignaling_residual(b).exact(), oracle::residual_brute(oracle::table_of(b)));
  }
}

TEST(Residual, FloatingThreshold) {
  const Behavior q = singlet_behavior(singlet_optimal_directions());
  EXPECT_FALSE(is_signaling(nosignaling_residual(q)));
  EXPECT_TRUE(is_signaling(Number::floating(2e-9)));
  EXPECT_FALSE(is_signaling(Number::floating(5e-10)));
  EXPECT_TRUE(is_signaling(Number::rational(1, 1'000'000'000'000LL)));
}

TEST(MarginalPairs, ListsEveryComparison) {
  const auto pairs = marginal_pairs(exact_behavior(socks_color()));
  EXPECT_EQ(pairs.size(), 8u);
  Number worst(0);
  for (const auto &p : pairs)
    if (p.difference() > worst)
      worst = p.difference();
  EXPECT_TRUE(worst.identical(Number::rational(1, 2)));
}

TEST(Strategies, SixteenOfThem) {
  const auto st = enumerate_strategies(kChsh);
  ASSERT_EQ(st.size(), 16u);
  for (const auto &s : st)
    EXPECT_TRUE(validate_behavior(strategy_behavior(kChsh, s)).ok);
}

TEST(Membership, SocksOnDecomposesOntoTheLambdaStrategies) {
  const auto on = socks_on();
  const Behavior b = exact_behavior(on);
  const auto r = local_membership(b);
  ASSERT_TRUE(r.local);
  ASSERT_TRUE(r.decomposition);
  EXPECT_TRUE(r.decomposition->reconstruct(kChsh).identical(b));
  // The lambda_k are deterministic, so each conditioned table is a strategy.
  std::vector<Behavior> lambda_tables;
  for (const auto &c : on.causes)
    lambda_tables.push_back(condition_on_cause(on, c.id));
  ASSERT_EQ(r.decomposition->terms.size(), 4u);
  for (const auto &[st, w] : r.decomposition->terms) {
    EXPECT_TRUE(w.identical(Number::rational(1, 4)));
    const Behavior sb = strategy_behavior(kChsh, st);
    EXPECT_TRUE(std::any_of(lambda_tables.begin(), lambda_tables.end(),
                            [&](const Behavior &l) { return l.identical(sb); }));
  }
}

TEST(Membership, SocksOffIsInfeasibleWithVerifiedCertificate) {
  const Behavior b = exact_behavior(socks_off());
  const auto r = local_membership(b);
  EXPECT_FALSE(r.local);
  ASSERT_TRUE(r.certificate);
  EXPECT_TRUE(r.certificate->verify(b));
  EXPECT_GT(r.certificate->value, r.certificate->local_bound);
  // independent check of the bound over all 16 strategies
  Number bound(-1000);
  for (const auto &st : enumerate_strategies(kChsh)) {
    const Number v = InfeasibilityCertificate::apply(r.certificate->coefficients,
                                                     strategy_behavior(kChsh, st));
    if (v > bound)
      bound = v;
  }
  EXPECT_TRUE(bound.identical(r.certificate->local_bound));
}

TEST(Membership, DeterministicProductIsOneStrategy) {
  const auto st = enumerate_strategies(kChsh)[9];
  const auto r = local_membership(strategy_behavior(kChsh, st));
  ASSERT_TRUE(r.local);
  ASSERT_EQ(r.decomposition->terms.size(), 1u);
  EXPECT_EQ(r.decomposition->terms[0].first, st);
  EXPECT_TRUE(r.decomposition->terms[0].second.identical(Number(1)));
}

TEST(Membership, FloatingInput) {
  // A local behavior given in floating point.
  const Behavior b = exact_behavior(socks_on());
  Behavior f = Behavior::zeros(kChsh);
  for (const auto &c : kChsh.contexts())
    for (std::size_t k = 0; k < 4; ++k)
      f.at(c).at(k / 2, k % 2) = Number::floating(b.at(c).at(k / 2, k % 2).to_double());
  const auto r = local_membership(f);
  EXPECT_TRUE(r.local);
  EXPECT_TRUE(r.snapped);
  const Behavior back = r.decomposition->reconstruct(kChsh);
  for (const auto &c : kChsh.contexts())
    for (std::size_t k = 0; k < 4; ++k)
      EXPECT_NEAR(back.at(c).at(k / 2, k % 2).to_double(), f.at(c).at(k / 2, k % 2).to_double(),
                  1e-9);

  const auto q = local_membership(singlet_behavior(singlet_optimal_directions()));
  EXPECT_FALSE(q.local);
  EXPECT_LT(q.snap_error, 1e-6);
}

TEST(Membership, UnnormalizedFloatingInput) {
  Behavior f = Behavior::zeros(kChsh);
  for (const auto &c : kChsh.contexts())
    for (std::size_t k = 0; k < 4; ++k)
      f.at(c).at(k / 2, k % 2) = Number::floating(0.26);
  EXPECT_EQ(code_of([&] { local_membership(f); }), ErrorCode::NumericInputUnnormalized);
}

TEST(Classify, CanonicalInstances) {
  EXPECT_EQ(classify(exact_behavior(socks_on())).classification, Classification::Local);
  const auto off = classify(exact_behavior(socks_off()));
  EXPECT_EQ(off.classification, Classification::NonlocalNoSignaling);
  EXPECT_TRUE(off.nosignaling_residual.identical(Number(0)));
  const auto color = classify(exact_behavior(socks_color()));
  EXPECT_EQ(color.classification, Classification::Signaling);
  EXPECT_FALSE(color.membership.has_value());
  EXPECT_EQ(classify(singlet_behavior(singlet_optimal_directions())).classification,
            Classification::NonlocalNoSignaling);
}

TEST(Classify, ReportOrderStartsWithStandardArrangement) {
  const auto r = classify(exact_behavior(socks_on()));
  ASSERT_EQ(r.chsh_values.size(), 8u);
  EXPECT_EQ(r.chsh_values.front().first.str(), "+++-");
  ASSERT_EQ(r.expectations.size(), 4u);
}

TEST(Classify, DependsOnlyOnTheBehavior) {
  // socks-on as a non-contextual model and as its contextual copy.
  const auto m = socks_on();
  const auto a = classify(exact_behavior(m));
  const auto b = classify(exact_behavior_contextual(as_contextual(m)));
  EXPECT_EQ(a.classification, b.classification);
  EXPECT_TRUE(a.chsh->value.identical(b.chsh->value));
  EXPECT_EQ(a.membership->decomposition->terms, b.membership->decomposition->terms);
}

TEST(Properties, SoundnessPairOnRandomBehaviors) {
  std::mt19937_64 rng(34);
  int local = 0, nonlocal = 0;
  for (int i = 0; i < 1000; ++i) {
    const Behavior b = random_nosignaling(rng);
    ASSERT_TRUE(nosignaling_residual(b).is_zero());
    const auto r = local_membership(b);
    const Number chsh = chsh_max(b).value;
    if (r.local) {
      ++local;
      EXPECT_LE(chsh, Number(2));
      EXPECT_TRUE(r.decomposition->reconstruct(kChsh).identical(b));
    } else {
      ++nonlocal;
      EXPECT_TRUE(r.certificate->verify(b));
    }
    if (chsh > Number(2))
      EXPECT_FALSE(r.local);
    // For 2x2x2 no-signaling behaviors CHSH <= 2 is also sufficient.
    EXPECT_EQ(r.local, chsh <= Number(2));
  }
  EXPECT_GT(local, 100);
  EXPECT_GT(nonlocal, 100);
}

TEST(Properties, SoundnessPairOnQuantumBehaviors) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
  for (int i = 0; i < 200; ++i) {
    QuantumDirections d{kChsh, {std::vector<double>{ang(rng), ang(rng)},
                                std::vector<double>{ang(rng), ang(rng)}}};
    const Behavior b = singlet_behavior(d);
    const auto r = local_membership(b);
    const double chsh = chsh_max(b).value.to_double();
    if (r.local)
      EXPECT_LE(chsh, 2 + 1e-9);
    if (chsh > 2 + 1e-9)
      EXPECT_FALSE(r.local);
  }
}
