#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace bellbox;
using oracle::Ask;

namespace {

const Scenario kChsh = Scenario::binary({"A", "A'"}, {"B", "B'"});

NonContextualModel single_cause(std::size_t a0, std::size_t a1, std::size_t b0, std::size_t b1) {
  NonContextualModel m;
  m.scenario = kChsh;
  m.causes = {{"only", Number(1)}};
  m.alice[{0, "only"}] = point_mass(a0);
  m.alice[{1, "only"}] = point_mass(a1);
  m.bob[{0, "only"}] = point_mass(b0);
  m.bob[{1, "only"}] = point_mass(b1);
  return m;
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

} // namespace

TEST(SocksOn, ReproducesThePublishedTable) {
  EXPECT_EQ(oracle::table_of(exact_behavior_noncontextual(socks_on())), oracle::socks_on_table());
}

TEST(SocksOn, AgreesWithBruteForceDynamics) {
  EXPECT_EQ(oracle::table_of(exact_behavior_noncontextual(socks_on())),
            oracle::socks_dynamics(true, {Ask::Hanky, Ask::Match}, {Ask::Hanky, Ask::Match}));
}

TEST(SocksOn, StructureAndExpectations) {
  const auto m = socks_on();
  ASSERT_EQ(m.causes.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(m.causes[k].id, "lambda" + std::to_string(k + 1));
    EXPECT_TRUE(m.causes[k].weight.identical(Number::rational(1, 4)));
  }
  const Behavior b = exact_behavior(m);
  const std::array<int, 4> expected{1, 0, 0, -1};
  const auto cs = kChsh.contexts();
  for (int c = 0; c < 4; ++c)
    EXPECT_TRUE(expectation(b, cs[c]).identical(Number(expected[c])));
  const Number chsh = expectation(b, cs[0]) + expectation(b, cs[1]) + expectation(b, cs[2]) -
                      expectation(b, cs[3]);
  EXPECT_TRUE(chsh.identical(Number(2)));
}

TEST(SocksOff, ReproducesThePublishedTable) {
  EXPECT_EQ(oracle::table_of(exact_behavior_contextual(socks_off())), oracle::socks_off_table());
  EXPECT_EQ(oracle::table_of(exact_behavior_contextual(socks_off())),
            oracle::socks_dynamics(false, {Ask::Hanky, Ask::Match}, {Ask::Hanky, Ask::Match}));
}

TEST(SocksOff, CauseFamiliesPerContext) {
  const auto m = socks_off();
  auto ids = [&](Context c) {
    std::vector<std::string> out;
    for (const auto &cause : m.contexts.at(c).causes)
      out.push_back(cause.id);
    return out;
  };
  EXPECT_EQ(ids({0, 0}), (std::vector<std::string>{"mu1", "mu2"}));
  EXPECT_EQ(ids({0, 1}), (std::vector<std::string>{"sigma1", "sigma2"}));
  EXPECT_EQ(ids({1, 0}), (std::vector<std::string>{"nu1", "nu2"}));
  EXPECT_EQ(ids({1, 1}).size(), 4u);
}

TEST(SocksOff, ExpectationsAndChsh) {
  const Behavior b = exact_behavior(socks_off());
  const auto cs = kChsh.contexts();
  const std::array<int, 4> expected{1, 1, 1, -1};
  for (int c = 0; c < 4; ++c)
    EXPECT_TRUE(expectation(b, cs[c]).identical(Number(expected[c])));
  EXPECT_TRUE(chsh_max(b).value.identical(Number(4)));
  EXPECT_TRUE(nosignaling_residual(b).is_zero());
}

TEST(SocksColor, BruteForceAgreement) {
  const auto t = oracle::socks_dynamics(false, {Ask::Hanky, Ask::SockColor},
                                        {Ask::Hanky, Ask::SockColor});
  const Behavior b = exact_behavior(socks_color());
  EXPECT_EQ(oracle::table_of(b), t);
  EXPECT_TRUE(nosignaling_residual(b).identical(Number::rational(1, 2)));
  EXPECT_TRUE(Number(oracle::residual_brute(t)).identical(Number::rational(1, 2)));
  EXPECT_TRUE(expectation(b, {1, 1}).identical(Number(-1)));
  EXPECT_TRUE(expectation(b, {0, 0}).identical(Number(1)));
  EXPECT_EQ(kChsh.label({1, 1}), "A',B'");
  EXPECT_EQ(b.scenario().label({1, 1}), "A'',B''");
}

TEST(Contextual, IdenticalCauseSetsDegenerate) {
  const auto m = socks_on();
  EXPECT_TRUE(exact_behavior_contextual(as_contextual(m)).identical(exact_behavior(m)));
}

TEST(NonContextual, SingleDeterministicCauseIsAPointTable) {
  const Behavior b = exact_behavior(single_cause(1, 2, 2, 1));
  for (const auto &c : kChsh.contexts()) {
    int ones = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const Number &v = b.at(c).at(k / 2, k % 2);
      EXPECT_TRUE(v.is_zero() || v.identical(Number(1)));
      ones += v.identical(Number(1));
    }
    EXPECT_EQ(ones, 1);
  }
  EXPECT_TRUE(b.p(1, 2, {0, 0}).identical(Number(1)));
}

TEST(NonContextual, DuplicatedCauseChangesNothing) {
  NonContextualModel one = single_cause(1, 1, 2, 1);
  one.alice[{0, "only"}] = {Number::rational(1, 3), Number::rational(2, 3)};
  NonContextualModel two = one;
  two.causes = {{"x", Number::rational(1, 2)}, {"y", Number::rational(1, 2)}};
  for (auto *r : {&two.alice, &two.bob}) {
    ResponseFunction copy;
    for (const auto &[k, v] : *r) {
      copy[{k.first, "x"}] = v;
      copy[{k.first, "y"}] = v;
    }
    *r = copy;
  }
  EXPECT_TRUE(exact_behavior(one).identical(exact_behavior(two)));
}

TEST(ValidateModel, Errors) {
  auto m = single_cause(1, 1, 1, 1);
  m.causes[0].weight = Number::rational(3, 4);
  EXPECT_EQ(code_of([&] { exact_behavior(m); }), ErrorCode::ModelInvalid);
  m = single_cause(1, 1, 1, 1);
  m.bob.erase({1, "only"});
  EXPECT_EQ(code_of([&] { exact_behavior(m); }), ErrorCode::ModelInvalid);
  m = single_cause(1, 1, 1, 1);
  m.alice[{0, "only"}] = {Number::rational(1, 2), Number::rational(1, 3)};
  EXPECT_EQ(code_of([&] { validate_model(m); }), ErrorCode::ModelInvalid);
  m = single_cause(1, 1, 1, 1);
  m.causes.push_back({"only", Number(0)});
  EXPECT_EQ(code_of([&] { validate_model(m); }), ErrorCode::ModelInvalid);
}

TEST(ConditionOnCause, LambdaOneTableAndMarginals) {
  const auto m = socks_on();
  const Behavior b = condition_on_cause(m, "lambda1");
  EXPECT_EQ(oracle::table_of(b), oracle::lambda1_table());
  const auto mt = marginals(b);
  EXPECT_TRUE(mt.at(Party::Alice, 0, 0, 1).identical(Number(1)));  // P(A1)
  EXPECT_TRUE(mt.at(Party::Alice, 1, 0, 1).identical(Number(1)));  // P(A'1)
  EXPECT_TRUE(mt.at(Party::Bob, 0, 0, 1).identical(Number(1)));    // P(B1)
  EXPECT_TRUE(mt.at(Party::Bob, 1, 0, 2).identical(Number(1)));    // P(B'2)
  EXPECT_TRUE(factorizes(b));
}

TEST(ConditionOnCause, EveryCauseFactorizes) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto m = gen::random_noncontextual(rng, kChsh);
    for (const auto &c : m.causes)
      EXPECT_TRUE(factorizes(condition_on_cause(m, c.id)));
  }
}

TEST(ConditionOnCause, UnknownCause) {
  EXPECT_EQ(code_of([] { condition_on_cause(socks_on(), "lambda9"); }),
            ErrorCode::UnknownCause);
}

TEST(Properties, MixtureIdentity) {
  std::mt19937_64 rng(22);
  for (int i = 0; i < 300; ++i) {
    const auto m = gen::random_noncontextual(rng, gen::random_scenario(rng));
    std::vector<std::pair<Number, Behavior>> parts;
    for (const auto &c : m.causes)
      parts.emplace_back(c.weight, condition_on_cause(m, c.id));
    EXPECT_TRUE(exact_behavior(m).identical(mix(parts)));
  }
}

TEST(Properties, NonContextualSoundness) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 1000; ++i) {
    const Behavior b = exact_behavior(gen::random_noncontextual(rng, kChsh));
    ASSERT_TRUE(b.is_exact());
    EXPECT_LE(chsh_max(b).value, Number(2));
    EXPECT_TRUE(nosignaling_residual(b).identical(Number(0)));
    EXPECT_EQ(Number(oracle::chsh_brute(oracle::table_of(b)).value), chsh_max(b).value);
  }
}

TEST(Singlet, MatchesStateVectorOracle) {
  std::mt19937_64 rng(24);
  std::uniform_real_distribution<double> ang(-2 * std::numbers::pi, 2 * std::numbers::pi);
  for (int i = 0; i < 2000; ++i) {
    QuantumDirections d{kChsh, {std::vector<double>{ang(rng), ang(rng)},
                                std::vector<double>{ang(rng), ang(rng)}}};
    const Behavior b = singlet_behavior(d);
    for (const auto &c : kChsh.contexts()) {
      const auto p = oracle::singlet_state_vector(d.angles[0][c.alice], d.angles[1][c.bob]);
      for (int k = 0; k < 4; ++k)
        EXPECT_NEAR(b.at(c).at(k / 2, k % 2).to_double(), p[k], 1e-12);
    }
  }
}

TEST(Singlet, EqualAndOrthogonalAngles) {
  QuantumDirections same{kChsh, {std::vector<double>{0.3, 1.0}, std::vector<double>{0.3, 2.0}}};
  const Behavior b = singlet_behavior(same);
  EXPECT_NEAR(b.p(1, 1, {0, 0}).to_double(), 0.0, 1e-15);
  EXPECT_NEAR(expectation(b, {0, 0}).to_double(), -1.0, 1e-15);
  const auto p = oracle::singlet_state_vector(0.3, 0.3);
  EXPECT_NEAR(p[0], 0.0, 1e-15);

  QuantumDirections orth{kChsh, {std::vector<double>{0, 0}, std::vector<double>{std::numbers::pi / 2, 0}}};
  const Behavior o = singlet_behavior(orth);
  EXPECT_NEAR(expectation(o, {0, 0}).to_double(), 0.0, 1e-15);
  const auto q = oracle::singlet_state_vector(0, std::numbers::pi / 2);
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(o.at({0, 0}).at(k / 2, k % 2).to_double(), 0.25, 1e-15);
    EXPECT_NEAR(q[k], 0.25, 1e-15);
  }
}

TEST(Singlet, OptimalAnglesReachTsirelson) {
  const Behavior b = singlet_behavior(singlet_optimal_directions());
  EXPECT_NEAR(chsh_max(b).value.to_double(), 2 * std::numbers::sqrt2, 1e-9);
  std::array<std::array<double, 4>, 4> t;
  const auto &d = singlet_optimal_directions();
  for (int c = 0; c < 4; ++c)
    t[c] = oracle::singlet_state_vector(d.angles[0][c / 2], d.angles[1][c % 2]);
  EXPECT_NEAR(oracle::chsh_max_double(t), 2 * std::numbers::sqrt2, 1e-9);
}

TEST(Singlet, RotationalInvariance) {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
  for (int i = 0; i < 2000; ++i) {
    QuantumDirections d{kChsh, {std::vector<double>{ang(rng), ang(rng)},
                                std::vector<double>{ang(rng), ang(rng)}}};
    QuantumDirections shifted = d;
    const double off = ang(rng);
    for (auto &list : shifted.angles)
      for (auto &a : list)
        a += off;
    const Behavior b = singlet_behavior(d), s = singlet_behavior(shifted);
    for (const auto &c : kChsh.contexts())
      for (std::size_t k = 0; k < 4; ++k)
        EXPECT_LT(std::fabs(b.at(c).at(k / 2, k % 2).to_double() -
                            s.at(c).at(k / 2, k % 2).to_double()),
                  1e-12);
  }
}

TEST(Singlet, TsirelsonBoundOverRandomAngles) {
  std::mt19937_64 rng(26);
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    QuantumDirections d{kChsh, {std::vector<double>{ang(rng), ang(rng)},
                                std::vector<double>{ang(rng), ang(rng)}}};
    worst = std::max(worst, chsh_max(singlet_behavior(d)).value.to_double());
  }
  EXPECT_LE(worst, 2 * std::numbers::sqrt2 + 1e-9);
}

TEST(Singlet, Errors) {
  QuantumDirections d{kChsh, {std::vector<double>{0}, std::vector<double>{0, 1}}};
  EXPECT_EQ(code_of([&] { singlet_behavior(d); }), ErrorCode::AnglesMissing);
  QuantumDirections t{Scenario({{"A", 3}}, {{"B", 2}}), {std::vector<double>{0}, std::vector<double>{0}}};
  EXPECT_EQ(code_of([&] { singlet_behavior(t); }), ErrorCode::NonBinarySetting);
}
