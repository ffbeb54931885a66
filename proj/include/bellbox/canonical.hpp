#pragma once
// The sock-and-handkerchief models.
//
// Bertlmann keeps handkerchiefs of one color in both front pockets (pink or
// not, fair coin) and wears socks of different colors. Questions:
//   A   left handkerchief pink?                     (1 = yes)
//   A'  left handkerchief and left sock same color? (1 = yes)
//   A'' left sock pink?                             (1 = yes)
// and B, B', B'' the same for the right side.
//
// socks_on:    socks are on before anyone asks. Four states of mind lambda1..4
//              (handkerchief color x side of the pink sock), fixed for every
//              context.
// socks_off:   socks are put on when a sock question is asked. A single sock
//              question attracts the pink sock to that side; two sock
//              questions make him pick a side with a fair attention coin.
// socks_color: socks_off dynamics with A'' and B'' in place of A' and B'.

#include "bellbox/models.hpp"

#include <string>
#include <vector>

namespace bellbox {

namespace detail {

enum class Question { Handkerchief, Correlation, SockColor };

/// One fully specified dressing: handkerchief color and the pink sock's side.
struct Dressing {
  bool handkerchief_pink;
  bool pink_sock_left;

  /// Outcome index (1 = yes) for a question asked about one side.
  std::size_t answer(Question q, bool left_side) const {
    const bool sock_pink = left_side ? pink_sock_left : !pink_sock_left;
    bool yes = false;
    switch (q) {
    case Question::Handkerchief: yes = handkerchief_pink; break;
    case Question::Correlation: yes = handkerchief_pink == sock_pink; break;
    case Question::SockColor: yes = sock_pink; break;
    }
    return yes ? 1 : 2;
  }
};

struct NamedDressing {
  std::string id;
  Dressing dressing;
};

// Weights are uniform over the listed dressings.
inline ContextCauses dress_context(const Context &c,
                                   const std::vector<Question> &alice_q,
                                   const std::vector<Question> &bob_q,
                                   const std::vector<NamedDressing> &dressings) {
  ContextCauses cc;
  const Number w = Number::rational(1, static_cast<long long>(dressings.size()));
  for (const auto &nd : dressings) {
    cc.causes.push_back({nd.id, w});
    cc.alice[{c.alice, nd.id}] =
        point_mass(nd.dressing.answer(alice_q[c.alice], true));
    cc.bob[{c.bob, nd.id}] = point_mass(nd.dressing.answer(bob_q[c.bob], false));
  }
  return cc;
}

inline ContextualModel socks_off_dynamics(const Scenario &s,
                                          const std::vector<Question> &alice_q,
                                          const std::vector<Question> &bob_q) {
  // When no sock question is asked the sock side is irrelevant; the pink sock
  // is recorded on the left only to fix a representative.
  const std::vector<NamedDressing> by_handkerchief{
      {"mu1", {true, true}}, {"mu2", {false, true}}};
  const std::vector<NamedDressing> pink_left{
      {"nu1", {true, true}}, {"nu2", {false, true}}};
  const std::vector<NamedDressing> pink_right{
      {"sigma1", {true, false}}, {"sigma2", {false, false}}};
  const std::vector<NamedDressing> attention_coin{
      {"lambda1-left", {true, true}},
      {"lambda2-right", {true, false}},
      {"lambda3-right", {false, false}},
      {"lambda4-left", {false, true}}};

  ContextualModel m{s, {}};
  for (const auto &c : s.contexts()) {
    const bool left_sock = alice_q[c.alice] != Question::Handkerchief;
    const bool right_sock = bob_q[c.bob] != Question::Handkerchief;
    const auto &causes = left_sock && right_sock ? attention_coin
                         : left_sock             ? pink_left
                         : right_sock            ? pink_right
                                                 : by_handkerchief;
    m.contexts.emplace(c, dress_context(c, alice_q, bob_q, causes));
  }
  return m;
}

} // namespace detail

/// Socks on before the meeting: one cause set lambda1..lambda4, weight 1/4.
inline NonContextualModel socks_on() {
  using detail::Question;
  NonContextualModel m;
  m.scenario = Scenario::binary({"A", "A'"}, {"B", "B'"});
  const std::vector<Question> questions{Question::Handkerchief,
                                        Question::Correlation};
  const std::vector<detail::NamedDressing> states{
      {"lambda1", {true, true}},
      {"lambda2", {true, false}},
      {"lambda3", {false, false}},
      {"lambda4", {false, true}}};
  for (const auto &st : states) {
    m.causes.push_back({st.id, Number::rational(1, 4)});
    for (std::size_t s = 0; s < 2; ++s) {
      m.alice[{s, st.id}] = point_mass(st.dressing.answer(questions[s], true));
      m.bob[{s, st.id}] = point_mass(st.dressing.answer(questions[s], false));
    }
  }
  return m;
}

/// Socks put on when asked: the cause set depends on the joint measurement.
inline ContextualModel socks_off() {
  using detail::Question;
  return detail::socks_off_dynamics(
      Scenario::binary({"A", "A'"}, {"B", "B'"}),
      {Question::Handkerchief, Question::Correlation},
      {Question::Handkerchief, Question::Correlation});
}

/// Sock-color questions A''/B'' under the socks-off dynamics. The marginal of
/// A'' depends on whether Bob asks B or B'', so this model signals. Its
/// maximal |CHSH| under these dynamics is 2.
inline ContextualModel socks_color() {
  using detail::Question;
  return detail::socks_off_dynamics(
      Scenario::binary({"A", "A''"}, {"B", "B''"}),
      {Question::Handkerchief, Question::SockColor},
      {Question::Handkerchief, Question::SockColor});
}

} // namespace bellbox
