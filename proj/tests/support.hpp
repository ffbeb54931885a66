#pragma once
// Independent oracles and generators shared by the unit and acceptance tests.
// Nothing here calls into the library's own analysis or model evaluation.

#include "bellbox/bellbox.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Q = boost::multiprecision::cpp_rational;

/// Four entries (1,1), (1,2), (2,1), (2,2) per context, contexts in
/// lexicographic order AB, AB', A'B, A'B'.
using Table = std::array<std::array<Q, 4>, 4>;

inline Table table_from_ints(const std::array<std::array<int, 4>, 4> &num, int den) {
  Table t;
  for (int c = 0; c < 4; ++c)
    for (int k = 0; k < 4; ++k)
      t[c][k] = Q(num[c][k], den);
  return t;
}

// The published tables, scaled by 4.
inline Table socks_on_table() {
  return table_from_ints({{{2, 0, 0, 2}, {1, 1, 1, 1}, {1, 1, 1, 1}, {0, 2, 2, 0}}}, 4);
}
inline Table socks_off_table() {
  return table_from_ints({{{2, 0, 0, 2}, {2, 0, 0, 2}, {2, 0, 0, 2}, {0, 2, 2, 0}}}, 4);
}
/// Conditioned on lambda1 (pink handkerchiefs, pink sock on the left).
inline Table lambda1_table() {
  return table_from_ints({{{1, 0, 0, 0}, {0, 1, 0, 0}, {1, 0, 0, 0}, {0, 1, 0, 0}}}, 1);
}

/// Brute-force sock dynamics. World = (handkerchief pink?, attention coin
/// says left?), each of the four worlds with probability 1/4.
enum class Ask { Hanky, Match, SockColor };

inline Table socks_dynamics(bool socks_already_on, const std::array<Ask, 2> &alice,
                            const std::array<Ask, 2> &bob) {
  Table t{};
  int idx = 0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y, ++idx) {
      for (auto &v : t[idx])
        v = 0;
      for (int hanky = 0; hanky < 2; ++hanky)
        for (int coin = 0; coin < 2; ++coin) {
          const bool pink_hanky = hanky == 0;
          const bool left_sock_q = alice[x] != Ask::Hanky;
          const bool right_sock_q = bob[y] != Ask::Hanky;
          bool pink_left;
          if (socks_already_on || (left_sock_q && right_sock_q))
            pink_left = coin == 0;
          else if (left_sock_q)
            pink_left = true;
          else if (right_sock_q)
            pink_left = false;
          else
            pink_left = coin == 0; // irrelevant to every answer
          auto answer = [&](Ask q, bool left) {
            const bool sock_pink = left ? pink_left : !pink_left;
            switch (q) {
            case Ask::Hanky: return pink_hanky;
            case Ask::Match: return pink_hanky == sock_pink;
            case Ask::SockColor: return sock_pink;
            }
            return false;
          };
          const int a = answer(alice[x], true) ? 0 : 1;
          const int b = answer(bob[y], false) ? 0 : 1;
          t[idx][a * 2 + b] += Q(1, 4);
        }
    }
  return t;
}

inline Table table_of(const bellbox::Behavior &b) {
  Table t;
  const auto cs = b.scenario().contexts();
  for (int c = 0; c < 4; ++c)
    for (int a = 0; a < 2; ++a)
      for (int bb = 0; bb < 2; ++bb)
        t[c][a * 2 + bb] = b.p(a + 1, bb + 1, cs[c]).exact();
  return t;
}

/// max over the 8 odd-parity sign vectors of |sum s_i E_i|, first maximizer.
struct ChshBrute {
  Q value;
  std::array<int, 4> signs;
};
inline ChshBrute chsh_brute(const Table &t) {
  std::array<Q, 4> e;
  for (int c = 0; c < 4; ++c)
    e[c] = t[c][0] - t[c][1] - t[c][2] + t[c][3];
  // '+' < '-' in the printed order, so enumerate with '-' as the 1 bit.
  ChshBrute best{Q(-1), {}};
  for (int bits = 0; bits < 16; ++bits) {
    std::array<int, 4> s;
    int minus = 0;
    for (int i = 0; i < 4; ++i) {
      s[i] = (bits >> (3 - i)) & 1 ? -1 : 1;
      minus += s[i] < 0;
    }
    if (minus % 2 == 0)
      continue;
    Q v = 0;
    for (int i = 0; i < 4; ++i)
      v += s[i] * e[i];
    if (v < 0)
      v = -v;
    if (v > best.value)
      best = {v, s};
  }
  return best;
}

/// Largest marginal mismatch, computed straight from the table.
inline Q residual_brute(const Table &t) {
  Q worst = 0;
  auto upd = [&](Q d) {
    if (d < 0)
      d = -d;
    if (d > worst)
      worst = d;
  };
  // Alice setting x, outcome a: contexts (x,0) vs (x,1).
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a)
      upd((t[x * 2][a * 2] + t[x * 2][a * 2 + 1]) - (t[x * 2 + 1][a * 2] + t[x * 2 + 1][a * 2 + 1]));
  for (int y = 0; y < 2; ++y)
    for (int b = 0; b < 2; ++b)
      upd((t[y][b] + t[y][2 + b]) - (t[2 + y][b] + t[2 + y][2 + b]));
  return worst;
}

/// Singlet (|01> - |10>)/sqrt 2 measured along coplanar directions.
inline std::array<double, 4> singlet_state_vector(double theta, double phi) {
  using C = std::complex<double>;
  const double r = 1.0 / std::sqrt(2.0);
  const std::array<C, 4> psi{C(0), C(r), C(-r), C(0)};
  auto eig = [](double ang, int out) -> std::array<C, 2> {
    const double c = std::cos(ang / 2), s = std::sin(ang / 2);
    return out == 0 ? std::array<C, 2>{C(c), C(s)} : std::array<C, 2>{C(-s), C(c)};
  };
  std::array<double, 4> p{};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const auto u = eig(theta, a), v = eig(phi, b);
      C amp = 0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          amp += std::conj(u[i] * v[j]) * psi[i * 2 + j];
      p[a * 2 + b] = std::norm(amp);
    }
  return p;
}

inline double chsh_max_double(const std::array<std::array<double, 4>, 4> &t) {
  std::array<double, 4> e;
  for (int c = 0; c < 4; ++c)
    e[c] = t[c][0] - t[c][1] - t[c][2] + t[c][3];
  double best = 0;
  for (int bits = 0; bits < 16; ++bits) {
    int minus = 0;
    double v = 0;
    for (int i = 0; i < 4; ++i) {
      const int s = (bits >> i) & 1 ? -1 : 1;
      minus += s < 0;
      v += s * e[i];
    }
    if (minus % 2 == 1)
      best = std::max(best, std::fabs(v));
  }
  return best;
}

} // namespace oracle

namespace gen {

using bellbox::Number;

/// k/64 weights summing to 1 over n slots (zeros allowed).
inline std::vector<Number> weights64(std::mt19937_64 &rng, std::size_t n) {
  std::vector<int> cuts{0, 64};
  std::uniform_int_distribution<int> d(0, 64);
  for (std::size_t i = 1; i < n; ++i)
    cuts.push_back(d(rng));
  std::sort(cuts.begin(), cuts.end());
  std::vector<Number> w;
  for (std::size_t i = 0; i < n; ++i)
    w.push_back(Number::rational(cuts[i + 1] - cuts[i], 64));
  return w;
}

/// Deterministic with probability 1/2, otherwise a k/64 row.
inline std::vector<Number> response64(std::mt19937_64 &rng, std::size_t outcomes = 2) {
  if (std::bernoulli_distribution(0.5)(rng))
    return bellbox::point_mass(std::uniform_int_distribution<std::size_t>(1, outcomes)(rng),
                               outcomes);
  return weights64(rng, outcomes);
}

inline bellbox::NonContextualModel random_noncontextual(std::mt19937_64 &rng,
                                                        const bellbox::Scenario &s) {
  bellbox::NonContextualModel m;
  m.scenario = s;
  const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
  const auto w = weights64(rng, n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::string id = "c" + std::to_string(k);
    m.causes.push_back({id, w[k]});
    for (auto p : bellbox::kParties)
      for (std::size_t i = 0; i < s.setting_count(p); ++i)
        (p == bellbox::Party::Alice ? m.alice : m.bob)[{i, id}] =
            response64(rng, s.outcomes(p, i));
  }
  return m;
}

inline bellbox::ContextualModel random_contextual(std::mt19937_64 &rng,
                                                  const bellbox::Scenario &s) {
  bellbox::ContextualModel m;
  m.scenario = s;
  for (const auto &c : s.contexts()) {
    const auto nc = random_noncontextual(rng, s);
    bellbox::ContextCauses cc;
    cc.causes = nc.causes;
    for (const auto &cause : nc.causes) {
      cc.alice[{c.alice, cause.id}] = nc.alice.at({c.alice, cause.id});
      cc.bob[{c.bob, cause.id}] = nc.bob.at({c.bob, cause.id});
    }
    m.contexts.emplace(c, std::move(cc));
  }
  return m;
}

/// Random exact behavior: each context an independent k/64 distribution.
inline bellbox::Behavior random_behavior(std::mt19937_64 &rng, const bellbox::Scenario &s) {
  bellbox::Behavior b = bellbox::Behavior::zeros(s);
  for (const auto &c : s.contexts()) {
    auto &m = b.at(c);
    const auto w = weights64(rng, m.rows() * m.cols());
    for (std::size_t i = 0; i < w.size(); ++i)
      m.at(i / m.cols(), i % m.cols()) = w[i];
  }
  return b;
}

inline std::string random_label(std::mt19937_64 &rng) {
  static const std::string first = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
  static const std::string rest = "abcdefghijklmnopqrstuvwxyz0123456789_'.-";
  std::string s(1, first[rng() % first.size()]);
  const std::size_t n = rng() % 5;
  for (std::size_t i = 0; i < n; ++i)
    s += rest[rng() % rest.size()];
  return s;
}

inline bellbox::Scenario random_scenario(std::mt19937_64 &rng, bool binary_only = false) {
  std::array<std::vector<bellbox::Setting>, 2> settings;
  for (auto &list : settings) {
    const std::size_t n = 1 + rng() % 3;
    while (list.size() < n) {
      const std::string l = random_label(rng);
      bool dup = false;
      for (const auto &s : list)
        dup = dup || s.label == l;
      if (!dup)
        list.push_back({l, binary_only ? 2u : 2u + rng() % 2});
    }
  }
  return bellbox::Scenario(settings[0], settings[1]);
}

/// A random valid document of any body kind.
inline bellbox::ModelDocument random_document(std::mt19937_64 &rng) {
  bellbox::ModelDocument d;
  const int kind = static_cast<int>(rng() % 4);
  d.scenario = random_scenario(rng, kind == 3);
  if (rng() % 2)
    d.name = "doc-" + std::to_string(rng() % 100000);
  if (rng() % 2)
    d.description = "random document; value " + std::to_string(rng() % 1000) + " (generated)";
  switch (kind) {
  case 0: {
    auto b = random_behavior(rng, d.scenario);
    // sprinkle floating entries in one context, keeping it normalized
    if (rng() % 3 == 0) {
      const auto c = d.scenario.contexts().front();
      auto &m = b.at(c);
      double rest = 1.0;
      for (std::size_t i = 0; i + 1 < m.rows() * m.cols(); ++i) {
        const double v = m.at(i / m.cols(), i % m.cols()).to_double() * 0.999;
        m.at(i / m.cols(), i % m.cols()) = Number::floating(v);
        rest -= v;
      }
      m.at(m.rows() - 1, m.cols() - 1) = Number::floating(rest);
    }
    d.body = std::move(b);
    break;
  }
  case 1: d.body = random_noncontextual(rng, d.scenario); break;
  case 2: d.body = random_contextual(rng, d.scenario); break;
  default: {
    bellbox::QuantumBlock q;
    std::uniform_real_distribution<double> ang(-360, 360);
    for (auto p : bellbox::kParties)
      for (std::size_t i = 0; i < d.scenario.setting_count(p); ++i)
        q.degrees[bellbox::index_of(p)].push_back(rng() % 2 ? ang(rng)
                                                             : double(rng() % 360));
    d.body = std::move(q);
  }
  }
  return d;
}

} // namespace gen
