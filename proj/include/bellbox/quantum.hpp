#pragma once
// Spin measurements on the two-qubit singlet state, directions in one plane.

#include "bellbox/error.hpp"
#include "bellbox/scenario.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace bellbox {

struct QuantumDirections {
  Scenario scenario;
  /// Radians, one per setting of each party.
  std::array<std::vector<double>, 2> angles;

  const std::vector<double> &of(Party p) const { return angles[index_of(p)]; }
  bool operator==(const QuantumDirections &) const = default;
};

inline double degrees_to_radians(double deg) {
  return deg * std::numbers::pi / 180.0;
}

/// P(a,b|x,y) = (1 - a b cos(theta_x - phi_y)) / 4 with a, b = +1 for outcome
/// index 1 and -1 for index 2.
inline Behavior singlet_behavior(const QuantumDirections &d) {
  const Scenario &s = d.scenario;
  for (Party p : kParties) {
    if (d.of(p).size() != s.setting_count(p))
      throw Error(ErrorCode::AnglesMissing,
                  std::string(party_name(p)) + " has " +
                      std::to_string(s.setting_count(p)) + " settings but " +
                      std::to_string(d.of(p).size()) + " angles");
    for (std::size_t i = 0; i < s.setting_count(p); ++i) {
      if (s.outcomes(p, i) != 2)
        throw Error(ErrorCode::NonBinarySetting,
                    "spin measurements have two outcomes");
      if (!std::isfinite(d.of(p)[i]))
        throw Error(ErrorCode::AnglesMissing, "non-finite angle");
    }
  }
  Behavior out = Behavior::zeros(s);
  for (const auto &c : s.contexts()) {
    const double cosine =
        std::cos(d.of(Party::Alice)[c.alice] - d.of(Party::Bob)[c.bob]);
    ProbMatrix &m = out.at(c);
    for (std::size_t a = 1; a <= 2; ++a)
      for (std::size_t b = 1; b <= 2; ++b) {
        const double ab = OutcomeValue::of(a, 2).value * OutcomeValue::of(b, 2).value;
        m.at(a - 1, b - 1) = Number::floating((1.0 - ab * cosine) / 4.0);
      }
  }
  return out;
}

/// Alice at 0 and 90 degrees, Bob at 45 and 135 degrees.
inline QuantumDirections singlet_optimal_directions() {
  return {Scenario::binary({"A", "A'"}, {"B", "B'"}),
          {std::vector<double>{degrees_to_radians(0), degrees_to_radians(90)},
           std::vector<double>{degrees_to_radians(45), degrees_to_radians(135)}}};
}

} // namespace bellbox
