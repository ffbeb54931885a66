#pragma once
// Phase-1 simplex for { x >= 0 : A x = b } over an exact ordered field.
//
// Dense tableau with one artificial variable per row and Bland's
// smallest-index rule for both the entering and the leaving variable, which
// rules out cycling. On infeasibility the optimal phase-1 duals give a Farkas
// vector y with y^T A <= 0 componentwise and y^T b > 0.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

namespace bellbox {

template <class Field> struct FeasibilityResult {
  bool feasible = false;
  /// A nonnegative solution (feasible case).
  std::vector<Field> solution;
  /// Farkas vector, one entry per constraint row (infeasible case).
  std::vector<Field> farkas;
  /// Phase-1 optimum: zero iff feasible.
  Field infeasibility{};
  std::size_t pivots = 0;
};

template <class Field> class Phase1Simplex {
public:
  Phase1Simplex(const std::vector<std::vector<Field>> &a, const std::vector<Field> &b)
      : m_(b.size()), n_(a.empty() ? 0 : a.front().size()) {
    if (a.size() != m_)
      throw std::invalid_argument("simplex: row count mismatch");
    for (const auto &row : a)
      if (row.size() != n_)
        throw std::invalid_argument("simplex: ragged constraint matrix");

    const std::size_t width = n_ + m_ + 1;
    tableau_.assign(m_, std::vector<Field>(width, Field(0)));
    cost_.assign(width, Field(0));
    flipped_.assign(m_, false);
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      flipped_[i] = b[i] < Field(0);
      for (std::size_t j = 0; j < n_; ++j)
        tableau_[i][j] = flipped_[i] ? Field(-a[i][j]) : a[i][j];
      tableau_[i][n_ + i] = Field(1);
      tableau_[i][width - 1] = flipped_[i] ? Field(-b[i]) : b[i];
      basis_[i] = n_ + i;
    }
    // Reduced costs of  min sum(artificials)  with the artificials basic.
    for (std::size_t j = 0; j < n_; ++j)
      for (std::size_t i = 0; i < m_; ++i)
        cost_[j] -= tableau_[i][j];
    for (std::size_t i = 0; i < m_; ++i)
      cost_[width - 1] -= tableau_[i][width - 1];
  }

  FeasibilityResult<Field> solve() {
    FeasibilityResult<Field> r;
    while (auto entering = choose_entering()) {
      const auto leaving = choose_leaving(*entering);
      if (!leaving) // unbounded cannot happen in phase 1 (objective >= 0)
        throw std::logic_error("simplex: unbounded phase-1 problem");
      pivot(*leaving, *entering);
      ++r.pivots;
    }
    const std::size_t rhs = n_ + m_;
    r.infeasibility = Field(-cost_[rhs]);
    r.feasible = r.infeasibility == Field(0);
    if (r.feasible) {
      r.solution.assign(n_, Field(0));
      for (std::size_t i = 0; i < m_; ++i)
        if (basis_[i] < n_)
          r.solution[basis_[i]] = tableau_[i][rhs];
    } else {
      // Artificial column k has reduced cost 1 - y'_k.
      r.farkas.resize(m_);
      for (std::size_t k = 0; k < m_; ++k) {
        Field y = Field(1) - cost_[n_ + k];
        r.farkas[k] = flipped_[k] ? Field(-y) : y;
      }
    }
    return r;
  }

private:
  std::optional<std::size_t> choose_entering() const {
    for (std::size_t j = 0; j < n_ + m_; ++j)
      if (cost_[j] < Field(0))
        return j;
    return std::nullopt;
  }

  std::optional<std::size_t> choose_leaving(std::size_t col) const {
    const std::size_t rhs = n_ + m_;
    std::optional<std::size_t> best;
    Field best_ratio{};
    for (std::size_t i = 0; i < m_; ++i) {
      if (!(tableau_[i][col] > Field(0)))
        continue;
      Field ratio = tableau_[i][rhs] / tableau_[i][col];
      if (!best || ratio < best_ratio ||
          (ratio == best_ratio && basis_[i] < basis_[*best])) {
        best = i;
        best_ratio = ratio;
      }
    }
    return best;
  }

  void pivot(std::size_t row, std::size_t col) {
    const std::size_t width = n_ + m_ + 1;
    const Field p = tableau_[row][col];
    for (std::size_t j = 0; j < width; ++j)
      tableau_[row][j] /= p;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row || tableau_[i][col] == Field(0))
        continue;
      const Field f = tableau_[i][col];
      for (std::size_t j = 0; j < width; ++j)
        if (tableau_[row][j] != Field(0))
          tableau_[i][j] -= f * tableau_[row][j];
    }
    if (cost_[col] != Field(0)) {
      const Field f = cost_[col];
      for (std::size_t j = 0; j < width; ++j)
        if (tableau_[row][j] != Field(0))
          cost_[j] -= f * tableau_[row][j];
    }
    basis_[row] = col;
  }

  std::size_t m_, n_;
  std::vector<std::vector<Field>> tableau_;
  std::vector<Field> cost_;
  std::vector<std::size_t> basis_;
  std::vector<bool> flipped_;
};

template <class Field>
FeasibilityResult<Field> solve_feasibility(const std::vector<std::vector<Field>> &a,
                                           const std::vector<Field> &b) {
  return Phase1Simplex<Field>(a, b).solve();
}

} // namespace bellbox
