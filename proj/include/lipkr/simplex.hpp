/*
 * Copyright 2026 The lipkr authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef LIPKR_SIMPLEX_HPP
#define LIPKR_SIMPLEX_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lipkr/matrix.hpp"

namespace lipkr {

inline constexpr double kLpInfinity = std::numeric_limits<double>::infinity();

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

inline const char* lp_status_name(LpStatus s) {
    switch (s) {
        case LpStatus::optimal: return "optimal";
        case LpStatus::infeasible: return "infeasible";
        case LpStatus::unbounded: return "unbounded";
        case LpStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

struct LpConstraint {
    Vector coeffs;
    double rhs = 0.0;
};

struct LpBounds {
    double lo = 0.0;
    double hi = kLpInfinity;
};

/// minimize objective . x
/// subject to  equalities (a.x = b), inequalities (a.x <= b) and per-variable
/// bounds (default x >= 0). Intended for desk-scale instances (a few hundred
/// variables); everything is dense.
struct LpProblem {
    Vector objective;
    std::vector<LpConstraint> equalities;
    std::vector<LpConstraint> inequalities;
    std::vector<LpBounds> bounds;  // empty means x >= 0 for all variables
};

struct LpSolution {
    LpStatus status = LpStatus::infeasible;
    Vector x;
    double value = 0.0;
    int pivots = 0;
};

namespace detail {

// Dense tableau with Bland's anti-cycling pivot rule.
class SimplexTableau {
public:
    SimplexTableau(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), cells_(rows * (cols + 1), 0.0), basis_(rows, 0) {}

    double& at(std::size_t r, std::size_t c) { return cells_[r * (cols_ + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return cells_[r * (cols_ + 1) + c]; }
    double& rhs(std::size_t r) { return cells_[r * (cols_ + 1) + cols_]; }
    double rhs(std::size_t r) const { return cells_[r * (cols_ + 1) + cols_]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::vector<std::size_t>& basis() { return basis_; }
    const std::vector<std::size_t>& basis() const { return basis_; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double p = at(pr, pc);
        for (std::size_t c = 0; c <= cols_; ++c) cells_[pr * (cols_ + 1) + c] /= p;
        for (std::size_t r = 0; r < rows_; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= cols_; ++c)
                cells_[r * (cols_ + 1) + c] -= f * cells_[pr * (cols_ + 1) + c];
        }
        basis_[pr] = pc;
    }

private:
    std::size_t rows_, cols_;
    std::vector<double> cells_;
    std::vector<std::size_t> basis_;
};

inline constexpr double kPivotTol = 1e-9;
inline constexpr double kFeasTol = 1e-7;
inline constexpr int kMaxPivots = 200000;

// Runs simplex iterations minimizing `cost` (a length-cols vector) over the
// current tableau. `allowed[c]` gates entering columns. Returns status and
// accumulates pivot count.
inline LpStatus run_simplex(SimplexTableau& t, const std::vector<double>& cost,
                            const std::vector<bool>& allowed, int& pivots) {
    const std::size_t m = t.rows();
    const std::size_t n = t.cols();

    // Reduced-cost row maintained incrementally: r_j = c_j - c_B^T B^{-1} A_j.
    std::vector<double> reduced(n + 1, 0.0);
    for (std::size_t j = 0; j <= n; ++j) {
        double acc = j < n ? cost[j] : 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            const double cb = cost[t.basis()[r]];
            if (cb != 0.0) acc -= cb * (j < n ? t.at(r, j) : t.rhs(r));
        }
        reduced[j] = acc;
    }

    for (;;) {
        // Bland: entering variable = lowest-index improving column.
        std::size_t enter = n;
        for (std::size_t j = 0; j < n; ++j) {
            if (!allowed[j]) continue;
            if (reduced[j] < -kPivotTol) {
                enter = j;
                break;
            }
        }
        if (enter == n) return LpStatus::optimal;

        // Ratio test; Bland tie-break on the smallest basis index.
        std::size_t leave = m;
        double best_ratio = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            const double a = t.at(r, enter);
            if (a <= kPivotTol) continue;
            const double ratio = t.rhs(r) / a;
            if (leave == m || ratio < best_ratio - kPivotTol ||
                (std::abs(ratio - best_ratio) <= kPivotTol && t.basis()[r] < t.basis()[leave])) {
                leave = r;
                best_ratio = ratio;
            }
        }
        if (leave == m) return LpStatus::unbounded;

        t.pivot(leave, enter);
        if (++pivots > kMaxPivots) return LpStatus::iteration_limit;

        // Refresh the reduced costs from the updated tableau.
        for (std::size_t j = 0; j <= n; ++j) {
            double acc = j < n ? cost[j] : 0.0;
            for (std::size_t r = 0; r < m; ++r) {
                const double cb = cost[t.basis()[r]];
                if (cb != 0.0) acc -= cb * (j < n ? t.at(r, j) : t.rhs(r));
            }
            reduced[j] = acc;
        }
    }
}

}  // namespace detail

/// Two-phase primal simplex. Free and upper-bounded variables are reduced to
/// the standard form internally; the returned `x` is in the original
/// variable space and `value` is the original objective at `x`.
inline LpSolution lp_solve(const LpProblem& problem) {
    const std::size_t n_orig = problem.objective.size();
    if (n_orig == 0) throw std::invalid_argument("lp_solve: empty objective");
    for (const auto& c : problem.equalities)
        if (c.coeffs.size() != n_orig)
            throw std::invalid_argument("lp_solve: equality row length mismatch");
    for (const auto& c : problem.inequalities)
        if (c.coeffs.size() != n_orig)
            throw std::invalid_argument("lp_solve: inequality row length mismatch");
    std::vector<LpBounds> bounds = problem.bounds;
    if (bounds.empty()) bounds.assign(n_orig, LpBounds{});
    if (bounds.size() != n_orig) throw std::invalid_argument("lp_solve: bounds length mismatch");

    // Variable transforms to x' >= 0:
    //   finite lo:            x = lo + x'        (extra row if hi finite)
    //   lo = -inf, finite hi: x = hi - x'
    //   free:                 x = x'_pos - x'_neg
    struct VarMap {
        std::size_t col = 0;      // first standard-form column
        bool negated = false;     // x = offset - x'
        bool split = false;       // x = x'(col) - x'(col+1)
        double offset = 0.0;
    };
    std::vector<VarMap> vmap(n_orig);
    std::size_t n_std = 0;
    std::vector<LpConstraint> extra_rows;  // upper-bound rows in original space
    for (std::size_t j = 0; j < n_orig; ++j) {
        const LpBounds b = bounds[j];
        if (b.lo > b.hi) throw std::invalid_argument("lp_solve: empty variable bound interval");
        VarMap& m = vmap[j];
        m.col = n_std;
        if (std::isfinite(b.lo)) {
            m.offset = b.lo;
            n_std += 1;
            if (std::isfinite(b.hi)) {
                LpConstraint row;
                row.coeffs.assign(n_orig, 0.0);
                row.coeffs[j] = 1.0;
                row.rhs = b.hi;
                extra_rows.push_back(std::move(row));
            }
        } else if (std::isfinite(b.hi)) {
            m.offset = b.hi;
            m.negated = true;
            n_std += 1;
        } else {
            m.split = true;
            n_std += 2;
        }
    }

    // Assemble rows in standard form: eq rows first, then <= rows with slack.
    std::vector<LpConstraint> ineq = problem.inequalities;
    for (auto& r : extra_rows) ineq.push_back(std::move(r));
    const std::size_t m_eq = problem.equalities.size();
    const std::size_t m_le = ineq.size();
    const std::size_t m_rows = m_eq + m_le;
    const std::size_t n_slack = m_le;

    auto to_std_row = [&](const LpConstraint& src, std::vector<double>& dst, double& rhs) {
        dst.assign(n_std, 0.0);
        rhs = src.rhs;
        for (std::size_t j = 0; j < n_orig; ++j) {
            const double a = src.coeffs[j];
            if (a == 0.0) continue;
            const VarMap& m = vmap[j];
            rhs -= a * m.offset;
            if (m.split) {
                dst[m.col] += a;
                dst[m.col + 1] -= a;
            } else {
                dst[m.col] += m.negated ? -a : a;
            }
        }
    };

    // Columns: standard vars | slacks | artificials (one per row at most).
    std::vector<std::vector<double>> rows(m_rows);
    std::vector<double> rhs(m_rows, 0.0);
    for (std::size_t r = 0; r < m_eq; ++r) to_std_row(problem.equalities[r], rows[r], rhs[r]);
    for (std::size_t r = 0; r < m_le; ++r) to_std_row(ineq[r], rows[m_eq + r], rhs[m_eq + r]);

    std::vector<double> slack_sign(m_rows, 0.0);
    for (std::size_t r = 0; r < m_le; ++r) slack_sign[m_eq + r] = 1.0;

    // Normalize to rhs >= 0.
    for (std::size_t r = 0; r < m_rows; ++r) {
        if (rhs[r] < 0.0) {
            rhs[r] = -rhs[r];
            for (auto& a : rows[r]) a = -a;
            slack_sign[r] = -slack_sign[r];
        }
    }

    // A row can use its slack as the initial basic variable only when the
    // slack coefficient stayed +1; all other rows receive an artificial.
    std::vector<bool> needs_artificial(m_rows, true);
    for (std::size_t r = 0; r < m_rows; ++r)
        if (slack_sign[r] > 0.0) needs_artificial[r] = false;
    std::size_t n_art = 0;
    for (std::size_t r = 0; r < m_rows; ++r)
        if (needs_artificial[r]) ++n_art;

    const std::size_t n_cols = n_std + n_slack + n_art;
    detail::SimplexTableau t(m_rows, n_cols);
    {
        std::size_t slack_i = 0, art_i = 0;
        for (std::size_t r = 0; r < m_rows; ++r) {
            for (std::size_t c = 0; c < n_std; ++c) t.at(r, c) = rows[r][c];
            t.rhs(r) = rhs[r];
            if (r >= m_eq) {
                t.at(r, n_std + slack_i) = slack_sign[r];
                if (!needs_artificial[r]) t.basis()[r] = n_std + slack_i;
                ++slack_i;
            }
            if (needs_artificial[r]) {
                t.at(r, n_std + n_slack + art_i) = 1.0;
                t.basis()[r] = n_std + n_slack + art_i;
                ++art_i;
            }
        }
    }

    LpSolution sol;
    std::vector<bool> allowed(n_cols, true);

    // Phase 1: minimize the sum of artificials.
    if (n_art > 0) {
        std::vector<double> cost1(n_cols, 0.0);
        for (std::size_t c = n_std + n_slack; c < n_cols; ++c) cost1[c] = 1.0;
        const LpStatus st = detail::run_simplex(t, cost1, allowed, sol.pivots);
        if (st == LpStatus::iteration_limit) {
            sol.status = st;
            return sol;
        }
        double art_sum = 0.0;
        for (std::size_t r = 0; r < m_rows; ++r)
            if (t.basis()[r] >= n_std + n_slack) art_sum += t.rhs(r);
        if (art_sum > detail::kFeasTol) {
            sol.status = LpStatus::infeasible;
            return sol;
        }
        // Drive remaining zero-level artificials out of the basis.
        for (std::size_t r = 0; r < m_rows; ++r) {
            if (t.basis()[r] < n_std + n_slack) continue;
            for (std::size_t c = 0; c < n_std + n_slack; ++c) {
                if (std::abs(t.at(r, c)) > detail::kPivotTol) {
                    t.pivot(r, c);
                    ++sol.pivots;
                    break;
                }
            }
        }
        for (std::size_t c = n_std + n_slack; c < n_cols; ++c) allowed[c] = false;
    }

    // Phase 2: the real objective over the transformed variables.
    std::vector<double> cost2(n_cols, 0.0);
    for (std::size_t j = 0; j < n_orig; ++j) {
        const double c = problem.objective[j];
        if (c == 0.0) continue;
        const VarMap& m = vmap[j];
        if (m.split) {
            cost2[m.col] += c;
            cost2[m.col + 1] -= c;
        } else {
            cost2[m.col] += m.negated ? -c : c;
        }
    }
    const LpStatus st = detail::run_simplex(t, cost2, allowed, sol.pivots);
    if (st != LpStatus::optimal) {
        sol.status = st;
        return sol;
    }

    // Recover the original variables.
    Vector x_std(n_std, 0.0);
    for (std::size_t r = 0; r < m_rows; ++r)
        if (t.basis()[r] < n_std) x_std[t.basis()[r]] = t.rhs(r);
    sol.x.assign(n_orig, 0.0);
    for (std::size_t j = 0; j < n_orig; ++j) {
        const VarMap& m = vmap[j];
        if (m.split)
            sol.x[j] = x_std[m.col] - x_std[m.col + 1];
        else if (m.negated)
            sol.x[j] = m.offset - x_std[m.col];
        else
            sol.x[j] = m.offset + x_std[m.col];
    }
    sol.value = dot(problem.objective, sol.x);
    sol.status = LpStatus::optimal;
    return sol;
}

}  // namespace lipkr

#endif  // LIPKR_SIMPLEX_HPP
