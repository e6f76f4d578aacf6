#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace crpo {

/// Dense two-phase primal simplex with Bland's anti-cycling rule.
///
///   maximize  c^T x
///   s.t.      A_eq x  = b_eq
///             A_ub x <= b_ub
///             x >= 0
///
/// Desk-scale by design: tableau form, no sparsity, no revised factorization.
class SimplexSolver {
public:
    enum class Status { Optimal, Infeasible, Unbounded, NumericalFailure };

    struct Result {
        Status status = Status::NumericalFailure;
        std::vector<double> x;
        double objective = 0.0;
    };

    static constexpr double kPivotTol = 1e-9;

    Result maximize(const std::vector<double>& c, const std::vector<std::vector<double>>& a_eq,
                    const std::vector<double>& b_eq, const std::vector<std::vector<double>>& a_ub,
                    const std::vector<double>& b_ub) {
        const std::size_t n = c.size();
        const std::size_t m_eq = b_eq.size(), m_ub = b_ub.size();
        std::size_t m = m_eq + m_ub;
        const std::size_t n_slack = m_ub;
        std::size_t n_total = n + n_slack + m;  // structural | slack | artificial

        // rows_: [coefficients | rhs], rhs made nonnegative by row negation.
        rows_.assign(m, std::vector<double>(n_total + 1, 0.0));
        for (std::size_t r = 0; r < m_eq; ++r) {
            for (std::size_t j = 0; j < n; ++j) rows_[r][j] = a_eq[r][j];
            rows_[r][n_total] = b_eq[r];
        }
        for (std::size_t r = 0; r < m_ub; ++r) {
            auto& row = rows_[m_eq + r];
            for (std::size_t j = 0; j < n; ++j) row[j] = a_ub[r][j];
            row[n + r] = 1.0;
            row[n_total] = b_ub[r];
        }
        for (auto& row : rows_)
            if (row.back() < 0.0)
                for (auto& v : row) v = -v;

        basis_.resize(m);
        n_real_ = n + n_slack;
        for (std::size_t r = 0; r < m; ++r) {
            rows_[r][n_real_ + r] = 1.0;
            basis_[r] = n_real_ + r;
        }

        // Phase 1: minimize the sum of artificials.
        std::vector<double> cost1(n_total, 0.0);
        for (std::size_t j = n_real_; j < n_total; ++j) cost1[j] = 1.0;
        if (!run(cost1, /*allow_artificial=*/true)) return {Status::NumericalFailure, {}, 0.0};
        if (phase_objective(cost1) > 1e-9) return {Status::Infeasible, {}, 0.0};
        if (!expel_artificials()) return {Status::NumericalFailure, {}, 0.0};
        n_total = rows_.empty() ? n_real_ : rows_[0].size() - 1;
        m = rows_.size();

        // Phase 2: minimize -c over structural variables.
        std::vector<double> cost2(n_total, 0.0);
        for (std::size_t j = 0; j < n; ++j) cost2[j] = -c[j];
        if (!run(cost2, /*allow_artificial=*/false)) {
            // run() only fails by unboundedness once feasible
            return {Status::Unbounded, {}, 0.0};
        }

        Result out;
        out.status = Status::Optimal;
        out.x.assign(n, 0.0);
        for (std::size_t r = 0; r < m; ++r)
            if (basis_[r] < n) out.x[basis_[r]] = rows_[r].back();
        out.objective = 0.0;
        for (std::size_t j = 0; j < n; ++j) out.objective += c[j] * out.x[j];
        return out;
    }

private:
    std::vector<std::vector<double>> rows_;
    std::vector<std::size_t> basis_;
    std::size_t n_real_ = 0;

    double phase_objective(const std::vector<double>& cost) const {
        double obj = 0.0;
        for (std::size_t r = 0; r < rows_.size(); ++r) obj += cost[basis_[r]] * rows_[r].back();
        return obj;
    }

    /// Reduced cost of column j given the current basis.
    double reduced_cost(const std::vector<double>& cost, std::size_t j) const {
        double z = 0.0;
        for (std::size_t r = 0; r < rows_.size(); ++r) z += cost[basis_[r]] * rows_[r][j];
        return cost[j] - z;
    }

    void pivot(std::size_t r, std::size_t j) {
        auto& prow = rows_[r];
        const double piv = prow[j];
        for (auto& v : prow) v /= piv;
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (i == r) continue;
            const double f = rows_[i][j];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < prow.size(); ++k) rows_[i][k] -= f * prow[k];
        }
        basis_[r] = j;
    }

    /// Bland's rule simplex loop on the current tableau; minimizes `cost`.
    /// Returns false on unboundedness.
    bool run(const std::vector<double>& cost, bool allow_artificial) {
        const std::size_t limit = allow_artificial ? cost.size() : n_real_;
        for (;;) {
            std::size_t enter = limit;
            for (std::size_t j = 0; j < limit; ++j) {
                if (reduced_cost(cost, j) < -kPivotTol) {
                    enter = j;
                    break;  // Bland: smallest eligible index
                }
            }
            if (enter == limit) return true;

            std::size_t leave = rows_.size();
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < rows_.size(); ++r) {
                const double a = rows_[r][enter];
                if (a <= kPivotTol) continue;
                const double ratio = rows_[r].back() / a;
                if (ratio < best_ratio - 1e-15 ||
                    (ratio < best_ratio + 1e-15 &&
                     (leave == rows_.size() || basis_[r] < basis_[leave]))) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
            if (leave == rows_.size()) return false;
            pivot(leave, enter);
        }
    }

    /// After phase 1, pivot artificials out of the basis; a row with no
    /// eligible pivot is redundant and dropped.
    bool expel_artificials() {
        for (std::size_t r = 0; r < rows_.size();) {
            if (basis_[r] < n_real_) {
                ++r;
                continue;
            }
            std::size_t j = n_real_;
            for (std::size_t k = 0; k < n_real_; ++k)
                if (std::abs(rows_[r][k]) > kPivotTol) {
                    j = k;
                    break;
                }
            if (j < n_real_) {
                pivot(r, j);
                ++r;
            } else {
                if (std::abs(rows_[r].back()) > 1e-9) return false;
                rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(r));
                basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
            }
        }
        // Drop the artificial columns entirely.
        for (auto& row : rows_) {
            row.erase(row.begin() + static_cast<std::ptrdiff_t>(n_real_), row.end() - 1);
        }
        return true;
    }
};

}  // namespace crpo
