#include "mapcull/simplex.hpp"

#include <limits>
#include <vector>

namespace mapcull {

namespace {

constexpr double kEps = 1e-9;

// Tableau rows: constraints [A | rhs]; basis[r] is the variable basic in row r.
struct Tableau {
    Eigen::MatrixXd T;  // m x (n+1)
    std::vector<int> basis;

    void pivot(int row, int col) {
        T.row(row) /= T(row, col);
        for (int r = 0; r < T.rows(); ++r) {
            if (r == row) continue;
            const double factor = T(r, col);
            if (factor != 0.0) T.row(r) -= factor * T.row(row);
        }
        basis[static_cast<size_t>(row)] = col;
    }
};

// Bland's rule: entering = lowest-index variable with negative reduced cost,
// leaving = min ratio with lowest-index basic variable on ties.
LpResult::Status run_simplex(Tableau& tab, const Eigen::VectorXd& cost, int n) {
    const int m = static_cast<int>(tab.T.rows());
    for (;;) {
        // Reduced costs: d_j = c_j - c_B' B^-1 A_j, computed from the tableau.
        Eigen::VectorXd cb(m);
        for (int r = 0; r < m; ++r) cb[r] = cost[tab.basis[r]];
        int enter = -1;
        for (int j = 0; j < n; ++j) {
            const double dj = cost[j] - cb.dot(tab.T.col(j));
            if (dj < -kEps) { enter = j; break; }
        }
        if (enter < 0) return LpResult::OPTIMAL;

        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m; ++r) {
            const double a = tab.T(r, enter);
            if (a <= kEps) continue;
            const double ratio = tab.T(r, n) / a;
            if (ratio < best_ratio - kEps ||
                (ratio < best_ratio + kEps && (leave < 0 || tab.basis[r] < tab.basis[leave]))) {
                best_ratio = ratio;
                leave = r;
            }
        }
        if (leave < 0) return LpResult::UNBOUNDED;
        tab.pivot(leave, enter);
    }
}

}  // namespace

LpResult solve_lp(const Eigen::MatrixXd& E, const Eigen::VectorXd& f, const Eigen::VectorXd& c) {
    const int m = static_cast<int>(E.rows());
    const int n = static_cast<int>(E.cols());

    // Normalize rhs >= 0, then add one artificial per row for phase 1.
    Tableau tab;
    tab.T.resize(m, n + m + 1);
    tab.T.setZero();
    for (int r = 0; r < m; ++r) {
        const double sign = f[r] < 0.0 ? -1.0 : 1.0;
        tab.T.block(r, 0, 1, n) = sign * E.row(r);
        tab.T(r, n + r) = 1.0;
        tab.T(r, n + m) = sign * f[r];
        tab.basis.push_back(n + r);
    }

    Eigen::VectorXd phase1_cost = Eigen::VectorXd::Zero(n + m);
    phase1_cost.tail(m).setOnes();
    run_simplex(tab, phase1_cost, n + m);
    double art_sum = 0.0;
    for (int r = 0; r < m; ++r)
        if (tab.basis[r] >= n) art_sum += tab.T(r, n + m);
    if (art_sum > 1e-7) return {LpResult::INFEASIBLE, 0.0, {}};

    // Drive leftover zero-valued artificials out of the basis.
    for (int r = 0; r < m; ++r) {
        if (tab.basis[r] < n) continue;
        int col = -1;
        for (int j = 0; j < n; ++j)
            if (std::abs(tab.T(r, j)) > kEps) { col = j; break; }
        if (col >= 0) tab.pivot(r, col);
        // else: redundant row, its artificial stays basic at zero
    }

    // Phase 2 drops the artificial columns; a leftover basic artificial sits
    // at zero in a redundant row and never pivots again.
    Tableau p2;
    p2.T.resize(m, n + 1);
    p2.T.leftCols(n) = tab.T.leftCols(n);
    p2.T.col(n) = tab.T.col(n + m);
    p2.basis = tab.basis;
    Eigen::VectorXd cost2(n + m);
    cost2.setZero();
    cost2.head(n) = c;
    if (run_simplex(p2, cost2, n) == LpResult::UNBOUNDED)
        return {LpResult::UNBOUNDED, 0.0, {}};

    LpResult res;
    res.status = LpResult::OPTIMAL;
    res.x = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < m; ++r)
        if (p2.basis[r] < n) res.x[p2.basis[r]] = p2.T(r, n);
    res.objective = c.dot(res.x);
    return res;
}

}  // namespace mapcull
