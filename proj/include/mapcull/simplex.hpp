#pragma once

#include <Eigen/Dense>

namespace mapcull {

struct LpResult {
    enum Status { OPTIMAL, INFEASIBLE, UNBOUNDED } status = INFEASIBLE;
    double objective = 0.0;
    Eigen::VectorXd x;
};

// min c'z  s.t.  E z = f, z >= 0. Two-phase dense simplex, Bland's rule.
LpResult solve_lp(const Eigen::MatrixXd& E, const Eigen::VectorXd& f, const Eigen::VectorXd& c);

}  // namespace mapcull
