#ifndef MFRAME_NUMERIC_HPP
#define MFRAME_NUMERIC_HPP

#include <Eigen/Dense>
#include <functional>

#include "mframe/expr.hpp"

namespace mframe {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

int numeric_rank(const Mat& m, double tol = 1e-8);

// Damped Gauss-Newton (Levenberg-Marquardt) least squares with a numeric
// Jacobian. The residual callback may throw DomainError for invalid points;
// such steps are rejected.
struct LMOptions {
    int max_iter = 200;
    double tol = 1e-10;        // success when ||f||_inf <= tol
    double fd_step = 1e-7;
};

struct LMResult {
    RVec x;
    double residual_inf = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

LMResult lm_solve(const std::function<RVec(const RVec&)>& residual, RVec x0,
                  const LMOptions& opt = {});

// exp of a small real matrix by scaling and squaring with a Taylor core
Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a);

}  // namespace mframe

#endif
