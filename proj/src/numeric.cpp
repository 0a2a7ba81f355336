#include "mframe/numeric.hpp"

#include <cmath>

namespace mframe {

int numeric_rank(const Mat& m, double tol) {
    if (m.rows() == 0 || m.cols() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    double scale = sv(0);
    if (scale <= 0) return 0;
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol * scale) ++rank;
    return rank;
}

LMResult lm_solve(const std::function<RVec(const RVec&)>& residual, RVec x0,
                  const LMOptions& opt) {
    LMResult out;
    out.x = x0;
    RVec f;
    try {
        f = residual(x0);
    } catch (const DomainError&) {
        return out;  // not converged, infinite residual
    } catch (const EvalError&) {
        return out;
    }
    double lambda = 1e-3;
    out.residual_inf = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    const int n = static_cast<int>(x0.size());

    for (int iter = 0; iter < opt.max_iter; ++iter) {
        out.iterations = iter;
        if (out.residual_inf <= opt.tol) {
            out.converged = true;
            return out;
        }
        // numeric Jacobian (forward differences, fall back to backward on domain errors)
        Eigen::MatrixXd J(f.size(), n);
        bool jac_ok = true;
        for (int j = 0; j < n && jac_ok; ++j) {
            RVec xp = out.x;
            double h = opt.fd_step * (1.0 + std::abs(out.x(j)));
            xp(j) += h;
            try {
                J.col(j) = (residual(xp) - f) / h;
            } catch (...) {
                xp(j) = out.x(j) - h;
                try {
                    J.col(j) = (f - residual(xp)) / h;
                } catch (...) {
                    jac_ok = false;
                }
            }
        }
        if (!jac_ok) return out;

        Eigen::MatrixXd JtJ = J.transpose() * J;
        Eigen::VectorXd g = J.transpose() * f;
        bool stepped = false;
        for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
            Eigen::MatrixXd A = JtJ + lambda * Eigen::MatrixXd::Identity(n, n);
            RVec delta = A.ldlt().solve(-g);
            RVec xn = out.x + delta;
            RVec fn;
            try {
                fn = residual(xn);
            } catch (...) {
                lambda *= 10;
                continue;
            }
            double rn = fn.size() ? fn.cwiseAbs().maxCoeff() : 0.0;
            if (rn < out.residual_inf || fn.squaredNorm() < f.squaredNorm()) {
                out.x = xn;
                f = fn;
                out.residual_inf = rn;
                lambda = std::max(lambda * 0.3, 1e-12);
                stepped = true;
            } else {
                lambda *= 10;
            }
        }
        if (!stepped) return out;  // stuck
    }
    out.converged = out.residual_inf <= opt.tol;
    return out;
}

Eigen::MatrixXd matrix_exp(const Eigen::MatrixXd& a) {
    const int n = static_cast<int>(a.rows());
    double norm = a.cwiseAbs().maxCoeff();
    int squarings = 0;
    Eigen::MatrixXd m = a;
    while (norm > 0.25) {
        m *= 0.5;
        norm *= 0.5;
        ++squarings;
    }
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k <= 16; ++k) {
        term = term * m / static_cast<double>(k);
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

}  // namespace mframe
