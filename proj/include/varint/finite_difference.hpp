#pragma once

#include <algorithm>
#include <cmath>

#include "varint/core.hpp"

namespace varint {

inline double fd_gradient_step(const Vector& x) {
    return 1e-6 * (1.0 + (x.size() ? x.cwiseAbs().maxCoeff() : 0.0));
}

inline double fd_hessian_step(const Vector& x) {
    return 1e-4 * (1.0 + (x.size() ? x.cwiseAbs().maxCoeff() : 0.0));
}

/// Central-difference gradient of a scalar function.
template <class F>
Vector fd_gradient(F&& f, const Vector& x, double step) {
    const Eigen::Index m = x.size();
    Vector g(m);
    Vector xp = x;
    for (Eigen::Index i = 0; i < m; ++i) {
        xp(i) = x(i) + step;
        const double fp = f(xp);
        xp(i) = x(i) - step;
        const double fm = f(xp);
        xp(i) = x(i);
        g(i) = (fp - fm) / (2.0 * step);
    }
    return g;
}

/// Central second differences of a scalar function, symmetrized.
template <class F>
Matrix fd_hessian(F&& f, const Vector& x, double step) {
    const Eigen::Index m = x.size();
    Matrix H(m, m);
    Vector xp = x;
    const double f0 = f(x);
    const double h2 = step * step;
    for (Eigen::Index i = 0; i < m; ++i) {
        xp(i) = x(i) + step;
        const double fp = f(xp);
        xp(i) = x(i) - step;
        const double fm = f(xp);
        xp(i) = x(i);
        H(i, i) = (fp - 2.0 * f0 + fm) / h2;
        for (Eigen::Index j = 0; j < i; ++j) {
            double acc = 0.0;
            for (int si : {1, -1}) {
                for (int sj : {1, -1}) {
                    xp(i) = x(i) + si * step;
                    xp(j) = x(j) + sj * step;
                    acc += si * sj * f(xp);
                }
            }
            xp(i) = x(i);
            xp(j) = x(j);
            H(i, j) = H(j, i) = acc / (4.0 * h2);
        }
    }
    return H;
}

/// Central-difference Jacobian of a vector function.
template <class F>
Matrix fd_jacobian(F&& f, const Vector& x, double step) {
    const Eigen::Index m = x.size();
    Vector xp = x;
    Matrix J;
    for (Eigen::Index i = 0; i < m; ++i) {
        xp(i) = x(i) + step;
        const Vector fp = f(xp);
        xp(i) = x(i) - step;
        const Vector fm = f(xp);
        xp(i) = x(i);
        if (i == 0) J.resize(fp.size(), m);
        J.col(i) = (fp - fm) / (2.0 * step);
    }
    return J;
}

struct DerivativeCheck {
    double grad_rel_error = 0.0;
    double hess_rel_error = 0.0;
    /// Largest asymmetry of the full pair Hessian relative to its scale.
    double hess_asymmetry = 0.0;
};

/// Compares a model's derivatives against Richardson-extrapolated central
/// differences of eval (for the gradient) and of the gradient (for the Hessian).
DerivativeCheck check_model_derivatives(const DiscreteLagrangianModel& model, int k,
                                        const Vector& x0, const Vector& x1);

}  // namespace varint
