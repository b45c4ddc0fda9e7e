#pragma once

#include <Eigen/Dense>

namespace varint {

/// n! in double precision from a precomputed table (n <= 40).
double factorial(int n);

/// The γ×γ matrices A(h), B(h), C(h), D, E that describe the leading-order
/// behaviour of the discrete Hessian in the step size h.
struct GammaMatrixSet {
    int gamma = 0;
    double h = 0.0;
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    Eigen::MatrixXd D;
    Eigen::MatrixXd E;
};

GammaMatrixSet build_matrices(int gamma, double h);

/// Largest componentwise relative deviation of each identity.
struct IdentityReport {
    /// A(-h) = D A(h) D.
    double a_reflection = 0.0;
    /// A(-h) A(h) = I.
    double a_inverse = 0.0;
    /// B(-h) = -D B(h) D.
    double b_reflection = 0.0;
    /// C(h) = A(h) D B(h).
    double c_product = 0.0;
    /// C(h) = -D C(-h) D.
    double c_reflection = 0.0;

    double max_deviation() const;
    bool passed(double tol = 1e-12) const { return max_deviation() <= tol; }
};

IdentityReport verify_identities(const GammaMatrixSet& ms);

struct LUFactors {
    Eigen::MatrixXd L;
    Eigen::MatrixXd U;
};

/// Closed-form unit-lower / upper triangular factors of C(h).
LUFactors lu_factors_C(int gamma, double h);

double det_C(int gamma, double h);
double det_B(int gamma, double h);

/// Leading coefficient of the discrete Hessian,
/// [[D B(h)^-1 A(h), -D B(h)^-1], [D B(-h)^-1, -D B(-h)^-1 A(-h)]].
Eigen::MatrixXd leading_hessian_blocks(int gamma, double h);

/// max_ij |X_ij - Y_ij| / S_ij, where S carries the magnitude each entry was
/// formed from (entries with S_ij == 0 must match exactly).
double componentwise_deviation(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                               const Eigen::MatrixXd& S);

}  // namespace varint
