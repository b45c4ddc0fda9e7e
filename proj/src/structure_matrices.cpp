#include "varint/structure_matrices.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "varint/errors.hpp"

namespace varint {

namespace {

constexpr int kMaxFactorial = 40;
constexpr int kMaxGamma = 20;

const std::array<double, kMaxFactorial + 1>& factorial_table() {
    static const auto table = [] {
        std::array<double, kMaxFactorial + 1> t{};
        t[0] = 1.0;
        for (int i = 1; i <= kMaxFactorial; ++i) t[i] = t[i - 1] * i;
        return t;
    }();
    return table;
}

void check_args(int gamma, double h) {
    if (gamma < 1 || gamma > kMaxGamma)
        throw InvalidArgument("gamma must lie in [1, " + std::to_string(kMaxGamma) + "]");
    if (h == 0.0 || !std::isfinite(h)) throw InvalidArgument("h must be finite and nonzero");
}

/// h^p / d evaluated in extended precision so that the entry is rounded once.
long double power_over(double h, int p, long double d) {
    long double r = 1.0L;
    for (int i = 0; i < p; ++i) r *= h;
    return r / d;
}

Eigen::MatrixXd mat_a(int g, double h) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g, g);
    for (int a = 0; a < g; ++a)
        for (int b = a; b < g; ++b) A(a, b) = static_cast<double>(power_over(h, b - a, factorial(b - a)));
    return A;
}

Eigen::MatrixXd mat_b(int g, double h) {
    Eigen::MatrixXd B(g, g);
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) {
            const int p = 2 * g - a - b - 1;
            B(a, b) = static_cast<double>(power_over(h, p, factorial(p)));
        }
    return B;
}

Eigen::MatrixXd mat_c(int g, double h) {
    Eigen::MatrixXd C(g, g);
    for (int a = 0; a < g; ++a)
        for (int b = 0; b < g; ++b) {
            const int p = 2 * g - a - b - 1;
            C(a, b) = static_cast<double>(
                power_over(h, p, static_cast<long double>(p) * factorial(g - a - 1) * factorial(g - b - 1)));
        }
    return C;
}

Eigen::MatrixXd mat_d(int g) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(g, g);
    for (int a = 0; a < g; ++a) D(a, a) = ((g - a - 1) % 2 == 0) ? 1.0 : -1.0;
    return D;
}

Eigen::MatrixXd mat_e(int g) {
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(g, g);
    for (int a = 0; a < g; ++a) E(a, g - a - 1) = 1.0;
    return E;
}

}  // namespace

double factorial(int n) {
    if (n < 0 || n > kMaxFactorial) throw InvalidArgument("factorial argument out of range");
    return factorial_table()[static_cast<std::size_t>(n)];
}

GammaMatrixSet build_matrices(int gamma, double h) {
    check_args(gamma, h);
    GammaMatrixSet ms;
    ms.gamma = gamma;
    ms.h = h;
    ms.A = mat_a(gamma, h);
    ms.B = mat_b(gamma, h);
    ms.C = mat_c(gamma, h);
    ms.D = mat_d(gamma);
    ms.E = mat_e(gamma);
    return ms;
}

double componentwise_deviation(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                               const Eigen::MatrixXd& S) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            const double diff = std::abs(X(i, j) - Y(i, j));
            if (diff == 0.0) continue;
            if (S(i, j) == 0.0) return std::numeric_limits<double>::infinity();
            dev = std::max(dev, diff / S(i, j));
        }
    return dev;
}

double IdentityReport::max_deviation() const {
    return std::max({a_reflection, a_inverse, b_reflection, c_product, c_reflection});
}

IdentityReport verify_identities(const GammaMatrixSet& ms) {
    const int g = ms.gamma;
    const double h = ms.h;
    const Eigen::MatrixXd Am = mat_a(g, -h);
    const Eigen::MatrixXd Bm = mat_b(g, -h);
    const Eigen::MatrixXd Cm = mat_c(g, -h);
    const Eigen::MatrixXd& D = ms.D;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(g, g);

    // Sign flips are exact, so the reference magnitude is the entry itself.
    IdentityReport r;
    r.a_reflection = componentwise_deviation(Am, D * ms.A * D, Am.cwiseAbs());
    r.a_inverse = componentwise_deviation(Am * ms.A, I, Am.cwiseAbs() * ms.A.cwiseAbs());
    r.b_reflection = componentwise_deviation(Bm, -D * ms.B * D, Bm.cwiseAbs());
    r.c_product = componentwise_deviation(ms.A * D * ms.B, ms.C, ms.A.cwiseAbs() * ms.B.cwiseAbs());
    r.c_reflection = componentwise_deviation(ms.C, -D * Cm * D, ms.C.cwiseAbs());
    return r;
}

LUFactors lu_factors_C(int gamma, double h) {
    check_args(gamma, h);
    const int g = gamma;
    auto f = [](int n) { return factorial(n); };
    LUFactors out{Eigen::MatrixXd::Zero(g, g), Eigen::MatrixXd::Zero(g, g)};
    for (int a = 0; a < g; ++a) {
        for (int b = 0; b <= a; ++b) {
            out.L(a, b) = std::pow(h, b - a) * f(a) * f(2 * g - b - 1) * f(g - b - 1) *
                          f(2 * g - a - b - 2) /
                          (f(b) * f(a - b) * f(2 * g - a - 1) * f(g - a - 1) * f(2 * g - 2 * b - 2));
        }
        for (int b = a; b < g; ++b) {
            out.U(a, b) = std::pow(h, 2 * g - a - b - 1) * f(a) * f(b) * f(2 * g - 2 * a - 1) *
                          f(2 * g - a - b - 2) /
                          (f(b - a) * f(2 * g - a - 1) * f(2 * g - b - 1) * f(g - a - 1) *
                           f(g - b - 1));
        }
    }
    return out;
}

double det_C(int gamma, double h) {
    check_args(gamma, h);
    double d = std::pow(h, gamma * gamma);
    for (int a = 0; a < gamma; ++a) d *= factorial(a) / factorial(gamma + a);
    return d;
}

double det_B(int gamma, double h) {
    const int sign_exp = gamma * (gamma - 1) / 2;
    return (sign_exp % 2 == 0 ? 1.0 : -1.0) * det_C(gamma, h);
}

Eigen::MatrixXd leading_hessian_blocks(int gamma, double h) {
    check_args(gamma, h);
    using MatrixXld = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const int g = gamma;
    // B(±h) is badly conditioned for larger γ; solve in extended precision.
    const MatrixXld D = mat_d(g).cast<long double>();
    const MatrixXld Ap = mat_a(g, h).cast<long double>(), Am = mat_a(g, -h).cast<long double>();
    const Eigen::FullPivLU<MatrixXld> Bp(mat_b(g, h).cast<long double>()),
        Bm(mat_b(g, -h).cast<long double>());
    if (!Bp.isInvertible() || !Bm.isInvertible())
        throw Error("B(h) is numerically singular");

    const MatrixXld I = MatrixXld::Identity(g, g);
    MatrixXld H(2 * g, 2 * g);
    H.topLeftCorner(g, g) = D * Bp.solve(Ap);
    H.topRightCorner(g, g) = -D * Bp.solve(I);
    H.bottomLeftCorner(g, g) = D * Bm.solve(I);
    H.bottomRightCorner(g, g) = -D * Bm.solve(Am);
    return H.cast<double>();
}

}  // namespace varint
