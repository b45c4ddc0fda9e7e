#include "varint/diagnostics.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "varint/parallel.hpp"

namespace varint {

Matrix per_step_hessian(const DiscreteLagrangianModel& model, int k, const Vector& x0,
                        const Vector& x1) {
    Matrix H;
    model.derivatives(k, x0, x1, nullptr, &H);
    if (!H.allFinite()) throw ModelError("non-finite Hessian on interval " + std::to_string(k));
    return 0.5 * (H + H.transpose());
}

Eigen::MatrixXd BlockTridiagonalHessian::to_dense() const {
    const int m = block_size();
    const int nb = static_cast<int>(diag.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nb * m, nb * m);
    for (int i = 0; i < nb; ++i) H.block(i * m, i * m, m, m) = diag[static_cast<std::size_t>(i)];
    for (int i = 0; i + 1 < nb; ++i) {
        const Matrix& C = offdiag[static_cast<std::size_t>(i)];
        H.block(i * m, (i + 1) * m, m, m) = C;
        H.block((i + 1) * m, i * m, m, m) = C.transpose();
    }
    return H;
}

Eigen::VectorXd BlockTridiagonalHessian::apply(const Eigen::VectorXd& x) const {
    const int m = block_size();
    const int nb = static_cast<int>(diag.size());
    Eigen::VectorXd y(x.size());
    for (int i = 0; i < nb; ++i) {
        Eigen::VectorXd yi = diag[static_cast<std::size_t>(i)] * x.segment(i * m, m);
        if (i > 0) yi += offdiag[static_cast<std::size_t>(i - 1)].transpose() * x.segment((i - 1) * m, m);
        if (i + 1 < nb) yi += offdiag[static_cast<std::size_t>(i)] * x.segment((i + 1) * m, m);
        y.segment(i * m, m) = yi;
    }
    return y;
}

namespace {

std::vector<Matrix> step_hessians(const DiscreteLagrangianModel& model, const Trajectory& traj) {
    const int N = traj.intervals();
    std::vector<Matrix> H(static_cast<std::size_t>(N));
    parallel_for(0, N, [&](int k) {
        H[static_cast<std::size_t>(k)] = per_step_hessian(model, k, traj.node(k), traj.node(k + 1));
    });
    return H;
}

BlockTridiagonalHessian assemble_from_steps(const std::vector<Matrix>& Hk, int gamma, int dim) {
    const int m = gamma * dim;
    const int N = static_cast<int>(Hk.size());
    BlockTridiagonalHessian H;
    H.gamma = gamma;
    H.dim = dim;
    H.N = N;
    for (int k = 1; k < N; ++k) {
        const Matrix& prev = Hk[static_cast<std::size_t>(k - 1)];
        const Matrix& next = Hk[static_cast<std::size_t>(k)];
        H.diag.emplace_back(prev.bottomRightCorner(m, m) + next.topLeftCorner(m, m));
        if (k + 1 < N) H.offdiag.emplace_back(next.topRightCorner(m, m));
    }
    return H;
}

bool is_pd(const Matrix& A, double tol) {
    Eigen::LDLT<Matrix> ldlt(A);
    if (ldlt.info() != Eigen::Success) return false;
    return ldlt.isPositive() && ldlt.vectorD().minCoeff() > tol;
}

}  // namespace

BlockTridiagonalHessian assemble_hessian(const DiscreteLagrangianModel& model,
                                         const Trajectory& traj) {
    if (traj.intervals() < 2) throw InvalidArgument("Hessian needs N >= 2");
    return assemble_from_steps(step_hessians(model, traj), traj.gamma(), traj.dim());
}

bool block_positive_definite(const BlockTridiagonalHessian& H) {
    const std::size_t nb = H.diag.size();
    Matrix S = H.diag.empty() ? Matrix() : H.diag.front();
    for (std::size_t i = 0; i < nb; ++i) {
        Eigen::LLT<Matrix> llt(S);
        if (llt.info() != Eigen::Success) return false;
        if (!(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0)) return false;
        if (i + 1 < nb) {
            const Matrix& C = H.offdiag[i];
            S = H.diag[i + 1] - C.transpose() * llt.solve(C);
        }
    }
    return true;
}

double spectral_radius_jacobi(const BlockTridiagonalHessian& H, int max_iters, double rel_tol) {
    const int nb = static_cast<int>(H.diag.size());
    const int m = H.block_size();
    std::vector<Eigen::FullPivLU<Matrix>> lu;
    lu.reserve(static_cast<std::size_t>(nb));
    for (int i = 0; i < nb; ++i) {
        lu.emplace_back(H.diag[static_cast<std::size_t>(i)]);
        if (!lu.back().isInvertible()) throw SingularDiagonalBlock(i + 1);
    }
    if (nb <= 1) return 0.0;

    // J v = -D⁻¹ (C_{k-1}ᵀ v_{k-1} + C_k v_{k+1}).
    auto apply_j = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd out(v.size());
        for (int i = 0; i < nb; ++i) {
            Vector r = Vector::Zero(m);
            if (i > 0) r += H.offdiag[static_cast<std::size_t>(i - 1)].transpose() * v.segment((i - 1) * m, m);
            if (i + 1 < nb) r += H.offdiag[static_cast<std::size_t>(i)] * v.segment((i + 1) * m, m);
            out.segment(i * m, m) = -lu[static_cast<std::size_t>(i)].solve(r);
        }
        return out;
    };

    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Eigen::VectorXd v(nb * m);
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
    v.normalize();

    double lambda = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXd w = apply_j(apply_j(v));
        const double norm = w.norm();
        if (!std::isfinite(norm)) return std::numeric_limits<double>::quiet_NaN();
        if (norm == 0.0) return 0.0;
        const double prev = lambda;
        lambda = norm;
        v = w / norm;
        if (it > 0 && std::abs(lambda - prev) <= rel_tol * lambda) break;
    }
    return std::sqrt(lambda);
}

const char* to_string(Guarantee g) {
    switch (g) {
        case Guarantee::TheoremSatisfied: return "TheoremSatisfied";
        case Guarantee::GlobalPDOnly: return "GlobalPDOnly";
        case Guarantee::SpectralOnly: return "SpectralOnly";
        case Guarantee::NoGuarantee: return "NoGuarantee";
    }
    return "?";
}

ConvergenceReport check_theorem_conditions(const DiscreteLagrangianModel& model,
                                           const Trajectory& traj, std::optional<double> tol_psd) {
    const int m = traj.node_size();
    const std::vector<Matrix> Hk = step_hessians(model, traj);

    ConvergenceReport rep;
    rep.steps.resize(Hk.size());
    parallel_for(0, static_cast<int>(Hk.size()), [&](int k) {
        const Matrix& H = Hk[static_cast<std::size_t>(k)];
        const double tol = tol_psd ? *tol_psd : 1e-9 * H.cwiseAbs().rowwise().sum().maxCoeff();
        Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
        StepVerdict& v = rep.steps[static_cast<std::size_t>(k)];
        v.min_eigenvalue = es.eigenvalues().minCoeff();
        v.psd = v.min_eigenvalue >= -tol;
        v.a_pd = is_pd(H.topLeftCorner(m, m), tol);
        v.b_pd = is_pd(H.bottomRightCorner(m, m), tol);
    });
    rep.all_steps_psd = rep.all_A_pd = rep.all_B_pd = true;
    for (const StepVerdict& v : rep.steps) {
        rep.all_steps_psd = rep.all_steps_psd && v.psd;
        rep.all_A_pd = rep.all_A_pd && v.a_pd;
        rep.all_B_pd = rep.all_B_pd && v.b_pd;
    }

    if (traj.intervals() >= 2) {
        const BlockTridiagonalHessian H = assemble_from_steps(Hk, traj.gamma(), traj.dim());
        rep.global_pd = block_positive_definite(H);
        try {
            rep.spectral_radius_estimate = spectral_radius_jacobi(H);
        } catch (const SingularDiagonalBlock&) {
            rep.spectral_radius_estimate = std::numeric_limits<double>::quiet_NaN();
        }
    }

    if (rep.all_steps_psd && (rep.all_A_pd || rep.all_B_pd))
        rep.guarantee = Guarantee::TheoremSatisfied;
    else if (rep.global_pd)
        rep.guarantee = Guarantee::GlobalPDOnly;
    else if (rep.spectral_radius_estimate < 1.0)
        rep.guarantee = Guarantee::SpectralOnly;
    else
        rep.guarantee = Guarantee::NoGuarantee;
    return rep;
}

}  // namespace varint
