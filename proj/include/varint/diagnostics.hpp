#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "varint/core.hpp"

namespace varint {

/// Per-step Hessian [[A_k, C_k], [C_kᵀ, B_k]] of L_{d,k}, symmetrized.
Matrix per_step_hessian(const DiscreteLagrangianModel& model, int k, const Vector& x0,
                        const Vector& x1);

/// Hessian of the discrete action in the interior nodes q_1 … q_{N-1}.
/// diag[i] is D_{i+1} and offdiag[i] is C_{i+1}, the block coupling nodes
/// i+1 (rows) and i+2 (columns).
struct BlockTridiagonalHessian {
    int gamma = 1;
    int dim = 1;
    int N = 0;
    std::vector<Matrix> diag;
    std::vector<Matrix> offdiag;

    int block_size() const { return gamma * dim; }
    Eigen::MatrixXd to_dense() const;
    /// y = H x for a stacked interior vector.
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

BlockTridiagonalHessian assemble_hessian(const DiscreteLagrangianModel& model,
                                         const Trajectory& traj);

/// Block LDLᵀ recurrence S_1 = D_1, S_{k+1} = D_{k+1} - C_kᵀ S_k⁻¹ C_k with a
/// Cholesky test of every S_k.
bool block_positive_definite(const BlockTridiagonalHessian& H);

/// Power-iteration estimate of ρ(-D⁻¹C). Iterates on J² because the
/// spectrum of a block-tridiagonal Jacobi matrix is symmetric about zero.
double spectral_radius_jacobi(const BlockTridiagonalHessian& H, int max_iters = 200,
                              double rel_tol = 1e-8);

enum class Guarantee { TheoremSatisfied, GlobalPDOnly, SpectralOnly, NoGuarantee };

const char* to_string(Guarantee g);

struct StepVerdict {
    bool psd = false;
    double min_eigenvalue = 0.0;
    bool a_pd = false;
    bool b_pd = false;
};

struct ConvergenceReport {
    std::vector<StepVerdict> steps;
    bool all_steps_psd = false;
    bool all_A_pd = false;
    bool all_B_pd = false;
    bool global_pd = false;
    /// NaN when a diagonal block is singular.
    double spectral_radius_estimate = 0.0;
    Guarantee guarantee = Guarantee::NoGuarantee;
};

/// Evaluates the sufficient convergence conditions along traj. When tol_psd
/// is not given, each step uses 1e-9·‖H_k‖_∞.
ConvergenceReport check_theorem_conditions(const DiscreteLagrangianModel& model,
                                           const Trajectory& traj,
                                           std::optional<double> tol_psd = std::nullopt);

}  // namespace varint
