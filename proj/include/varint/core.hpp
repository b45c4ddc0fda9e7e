#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "varint/errors.hpp"

namespace varint {

/// Largest supported node size γ·n. Per-interval quantities live on pairs of
/// nodes, so small vectors and matrices are bounded by twice this value and
/// stay on the stack in the relaxation kernels.
inline constexpr int kMaxNodeSize = 8;
inline constexpr int kMaxPairSize = 2 * kMaxNodeSize;

using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxPairSize, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxPairSize, kMaxPairSize>;

/// A point of T^(γ-1)Q: γ blocks of length n ordered by derivative degree.
using TrajectoryNode = Vector;

/// Discrete trajectory q_0 … q_N together with its time grid t_0 … t_N.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(int gamma, int dim, std::vector<TrajectoryNode> nodes, std::vector<double> times);

    int gamma() const noexcept { return gamma_; }
    int dim() const noexcept { return dim_; }
    int node_size() const noexcept { return gamma_ * dim_; }
    /// Number of intervals N.
    int intervals() const noexcept { return static_cast<int>(nodes_.size()) - 1; }

    const TrajectoryNode& node(int k) const { return nodes_[static_cast<std::size_t>(k)]; }
    TrajectoryNode& node(int k) { return nodes_[static_cast<std::size_t>(k)]; }
    const std::vector<TrajectoryNode>& nodes() const noexcept { return nodes_; }
    std::vector<TrajectoryNode>& nodes() noexcept { return nodes_; }

    const std::vector<double>& times() const noexcept { return times_; }
    void set_times(std::vector<double> times);

    /// Position block q_k.
    Eigen::VectorXd position(int k) const { return node(k).head(dim_); }

    /// Throws InvalidArgument when a structural invariant is broken.
    void validate() const;

    friend bool operator==(const Trajectory& a, const Trajectory& b);

private:
    int gamma_ = 1;
    int dim_ = 1;
    std::vector<TrajectoryNode> nodes_;
    std::vector<double> times_;
};

struct Knot {
    int index = 0;
    Eigen::VectorXd position;
    /// Pin every component of the node, not only its position block.
    bool full_node = false;
};

struct BoundaryData {
    TrajectoryNode left;
    TrajectoryNode right;
    std::vector<Knot> knots;

    /// Checks node sizes and knot ordering against a grid of N intervals.
    void validate(int N, int gamma, int dim) const;
};

/// Which components of each node the relaxation is allowed to move.
/// Endpoints are fully pinned; knots pin their position block (or the whole
/// node for full-node knots).
class NodeConstraints {
public:
    using Mask = std::uint32_t;

    NodeConstraints() = default;
    NodeConstraints(const BoundaryData& boundary, int N, int gamma, int dim);

    int intervals() const noexcept { return static_cast<int>(masks_.size()) - 1; }
    Mask free_mask(int k) const { return masks_[static_cast<std::size_t>(k)]; }
    bool fully_free(int k) const { return free_mask(k) == all_; }
    /// Indices of free components of node k in increasing order.
    std::vector<int> free_components(int k) const;

private:
    std::vector<Mask> masks_;
    Mask all_ = 0;
};

/// Discrete Lagrangian L_{d,k}(x0, x1) on pairs of nodes, indexed by the
/// interval k so that time dependence can be carried by the model.
///
/// Implementations must be pure: evaluation may run concurrently for
/// different k from several threads.
class DiscreteLagrangianModel {
public:
    virtual ~DiscreteLagrangianModel() = default;

    virtual int gamma() const = 0;
    virtual int dim() const = 0;
    int node_size() const { return gamma() * dim(); }

    virtual double eval(int k, const Vector& x0, const Vector& x1) const = 0;

    /// Gradient (D_1 L_d, D_2 L_d) and Hessian [[D_11, D_12], [D_21, D_22]]
    /// over the stacked argument (x0, x1). Either output may be null.
    /// The default implementation uses central finite differences of eval.
    virtual void derivatives(int k, const Vector& x0, const Vector& x1, Vector* grad,
                             Matrix* hess) const;

    virtual bool derivatives_analytic() const { return false; }

    Vector grad1(int k, const Vector& x0, const Vector& x1) const;
    Vector grad2(int k, const Vector& x0, const Vector& x1) const;
    Matrix hess11(int k, const Vector& x0, const Vector& x1) const;
    Matrix hess12(int k, const Vector& x0, const Vector& x1) const;
    Matrix hess22(int k, const Vector& x0, const Vector& x1) const;
};

enum class Method { Jacobi, JacobiNewton };

struct RefinementStage {
    int target_N = 0;
    /// Iteration budget on the current level before refining anyway.
    int trigger_iters = 0;
};

struct SolverConfig {
    Method method = Method::JacobiNewton;
    double tol_residual = 1e-8;
    int max_iters = 100000;
    /// ε in q + (1-ε)(q̄ - q).
    double damping = 0.0;
    /// Newton iterations of the nonlinear solve inside a Jacobi sweep.
    int inner_iters = 5;
    double inner_tol = 1e-12;
    /// Newton substeps per Jacobi–Newton sweep.
    int newton_substeps = 1;
    std::vector<RefinementStage> refinement;
    int time_grid_update_period = 100;
    std::optional<std::string> adaptive_sundman;
    /// Run convergence diagnostics every this many iterations (0 disables).
    int diagnostics_every = 0;
    double damping_post_refine = 0.5;
    int post_refine_iters = 10;

    void validate() const;
};

struct TimeSpan {
    double start = 0.0;
    double end = 1.0;
};

/// Straight-line guess between the boundary nodes; position blocks are
/// piecewise linear through the knots.
Trajectory make_linear_initial_guess(const BoundaryData& boundary, int N, int gamma, int dim,
                                     TimeSpan span = {});

/// D_2 L_{d,k-1}(q_{k-1}, q_k) + D_1 L_{d,k}(q_k, q_{k+1}) for 1 ≤ k ≤ N-1.
Vector del_residual(const DiscreteLagrangianModel& model, const Trajectory& traj, int k);

/// Max over interior nodes of the max-norm of the DEL residual.
double max_residual(const DiscreteLagrangianModel& model, const Trajectory& traj);

/// Same, restricted to the components each node is free to move.
double max_residual(const DiscreteLagrangianModel& model, const Trajectory& traj,
                    const NodeConstraints& constraints);

const char* to_string(Method m);

}  // namespace varint
