#pragma once

#include <initializer_list>
#include <memory>
#include <random>
#include <vector>

#include "varint/core.hpp"
#include "varint/discretization.hpp"
#include "varint/problems.hpp"

namespace test {

using namespace varint;

inline TrajectoryNode node(std::initializer_list<double> v) {
    TrajectoryNode n(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) n(i++) = x;
    return n;
}

/// Scalar (γ = 1, n = 1) trajectory on the grid t_k = k·h.
inline Trajectory scalar_traj(std::initializer_list<double> q, double h = 1.0) {
    std::vector<TrajectoryNode> nodes;
    std::vector<double> t;
    int k = 0;
    for (double v : q) {
        nodes.push_back(node({v}));
        t.push_back(h * k++);
    }
    return Trajectory(1, 1, std::move(nodes), std::move(t));
}

inline BoundaryData boundary_of(const Trajectory& traj) {
    return {traj.node(0), traj.node(traj.intervals()), {}};
}

inline std::unique_ptr<QuadraticModel> free_particle_model(double h = 1.0) {
    return std::make_unique<QuadraticModel>(Eigen::MatrixXd::Identity(1, 1), h);
}

inline Vector random_vector(std::mt19937_64& rng, int m, double amp = 1.0) {
    std::uniform_real_distribution<double> u(-amp, amp);
    Vector v(m);
    for (int i = 0; i < m; ++i) v(i) = u(rng);
    return v;
}

inline double max_abs_diff(const Trajectory& a, const Trajectory& b) {
    double d = 0.0;
    for (int k = 0; k <= a.intervals(); ++k)
        d = std::max(d, (a.node(k) - b.node(k)).cwiseAbs().maxCoeff());
    return d;
}

/// L_{d,k}(z) = ½ zᵀ H_k z + g_kᵀ z with z = (x0, x1) and a separate
/// Hessian per interval.
class PerStepQuadraticModel final : public DiscreteLagrangianModel {
public:
    PerStepQuadraticModel(int gamma, int dim, std::vector<Eigen::MatrixXd> H,
                          std::vector<Eigen::VectorXd> g)
        : gamma_(gamma), dim_(dim), H_(std::move(H)), g_(std::move(g)) {}

    int gamma() const override { return gamma_; }
    int dim() const override { return dim_; }
    double eval(int k, const Vector& x0, const Vector& x1) const override;
    void derivatives(int k, const Vector& x0, const Vector& x1, Vector* grad,
                     Matrix* hess) const override;
    bool derivatives_analytic() const override { return true; }

private:
    int gamma_;
    int dim_;
    std::vector<Eigen::MatrixXd> H_;
    std::vector<Eigen::VectorXd> g_;
};

/// Per-step Hessians R Rᵀ (PSD) whose lower-right block is positive
/// definite, for N intervals.
std::unique_ptr<PerStepQuadraticModel> random_psd_model(std::mt19937_64& rng, int gamma, int dim,
                                                        int N);

/// Damped Newton iteration for a zero of a planar wind field; returns the
/// last iterate.
Eigen::Vector2d wind_equilibrium(const WindField& wind, Eigen::Vector2d start, int iters = 100);

/// Discrete action Σ_k L_{d,k}(x_k, x_{k+1}).
double discrete_action(const DiscreteLagrangianModel& model, const Trajectory& traj);

/// Newton on the full DEL system with a dense Hessian, the oracle for
/// relaxation results. Pinned components are those fixed by the boundary.
Trajectory dense_newton_solve(const DiscreteLagrangianModel& model, Trajectory traj,
                              int iters = 50, double tol = 1e-13);

}  // namespace test
