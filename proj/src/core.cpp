#include "varint/core.hpp"

#include <algorithm>
#include <cmath>

#include "varint/finite_difference.hpp"

namespace varint {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

Vector stack(const Vector& x0, const Vector& x1) {
    Vector z(x0.size() + x1.size());
    z << x0, x1;
    return z;
}

}  // namespace

Trajectory::Trajectory(int gamma, int dim, std::vector<TrajectoryNode> nodes,
                       std::vector<double> times)
    : gamma_(gamma), dim_(dim), nodes_(std::move(nodes)), times_(std::move(times)) {
    validate();
}

void Trajectory::set_times(std::vector<double> times) {
    if (times.size() != nodes_.size())
        throw InvalidArgument("time grid length does not match node count");
    times_ = std::move(times);
}

void Trajectory::validate() const {
    if (gamma_ < 1 || dim_ < 1) throw InvalidArgument("gamma and dim must be positive");
    if (gamma_ * dim_ > kMaxNodeSize)
        throw InvalidArgument("node size gamma*dim exceeds " + std::to_string(kMaxNodeSize));
    if (nodes_.size() < 2) throw InvalidArgument("trajectory needs at least two nodes");
    if (times_.size() != nodes_.size())
        throw InvalidArgument("time grid length does not match node count");
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        if (nodes_[k].size() != gamma_ * dim_)
            throw InvalidArgument("node " + std::to_string(k) + " has wrong length");
        if (!all_finite(nodes_[k]))
            throw InvalidArgument("node " + std::to_string(k) + " is not finite");
        if (!std::isfinite(times_[k])) throw InvalidArgument("time grid is not finite");
        if (k > 0 && !(times_[k] > times_[k - 1]))
            throw InvalidArgument("time grid is not strictly increasing at " + std::to_string(k));
    }
}

bool operator==(const Trajectory& a, const Trajectory& b) {
    if (a.gamma_ != b.gamma_ || a.dim_ != b.dim_ || a.times_ != b.times_ ||
        a.nodes_.size() != b.nodes_.size())
        return false;
    for (std::size_t k = 0; k < a.nodes_.size(); ++k)
        if (a.nodes_[k] != b.nodes_[k]) return false;
    return true;
}

void BoundaryData::validate(int N, int gamma, int dim) const {
    const int m = gamma * dim;
    if (left.size() != m || right.size() != m)
        throw InvalidBoundary("boundary nodes must have length gamma*dim = " + std::to_string(m));
    if (!left.allFinite() || !right.allFinite())
        throw InvalidBoundary("boundary nodes must be finite");
    int prev = 0;
    for (const Knot& kn : knots) {
        if (kn.index <= 0 || kn.index >= N)
            throw InvalidBoundary("knot index " + std::to_string(kn.index) +
                                  " outside the open range (0, " + std::to_string(N) + ")");
        if (kn.index <= prev) throw InvalidBoundary("knot indices must be strictly increasing");
        prev = kn.index;
        const long expected = kn.full_node ? m : dim;
        if (kn.position.size() != expected)
            throw InvalidBoundary("knot at " + std::to_string(kn.index) + " must have length " +
                                  std::to_string(expected));
        if (!kn.position.allFinite()) throw InvalidBoundary("knot position must be finite");
    }
}

NodeConstraints::NodeConstraints(const BoundaryData& boundary, int N, int gamma, int dim) {
    const int m = gamma * dim;
    all_ = (Mask{1} << m) - 1;
    masks_.assign(static_cast<std::size_t>(N) + 1, all_);
    masks_.front() = 0;
    masks_.back() = 0;
    const Mask position_bits = (Mask{1} << dim) - 1;
    for (const Knot& kn : boundary.knots) {
        if (kn.index <= 0 || kn.index >= N) throw InvalidBoundary("knot index out of range");
        masks_[static_cast<std::size_t>(kn.index)] = kn.full_node ? 0 : (all_ & ~position_bits);
    }
}

std::vector<int> NodeConstraints::free_components(int k) const {
    std::vector<int> out;
    const Mask mask = free_mask(k);
    for (int i = 0; i < 32; ++i)
        if (mask & (Mask{1} << i)) out.push_back(i);
    return out;
}

void DiscreteLagrangianModel::derivatives(int k, const Vector& x0, const Vector& x1,
                                          Vector* grad, Matrix* hess) const {
    const Eigen::Index m = x0.size();
    const Vector z = stack(x0, x1);
    auto f = [&](const Vector& w) { return eval(k, w.head(m), w.tail(m)); };
    if (grad) *grad = fd_gradient(f, z, fd_gradient_step(z));
    if (hess) *hess = fd_hessian(f, z, fd_hessian_step(z));
}

Vector DiscreteLagrangianModel::grad1(int k, const Vector& x0, const Vector& x1) const {
    Vector g;
    derivatives(k, x0, x1, &g, nullptr);
    return g.head(x0.size());
}

Vector DiscreteLagrangianModel::grad2(int k, const Vector& x0, const Vector& x1) const {
    Vector g;
    derivatives(k, x0, x1, &g, nullptr);
    return g.tail(x1.size());
}

Matrix DiscreteLagrangianModel::hess11(int k, const Vector& x0, const Vector& x1) const {
    Matrix H;
    derivatives(k, x0, x1, nullptr, &H);
    const Eigen::Index m = x0.size();
    return H.topLeftCorner(m, m);
}

Matrix DiscreteLagrangianModel::hess12(int k, const Vector& x0, const Vector& x1) const {
    Matrix H;
    derivatives(k, x0, x1, nullptr, &H);
    const Eigen::Index m = x0.size();
    return H.topRightCorner(m, m);
}

Matrix DiscreteLagrangianModel::hess22(int k, const Vector& x0, const Vector& x1) const {
    Matrix H;
    derivatives(k, x0, x1, nullptr, &H);
    const Eigen::Index m = x0.size();
    return H.bottomRightCorner(m, m);
}

DerivativeCheck check_model_derivatives(const DiscreteLagrangianModel& model, int k,
                                        const Vector& x0, const Vector& x1) {
    const Eigen::Index m = x0.size();
    const Vector z = stack(x0, x1);
    const double step = 1e-5 * (1.0 + z.norm());
    auto f = [&](const Vector& w) { return model.eval(k, w.head(m), w.tail(m)); };
    auto g = [&](const Vector& w) {
        Vector out;
        model.derivatives(k, w.head(m), w.tail(m), &out, nullptr);
        return out;
    };
    Vector grad;
    Matrix hess;
    model.derivatives(k, x0, x1, &grad, &hess);

    DerivativeCheck out;
    // Richardson extrapolation of two central differences cancels the h² term.
    const Vector fd_g = (4.0 * fd_gradient(f, z, 0.5 * step) - fd_gradient(f, z, step)) / 3.0;
    out.grad_rel_error =
        (fd_g - grad).cwiseAbs().maxCoeff() / std::max(1.0, grad.cwiseAbs().maxCoeff());
    const Matrix fd_h = (4.0 * fd_jacobian(g, z, 0.5 * step) - fd_jacobian(g, z, step)) / 3.0;
    const double hscale = std::max(1.0, hess.cwiseAbs().maxCoeff());
    out.hess_rel_error = (fd_h - hess).cwiseAbs().maxCoeff() / hscale;
    out.hess_asymmetry = (hess - hess.transpose()).cwiseAbs().maxCoeff() / hscale;
    return out;
}

void SolverConfig::validate() const {
    if (!(tol_residual > 0.0)) throw ConfigError("tol_residual must be positive");
    if (!(damping >= 0.0 && damping < 1.0))
        throw ConfigError("damping must satisfy 0 <= damping < 1");
    if (!(damping_post_refine >= 0.0 && damping_post_refine < 1.0))
        throw ConfigError("damping_post_refine must satisfy 0 <= damping_post_refine < 1");
    if (max_iters < 0) throw ConfigError("max_iters must be non-negative");
    if (inner_iters < 1) throw ConfigError("inner_iters must be at least 1");
    if (newton_substeps < 1) throw ConfigError("newton_substeps must be at least 1");
    if (!(inner_tol > 0.0)) throw ConfigError("inner_tol must be positive");
    if (time_grid_update_period < 1) throw ConfigError("time_grid_update_period must be positive");
    if (diagnostics_every < 0) throw ConfigError("diagnostics_every must be non-negative");
    if (post_refine_iters < 0) throw ConfigError("post_refine_iters must be non-negative");
    int prev = 0;
    for (const auto& st : refinement) {
        if (st.target_N <= prev) throw ConfigError("refinement targets must increase");
        if (st.trigger_iters < 0) throw ConfigError("refinement trigger must be non-negative");
        prev = st.target_N;
    }
}

Trajectory make_linear_initial_guess(const BoundaryData& boundary, int N, int gamma, int dim,
                                     TimeSpan span) {
    if (N < 2) throw InvalidArgument("N must be at least 2");
    if (!(span.end > span.start)) throw InvalidArgument("time span must be increasing");
    boundary.validate(N, gamma, dim);
    // Breakpoints of the piecewise-affine guess: the endpoints plus every knot.
    std::vector<int> idx{0};
    std::vector<Vector> val{boundary.left};
    for (const Knot& kn : boundary.knots) {
        idx.push_back(kn.index);
        if (kn.full_node) {
            val.push_back(kn.position);
        } else {
            // Derivative blocks follow the boundary interpolation.
            const double s = static_cast<double>(kn.index) / N;
            Vector v = boundary.left + s * (boundary.right - boundary.left);
            v.head(dim) = kn.position;
            val.push_back(v);
        }
    }
    idx.push_back(N);
    val.push_back(boundary.right);

    // Derivative blocks of a position-only knot sit on the global affine
    // interpolant, so interpolating whole nodes between breakpoints keeps them
    // affine and pulls only the position block through the knot.
    std::vector<TrajectoryNode> nodes(static_cast<std::size_t>(N) + 1);
    std::vector<double> times(static_cast<std::size_t>(N) + 1);
    std::size_t seg = 0;
    for (int k = 0; k <= N; ++k) {
        while (seg + 2 < idx.size() && k > idx[seg + 1]) ++seg;
        const int a = idx[seg], b = idx[seg + 1];
        const double u = static_cast<double>(k - a) / (b - a);
        const Vector& va = val[seg];
        const Vector& vb = val[seg + 1];
        nodes[static_cast<std::size_t>(k)] = k == b ? vb : Vector(va + u * (vb - va));
        const double s = static_cast<double>(k) / N;
        times[static_cast<std::size_t>(k)] = span.start + s * (span.end - span.start);
    }
    times.front() = span.start;
    times.back() = span.end;
    return Trajectory(gamma, dim, std::move(nodes), std::move(times));
}

Vector del_residual(const DiscreteLagrangianModel& model, const Trajectory& traj, int k) {
    const int N = traj.intervals();
    if (k < 1 || k > N - 1)
        throw IndexError("interior node index " + std::to_string(k) + " outside [1, " +
                         std::to_string(N - 1) + "]");
    return model.grad2(k - 1, traj.node(k - 1), traj.node(k)) +
           model.grad1(k, traj.node(k), traj.node(k + 1));
}

double max_residual(const DiscreteLagrangianModel& model, const Trajectory& traj) {
    double r = 0.0;
    for (int k = 1; k < traj.intervals(); ++k) {
        const double nk = del_residual(model, traj, k).cwiseAbs().maxCoeff();
        if (std::isnan(nk)) return nk;
        r = std::max(r, nk);
    }
    return r;
}

double max_residual(const DiscreteLagrangianModel& model, const Trajectory& traj,
                    const NodeConstraints& constraints) {
    double r = 0.0;
    for (int k = 1; k < traj.intervals(); ++k) {
        const auto mask = constraints.free_mask(k);
        if (!mask) continue;
        const Vector res = del_residual(model, traj, k);
        for (Eigen::Index i = 0; i < res.size(); ++i) {
            if (!(mask & (NodeConstraints::Mask{1} << i))) continue;
            const double a = std::abs(res(i));
            if (std::isnan(a)) return a;
            r = std::max(r, a);
        }
    }
    return r;
}

const char* to_string(Method m) {
    switch (m) {
        case Method::Jacobi: return "jacobi";
        case Method::JacobiNewton: return "jacobi_newton";
    }
    return "?";
}

}  // namespace varint
