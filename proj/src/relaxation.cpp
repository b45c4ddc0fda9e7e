#include "varint/relaxation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "varint/parallel.hpp"

namespace varint {

namespace {

struct IntervalDerivatives {
    Vector grad;
    Matrix hess;
};

using FreeIndex = Eigen::Matrix<int, Eigen::Dynamic, 1, 0, kMaxNodeSize, 1>;

FreeIndex free_index(NodeConstraints::Mask mask, int m) {
    FreeIndex idx(m);
    int c = 0;
    for (int i = 0; i < m; ++i)
        if (mask & (NodeConstraints::Mask{1} << i)) idx(c++) = i;
    idx.conservativeResize(c);
    return idx;
}

/// Newton iterations on the free components of node k, reading only the
/// previous iterate. The first iteration may reuse cached interval
/// derivatives; the result does not depend on whether it does.
Vector relax_node(const DiscreteLagrangianModel& model, const Trajectory& traj, int k,
                  NodeConstraints::Mask mask, const SweepOptions& opts,
                  const IntervalDerivatives* prev, const IntervalDerivatives* next,
                  double* input_residual) {
    const int m = traj.node_size();
    const FreeIndex f = free_index(mask, m);
    const int nf = static_cast<int>(f.size());
    const Vector& left = traj.node(k - 1);
    const Vector& right = traj.node(k + 1);
    Vector x = traj.node(k);

    IntervalDerivatives p, q;
    Vector rf(nf);
    Matrix Df(nf, nf);
    for (int it = 0; it < opts.inner_iters; ++it) {
        if (it > 0 || !prev) {
            model.derivatives(k - 1, left, x, &p.grad, &p.hess);
            model.derivatives(k, x, right, &q.grad, &q.hess);
            prev = &p;
            next = &q;
        }
        double res = 0.0;
        for (int i = 0; i < nf; ++i) {
            const int a = f(i);
            rf(i) = prev->grad(m + a) + next->grad(a);
            res = std::max(res, std::abs(rf(i)));
            if (std::isnan(rf(i))) res = rf(i);
        }
        if (it == 0) *input_residual = res;
        if (!std::isfinite(res)) throw DivergedAtNode(k);
        if (opts.method == Method::Jacobi && res <= opts.inner_tol) break;

        for (int i = 0; i < nf; ++i)
            for (int j = 0; j < nf; ++j)
                Df(i, j) = prev->hess(m + f(i), m + f(j)) + next->hess(f(i), f(j));
        const Eigen::FullPivLU<Matrix> lu(Df);
        if (!lu.isInvertible()) throw SingularDiagonalBlock(k);
        const Vector dx = lu.solve(rf);
        for (int i = 0; i < nf; ++i) x(f(i)) -= dx(i);
        if (!x.allFinite()) throw DivergedAtNode(k);
    }
    return x;
}

void check_shapes(const DiscreteLagrangianModel& model, const Trajectory& traj,
                  const NodeConstraints& constraints) {
    if (model.gamma() != traj.gamma() || model.dim() != traj.dim())
        throw InvalidArgument("model and trajectory shapes differ");
    if (constraints.intervals() != traj.intervals())
        throw InvalidArgument("constraints were built for a different N");
}

}  // namespace

SweepOptions SweepOptions::from(const SolverConfig& cfg) {
    SweepOptions o;
    o.method = cfg.method;
    o.inner_iters = cfg.method == Method::Jacobi ? cfg.inner_iters : cfg.newton_substeps;
    o.inner_tol = cfg.inner_tol;
    return o;
}

SweepResult sweep(const DiscreteLagrangianModel& model, const Trajectory& traj,
                  const NodeConstraints& constraints, const SweepOptions& opts) {
    check_shapes(model, traj, constraints);
    const int N = traj.intervals();
    std::vector<IntervalDerivatives> cache(static_cast<std::size_t>(N));
    parallel_for(0, N, [&](int k) {
        auto& c = cache[static_cast<std::size_t>(k)];
        model.derivatives(k, traj.node(k), traj.node(k + 1), &c.grad, &c.hess);
    });

    SweepResult out{traj, 0.0};
    std::vector<double> res(static_cast<std::size_t>(N) + 1, 0.0);
    parallel_for(1, N, [&](int k) {
        const auto mask = constraints.free_mask(k);
        if (!mask) return;
        out.proposed.node(k) =
            relax_node(model, traj, k, mask, opts, &cache[static_cast<std::size_t>(k - 1)],
                       &cache[static_cast<std::size_t>(k)], &res[static_cast<std::size_t>(k)]);
    });
    for (double r : res) out.input_residual = std::max(out.input_residual, r);
    return out;
}

SweepResult sweep_serial(const DiscreteLagrangianModel& model, const Trajectory& traj,
                         const NodeConstraints& constraints, const SweepOptions& opts,
                         SweepOrder order) {
    check_shapes(model, traj, constraints);
    SweepResult out{traj, 0.0};
    serial_for(1, traj.intervals(), order == SweepOrder::Reverse, [&](int k) {
        const auto mask = constraints.free_mask(k);
        if (!mask) return;
        double r = 0.0;
        out.proposed.node(k) = relax_node(model, traj, k, mask, opts, nullptr, nullptr, &r);
        out.input_residual = std::max(out.input_residual, r);
    });
    return out;
}

Trajectory jacobi_sweep(const DiscreteLagrangianModel& model, const Trajectory& traj,
                        const BoundaryData& boundary, int inner_iters, double inner_tol) {
    if (inner_iters < 1) throw InvalidArgument("inner_iters must be at least 1");
    SweepOptions o;
    o.method = Method::Jacobi;
    o.inner_iters = inner_iters;
    o.inner_tol = inner_tol;
    const NodeConstraints c(boundary, traj.intervals(), traj.gamma(), traj.dim());
    return sweep(model, traj, c, o).proposed;
}

Trajectory jacobi_newton_sweep(const DiscreteLagrangianModel& model, const Trajectory& traj,
                               const BoundaryData& boundary) {
    SweepOptions o;
    o.method = Method::JacobiNewton;
    o.inner_iters = 1;
    const NodeConstraints c(boundary, traj.intervals(), traj.gamma(), traj.dim());
    return sweep(model, traj, c, o).proposed;
}

Trajectory apply_damping(const Trajectory& old, const Trajectory& proposed, double eps) {
    if (!(eps >= 0.0 && eps < 1.0)) throw InvalidArgument("damping must satisfy 0 <= eps < 1");
    if (old.intervals() != proposed.intervals() || old.node_size() != proposed.node_size())
        throw InvalidArgument("damping needs trajectories of equal shape");
    if (eps == 0.0) return proposed;
    Trajectory out = proposed;
    for (int k = 0; k <= old.intervals(); ++k)
        out.node(k) = old.node(k) + (1.0 - eps) * (proposed.node(k) - old.node(k));
    return out;
}

Trajectory refine(const Trajectory& traj, int new_N, BoundaryData* boundary) {
    const int N = traj.intervals();
    if (new_N <= N) throw InvalidArgument("refinement needs new_N > N");
    const int dim = traj.dim();

    std::vector<Knot> knots;
    if (boundary) {
        knots = boundary->knots;
        int prev = 0;
        for (Knot& kn : knots) {
            // round(index·new_N/N), halves rounded up.
            const long long num = 2LL * kn.index * new_N + N;
            kn.index = static_cast<int>(num / (2LL * N));
            if (kn.index <= prev || kn.index >= new_N)
                throw RefinementKnotClash("knots collide after refining to N = " +
                                          std::to_string(new_N));
            prev = kn.index;
        }
    }

    std::vector<TrajectoryNode> nodes(static_cast<std::size_t>(new_N) + 1);
    std::vector<double> times(static_cast<std::size_t>(new_N) + 1);
    const int npts = std::min(4, N + 1);
    for (int k = 0; k <= new_N; ++k) {
        const long long num = static_cast<long long>(k) * N;
        if (num % new_N == 0) {
            const int j = static_cast<int>(num / new_N);
            nodes[static_cast<std::size_t>(k)] = traj.node(j);
            times[static_cast<std::size_t>(k)] = traj.times()[static_cast<std::size_t>(j)];
            continue;
        }
        const double s = static_cast<double>(num) / new_N;
        const int i = static_cast<int>(num / new_N);
        const int j0 = std::clamp(i - 1, 0, N + 1 - npts);
        Vector v = Vector::Zero(traj.node_size());
        for (int a = j0; a < j0 + npts; ++a) {
            double w = 1.0;
            for (int b = j0; b < j0 + npts; ++b)
                if (b != a) w *= (s - b) / static_cast<double>(a - b);
            v += w * traj.node(a);
        }
        nodes[static_cast<std::size_t>(k)] = v;
        const double t0 = traj.times()[static_cast<std::size_t>(i)];
        const double t1 = traj.times()[static_cast<std::size_t>(i) + 1];
        times[static_cast<std::size_t>(k)] = t0 + (s - i) * (t1 - t0);
    }
    for (const Knot& kn : knots) {
        auto& node = nodes[static_cast<std::size_t>(kn.index)];
        if (kn.full_node)
            node = kn.position;
        else
            node.head(dim) = kn.position;
    }
    if (boundary) boundary->knots = std::move(knots);
    return Trajectory(traj.gamma(), dim, std::move(nodes), std::move(times));
}

Trajectory sundman_rescale(const Trajectory& traj, const Monitor& g, double total_T) {
    if (!(total_T > 0.0)) throw InvalidArgument("total time must be positive");
    const int N = traj.intervals();
    std::vector<double> gk(static_cast<std::size_t>(N) + 1, 0.0);
    double sum = 0.0;
    for (int k = 1; k <= N; ++k) {
        const double v = g(traj.node(k - 1), traj.node(k));
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidMonitor(k);
        gk[static_cast<std::size_t>(k)] = v;
        sum += v;
    }
    const double c = total_T / sum;
    std::vector<double> t(static_cast<std::size_t>(N) + 1);
    t[0] = traj.times().front();
    double acc = 0.0;
    for (int k = 1; k < N; ++k) {
        acc += gk[static_cast<std::size_t>(k)];
        t[static_cast<std::size_t>(k)] = t[0] + c * acc;
    }
    t[static_cast<std::size_t>(N)] = t[0] + total_T;
    Trajectory out = traj;
    out.set_times(std::move(t));
    return out;
}

std::vector<double> update_time_grid_zermelo(const Trajectory& traj, const SpeedFunction& F,
                                             double h) {
    if (!(h > 0.0)) throw InvalidArgument("parameter step must be positive");
    const int N = traj.intervals();
    const int n = traj.dim();
    std::vector<double> t(static_cast<std::size_t>(N) + 1);
    t[0] = traj.times().front();
    for (int k = 1; k <= N; ++k) {
        const Vector q0 = traj.node(k - 1).head(n);
        const Vector v = (traj.node(k).head(n) - q0) / h;
        const double f = F(t[static_cast<std::size_t>(k) - 1], q0, v);
        if (!std::isfinite(f))
            throw ModelError("non-finite speed in time recurrence at step " + std::to_string(k));
        t[static_cast<std::size_t>(k)] = t[static_cast<std::size_t>(k) - 1] + h * f;
    }
    return t;
}

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::MaxIterations: return "max_iterations";
        case SolveStatus::Aborted: return "aborted";
    }
    return "?";
}

namespace {

Trajectory with_boundary(const Trajectory& initial, const BoundaryData& boundary) {
    Trajectory t = initial;
    const int N = t.intervals();
    t.node(0) = boundary.left;
    t.node(N) = boundary.right;
    for (const Knot& kn : boundary.knots) {
        if (kn.full_node)
            t.node(kn.index) = kn.position;
        else
            t.node(kn.index).head(t.dim()) = kn.position;
    }
    return t;
}

}  // namespace

SolveReport solve(const ModelFactory& factory, const BoundaryData& boundary,
                  const SolverConfig& config, const Trajectory& initial, const SolveHooks& hooks) {
    const auto start = std::chrono::steady_clock::now();
    config.validate();
    initial.validate();
    boundary.validate(initial.intervals(), initial.gamma(), initial.dim());
    if (config.adaptive_sundman && !hooks.sundman)
        throw ConfigError("adaptive_sundman is set but no monitor is available");
    for (const auto& st : config.refinement)
        if (st.target_N <= initial.intervals())
            throw ConfigError("refinement target " + std::to_string(st.target_N) +
                              " does not exceed the initial N");

    SolveReport rep;
    rep.boundary = boundary;
    Trajectory traj = with_boundary(initial, boundary);
    NodeConstraints constraints(boundary, traj.intervals(), traj.gamma(), traj.dim());
    const SweepOptions opts = SweepOptions::from(config);
    const bool has_time_update = static_cast<bool>(hooks.time_grid) || config.adaptive_sundman.has_value();

    auto update_times = [&] {
        if (hooks.time_grid) traj.set_times(hooks.time_grid(traj));
        if (config.adaptive_sundman)
            traj = sundman_rescale(traj, hooks.sundman, hooks.sundman_total_T);
        ++rep.time_grid_updates;
    };

    std::size_t next_stage = 0;
    int level_iters = 0;
    int boost_left = 0;
    bool times_fresh = false;
    std::unique_ptr<DiscreteLagrangianModel> model;

    try {
        if (has_time_update) update_times();
        times_fresh = true;
        model = factory(traj);

        int applied = 0;
        while (true) {
            const SweepResult sw = hooks.serial ? sweep_serial(*model, traj, constraints, opts)
                                                : sweep(*model, traj, constraints, opts);
            const double res = sw.input_residual;
            rep.residual_history.push_back(res);
            if (hooks.progress) hooks.progress(applied, res);
            if (config.diagnostics_every > 0 && applied % config.diagnostics_every == 0)
                rep.diagnostics.push_back({applied, check_theorem_conditions(*model, traj)});

            const bool below = res < config.tol_residual;
            if (below && next_stage == config.refinement.size()) {
                if (!has_time_update || times_fresh) {
                    rep.converged = true;
                    rep.status = SolveStatus::Converged;
                    break;
                }
                // Converged on a stale grid: refresh it and re-check.
                update_times();
                times_fresh = true;
                model = factory(traj);
                continue;
            }
            if (applied >= config.max_iters) break;

            const bool refine_now =
                next_stage < config.refinement.size() &&
                (below || (config.refinement[next_stage].trigger_iters > 0 &&
                           level_iters >= config.refinement[next_stage].trigger_iters));
            if (refine_now) {
                traj = refine(traj, config.refinement[next_stage].target_N, &rep.boundary);
                constraints = NodeConstraints(rep.boundary, traj.intervals(), traj.gamma(),
                                              traj.dim());
                ++next_stage;
                ++rep.refinements;
                level_iters = 0;
                if (has_time_update) update_times();
                times_fresh = true;
                model = factory(traj);
                boost_left = config.post_refine_iters;
                continue;
            }

            const double eps = boost_left > 0 ? std::max(config.damping, config.damping_post_refine)
                                              : config.damping;
            if (boost_left > 0) --boost_left;
            traj = apply_damping(traj, sw.proposed, eps);
            ++applied;
            ++level_iters;
            times_fresh = false;

            if (has_time_update && applied % config.time_grid_update_period == 0) {
                update_times();
                times_fresh = true;
                model = factory(traj);
                boost_left = config.post_refine_iters;
            }
        }
        // The last history entry is always the residual of the returned iterate.
        rep.iterations = applied;
        if (!rep.converged) rep.status = SolveStatus::MaxIterations;
    } catch (const Error& e) {
        rep.status = SolveStatus::Aborted;
        rep.converged = false;
        rep.error = e.what();
        rep.iterations = static_cast<int>(rep.residual_history.size());
    }
    rep.final = traj;
    rep.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

SolveReport solve_with_knots(const ModelFactory& factory, const BoundaryData& boundary,
                             const SolverConfig& config, const Trajectory& initial,
                             const SolveHooks& hooks) {
    if (initial.gamma() != 2) throw InvalidArgument("knot interpolation requires gamma = 2");
    return solve(factory, boundary, config, initial, hooks);
}

}  // namespace varint
