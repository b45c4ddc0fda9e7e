#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "varint/core.hpp"
#include "varint/diagnostics.hpp"

namespace varint {

enum class SweepOrder { Forward, Reverse };

struct SweepOptions {
    Method method = Method::JacobiNewton;
    /// Newton iterations per node (Jacobi) or Newton substeps (Jacobi–Newton).
    int inner_iters = 1;
    /// Early-stop threshold of the Jacobi inner solve.
    double inner_tol = 1e-12;

    static SweepOptions from(const SolverConfig& cfg);
};

/// One synchronous relaxation sweep. Every free component of every interior
/// node is recomputed from the previous iterate only; pinned components are
/// copied.
struct SweepResult {
    Trajectory proposed;
    /// Max-norm DEL residual of the input iterate over free components.
    double input_residual = 0.0;
};

/// OpenMP kernel: derivatives of every interval are evaluated once, then the
/// node updates run in parallel.
SweepResult sweep(const DiscreteLagrangianModel& model, const Trajectory& traj,
                  const NodeConstraints& constraints, const SweepOptions& opts);

/// Serial reference kernel: each node evaluates its own neighbourhood, nodes
/// visited in the given order. Output is bit-identical to sweep().
SweepResult sweep_serial(const DiscreteLagrangianModel& model, const Trajectory& traj,
                         const NodeConstraints& constraints, const SweepOptions& opts,
                         SweepOrder order = SweepOrder::Forward);

Trajectory jacobi_sweep(const DiscreteLagrangianModel& model, const Trajectory& traj,
                        const BoundaryData& boundary, int inner_iters = 5,
                        double inner_tol = 1e-12);

Trajectory jacobi_newton_sweep(const DiscreteLagrangianModel& model, const Trajectory& traj,
                               const BoundaryData& boundary);

/// q_k + (1-ε)(q̄_k - q_k) per node; ε = 0 returns proposed unchanged.
Trajectory apply_damping(const Trajectory& old, const Trajectory& proposed, double eps);

/// Piecewise-cubic resampling onto new_N uniform index steps. Endpoints are
/// copied, knots are moved to round(index·new_N/N) and pinned exactly.
/// Returns the remapped boundary through *boundary when given.
Trajectory refine(const Trajectory& traj, int new_N, BoundaryData* boundary = nullptr);

/// Monitor g_d(q_{k-1}, q_k) of a Sundman time transformation.
using Monitor = std::function<double(const Vector& x0, const Vector& x1)>;

/// Δt_k = c·g_d(q_{k-1}, q_k) with c chosen so that t_N - t_0 = total_T.
Trajectory sundman_rescale(const Trajectory& traj, const Monitor& g, double total_T);

/// F_t(q, v) for the sequential time recurrence.
using SpeedFunction = std::function<double(double t, const Vector& q, const Vector& v)>;

/// t_0 = traj.times()[0], t_k = t_{k-1} + h F_{t_{k-1}}(q_{k-1}, (q_k - q_{k-1})/h).
std::vector<double> update_time_grid_zermelo(const Trajectory& traj, const SpeedFunction& F,
                                             double h);

enum class SolveStatus { Converged, MaxIterations, Aborted };

const char* to_string(SolveStatus s);

struct DiagnosticsSnapshot {
    int iteration = 0;
    ConvergenceReport report;
};

struct SolveReport {
    Trajectory final;
    BoundaryData boundary;
    int iterations = 0;
    std::vector<double> residual_history;
    bool converged = false;
    SolveStatus status = SolveStatus::MaxIterations;
    std::string error;
    std::vector<DiagnosticsSnapshot> diagnostics;
    int refinements = 0;
    int time_grid_updates = 0;
    double wall_time = 0.0;
};

/// Binds a discrete Lagrangian to the current trajectory (its N and time grid).
using ModelFactory =
    std::function<std::unique_ptr<DiscreteLagrangianModel>(const Trajectory& traj)>;

struct SolveHooks {
    /// Sequential time-grid recurrence, applied every time_grid_update_period sweeps.
    std::function<std::vector<double>(const Trajectory&)> time_grid;
    /// Sundman monitor used when config.adaptive_sundman is set.
    Monitor sundman;
    double sundman_total_T = 0.0;
    std::function<void(int iteration, double residual)> progress;
    /// Use the serial reference kernel instead of the OpenMP one.
    bool serial = false;
};

/// Relaxes initial toward a solution of the DEL equations with boundary data
/// (and knots) held fixed.
SolveReport solve(const ModelFactory& factory, const BoundaryData& boundary,
                  const SolverConfig& config, const Trajectory& initial,
                  const SolveHooks& hooks = {});

/// solve() for boundary data with interpolation knots; requires γ = 2.
SolveReport solve_with_knots(const ModelFactory& factory, const BoundaryData& boundary,
                             const SolverConfig& config, const Trajectory& initial,
                             const SolveHooks& hooks = {});

}  // namespace varint
