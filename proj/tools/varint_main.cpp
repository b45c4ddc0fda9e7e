// varint: run, diagnose and inspect discrete variational boundary-value solves.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "varint/io.hpp"
#include "varint/parallel.hpp"
#include "varint/structure_matrices.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace varint;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNotConverged = 2;

json matrix_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
        rows.push_back(r);
    }
    return rows;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json convergence_or_error(const DiscreteLagrangianModel& model, const Trajectory& traj) {
    try {
        return to_json(check_theorem_conditions(model, traj));
    } catch (const Error& e) {
        return {{"error", e.what()}};
    }
}

int cmd_run(const std::string& config_path, int progress_every) {
    const ParsedConfig cfg = load_run_config(config_path);
    fs::create_directories(cfg.run.output_dir);

    SolveHooks hooks = cfg.problem.hooks();
    hooks.serial = cfg.run.serial;
    if (progress_every > 0) {
        hooks.progress = [progress_every](int it, double r) {
            if (it % progress_every == 0) std::fprintf(stderr, "iter %d  residual %.3e\n", it, r);
        };
    }
    const SolveReport rep = solve(cfg.problem.factory, cfg.problem.boundary, cfg.problem.config,
                                  initial_guess(cfg), hooks);

    write_trajectory_csv(cfg.run.output_dir / "trajectory.csv", rep.final);
    write_residuals_csv(cfg.run.output_dir / "residuals.csv", rep);
    json report = to_json(rep);
    report["problem"] = cfg.run.problem;
    report["threads"] = thread_count();
    report["solver"] = to_json(cfg.problem.config);
    if (rep.status != SolveStatus::Aborted) {
        const auto model = cfg.problem.factory(rep.final);
        report["convergence"] = convergence_or_error(*model, rep.final);
    }
    write_json(cfg.run.output_dir / "report.json", report);

    std::printf("%s: %s after %d iterations, residual %.3e, N = %d\n", cfg.run.problem.c_str(),
                to_string(rep.status), rep.iterations,
                rep.residual_history.empty() ? 0.0 : rep.residual_history.back(),
                rep.final.intervals());
    if (rep.status == SolveStatus::Aborted) {
        std::fprintf(stderr, "error: %s\n", rep.error.c_str());
        return kExitError;
    }
    return rep.converged ? kExitOk : kExitNotConverged;
}

int cmd_diag(const std::string& config_path, const std::string& trajectory_path) {
    const ParsedConfig cfg = load_run_config(config_path);
    const Problem& p = cfg.problem;
    const fs::path tpath =
        trajectory_path.empty() ? cfg.run.output_dir / "trajectory.csv" : fs::path(trajectory_path);
    const Trajectory traj = read_trajectory_csv(tpath, p.gamma, p.dim);

    bool shape_ok = traj.intervals() == p.N;
    for (const RefinementStage& st : p.config.refinement) shape_ok = shape_ok || traj.intervals() == st.target_N;
    if (!shape_ok)
        throw InvalidArgument("trajectory has N = " + std::to_string(traj.intervals()) +
                              ", config expects N = " + std::to_string(p.N) +
                              " or a refinement target");

    const auto model = p.factory(traj);
    const ConvergenceReport rep = check_theorem_conditions(*model, traj);
    json out = to_json(rep);
    out["problem"] = cfg.run.problem;
    out["N"] = traj.intervals();
    out["max_residual"] = max_residual(*model, traj);
    write_json(tpath.parent_path() / "convergence_report.json", out);
    std::printf("%s: %s, spectral radius estimate %.6g\n", cfg.run.problem.c_str(),
                to_string(rep.guarantee), rep.spectral_radius_estimate);
    return kExitOk;
}

int cmd_matrices(int gamma, double h) {
    const GammaMatrixSet ms = build_matrices(gamma, h);
    const LUFactors lu = lu_factors_C(gamma, h);
    const IdentityReport id = verify_identities(ms);
    json out = {
        {"gamma", gamma},
        {"h", h},
        {"A", matrix_json(ms.A)},
        {"B", matrix_json(ms.B)},
        {"C", matrix_json(ms.C)},
        {"D", matrix_json(ms.D)},
        {"E", matrix_json(ms.E)},
        {"L", matrix_json(lu.L)},
        {"U", matrix_json(lu.U)},
        {"det_C", det_C(gamma, h)},
        {"det_B", det_B(gamma, h)},
        {"identities",
         {{"a_reflection", id.a_reflection},
          {"a_inverse", id.a_inverse},
          {"b_reflection", id.b_reflection},
          {"c_product", id.c_product},
          {"c_reflection", id.c_reflection},
          {"passed", id.passed()}}},
    };
    std::cout << out.dump(2) << '\n';
    return id.passed() ? kExitOk : kExitError;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parallel relaxation solver for discrete variational boundary-value problems"};
    app.require_subcommand(1);

    std::string run_config;
    int progress_every = 0;
    auto* run = app.add_subcommand("run", "Solve the problem described by a JSON config");
    run->add_option("config", run_config, "Run configuration")->required();
    run->add_option("--progress", progress_every, "Print the residual every N iterations");

    std::string diag_config, diag_traj;
    auto* diag = app.add_subcommand("diag", "Convergence diagnostics of a stored trajectory");
    diag->add_option("config", diag_config, "Run configuration")->required();
    diag->add_option("--trajectory", diag_traj, "Trajectory CSV (default: <output_dir>/trajectory.csv)");

    int gamma = 1;
    double h = 1.0;
    auto* mats = app.add_subcommand("matrices", "Print the structure matrices for (gamma, h)");
    mats->set_help_flag("--help", "Print this help message and exit");
    mats->add_option("--gamma", gamma, "Order gamma")->required();
    mats->add_option("--h", h, "Step size")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitError;
    }

    try {
        if (*run) return cmd_run(run_config, progress_every);
        if (*diag) return cmd_diag(diag_config, diag_traj);
        if (*mats) return cmd_matrices(gamma, h);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitError;
    }
    return kExitError;
}
