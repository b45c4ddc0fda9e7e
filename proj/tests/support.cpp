#include "support.hpp"

#include "varint/diagnostics.hpp"

namespace test {

double PerStepQuadraticModel::eval(int k, const Vector& x0, const Vector& x1) const {
    Eigen::VectorXd z(x0.size() + x1.size());
    z << x0, x1;
    const auto& H = H_[static_cast<std::size_t>(k)];
    return 0.5 * z.dot(H * z) + g_[static_cast<std::size_t>(k)].dot(z);
}

void PerStepQuadraticModel::derivatives(int k, const Vector& x0, const Vector& x1, Vector* grad,
                                        Matrix* hess) const {
    Eigen::VectorXd z(x0.size() + x1.size());
    z << x0, x1;
    const auto& H = H_[static_cast<std::size_t>(k)];
    if (grad) *grad = H * z + g_[static_cast<std::size_t>(k)];
    if (hess) *hess = H;
}

std::unique_ptr<PerStepQuadraticModel> random_psd_model(std::mt19937_64& rng, int gamma, int dim,
                                                        int N) {
    const int m = gamma * dim;
    std::uniform_int_distribution<int> rank(m, 2 * m);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Eigen::MatrixXd> H;
    std::vector<Eigen::VectorXd> g;
    for (int k = 0; k < N; ++k) {
        Eigen::MatrixXd R;
        Eigen::MatrixXd B;
        // Redraw until the lower-right block is comfortably definite.
        do {
            R = Eigen::MatrixXd::NullaryExpr(2 * m, rank(rng), [&] { return gauss(rng); });
            B = (R * R.transpose()).bottomRightCorner(m, m);
        } while (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(B).eigenvalues().minCoeff() < 1e-3);
        H.push_back(R * R.transpose());
        g.push_back(Eigen::VectorXd::NullaryExpr(2 * m, [&] { return gauss(rng); }));
    }
    return std::make_unique<PerStepQuadraticModel>(gamma, dim, std::move(H), std::move(g));
}

Eigen::Vector2d wind_equilibrium(const WindField& wind, Eigen::Vector2d x, int iters) {
    for (int it = 0; it < iters; ++it) {
        const Eigen::Vector2d w = wind.eval(0.0, x(0), x(1));
        if (w.norm() < 1e-15) break;
        const Eigen::Vector2d dx = wind.jacobian(0.0, x(0), x(1)).fullPivLu().solve(w);
        double lambda = 1.0;
        while (lambda > 1e-6) {
            const Eigen::Vector2d y = x - lambda * dx;
            if (wind.eval(0.0, y(0), y(1)).norm() < w.norm()) break;
            lambda *= 0.5;
        }
        x -= lambda * dx;
    }
    return x;
}

double discrete_action(const DiscreteLagrangianModel& model, const Trajectory& traj) {
    double a = 0.0;
    for (int k = 0; k < traj.intervals(); ++k) a += model.eval(k, traj.node(k), traj.node(k + 1));
    return a;
}

Trajectory dense_newton_solve(const DiscreteLagrangianModel& model, Trajectory traj, int iters,
                              double tol) {
    const int N = traj.intervals();
    const int m = traj.node_size();
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXd r((N - 1) * m);
        for (int k = 1; k < N; ++k) r.segment((k - 1) * m, m) = del_residual(model, traj, k);
        if (r.cwiseAbs().maxCoeff() < tol) break;
        const Eigen::MatrixXd H = assemble_hessian(model, traj).to_dense();
        const Eigen::VectorXd dx = H.fullPivLu().solve(r);
        for (int k = 1; k < N; ++k) traj.node(k) -= dx.segment((k - 1) * m, m);
    }
    return traj;
}

}  // namespace test
