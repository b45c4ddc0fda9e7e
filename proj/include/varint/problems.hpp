#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "varint/autodiff.hpp"
#include "varint/core.hpp"
#include "varint/discretization.hpp"
#include "varint/relaxation.hpp"

namespace varint {

template <class S>
using Vec2 = std::array<S, 2>;

/// Sum of four damped vortices, scaled so that max |W| stays just below 1.
struct VortexWind {
    double scale = 1.7;

    template <class S>
    Vec2<S> operator()(double /*t*/, const S& x, const S& y) const {
        Vec2<S> w{S(0.0), S(0.0)};
        auto add = [&](double a, double b, double sign) {
            const S dx = x - a;
            const S dy = y - b;
            const S den = 3.0 * (dx * dx + dy * dy) + 1.0;
            w[0] += sign * (-dy / den);
            w[1] += sign * (dx / den);
        };
        add(2, 2, -1.0);
        add(4, 4, -1.0);
        add(2, 5, -1.0);
        add(5, 1, 1.0);
        w[0] *= scale;
        w[1] *= scale;
        return w;
    }
};

/// amplitude·sin(2x + y)·(cos(t/2), sin(t/2)).
struct RotatingWind {
    double amplitude = 0.8;

    template <class S>
    Vec2<S> operator()(double t, const S& x, const S& y) const {
        using std::sin;
        const S s = amplitude * sin(2.0 * x + y);
        return {s * std::cos(0.5 * t), s * std::sin(0.5 * t)};
    }
};

/// (cos(2x - y - 6), (2/3) sin y + x - 3).
struct DriftWind {
    template <class S>
    Vec2<S> operator()(double /*t*/, const S& x, const S& y) const {
        using std::cos;
        using std::sin;
        return {cos(2.0 * x - y - 6.0), (2.0 / 3.0) * sin(y) + x - 3.0};
    }

    /// Row-major [[∂x W1, ∂y W1], [∂x W2, ∂y W2]].
    template <class S>
    std::array<S, 4> jacobian(double /*t*/, const S& x, const S& y) const {
        using std::cos;
        using std::sin;
        const S s = sin(2.0 * x - y - 6.0);
        return {-2.0 * s, s, S(1.0), (2.0 / 3.0) * cos(y)};
    }
};

/// Type-erased planar wind field.
class WindField {
public:
    template <class W>
    static WindField from(W w, bool time_dependent) {
        WindField f;
        f.time_dependent_ = time_dependent;
        f.eval_ = [w](double t, double x, double y) {
            const auto v = w(t, x, y);
            return Eigen::Vector2d(v[0], v[1]);
        };
        f.jac_ = [w](double t, double x, double y) {
            using J = Jet2<2>;
            const auto v = w(t, J::variable(x, 0), J::variable(y, 1));
            Eigen::Matrix2d m;
            m << v[0].g[0], v[0].g[1], v[1].g[0], v[1].g[1];
            return m;
        };
        return f;
    }

    Eigen::Vector2d eval(double t, double x, double y) const { return eval_(t, x, y); }
    Eigen::Matrix2d jacobian(double t, double x, double y) const { return jac_(t, x, y); }
    bool time_dependent() const { return time_dependent_; }

private:
    std::function<Eigen::Vector2d(double, double, double)> eval_;
    std::function<Eigen::Matrix2d(double, double, double)> jac_;
    bool time_dependent_ = false;
};

/// Randers metric F = √a + ⟨b, v⟩ on Euclidean ℝ² with drift w.
template <class S>
S randers_F(const Vec2<S>& w, const S& vx, const S& vy) {
    using std::sqrt;
    const S alpha = 1.0 - (w[0] * w[0] + w[1] * w[1]);
    if (!(value_of(alpha) > 0.0)) throw DriftTooStrong("drift speed must stay below 1");
    const S wv = w[0] * vx + w[1] * vy;
    const S a = (vx * vx + vy * vy) / alpha + (wv * wv) / (alpha * alpha);
    return sqrt(a) - wv / alpha;
}

double randers_F(const Eigen::Vector2d& w, const Eigen::Vector2d& v);
/// Same with the base metric g(u, v) = uᵀ G v.
double randers_F(const Eigen::Matrix2d& G, const Eigen::Vector2d& w, const Eigen::Vector2d& v);
/// F², defined as 0 at v = 0.
double randers_F2(const Eigen::Vector2d& w, const Eigen::Vector2d& v);

/// F_t(q, v)² for a planar wind functor.
template <class W>
struct RandersLagrangian {
    W wind;

    template <class S>
    S operator()(double t, const S* y) const {
        const auto w = wind(t, y[0], y[1]);
        const S F = randers_F(w, y[2], y[3]);
        return F * F;
    }
};

/// ½|v - W(q)|².
template <class W>
struct FuelLagrangian {
    W wind;

    template <class S>
    S operator()(double t, const S* y) const {
        const auto w = wind(t, y[0], y[1]);
        const S ux = y[2] - w[0];
        const S uy = y[3] - w[1];
        return 0.5 * (ux * ux + uy * uy);
    }
};

/// ½[|v - W|² + c|a - DW·v|²] with y = (q, v, a).
struct FuelInterpolationLagrangian {
    DriftWind wind;
    double c = 50.0;

    template <class S>
    S operator()(double t, const S* y) const {
        const auto w = wind(t, y[0], y[1]);
        const auto J = wind.jacobian(t, y[0], y[1]);
        const S ux = y[2] - w[0];
        const S uy = y[3] - w[1];
        const S ax = y[4] - (J[0] * y[2] + J[1] * y[3]);
        const S ay = y[5] - (J[2] * y[2] + J[3] * y[3]);
        return 0.5 * (ux * ux + uy * uy + c * (ax * ax + ay * ay));
    }
};

/// Physical constants of the controlled Sun–Earth–Moon model in a frame
/// co-rotating with the Earth, Earth at the origin and Sun at (-1, 0).
/// Lengths in AU, time in years/2π. These are standard values, not
/// calibrated to any particular published run.
struct FourBodyParams {
    double m_S = 1.0;
    double m_E = 3.003e-6;
    double m_M = 3.003e-6 / 81.3;
    double r_M = 2.5696e-3;
    /// Synodic rate of the Moon in the rotating frame.
    double omega_M = 365.25 / 27.3217 - 1.0;
    double theta_M0 = 0.0;
    /// Distance below which a primary is treated as a collision (0 disables).
    double softening = 0.0;
    /// Sign of the 2ẋ term in the second control component.
    double coriolis_y_sign = -1.0;

    Eigen::Vector2d moon_position(double t) const;
    /// ∇Ω at (x, y, t).
    Eigen::Vector2d potential_gradient(double t, double x, double y) const;
    double potential(double t, double x, double y) const;
};

/// (ẍ - 2ẏ - Ω_x)² + (ÿ + s·2ẋ - Ω_y)² with y = (q, v, a).
struct FourBodyLagrangian {
    FourBodyParams p;

    template <class S>
    S operator()(double t, const S* y) const {
        using std::pow;
        const Eigen::Vector2d m = p.moon_position(t);
        const S xs = y[0] + 1.0;
        const S rs2 = xs * xs + y[1] * y[1];
        const S re2 = y[0] * y[0] + y[1] * y[1];
        const S dxm = y[0] - m.x();
        const S dym = y[1] - m.y();
        const S rm2 = dxm * dxm + dym * dym;
        if (p.softening > 0.0) {
            const double s2 = p.softening * p.softening;
            if (value_of(rs2) < s2 || value_of(re2) < s2 || value_of(rm2) < s2)
                throw SingularPotential("trajectory enters the softening radius of a primary");
        }
        const S is3 = pow(rs2, -1.5);
        const S ie3 = pow(re2, -1.5);
        const S im3 = pow(rm2, -1.5);
        const S ox = xs - p.m_S * xs * is3 - p.m_E * y[0] * ie3 - p.m_M * dxm * im3;
        const S oy = y[1] - p.m_S * y[1] * is3 - p.m_E * y[1] * ie3 - p.m_M * dym * im3;
        const S ux = y[4] - 2.0 * y[3] - ox;
        const S uy = y[5] + p.coriolis_y_sign * 2.0 * y[2] - oy;
        return ux * ux + uy * uy;
    }
};

/// Σ_k h F_{t_{k-1}}(q_{k-1}, (q_k - q_{k-1})/h) for a γ = 1 planar trajectory
/// parametrized with step h; the time labels are taken from traj.times().
double travel_time(const Trajectory& traj, const WindField& wind, double h);

/// Position blocks piecewise linear through the waypoints (placed at equally
/// spaced indices); for γ = 2 interior velocities follow the segment slopes.
Trajectory polyline_guess(const BoundaryData& boundary, const std::vector<Eigen::VectorXd>& waypoints,
                          int N, int gamma, int dim, TimeSpan span);

/// A ready-to-solve problem: discretized model factory, boundary data,
/// initial guess and solver defaults.
struct Problem {
    std::string id;
    int gamma = 1;
    int dim = 1;
    int N = 2;
    TimeSpan span;
    /// Curve-parameter problems (Zermelo) use h = (span.end - span.start)/N
    /// independently of the physical time labels.
    bool parametric = false;
    std::optional<Scheme> scheme;
    double scheme_param = 0.0;
    std::shared_ptr<const ContinuousLagrangian> lagrangian;
    BoundaryData boundary;
    std::vector<Eigen::VectorXd> waypoints;
    SolverConfig config;
    std::optional<WindField> wind;

    ModelFactory factory;
    /// Sequential time-grid recurrence (time-varying Zermelo).
    std::function<std::vector<double>(const Trajectory&)> time_grid;
    /// Named Sundman monitors available for config.adaptive_sundman.
    std::map<std::string, Monitor> monitors;

    Trajectory initial_guess() const;
    SolveHooks hooks() const;
    SolveReport solve() const;
    SolveReport solve(const Trajectory& initial) const;
};

/// Named overrides applied on top of a problem's defaults.
struct ProblemOptions {
    std::optional<int> N;
    std::optional<double> T;
    std::optional<Scheme> scheme;
    std::optional<double> alpha;
    std::optional<double> alpha_gauss;
    std::optional<TrajectoryNode> left;
    std::optional<TrajectoryNode> right;
    std::optional<std::vector<Knot>> knots;
    std::optional<std::vector<Eigen::VectorXd>> waypoints;
    /// Problem-specific scalars (c, wind_scale, m_E, …). Unknown names are
    /// rejected.
    std::map<std::string, double> params;
};

std::vector<std::string> problem_ids();

Problem make_problem(const std::string& id, const ProblemOptions& options = {});

/// Parameter names make_problem accepts for the given problem.
std::vector<std::string> problem_parameters(const std::string& id);

/// Discrete Lagrangian (q1 - q0)ᵀ M (q1 - q0) / (2h) on a uniform grid.
class QuadraticModel final : public DiscreteLagrangianModel {
public:
    QuadraticModel(Eigen::MatrixXd M, double h);
    int gamma() const override { return 1; }
    int dim() const override { return static_cast<int>(M_.rows()); }
    double eval(int k, const Vector& x0, const Vector& x1) const override;
    void derivatives(int k, const Vector& x0, const Vector& x1, Vector* grad,
                     Matrix* hess) const override;
    bool derivatives_analytic() const override { return true; }

private:
    Matrix M_;
    double h_;
};

/// L_d(q0, q1) = q0·q1 (n = 1), whose per-step Hessian is indefinite.
class IndefiniteToyModel final : public DiscreteLagrangianModel {
public:
    int gamma() const override { return 1; }
    int dim() const override { return 1; }
    double eval(int k, const Vector& x0, const Vector& x1) const override;
    void derivatives(int k, const Vector& x0, const Vector& x1, Vector* grad,
                     Matrix* hess) const override;
    bool derivatives_analytic() const override { return true; }
};

}  // namespace varint
