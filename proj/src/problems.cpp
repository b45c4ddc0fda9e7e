#include "varint/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace varint {

double randers_F(const Eigen::Matrix2d& g, const Eigen::Vector2d& w, const Eigen::Vector2d& v) {
    const double alpha = 1.0 - w.dot(g * w);
    if (!(alpha > 0.0)) throw DriftTooStrong("drift speed must stay below 1");
    const double wv = w.dot(g * v);
    const double a = v.dot(g * v) / alpha + wv * wv / (alpha * alpha);
    return std::sqrt(a) - wv / alpha;
}

double randers_F(const Eigen::Vector2d& w, const Eigen::Vector2d& v) {
    return randers_F(Eigen::Matrix2d::Identity(), w, v);
}

double randers_F2(const Eigen::Vector2d& w, const Eigen::Vector2d& v) {
    if (v.x() == 0.0 && v.y() == 0.0) {
        if (!(w.squaredNorm() < 1.0)) throw DriftTooStrong("drift speed must stay below 1");
        return 0.0;
    }
    const double F = randers_F(w, v);
    return F * F;
}

Eigen::Vector2d FourBodyParams::moon_position(double t) const {
    const double th = omega_M * t + theta_M0;
    return {r_M * std::cos(th), r_M * std::sin(th)};
}

Eigen::Vector2d FourBodyParams::potential_gradient(double t, double x, double y) const {
    const Eigen::Vector2d m = moon_position(t);
    const double xs = x + 1.0;
    const double is3 = std::pow(xs * xs + y * y, -1.5);
    const double ie3 = std::pow(x * x + y * y, -1.5);
    const double im3 = std::pow((x - m.x()) * (x - m.x()) + (y - m.y()) * (y - m.y()), -1.5);
    return {xs - m_S * xs * is3 - m_E * x * ie3 - m_M * (x - m.x()) * im3,
            y - m_S * y * is3 - m_E * y * ie3 - m_M * (y - m.y()) * im3};
}

double FourBodyParams::potential(double t, double x, double y) const {
    const Eigen::Vector2d m = moon_position(t);
    const double xs = x + 1.0;
    return 0.5 * (xs * xs + y * y) + m_S / std::hypot(xs, y) + m_E / std::hypot(x, y) +
           m_M / std::hypot(x - m.x(), y - m.y());
}

double travel_time(const Trajectory& traj, const WindField& wind, double h) {
    if (traj.gamma() != 1 || traj.dim() != 2)
        throw InvalidArgument("travel time needs a planar first-order trajectory");
    if (!(h > 0.0)) throw InvalidArgument("parameter step must be positive");
    double total = 0.0;
    for (int k = 1; k <= traj.intervals(); ++k) {
        const Vector& q0 = traj.node(k - 1);
        const Eigen::Vector2d v = (traj.node(k) - q0) / h;
        const Eigen::Vector2d w = wind.eval(traj.times()[static_cast<std::size_t>(k) - 1], q0(0), q0(1));
        total += h * randers_F(w, v);
    }
    return total;
}

Trajectory polyline_guess(const BoundaryData& boundary, const std::vector<Eigen::VectorXd>& waypoints,
                          int N, int gamma, int dim, TimeSpan span) {
    if (waypoints.empty()) return make_linear_initial_guess(boundary, N, gamma, dim, span);
    if (!boundary.knots.empty())
        throw InvalidArgument("waypoint guesses cannot be combined with knots");
    const int segs = static_cast<int>(waypoints.size()) + 1;
    if (N < segs) throw InvalidArgument("too few intervals for the waypoint count");
    for (const auto& w : waypoints)
        if (w.size() != dim) throw InvalidArgument("waypoint dimension mismatch");

    std::vector<Eigen::VectorXd> pts;
    pts.emplace_back(boundary.left.head(dim));
    for (const auto& w : waypoints) pts.push_back(w);
    pts.emplace_back(boundary.right.head(dim));
    std::vector<int> idx(static_cast<std::size_t>(segs) + 1);
    for (int s = 0; s <= segs; ++s)
        idx[static_cast<std::size_t>(s)] = static_cast<int>((static_cast<long long>(s) * N) / segs);

    Trajectory base = make_linear_initial_guess(boundary, N, gamma, dim, span);
    const double dt = (span.end - span.start) / N;
    for (int s = 0; s < segs; ++s) {
        const int a = idx[static_cast<std::size_t>(s)];
        const int b = idx[static_cast<std::size_t>(s) + 1];
        const Eigen::VectorXd& pa = pts[static_cast<std::size_t>(s)];
        const Eigen::VectorXd& pb = pts[static_cast<std::size_t>(s) + 1];
        const Eigen::VectorXd slope = (pb - pa) / ((b - a) * dt);
        for (int k = a; k <= b; ++k) {
            if (k == 0 || k == N) continue;
            Vector& node = base.node(k);
            node.head(dim) = pa + (pb - pa) * (static_cast<double>(k - a) / (b - a));
            if (gamma >= 2) {
                if (k == a && s > 0) {
                    const Eigen::VectorXd prev =
                        (pa - pts[static_cast<std::size_t>(s) - 1]) /
                        ((a - idx[static_cast<std::size_t>(s) - 1]) * dt);
                    node.segment(dim, dim) = 0.5 * (prev + slope);
                } else {
                    node.segment(dim, dim) = slope;
                }
                for (int j = 2; j < gamma; ++j) node.segment(j * dim, dim).setZero();
            }
        }
    }
    return base;
}

Trajectory Problem::initial_guess() const {
    return polyline_guess(boundary, waypoints, N, gamma, dim, span);
}

SolveHooks Problem::hooks() const {
    SolveHooks h;
    h.time_grid = time_grid;
    if (config.adaptive_sundman) {
        const auto it = monitors.find(*config.adaptive_sundman);
        if (it == monitors.end())
            throw ConfigError("unknown Sundman monitor '" + *config.adaptive_sundman + "'");
        h.sundman = it->second;
        h.sundman_total_T = span.end - span.start;
    }
    return h;
}

SolveReport Problem::solve() const { return solve(initial_guess()); }

SolveReport Problem::solve(const Trajectory& initial) const {
    return varint::solve(factory, boundary, config, initial, hooks());
}

QuadraticModel::QuadraticModel(Eigen::MatrixXd M, double h) : M_(std::move(M)), h_(h) {
    if (M_.rows() != M_.cols() || M_.rows() < 1 || M_.rows() > kMaxNodeSize)
        throw InvalidArgument("mass matrix must be square with 1..8 rows");
    if (h_ == 0.0 || !std::isfinite(h_)) throw InvalidArgument("step must be nonzero");
}

double QuadraticModel::eval(int, const Vector& x0, const Vector& x1) const {
    const Vector d = x1 - x0;
    return d.dot(M_ * d) / (2.0 * h_);
}

void QuadraticModel::derivatives(int, const Vector& x0, const Vector& x1, Vector* grad,
                                 Matrix* hess) const {
    const int n = dim();
    if (grad) {
        const Vector g = M_ * (x1 - x0) / h_;
        grad->resize(2 * n);
        grad->head(n) = -g;
        grad->tail(n) = g;
    }
    if (hess) {
        hess->resize(2 * n, 2 * n);
        hess->topLeftCorner(n, n) = M_ / h_;
        hess->bottomRightCorner(n, n) = M_ / h_;
        hess->topRightCorner(n, n) = -M_ / h_;
        hess->bottomLeftCorner(n, n) = -M_ / h_;
    }
}

double IndefiniteToyModel::eval(int, const Vector& x0, const Vector& x1) const {
    return x0(0) * x1(0);
}

void IndefiniteToyModel::derivatives(int, const Vector& x0, const Vector& x1, Vector* grad,
                                     Matrix* hess) const {
    if (grad) {
        grad->resize(2);
        (*grad) << x1(0), x0(0);
    }
    if (hess) {
        hess->resize(2, 2);
        (*hess) << 0.0, 1.0, 1.0, 0.0;
    }
}

namespace {

TrajectoryNode node_of(std::initializer_list<double> v) {
    TrajectoryNode n(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) n(i++) = x;
    return n;
}

Eigen::VectorXd point(double x, double y) { return Eigen::Vector2d(x, y); }

/// Reads problem parameters, rejecting names the problem does not know.
class Params {
public:
    Params(const std::string& id, const std::map<std::string, double>& given,
           std::vector<std::string> known)
        : given_(given) {
        const std::set<std::string> allowed(known.begin(), known.end());
        for (const auto& [name, _] : given)
            if (!allowed.count(name))
                throw ConfigError("problem '" + id + "' has no parameter '" + name + "'");
        for (const auto& [name, value] : given)
            if (!std::isfinite(value)) throw ConfigError("parameter '" + name + "' must be finite");
    }

    double get(const std::string& name, double fallback) const {
        const auto it = given_.find(name);
        return it == given_.end() ? fallback : it->second;
    }

private:
    const std::map<std::string, double>& given_;
};

const std::map<std::string, std::vector<std::string>>& parameter_table() {
    static const std::map<std::string, std::vector<std::string>> t = {
        {"free_particle", {}},
        {"harmonic_oscillator", {}},
        {"quadratic", {"m11", "m12", "m22"}},
        {"indefinite_toy", {}},
        {"zermelo_static", {"wind_scale"}},
        {"zermelo_time_varying", {"wind_amplitude"}},
        {"fuel", {}},
        {"fuel_interpolation", {"c"}},
        {"four_body",
         {"m_S", "m_E", "m_M", "r_M", "omega_M", "theta_M0", "softening", "coriolis_y_sign",
          "start_angle", "waypoint_radius", "waypoint_angle"}},
    };
    return t;
}

/// Model factory for a physical-time quadrature discretization.
ModelFactory physical_time_factory(std::shared_ptr<const ContinuousLagrangian> L, Scheme scheme,
                                   double param) {
    return [L, scheme, param](const Trajectory& traj) -> std::unique_ptr<DiscreteLagrangianModel> {
        return make_scheme_model(L, scheme, StepGrid::from_times(traj.times()), param);
    };
}

double default_scheme_param(Scheme s, const ProblemOptions& o) {
    switch (s) {
        case Scheme::AlphaTrapezoidal: return o.alpha.value_or(1.0);
        case Scheme::Gauss2: return o.alpha_gauss.value_or(std::sqrt(3.0));
        default: return 0.0;
    }
}

void apply_common(Problem& p, const ProblemOptions& o) {
    if (o.N) p.N = *o.N;
    if (o.T) {
        if (p.parametric) throw ConfigError("problem '" + p.id + "' has no total time T");
        if (!(*o.T > 0.0)) throw ConfigError("T must be positive");
        p.span.end = p.span.start + *o.T;
    }
    if (o.left) p.boundary.left = *o.left;
    if (o.right) p.boundary.right = *o.right;
    if (o.knots) p.boundary.knots = *o.knots;
    if (o.waypoints) p.waypoints = *o.waypoints;
    if (p.N < 2) throw ConfigError("N must be at least 2");
    p.boundary.validate(p.N, p.gamma, p.dim);
}

Scheme pick_scheme(const Problem& p, const ProblemOptions& o, Scheme fallback) {
    const Scheme s = o.scheme.value_or(fallback);
    if (scheme_gamma(s) != p.gamma)
        throw ConfigError(std::string("scheme ") + to_string(s) + " does not match problem order " +
                          std::to_string(p.gamma));
    return s;
}

void finish_quadrature(Problem& p, const ProblemOptions& o, Scheme fallback) {
    const Scheme s = pick_scheme(p, o, fallback);
    p.scheme = s;
    p.scheme_param = default_scheme_param(s, o);
    if (s == Scheme::AlphaTrapezoidal && p.scheme_param == 0.0)
        throw ConfigError("alpha must be nonzero");
    if (!p.parametric) p.factory = physical_time_factory(p.lagrangian, s, p.scheme_param);
}

Problem free_particle(const ProblemOptions& o) {
    Problem p;
    p.id = "free_particle";
    p.N = 10;
    p.boundary.left = node_of({0.0});
    p.boundary.right = node_of({1.0});
    p.lagrangian = make_jet_lagrangian<1, 1>([](double, const auto* y) { return 0.5 * y[1] * y[1]; });
    apply_common(p, o);
    finish_quadrature(p, o, Scheme::TrapezoidalFirstOrder);
    return p;
}

Problem harmonic_oscillator(const ProblemOptions& o) {
    Problem p;
    p.id = "harmonic_oscillator";
    p.N = 20;
    p.span = {0.0, 2.0};
    p.lagrangian = make_jet_lagrangian<1, 1>(
        [](double, const auto* y) { return 0.5 * y[1] * y[1] - 0.5 * y[0] * y[0]; });
    p.boundary.left = node_of({1.0});
    p.boundary.right = node_of({0.0});
    apply_common(p, o);
    if (!o.right) {
        // q_N from the forward recurrence of the trapezoidal DEL,
        // q_{k+1} = (2 - h²) q_k - q_{k-1}, started from (q_0, q_0 cos h).
        const double h = (p.span.end - p.span.start) / p.N;
        double q0 = p.boundary.left(0);
        double q1 = std::cos(h) * q0;
        for (int k = 1; k < p.N; ++k) {
            const double q2 = (2.0 - h * h) * q1 - q0;
            q0 = q1;
            q1 = q2;
        }
        p.boundary.right = node_of({q1});
    }
    finish_quadrature(p, o, Scheme::TrapezoidalFirstOrder);
    return p;
}

Problem quadratic(const ProblemOptions& o) {
    Problem p;
    p.id = "quadratic";
    p.dim = 2;
    p.N = 10;
    p.span = {0.0, 10.0};
    const Params prm(p.id, o.params, parameter_table().at(p.id));
    Eigen::Matrix2d M;
    M << prm.get("m11", 2.0), prm.get("m12", 0.5), prm.get("m12", 0.5), prm.get("m22", 1.0);
    if (o.scheme) throw ConfigError("problem 'quadratic' has a fixed discretization");
    p.boundary.left = node_of({0.0, 0.0});
    p.boundary.right = node_of({1.0, -2.0});
    apply_common(p, o);
    const double h = (p.span.end - p.span.start) / p.N;
    p.factory = [M, h](const Trajectory&) -> std::unique_ptr<DiscreteLagrangianModel> {
        return std::make_unique<QuadraticModel>(M, h);
    };
    return p;
}

Problem indefinite_toy(const ProblemOptions& o) {
    Problem p;
    p.id = "indefinite_toy";
    p.N = 4;
    if (o.scheme) throw ConfigError("problem 'indefinite_toy' has a fixed discretization");
    p.boundary.left = node_of({1.0});
    p.boundary.right = node_of({2.0});
    apply_common(p, o);
    p.factory = [](const Trajectory&) -> std::unique_ptr<DiscreteLagrangianModel> {
        return std::make_unique<IndefiniteToyModel>();
    };
    return p;
}

Problem zermelo_static(const ProblemOptions& o) {
    Problem p;
    p.id = "zermelo_static";
    p.dim = 2;
    p.N = 80;
    p.parametric = true;
    const Params prm(p.id, o.params, parameter_table().at(p.id));
    const VortexWind wind{prm.get("wind_scale", 1.7)};
    p.wind = WindField::from(wind, false);
    p.lagrangian = make_jet_lagrangian<1, 2>(RandersLagrangian<VortexWind>{wind});
    p.boundary.left = node_of({0.0, 0.0});
    p.boundary.right = node_of({6.0, 2.0});
    // Undamped sweeps from a straight line through the vortices overshoot onto
    // zig-zag critical points of the discrete energy.
    p.config.damping = 0.3;
    apply_common(p, o);
    finish_quadrature(p, o, Scheme::TrapezoidalFirstOrder);
    const auto L = p.lagrangian;
    const Scheme s = *p.scheme;
    const double param = p.scheme_param;
    const double len = p.span.end - p.span.start;
    p.factory = [L, s, param, len](const Trajectory& traj) -> std::unique_ptr<DiscreteLagrangianModel> {
        return make_scheme_model(L, s, StepGrid::uniform(len / traj.intervals(), traj.times().front()),
                                 param);
    };
    return p;
}

Problem zermelo_time_varying(const ProblemOptions& o) {
    Problem p;
    p.id = "zermelo_time_varying";
    p.dim = 2;
    p.N = 50;
    p.parametric = true;
    const Params prm(p.id, o.params, parameter_table().at(p.id));
    const RotatingWind wind{prm.get("wind_amplitude", 0.8)};
    if (!(std::abs(wind.amplitude) < 1.0)) throw ConfigError("wind_amplitude must be below 1");
    p.wind = WindField::from(wind, true);
    p.lagrangian = make_jet_lagrangian<1, 2>(RandersLagrangian<RotatingWind>{wind});
    p.boundary.left = node_of({1.0, 6.0});
    p.boundary.right = node_of({6.0, 2.0});
    // Undamped sweeps from a straight line through the vortices overshoot onto
    // zig-zag critical points of the discrete energy.
    p.config.damping = 0.3;
    apply_common(p, o);
    finish_quadrature(p, o, Scheme::TrapezoidalFirstOrder);
    const auto L = p.lagrangian;
    const Scheme s = *p.scheme;
    const double param = p.scheme_param;
    const double len = p.span.end - p.span.start;
    // The curve parameter has a fixed step; time labels come from the recurrence.
    p.factory = [L, s, param, len](const Trajectory& traj) -> std::unique_ptr<DiscreteLagrangianModel> {
        return make_scheme_model(L, s, StepGrid::parametric(len / traj.intervals(), traj.times()),
                                 param);
    };
    const WindField wf = *p.wind;
    p.time_grid = [wf, len](const Trajectory& traj) {
        const SpeedFunction F = [&wf](double t, const Vector& q, const Vector& v) {
            return randers_F(wf.eval(t, q(0), q(1)), Eigen::Vector2d(v(0), v(1)));
        };
        return update_time_grid_zermelo(traj, F, len / traj.intervals());
    };
    return p;
}

Problem fuel(const ProblemOptions& o) {
    Problem p;
    p.id = "fuel";
    p.dim = 2;
    p.N = 200;
    p.span = {0.0, 30.0};
    const Params prm(p.id, o.params, parameter_table().at(p.id));
    p.wind = WindField::from(DriftWind{}, false);
    p.lagrangian = make_jet_lagrangian<1, 2>(FuelLagrangian<DriftWind>{});
    p.boundary.left = node_of({0.0, 0.0});
    p.boundary.right = node_of({6.0, 5.0});
    p.config.tol_residual = 1e-7;
    p.config.max_iters = 2000000;
    apply_common(p, o);
    finish_quadrature(p, o, Scheme::TrapezoidalFirstOrder);
    return p;
}

Problem fuel_interpolation(const ProblemOptions& o) {
    Problem p;
    p.id = "fuel_interpolation";
    p.gamma = 2;
    p.dim = 2;
    p.N = 240;
    p.span = {0.0, 60.0};
    const Params prm(p.id, o.params, parameter_table().at(p.id));
    const double c = prm.get("c", 50.0);
    if (!(c >= 0.0)) throw ConfigError("c must be non-negative");
    p.wind = WindField::from(DriftWind{}, false);
    p.lagrangian = make_jet_lagrangian<2, 2>(FuelInterpolationLagrangian{DriftWind{}, c});
    p.boundary.left = node_of({0.0, 0.0, 0.0, 0.0});
    p.boundary.right = node_of({3.0, 5.0, 0.0, 0.0});
    // Knots at one and two thirds of the horizon (t = 20 and t = 40 by default).
    const int n = o.N.value_or(p.N);
    p.boundary.knots = {Knot{static_cast<int>(std::lround(n / 3.0)), point(1.0, 3.0), false},
                        Knot{static_cast<int>(std::lround(2.0 * n / 3.0)), point(5.0, 2.0), false}};
    p.config.tol_residual = 1e-7;
    p.config.max_iters = 2000000;
    apply_common(p, o);
    finish_quadrature(p, o, Scheme::Lobatto2);
    return p;
}

Problem four_body(const ProblemOptions& o) {
    Problem p;
    p.id = "four_body";
    p.gamma = 2;
    p.dim = 2;
    p.N = 100;
    const Params prm(p.id, o.params, parameter_table().at(p.id));
    FourBodyParams fp;
    fp.m_S = prm.get("m_S", fp.m_S);
    fp.m_E = prm.get("m_E", fp.m_E);
    fp.m_M = prm.get("m_M", fp.m_M);
    fp.r_M = prm.get("r_M", fp.r_M);
    fp.omega_M = prm.get("omega_M", fp.omega_M);
    fp.theta_M0 = prm.get("theta_M0", fp.theta_M0);
    fp.softening = prm.get("softening", fp.softening);
    fp.coriolis_y_sign = prm.get("coriolis_y_sign", fp.coriolis_y_sign);
    if (fp.coriolis_y_sign != 1.0 && fp.coriolis_y_sign != -1.0)
        throw ConfigError("coriolis_y_sign must be 1 or -1");
    if (!(fp.m_E > 0.0) || !(fp.m_S >= 0.0) || !(fp.m_M >= 0.0) || !(fp.r_M > 0.0) ||
        !(fp.softening >= 0.0))
        throw ConfigError("four-body masses and radii must be non-negative");

    // Eight days in units of years/2π.
    p.span = {0.0, 8.0 / 365.25 * 2.0 * std::numbers::pi};
    const double T = o.T.value_or(p.span.end);
    p.lagrangian = make_jet_lagrangian<2, 2>(FourBodyLagrangian{fp});

    // Geosynchronous radius (42164 km) and circular speed in the rotating frame.
    const double r0 = 42164.0 / 1.495978707e8;
    const double a0 = prm.get("start_angle", 0.0);
    const double v0 = std::sqrt(fp.m_E / r0) - r0;
    p.boundary.left = node_of({r0 * std::cos(a0), r0 * std::sin(a0), -v0 * std::sin(a0),
                               v0 * std::cos(a0)});
    // Trailing Earth–Moon triangular point at the final time, co-moving with the Moon.
    const double aT = fp.omega_M * T + fp.theta_M0 - std::numbers::pi / 3.0;
    const double vT = fp.omega_M * fp.r_M;
    p.boundary.right = node_of({fp.r_M * std::cos(aT), fp.r_M * std::sin(aT),
                                -vT * std::sin(aT), vT * std::cos(aT)});
    // Two straight segments through a point beyond the lunar orbit.
    const double wr = prm.get("waypoint_radius", 1.5 * fp.r_M);
    const double wa = prm.get("waypoint_angle", fp.omega_M * 0.5 * T + fp.theta_M0);
    p.waypoints = {point(wr * std::cos(wa), wr * std::sin(wa))};

    p.monitors["earth_distance"] = [rM = fp.r_M](const Vector& x0, const Vector& x1) {
        const double r = 0.5 * std::hypot(x0(0) + x1(0), x0(1) + x1(1));
        return std::pow(r / rM, 1.5);
    };
    p.config.tol_residual = 1e-8;
    p.config.max_iters = 2000000;
    apply_common(p, o);
    finish_quadrature(p, o, Scheme::AlphaTrapezoidal);
    return p;
}

using Builder = Problem (*)(const ProblemOptions&);

const std::map<std::string, Builder>& builders() {
    static const std::map<std::string, Builder> b = {
        {"free_particle", &free_particle},
        {"harmonic_oscillator", &harmonic_oscillator},
        {"quadratic", &quadratic},
        {"indefinite_toy", &indefinite_toy},
        {"zermelo_static", &zermelo_static},
        {"zermelo_time_varying", &zermelo_time_varying},
        {"fuel", &fuel},
        {"fuel_interpolation", &fuel_interpolation},
        {"four_body", &four_body},
    };
    return b;
}

}  // namespace

std::vector<std::string> problem_ids() {
    std::vector<std::string> ids;
    for (const auto& [id, _] : builders()) ids.push_back(id);
    return ids;
}

std::vector<std::string> problem_parameters(const std::string& id) {
    const auto it = parameter_table().find(id);
    if (it == parameter_table().end()) throw ConfigError("unknown problem '" + id + "'");
    return it->second;
}

Problem make_problem(const std::string& id, const ProblemOptions& options) {
    const auto it = builders().find(id);
    if (it == builders().end()) throw ConfigError("unknown problem '" + id + "'");
    // Builders that take no parameters still reject unknown ones.
    Params(id, options.params, parameter_table().at(id));
    return it->second(options);
}

}  // namespace varint
