#include "varint/discretization.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/numeric/odeint.hpp>

#include <cmath>

#include "varint/finite_difference.hpp"

namespace varint {

void ContinuousLagrangian::derivatives(double t, const Vector& y, Vector* grad,
                                       Matrix* hess) const {
    auto f = [&](const Vector& w) { return eval(t, w); };
    if (grad) *grad = fd_gradient(f, y, fd_gradient_step(y));
    if (hess) *hess = fd_hessian(f, y, fd_hessian_step(y));
}

StepGrid StepGrid::uniform(double h, double t0) {
    if (!(h > 0.0)) throw InvalidArgument("step size must be positive");
    StepGrid g;
    g.h_ = h;
    g.t0_ = t0;
    return g;
}

StepGrid StepGrid::from_times(std::vector<double> times) {
    if (times.size() < 2) throw InvalidArgument("time grid needs at least two points");
    for (std::size_t k = 1; k < times.size(); ++k)
        if (!(times[k] > times[k - 1])) throw InvalidArgument("time grid must increase");
    StepGrid g;
    g.fixed_step_ = false;
    g.times_ = std::move(times);
    return g;
}

StepGrid StepGrid::parametric(double h, std::vector<double> times) {
    if (!(h > 0.0)) throw InvalidArgument("step size must be positive");
    if (times.size() < 2) throw InvalidArgument("time grid needs at least two points");
    StepGrid g;
    g.h_ = h;
    g.times_ = std::move(times);
    return g;
}

double StepGrid::time(int k) const {
    if (times_.empty()) return t0_ + k * h_;
    if (k < 0 || static_cast<std::size_t>(k) >= times_.size())
        throw IndexError("time index " + std::to_string(k) + " outside the grid");
    return times_[static_cast<std::size_t>(k)];
}

double StepGrid::step(int k) const {
    if (fixed_step_) return h_;
    return time(k + 1) - time(k);
}

double StepGrid::stage_time(int k, double c) const {
    if (times_.empty()) return t0_ + (k + c) * h_;
    if (c == 0.0) return time(k);
    if (c == 1.0) return time(k + 1);
    return time(k) + c * (time(k + 1) - time(k));
}

const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::TrapezoidalFirstOrder: return "trapezoidal";
        case Scheme::AlphaTrapezoidal: return "alpha_trapezoidal";
        case Scheme::Lobatto2: return "lobatto2";
        case Scheme::Gauss2: return "gauss2";
    }
    return "?";
}

int scheme_gamma(Scheme scheme) { return scheme == Scheme::TrapezoidalFirstOrder ? 1 : 2; }

std::array<Stage, 2> scheme_stages(Scheme scheme, double h, double param) {
    std::array<Stage, 2> st;
    st[0].weight = st[1].weight = 0.5;
    const double h2 = h * h;
    switch (scheme) {
        case Scheme::TrapezoidalFirstOrder:
            // z = (q0, q1); y = (q, v).
            st[0].c = 0.0;
            st[1].c = 1.0;
            st[0].S.resize(2, 2);
            st[1].S.resize(2, 2);
            st[0].S << 1, 0, -1 / h, 1 / h;
            st[1].S << 0, 1, -1 / h, 1 / h;
            break;
        case Scheme::AlphaTrapezoidal:
        case Scheme::Lobatto2: {
            const double a = scheme == Scheme::Lobatto2 ? 1.0 : param;
            // z = (q0, v0, q1, v1); y = (q, v, a).
            st[0].c = 0.0;
            st[1].c = 1.0;
            st[0].S.resize(3, 4);
            st[1].S.resize(3, 4);
            if (scheme == Scheme::Lobatto2) {
                // (2/h²)(3(q1 - q0) - h(v1 + 2 v0)) and -(2/h²)(3(q1 - q0) - h(2 v1 + v0)).
                st[0].S << 1, 0, 0, 0,
                           0, 1, 0, 0,
                           -6 / h2, -4 / h, 6 / h2, -2 / h;
                st[1].S << 0, 0, 1, 0,
                           0, 0, 0, 1,
                           6 / h2, 2 / h, -6 / h2, 4 / h;
            } else {
                st[0].S << 1, 0, 0, 0,
                           0, 1, 0, 0,
                           -6 * a / h2, -(1 + 3 * a) / h, 6 * a / h2, (1 - 3 * a) / h;
                st[1].S << 0, 0, 1, 0,
                           0, 0, 0, 1,
                           6 * a / h2, -(1 - 3 * a) / h, -6 * a / h2, (1 + 3 * a) / h;
            }
            break;
        }
        case Scheme::Gauss2: {
            const double a = param;
            const double r = std::sqrt(3.0) / 6.0;
            const double s3 = std::sqrt(3.0);
            st[0].c = 0.5 - r;
            st[1].c = 0.5 + r;
            st[0].S.resize(3, 4);
            st[1].S.resize(3, 4);
            st[0].S << 0.5 + r, h / 12, 0.5 - r, -h / 12,
                       -1 / h, r, 1 / h, -r,
                       -2 * a / h2, -(1 + s3) / h, 2 * a / h2, (1 - s3) / h;
            st[1].S << 0.5 - r, h / 12, 0.5 + r, -h / 12,
                       -1 / h, -r, 1 / h, r,
                       2 * a / h2, -(1 - s3) / h, -2 * a / h2, (1 + s3) / h;
            break;
        }
    }
    return st;
}

namespace {

/// P = S ⊗ I_n.
Matrix expand(const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 4>& S, int n) {
    Matrix P = Matrix::Zero(S.rows() * n, S.cols() * n);
    for (Eigen::Index r = 0; r < S.rows(); ++r)
        for (Eigen::Index c = 0; c < S.cols(); ++c)
            if (S(r, c) != 0.0)
                for (int i = 0; i < n; ++i) P(r * n + i, c * n + i) = S(r, c);
    return P;
}

Vector stacked(const Vector& x0, const Vector& x1) {
    Vector z(x0.size() + x1.size());
    z << x0, x1;
    return z;
}

}  // namespace

QuadratureModel::QuadratureModel(std::shared_ptr<const ContinuousLagrangian> L, Scheme scheme,
                                 StepGrid grid, double param)
    : L_(std::move(L)), scheme_(scheme), grid_(std::move(grid)), param_(param) {
    if (!L_) throw InvalidArgument("null Lagrangian");
    gamma_ = L_->gamma();
    dim_ = L_->dim();
    if (gamma_ != scheme_gamma(scheme))
        throw InvalidArgument(std::string("scheme ") + to_string(scheme) +
                              " requires a Lagrangian of order " +
                              std::to_string(scheme_gamma(scheme)));
    if (gamma_ * dim_ > kMaxNodeSize) throw InvalidArgument("node size too large");
    if (scheme == Scheme::AlphaTrapezoidal && param == 0.0)
        throw InvalidArgument("alpha-trapezoidal scheme is singular for alpha = 0");
}

std::vector<Vector> QuadratureModel::stage_arguments(int k, const Vector& x0,
                                                     const Vector& x1) const {
    const Vector z = stacked(x0, x1);
    std::vector<Vector> out;
    for (const Stage& s : scheme_stages(scheme_, grid_.step(k), param_))
        out.emplace_back(expand(s.S, dim_) * z);
    return out;
}

double QuadratureModel::eval(int k, const Vector& x0, const Vector& x1) const {
    const double h = grid_.step(k);
    const Vector z = stacked(x0, x1);
    double acc = 0.0;
    for (const Stage& s : scheme_stages(scheme_, h, param_)) {
        const Vector y = expand(s.S, dim_) * z;
        acc += s.weight * L_->eval(grid_.stage_time(k, s.c), y);
    }
    return h * acc;
}

void QuadratureModel::derivatives(int k, const Vector& x0, const Vector& x1, Vector* grad,
                                  Matrix* hess) const {
    if (!L_->analytic()) {
        DiscreteLagrangianModel::derivatives(k, x0, x1, grad, hess);
        return;
    }
    const double h = grid_.step(k);
    const Vector z = stacked(x0, x1);
    const Eigen::Index m = z.size();
    if (grad) grad->setZero(m);
    if (hess) hess->setZero(m, m);
    Vector gy;
    Matrix Hy;
    for (const Stage& s : scheme_stages(scheme_, h, param_)) {
        const Matrix P = expand(s.S, dim_);
        const Vector y = P * z;
        L_->derivatives(grid_.stage_time(k, s.c), y, grad ? &gy : nullptr, hess ? &Hy : nullptr);
        const double w = h * s.weight;
        if (grad) grad->noalias() += w * (P.transpose() * gy);
        if (hess) hess->noalias() += w * (P.transpose() * Hy * P);
    }
}

std::unique_ptr<QuadratureModel> trapezoidal_first_order(
    std::shared_ptr<const ContinuousLagrangian> L, StepGrid grid) {
    return std::make_unique<QuadratureModel>(std::move(L), Scheme::TrapezoidalFirstOrder,
                                             std::move(grid));
}

std::unique_ptr<QuadratureModel> alpha_trapezoidal_second_order(
    std::shared_ptr<const ContinuousLagrangian> L, StepGrid grid, double alpha) {
    return std::make_unique<QuadratureModel>(std::move(L), Scheme::AlphaTrapezoidal,
                                             std::move(grid), alpha);
}

std::unique_ptr<QuadratureModel> lobatto2_second_order(
    std::shared_ptr<const ContinuousLagrangian> L, StepGrid grid) {
    return std::make_unique<QuadratureModel>(std::move(L), Scheme::Lobatto2, std::move(grid));
}

std::unique_ptr<QuadratureModel> gauss2_second_order(
    std::shared_ptr<const ContinuousLagrangian> L, StepGrid grid, double alpha_gauss) {
    return std::make_unique<QuadratureModel>(std::move(L), Scheme::Gauss2, std::move(grid),
                                             alpha_gauss);
}

std::unique_ptr<QuadratureModel> make_scheme_model(std::shared_ptr<const ContinuousLagrangian> L,
                                                   Scheme scheme, StepGrid grid, double param) {
    return std::make_unique<QuadratureModel>(std::move(L), scheme, std::move(grid), param);
}

double exact_discrete_lagrangian(const ContinuousLagrangian& L, const OrderProbe& probe, double h,
                                 std::vector<double>* end_state) {
    namespace odeint = boost::numeric::odeint;
    using State = std::vector<double>;
    using Quad = boost::math::quadrature::gauss<double, 10>;

    const int y_len = L.arg_size();
    if (!probe.rhs) throw OracleError("order probe has no dynamics");
    if (static_cast<int>(probe.initial_state.size()) < y_len)
        throw OracleError("order probe state shorter than the Lagrangian argument");

    // Abscissae on [-1, 1] in increasing order with matching weights.
    std::vector<double> nodes, weights;
    const auto& xs = Quad::abscissa();
    const auto& ws = Quad::weights();
    for (std::size_t i = xs.size(); i-- > 0;) {
        if (xs[i] == 0.0) continue;
        nodes.push_back(-xs[i]);
        weights.push_back(ws[i]);
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        nodes.push_back(xs[i]);
        weights.push_back(ws[i]);
    }

    std::vector<double> times{probe.t0};
    for (double x : nodes) times.push_back(probe.t0 + 0.5 * h * (x + 1.0));
    times.push_back(probe.t0 + h);

    std::vector<State> samples;
    State x = probe.initial_state;
    auto stepper = odeint::make_controlled(probe.integration_tol, probe.integration_tol,
                                           odeint::runge_kutta_fehlberg78<State>());
    try {
        odeint::integrate_times(stepper, probe.rhs, x, times.begin(), times.end(), h / 50.0,
                                [&](const State& s, double) { samples.push_back(s); });
    } catch (const std::exception& e) {
        throw OracleError(std::string("reference integration failed: ") + e.what());
    }
    if (samples.size() != times.size()) throw OracleError("reference integration incomplete");

    double action = 0.0;
    Vector y(y_len);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const State& s = samples[i + 1];
        for (int j = 0; j < y_len; ++j) y(j) = s[static_cast<std::size_t>(j)];
        action += weights[i] * L.eval(times[i + 1], y);
    }
    action *= 0.5 * h;
    if (!std::isfinite(action)) throw OracleError("reference action is not finite");
    if (end_state) *end_state = samples.back();
    return action;
}

OrderEstimate estimate_order(const ModelAtStep& model, const ContinuousLagrangian& L,
                             const OrderProbe& probe) {
    if (probe.levels < 2) throw InvalidArgument("order estimate needs at least two step sizes");
    const int m = L.gamma() * L.dim();
    OrderEstimate out;
    double h = probe.h0;
    for (int lvl = 0; lvl < probe.levels; ++lvl, h *= 0.5) {
        std::vector<double> end;
        const double exact = exact_discrete_lagrangian(L, probe, h, &end);
        Vector x0(m), x1(m);
        for (int j = 0; j < m; ++j) {
            x0(j) = probe.initial_state[static_cast<std::size_t>(j)];
            x1(j) = end[static_cast<std::size_t>(j)];
        }
        const auto md = model(h);
        out.steps.push_back(h);
        out.errors.push_back(std::abs(md->eval(0, x0, x1) - exact));
    }
    // Least-squares slope on log-log axes.
    const std::size_t n = out.steps.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(out.errors[i] > 0.0)) throw OracleError("discretization error vanished");
        const double lx = std::log(out.steps[i]);
        const double ly = std::log(out.errors[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    out.order = out.slope - 1.0;
    return out;
}

}  // namespace varint
