#include "doctest.h"

#include "support.hpp"
#include "varint/finite_difference.hpp"

using namespace varint;
using test::node;
using test::scalar_traj;

namespace {

struct ConstantWind {
    template <class S>
    Vec2<S> operator()(double, const S&, const S&) const {
        return {S(0.3), S(-0.2)};
    }
};

std::unique_ptr<DiscreteLagrangianModel> constant_wind_fuel_model(double h) {
    auto L = make_jet_lagrangian<1, 2>(FuelLagrangian<ConstantWind>{});
    return trapezoidal_first_order(L, StepGrid::uniform(h));
}

}  // namespace

TEST_CASE("linear initial guess interpolates the boundary") {
    SUBCASE("scalar midpoint") {
        const Trajectory t = make_linear_initial_guess({node({0}), node({1}), {}}, 2, 1, 1);
        CHECK(t.node(0)(0) == 0.0);
        CHECK(t.node(1)(0) == 0.5);
        CHECK(t.node(2)(0) == 1.0);
    }
    SUBCASE("constant boundary") {
        const Trajectory t = make_linear_initial_guess({node({3.7}), node({3.7}), {}}, 4, 1, 1);
        for (int k = 0; k <= 4; ++k) CHECK(t.node(k)(0) == 3.7);
    }
    SUBCASE("planar, three intervals") {
        const Trajectory t = make_linear_initial_guess({node({0, 0}), node({6, 2}), {}}, 3, 1, 2);
        const double expect[4][2] = {{0, 0}, {2, 2.0 / 3.0}, {4, 4.0 / 3.0}, {6, 2}};
        for (int k = 0; k <= 3; ++k) {
            CHECK(t.node(k)(0) == doctest::Approx(expect[k][0]).epsilon(1e-15));
            CHECK(t.node(k)(1) == doctest::Approx(expect[k][1]).epsilon(1e-15));
        }
    }
    SUBCASE("knots are hit exactly and derivative blocks stay affine") {
        BoundaryData b{node({0, 0, 1, 2}), node({4, 8, 3, 6}), {}};
        b.knots.push_back({2, Eigen::Vector2d(5.0, -1.0), false});
        const Trajectory t = make_linear_initial_guess(b, 4, 2, 2);
        CHECK(t.node(2)(0) == 5.0);
        CHECK(t.node(2)(1) == -1.0);
        CHECK(t.node(1)(0) == doctest::Approx(2.5));
        CHECK(t.node(3)(1) == doctest::Approx(3.5));
        for (int k = 0; k <= 4; ++k) {
            CHECK(t.node(k)(2) == doctest::Approx(1.0 + 0.5 * k));
            CHECK(t.node(k)(3) == doctest::Approx(2.0 + 1.0 * k));
        }
    }
    SUBCASE("knot index out of range") {
        BoundaryData b{node({0}), node({1}), {}};
        b.knots.push_back({4, Eigen::VectorXd::Constant(1, 0.5), false});
        CHECK_THROWS_AS(make_linear_initial_guess(b, 4, 1, 1), InvalidBoundary);
        b.knots[0].index = 0;
        CHECK_THROWS_AS(make_linear_initial_guess(b, 4, 1, 1), InvalidBoundary);
    }
}

TEST_CASE("trajectory invariants are enforced") {
    CHECK_THROWS_AS(Trajectory(1, 1, {node({0}), node({1})}, {0.0, 0.0}), InvalidArgument);
    CHECK_THROWS_AS(Trajectory(1, 1, {node({0}), node({1, 2})}, {0.0, 1.0}), InvalidArgument);
    CHECK_THROWS_AS(Trajectory(1, 1, {node({0}), node({NAN})}, {0.0, 1.0}), InvalidArgument);
    CHECK_NOTHROW(Trajectory(2, 1, {node({0, 1}), node({1, 1})}, {0.0, 1.0}));
}

TEST_CASE("DEL residual of the free particle") {
    const auto model = test::free_particle_model(1.0);
    CHECK(del_residual(*model, scalar_traj({0, 0.5, 1}), 1)(0) == 0.0);
    // (0.3 - 0) - (1 - 0.3)
    CHECK(del_residual(*model, scalar_traj({0, 0.3, 1}), 1)(0) == doctest::Approx(-0.4).epsilon(1e-15));
    CHECK(max_residual(*model, scalar_traj({0, 0.25, 0.5, 0.75, 1})) == 0.0);
    CHECK(max_residual(*model, scalar_traj({0, 0.3, 1})) == doctest::Approx(0.4).epsilon(1e-15));
    CHECK_THROWS_AS(del_residual(*model, scalar_traj({0, 0.3, 1}), 0), IndexError);
    CHECK_THROWS_AS(del_residual(*model, scalar_traj({0, 0.3, 1}), 2), IndexError);
}

TEST_CASE("max residual restricted to free components") {
    auto L = make_jet_lagrangian<2, 1>([](double, const auto* y) { return 0.5 * y[2] * y[2]; });
    const auto model = lobatto2_second_order(L, StepGrid::uniform(1.0));
    BoundaryData b{node({0, 0}), node({3, 0}), {}};
    b.knots.push_back({1, Eigen::VectorXd::Constant(1, 2.0), false});
    Trajectory t = make_linear_initial_guess(b, 3, 2, 1);
    const NodeConstraints c(b, 3, 2, 1);
    CHECK(c.free_components(1) == std::vector<int>{1});
    CHECK(c.free_components(2) == std::vector<int>{0, 1});
    const Vector r1 = del_residual(*model, t, 1);
    const Vector r2 = del_residual(*model, t, 2);
    const double expect = std::max(std::abs(r1(1)), r2.cwiseAbs().maxCoeff());
    CHECK(max_residual(*model, t, c) == expect);
    CHECK(max_residual(*model, t) >= expect);
}

TEST_CASE("DEL residual is translation covariant") {
    std::mt19937_64 rng(11);
    SUBCASE("free particle") {
        const auto model = test::free_particle_model(0.5);
        Trajectory t = scalar_traj({0.1, -0.4, 0.9, 0.3, 1.2}, 0.5);
        Trajectory s = t;
        for (auto& n : s.nodes()) n(0) += 2.75;
        for (int k = 1; k < 4; ++k)
            CHECK(del_residual(*model, s, k)(0) ==
                  doctest::Approx(del_residual(*model, t, k)(0)).epsilon(1e-12));
    }
    SUBCASE("fuel with constant drift") {
        const auto model = constant_wind_fuel_model(0.2);
        std::vector<TrajectoryNode> nodes;
        std::vector<double> times;
        for (int k = 0; k <= 6; ++k) {
            nodes.push_back(test::random_vector(rng, 2));
            times.push_back(0.2 * k);
        }
        const Trajectory t(1, 2, nodes, times);
        Trajectory s = t;
        for (auto& n : s.nodes()) n += test::node({-1.5, 4.0});
        for (int k = 1; k < 6; ++k)
            CHECK((del_residual(*model, s, k) - del_residual(*model, t, k)).cwiseAbs().maxCoeff() <
                  1e-12);
    }
}

TEST_CASE("finite-difference fallback of the model contract") {
    // A model that only implements eval uses the default derivatives.
    struct EvalOnly final : DiscreteLagrangianModel {
        int gamma() const override { return 1; }
        int dim() const override { return 2; }
        double eval(int, const Vector& a, const Vector& b) const override {
            return std::sin(a(0) * b(1)) + 0.5 * (b - a).squaredNorm() + a(1) * a(1) * b(0);
        }
    } model;
    struct Analytic final : DiscreteLagrangianModel {
        int gamma() const override { return 1; }
        int dim() const override { return 2; }
        double eval(int, const Vector&, const Vector&) const override { return 0.0; }
        void derivatives(int, const Vector& a, const Vector& b, Vector* g, Matrix* H) const override {
            const double c = std::cos(a(0) * b(1)), s = std::sin(a(0) * b(1));
            if (g) {
                g->resize(4);
                *g << b(1) * c - (b(0) - a(0)), -(b(1) - a(1)) + 2 * a(1) * b(0),
                    (b(0) - a(0)) + a(1) * a(1), a(0) * c + (b(1) - a(1));
            }
            if (H) {
                H->resize(4, 4);
                const double m = c - a(0) * b(1) * s;
                *H << -b(1) * b(1) * s + 1, 0, -1, m,
                      0, 1 + 2 * b(0), 2 * a(1), -1,
                      -1, 2 * a(1), 1, 0,
                      m, -1, 0, -a(0) * a(0) * s + 1;
            }
        }
    } oracle;
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Vector a = test::random_vector(rng, 2), b = test::random_vector(rng, 2);
        Vector g, go;
        Matrix H, Ho;
        model.derivatives(0, a, b, &g, &H);
        oracle.derivatives(0, a, b, &go, &Ho);
        CHECK((g - go).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((H - Ho).cwiseAbs().maxCoeff() < 1e-5);
        CHECK((H - H.transpose()).cwiseAbs().maxCoeff() <= 1e-5);
        CHECK_FALSE(model.derivatives_analytic());
    }
}

TEST_CASE("analytic derivatives agree with finite differences on every catalog problem") {
    for (const std::string& id : problem_ids()) {
        CAPTURE(id);
        const Problem p = make_problem(id);
        const Trajectory guess = p.initial_guess();
        const auto model = p.factory(guess);
        const int m = guess.node_size();
        std::mt19937_64 rng(std::hash<std::string>{}(id));
        std::uniform_int_distribution<int> pick(0, guess.intervals() - 1);
        double worst_g = 0.0, worst_h = 0.0, worst_sym = 0.0, worst_mixed = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int k = pick(rng);
            const Vector& a = guess.node(k);
            const Vector& b = guess.node(k + 1);
            const double scale = 0.05 * std::max(1e-3, (b - a).cwiseAbs().maxCoeff());
            const Vector x0 = a + test::random_vector(rng, m, scale);
            const Vector x1 = b + test::random_vector(rng, m, scale);
            const DerivativeCheck chk = check_model_derivatives(*model, k, x0, x1);
            worst_g = std::max(worst_g, chk.grad_rel_error);
            worst_h = std::max(worst_h, chk.hess_rel_error);
            worst_sym = std::max(worst_sym, chk.hess_asymmetry);

            // D_12 against the x0-derivative of D_2 L_d.
            const Matrix h12 = model->hess12(k, x0, x1);
            auto g2 = [&](const Vector& w) { return model->grad2(k, w, x1); };
            const double step = fd_gradient_step(x0) * 10.0;
            const Matrix mixed = (4.0 * fd_jacobian(g2, x0, 0.5 * step) - fd_jacobian(g2, x0, step)) / 3.0;
            worst_mixed = std::max(worst_mixed, (h12.transpose() - mixed).cwiseAbs().maxCoeff() /
                                                    std::max(1.0, h12.cwiseAbs().maxCoeff()));
        }
        CHECK(worst_g < 1e-4);
        CHECK(worst_h < 1e-3);
        const double tau = model->derivatives_analytic() ? 1e-8 : 1e-5;
        CHECK(worst_sym <= tau);
        CHECK(worst_mixed < 1e-5);
    }
}

TEST_CASE("solver configuration validation") {
    SolverConfig c;
    CHECK_NOTHROW(c.validate());
    c.damping = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.damping = -0.1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.damping = 0.0;
    c.tol_residual = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.tol_residual = 1e-8;
    c.refinement = {{20, 0}, {15, 0}};
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
