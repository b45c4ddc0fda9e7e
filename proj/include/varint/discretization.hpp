#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "varint/autodiff.hpp"
#include "varint/core.hpp"

namespace varint {

/// Continuous Lagrangian L(t, q, q̇, …, q^(γ)) on ℝⁿ. The argument y is the
/// flat vector of length (γ+1)·n ordered by derivative degree.
class ContinuousLagrangian {
public:
    virtual ~ContinuousLagrangian() = default;

    virtual int gamma() const = 0;
    virtual int dim() const = 0;
    int arg_size() const { return (gamma() + 1) * dim(); }

    virtual double eval(double t, const Vector& y) const = 0;

    /// Gradient and Hessian in y. Defaults to central differences.
    virtual void derivatives(double t, const Vector& y, Vector* grad, Matrix* hess) const;

    virtual bool analytic() const { return false; }
};

/// Wraps a functor `template <class S> S operator()(double t, const S* y) const`
/// and differentiates it exactly with second-order jets.
template <int Gamma, int Dim, class F>
class JetLagrangian final : public ContinuousLagrangian {
public:
    static constexpr int kArgs = (Gamma + 1) * Dim;
    using Jet = Jet2<kArgs>;

    explicit JetLagrangian(F f) : f_(std::move(f)) {}

    int gamma() const override { return Gamma; }
    int dim() const override { return Dim; }
    bool analytic() const override { return true; }

    const F& functor() const { return f_; }

    double eval(double t, const Vector& y) const override { return f_(t, y.data()); }

    void derivatives(double t, const Vector& y, Vector* grad, Matrix* hess) const override {
        std::array<Jet, kArgs> in;
        for (int i = 0; i < kArgs; ++i) in[static_cast<std::size_t>(i)] = Jet::variable(y(i), i);
        const Jet out = f_(t, in.data());
        if (grad) {
            grad->resize(kArgs);
            for (int i = 0; i < kArgs; ++i) (*grad)(i) = out.g[static_cast<std::size_t>(i)];
        }
        if (hess) {
            hess->resize(kArgs, kArgs);
            for (int i = 0; i < kArgs; ++i)
                for (int j = i; j < kArgs; ++j) (*hess)(i, j) = (*hess)(j, i) = out.hess(i, j);
        }
    }

private:
    F f_;
};

template <int Gamma, int Dim, class F>
std::shared_ptr<const ContinuousLagrangian> make_jet_lagrangian(F f) {
    return std::make_shared<JetLagrangian<Gamma, Dim, F>>(std::move(f));
}

/// Per-interval step sizes h_k and the time labels t_k at which a
/// time-dependent Lagrangian is sampled. For physical-time grids h_k is
/// t_{k+1} - t_k; for curve-parameter grids h is fixed and t_k is carried
/// separately.
class StepGrid {
public:
    /// h_k = h, t_k = t0 + k h for every k.
    static StepGrid uniform(double h, double t0 = 0.0);
    /// h_k = t_{k+1} - t_k.
    static StepGrid from_times(std::vector<double> times);
    /// h_k = h with externally supplied time labels.
    static StepGrid parametric(double h, std::vector<double> times);

    double step(int k) const;
    double time(int k) const;
    /// t_k + c (t_{k+1} - t_k).
    double stage_time(int k, double c) const;

private:
    double h_ = 0.0;
    double t0_ = 0.0;
    bool fixed_step_ = true;
    std::vector<double> times_;
};

enum class Scheme { TrapezoidalFirstOrder, AlphaTrapezoidal, Lobatto2, Gauss2 };

const char* to_string(Scheme s);

/// Linear stage map of a quadrature rule: y_i = (S_i ⊗ I_n) z with
/// z = (x0, x1) and y_i = (q, q̇, …, q^(γ)) at stage i.
struct Stage {
    double weight = 0.0;
    double c = 0.0;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 4> S;
};

/// Every supported scheme has two stages.
std::array<Stage, 2> scheme_stages(Scheme scheme, double h, double param);

/// Order γ of the Lagrangians a scheme discretizes.
int scheme_gamma(Scheme scheme);

/// L_{d,k}(x0, x1) = h_k Σ_i w_i L(t_k + c_i h_k, (S_i ⊗ I) z).
class QuadratureModel final : public DiscreteLagrangianModel {
public:
    QuadratureModel(std::shared_ptr<const ContinuousLagrangian> L, Scheme scheme, StepGrid grid,
                    double param = 0.0);

    int gamma() const override { return gamma_; }
    int dim() const override { return dim_; }
    double eval(int k, const Vector& x0, const Vector& x1) const override;
    void derivatives(int k, const Vector& x0, const Vector& x1, Vector* grad,
                     Matrix* hess) const override;
    bool derivatives_analytic() const override { return L_->analytic(); }

    Scheme scheme() const { return scheme_; }
    const StepGrid& grid() const { return grid_; }
    const ContinuousLagrangian& lagrangian() const { return *L_; }

    /// Stage arguments y_i for interval k (exposed for tests).
    std::vector<Vector> stage_arguments(int k, const Vector& x0, const Vector& x1) const;

private:
    std::shared_ptr<const ContinuousLagrangian> L_;
    Scheme scheme_;
    StepGrid grid_;
    double param_;
    int gamma_;
    int dim_;
};

std::unique_ptr<QuadratureModel> trapezoidal_first_order(
    std::shared_ptr<const ContinuousLagrangian> L, StepGrid grid);
std::unique_ptr<QuadratureModel> alpha_trapezoidal_second_order(
    std::shared_ptr<const ContinuousLagrangian> L, StepGrid grid, double alpha);
std::unique_ptr<QuadratureModel> lobatto2_second_order(
    std::shared_ptr<const ContinuousLagrangian> L, StepGrid grid);
std::unique_ptr<QuadratureModel> gauss2_second_order(
    std::shared_ptr<const ContinuousLagrangian> L, StepGrid grid,
    double alpha_gauss = std::sqrt(3.0));

std::unique_ptr<QuadratureModel> make_scheme_model(std::shared_ptr<const ContinuousLagrangian> L,
                                                   Scheme scheme, StepGrid grid,
                                                   double param = 0.0);

/// Initial-value data and dynamics for the exact discrete Lagrangian oracle.
/// The state is (q, q̇, …, q^(2γ-1)), the Euler–Lagrange equation written as a
/// first-order system.
struct OrderProbe {
    std::function<void(const std::vector<double>& x, std::vector<double>& dxdt, double t)> rhs;
    std::vector<double> initial_state;
    double t0 = 0.0;
    double h0 = 0.2;
    int levels = 4;
    double integration_tol = 1e-12;
};

struct OrderEstimate {
    std::vector<double> steps;
    std::vector<double> errors;
    double slope = 0.0;
    /// slope - 1.
    double order = 0.0;
};

/// Factory for the discrete model at a given uniform step.
using ModelAtStep = std::function<std::unique_ptr<DiscreteLagrangianModel>(double h)>;

/// Action of L along the exact solution from probe.initial_state over
/// [t0, t0 + h], by 10-point Gauss–Legendre quadrature. Also returns the end
/// state.
double exact_discrete_lagrangian(const ContinuousLagrangian& L, const OrderProbe& probe, double h,
                                 std::vector<double>* end_state = nullptr);

/// Empirical order: least-squares slope of log|L_d - L_d^e| against log h over
/// h0, h0/2, …; order = slope - 1.
OrderEstimate estimate_order(const ModelAtStep& model, const ContinuousLagrangian& L,
                             const OrderProbe& probe);

}  // namespace varint
