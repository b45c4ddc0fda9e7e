#pragma once

#include <array>
#include <cmath>

namespace varint {

/// Second-order forward-mode dual number over N independent variables.
/// Carries the value, gradient and packed upper-triangular Hessian.
template <int N>
struct Jet2 {
    static constexpr int kPacked = N * (N + 1) / 2;

    double v = 0.0;
    std::array<double, N> g{};
    std::array<double, kPacked> h{};

    Jet2() = default;
    Jet2(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

    static Jet2 variable(double value, int i) {
        Jet2 out(value);
        out.g[static_cast<std::size_t>(i)] = 1.0;
        return out;
    }

    /// Packed index of (i, j) with i <= j.
    static constexpr int idx(int i, int j) { return i * N - i * (i - 1) / 2 + (j - i); }

    double hess(int i, int j) const {
        return i <= j ? h[static_cast<std::size_t>(idx(i, j))]
                      : h[static_cast<std::size_t>(idx(j, i))];
    }

    Jet2& operator+=(const Jet2& o) {
        v += o.v;
        for (int i = 0; i < N; ++i) g[i] += o.g[i];
        for (int i = 0; i < kPacked; ++i) h[i] += o.h[i];
        return *this;
    }
    Jet2& operator-=(const Jet2& o) {
        v -= o.v;
        for (int i = 0; i < N; ++i) g[i] -= o.g[i];
        for (int i = 0; i < kPacked; ++i) h[i] -= o.h[i];
        return *this;
    }
    Jet2& operator*=(double s) {
        v *= s;
        for (auto& x : g) x *= s;
        for (auto& x : h) x *= s;
        return *this;
    }
    Jet2& operator*=(const Jet2& o) { return *this = *this * o; }
    Jet2& operator/=(const Jet2& o) { return *this = *this / o; }
    Jet2& operator/=(double s) { return *this *= (1.0 / s); }

    Jet2 operator-() const {
        Jet2 out = *this;
        out *= -1.0;
        return out;
    }

    friend Jet2 operator+(Jet2 a, const Jet2& b) { return a += b; }
    friend Jet2 operator-(Jet2 a, const Jet2& b) { return a -= b; }
    friend Jet2 operator+(Jet2 a, double b) { a.v += b; return a; }
    friend Jet2 operator+(double a, Jet2 b) { b.v += a; return b; }
    friend Jet2 operator-(Jet2 a, double b) { a.v -= b; return a; }
    friend Jet2 operator-(double a, const Jet2& b) { return -b + a; }
    friend Jet2 operator*(Jet2 a, double s) { return a *= s; }
    friend Jet2 operator*(double s, Jet2 a) { return a *= s; }
    friend Jet2 operator/(Jet2 a, double s) { return a *= (1.0 / s); }

    friend Jet2 operator*(const Jet2& a, const Jet2& b) {
        Jet2 out;
        out.v = a.v * b.v;
        for (int i = 0; i < N; ++i) out.g[i] = a.v * b.g[i] + b.v * a.g[i];
        for (int i = 0; i < N; ++i) {
            for (int j = i; j < N; ++j) {
                const int p = idx(i, j);
                out.h[p] = a.v * b.h[p] + b.v * a.h[p] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
            }
        }
        return out;
    }

    friend Jet2 operator/(const Jet2& a, const Jet2& b) {
        const double r = 1.0 / b.v;
        return a * chain(b, r, -r * r, 2.0 * r * r * r);
    }
    friend Jet2 operator/(double a, const Jet2& b) {
        return chain(b, a / b.v, -a / (b.v * b.v), 2.0 * a / (b.v * b.v * b.v));
    }

    /// f(a) given f, f' and f'' evaluated at a.v.
    friend Jet2 chain(const Jet2& a, double f0, double f1, double f2) {
        Jet2 out;
        out.v = f0;
        for (int i = 0; i < N; ++i) out.g[i] = f1 * a.g[i];
        for (int i = 0; i < N; ++i) {
            for (int j = i; j < N; ++j) {
                const int p = idx(i, j);
                out.h[p] = f1 * a.h[p] + f2 * a.g[i] * a.g[j];
            }
        }
        return out;
    }

    friend Jet2 sin(const Jet2& a) {
        const double s = std::sin(a.v), c = std::cos(a.v);
        return chain(a, s, c, -s);
    }
    friend Jet2 cos(const Jet2& a) {
        const double s = std::sin(a.v), c = std::cos(a.v);
        return chain(a, c, -s, -c);
    }
    friend Jet2 exp(const Jet2& a) {
        const double e = std::exp(a.v);
        return chain(a, e, e, e);
    }
    friend Jet2 sqrt(const Jet2& a) {
        const double r = std::sqrt(a.v);
        return chain(a, r, 0.5 / r, -0.25 / (r * a.v));
    }
    friend Jet2 pow(const Jet2& a, double p) {
        const double f = std::pow(a.v, p);
        return chain(a, f, p * f / a.v, p * (p - 1.0) * f / (a.v * a.v));
    }
    friend Jet2 square(const Jet2& a) { return a * a; }
};

inline double square(double x) { return x * x; }

inline double value_of(double x) { return x; }

template <int N>
double value_of(const Jet2<N>& x) {
    return x.v;
}

}  // namespace varint
