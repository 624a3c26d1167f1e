#pragma once

// Small numerical kernels shared by the geometry, cusp and statistics code:
// compensated summation, a safeguarded Newton solver, boolean bisection,
// Gauss-Legendre quadrature and ordinary least squares.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace cuspbill {

/// Neumaier variant of Kahan summation.
class CompensatedSum {
public:
    void add(double v) noexcept {
        const double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    CompensatedSum& operator+=(double v) noexcept {
        add(v);
        return *this;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct RootOptions {
    double rel_tol = 1e-13;
    double abs_tol = 1e-300;
    int max_iter = 100;
};

/// Newton's method kept inside a sign-change bracket [lo, hi]; a bisection
/// step replaces any Newton step that leaves the bracket or stalls.
/// `fdf(x)` returns {f(x), f'(x)}.
template <class FdF>
[[nodiscard]] double safeguarded_newton(FdF&& fdf, double lo, double hi, RootOptions opt = {}) {
    auto [flo, dlo] = fdf(lo);
    auto [fhi, dhi] = fdf(hi);
    (void)dlo;
    (void)dhi;
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0)) {
        throw BracketFailure("safeguarded_newton: no sign change on [" + std::to_string(lo) + ", " +
                             std::to_string(hi) + "]");
    }
    // orient so that f(lo) < 0
    if (flo > 0.0) std::swap(lo, hi);

    double x = 0.5 * (lo + hi);
    double dx_old = std::fabs(hi - lo);
    double dx = dx_old;
    auto [fx, dfx] = fdf(x);
    for (int it = 0; it < opt.max_iter; ++it) {
        const bool newton_out = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
        const bool slow = std::fabs(2.0 * fx) > std::fabs(dx_old * dfx);
        dx_old = dx;
        if (newton_out || slow || dfx == 0.0) {
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx = fx / dfx;
            x -= dx;
        }
        if (std::fabs(dx) <= opt.rel_tol * std::fabs(x) + opt.abs_tol) return x;
        std::tie(fx, dfx) = fdf(x);
        if (fx == 0.0) return x;
        if (fx < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        if (std::fabs(hi - lo) <= opt.rel_tol * std::fabs(x) + opt.abs_tol) return x;
    }
    return x;
}

/// Locates the switch point of a predicate with pred(a) != pred(b) to
/// absolute tolerance `tol`. Returns the midpoint of the final bracket.
template <class Pred>
[[nodiscard]] double bisect_predicate(Pred&& pred, double a, double b, double tol, int max_iter = 200) {
    const bool pa = pred(a);
    if (pa == static_cast<bool>(pred(b))) {
        throw BracketFailure("bisect_predicate: predicate has equal values at both ends");
    }
    for (int it = 0; it < max_iter && std::fabs(b - a) > tol; ++it) {
        const double m = 0.5 * (a + b);
        if (m == a || m == b) break;
        if (static_cast<bool>(pred(m)) == pa) {
            a = m;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

namespace detail {

template <std::size_t N>
struct GaussLegendreRule {
    std::array<double, N> nodes{};
    std::array<double, N> weights{};

    GaussLegendreRule() {
        // Newton iteration on P_N from Chebyshev-like initial guesses.
        for (std::size_t i = 0; i < N; ++i) {
            double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                                (static_cast<double>(N) + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = x;
                for (std::size_t k = 2; k <= N; ++k) {
                    const double kk = static_cast<double>(k);
                    const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                    p0 = p1;
                    p1 = p2;
                }
                dp = static_cast<double>(N) * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::fabs(dx) < 1e-17) break;
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
    }
};

template <std::size_t N>
const GaussLegendreRule<N>& gauss_legendre_rule() {
    static const GaussLegendreRule<N> rule;
    return rule;
}

template <std::size_t N, class F>
double gauss_legendre(F&& f, double a, double b) {
    const auto& rule = gauss_legendre_rule<N>();
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    CompensatedSum s;
    for (std::size_t i = 0; i < N; ++i) s += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * s.value();
}

template <class F>
double adaptive_gl_impl(F& f, double a, double b, double tol, int depth) {
    const double fine = gauss_legendre<20>(f, a, b);
    const double coarse = gauss_legendre<10>(f, a, b);
    if (std::fabs(fine - coarse) <= tol || depth <= 0) return fine;
    const double m = 0.5 * (a + b);
    return adaptive_gl_impl(f, a, m, 0.5 * tol, depth - 1) + adaptive_gl_impl(f, m, b, 0.5 * tol, depth - 1);
}

} // namespace detail

/// Adaptive Gauss-Legendre quadrature: a panel is accepted when its 20- and
/// 10-point estimates agree to `tol`, otherwise it is halved.
template <class F>
[[nodiscard]] double integrate(F&& f, double a, double b, double tol = 1e-12, int max_depth = 40) {
    if (a == b) return 0.0;
    return detail::adaptive_gl_impl(f, a, b, tol, max_depth);
}

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double intercept_stderr = 0.0;
    double residual_rms = 0.0;
    std::size_t n = 0;
};

/// Ordinary least squares y = intercept + slope * x.
[[nodiscard]] inline LinearFit fit_line(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DomainError("fit_line: size mismatch");
    const std::size_t n = xs.size();
    if (n < 2) throw InsufficientData("fit_line: need at least two points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx <= 0.0) throw InsufficientData("fit_line: abscissae are all equal");
    LinearFit fit;
    fit.n = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - fit.intercept - fit.slope * xs[i];
        ssr += r * r;
    }
    fit.residual_rms = std::sqrt(ssr / static_cast<double>(n));
    if (n > 2) {
        const double s2 = ssr / static_cast<double>(n - 2);
        fit.slope_stderr = std::sqrt(s2 / sxx);
        fit.intercept_stderr = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    }
    return fit;
}

} // namespace cuspbill
