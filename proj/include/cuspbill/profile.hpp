#pragma once

// Boundary geometry of the cusp table
//     D = { (x, y) : x >= 0, 0 <= y <= f(x) }
// with f convex, decreasing and bounded. The canonical profile is
// f(x) = 1/(x+1); the power family f(x) = c (x+b)^(-p) is provided for tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"

namespace cuspbill {

enum class ProfileKind { Reciprocal, PowerLaw };

/// Value and first three derivatives of the profile at x.
struct ProfileJet {
    double x = 0.0;
    double f = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double f3 = 0.0;
};

class Profile {
public:
    /// f(x) = 1/(x+1). The default theta = 2 is the equality case of
    /// |f'| >> f^theta.
    [[nodiscard]] static Profile reciprocal(double theta = 2.0) {
        return Profile(ProfileKind::Reciprocal, 1.0, 1.0, 1.0, theta);
    }

    /// f(x) = scale * (x + shift)^(-exponent). theta defaults to
    /// (exponent+1)/exponent, for which |f'|/f^theta is constant.
    [[nodiscard]] static Profile power_law(double scale, double shift, double exponent,
                                           double theta = std::numeric_limits<double>::quiet_NaN()) {
        if (!(scale > 0.0) || !(shift > 0.0) || !(exponent > 0.0)) {
            throw DomainError("power_law profile needs scale, shift, exponent > 0");
        }
        if (std::isnan(theta)) theta = (exponent + 1.0) / exponent;
        return Profile(ProfileKind::PowerLaw, scale, shift, exponent, theta);
    }

    [[nodiscard]] ProfileKind kind() const noexcept { return kind_; }
    [[nodiscard]] double theta() const noexcept { return theta_; }
    [[nodiscard]] double domain_min() const noexcept { return 0.0; }
    [[nodiscard]] double scale() const noexcept { return scale_; }
    [[nodiscard]] double shift() const noexcept { return shift_; }
    [[nodiscard]] double exponent() const noexcept { return exponent_; }
    [[nodiscard]] std::string name() const { return kind_ == ProfileKind::Reciprocal ? "reciprocal" : "power"; }

    /// True when y = f(x) along a straight line reduces to a quadratic.
    [[nodiscard]] bool has_quadratic_chords() const noexcept { return exponent_ == 1.0; }

    // Unchecked evaluation; the domain-checked entry point is eval_profile().
    [[nodiscard]] double value(double x) const noexcept {
        const double t = x + shift_;
        return exponent_ == 1.0 ? scale_ / t : scale_ * std::pow(t, -exponent_);
    }
    [[nodiscard]] double slope(double x) const noexcept {
        const double t = x + shift_;
        return exponent_ == 1.0 ? -scale_ / (t * t) : -exponent_ * scale_ * std::pow(t, -exponent_ - 1.0);
    }
    [[nodiscard]] double second(double x) const noexcept {
        const double t = x + shift_;
        return exponent_ == 1.0 ? 2.0 * scale_ / (t * t * t)
                                : exponent_ * (exponent_ + 1.0) * scale_ * std::pow(t, -exponent_ - 2.0);
    }
    [[nodiscard]] ProfileJet jet(double x) const noexcept {
        const double t = x + shift_;
        const double p = exponent_;
        ProfileJet j;
        j.x = x;
        if (p == 1.0) {
            const double it = 1.0 / t;
            j.f = scale_ * it;
            j.f1 = -j.f * it;
            j.f2 = -2.0 * j.f1 * it;
            j.f3 = -3.0 * j.f2 * it;
        } else {
            j.f = scale_ * std::pow(t, -p);
            j.f1 = -p * j.f / t;
            j.f2 = -(p + 1.0) * j.f1 / t;
            j.f3 = -(p + 2.0) * j.f2 / t;
        }
        return j;
    }

    friend bool operator==(const Profile&, const Profile&) = default;

private:
    Profile(ProfileKind kind, double scale, double shift, double exponent, double theta)
        : kind_(kind), scale_(scale), shift_(shift), exponent_(exponent), theta_(theta) {
        if (!(theta > 0.0)) throw DomainError("profile theta must be positive");
    }

    ProfileKind kind_;
    double scale_;
    double shift_;
    double exponent_;
    double theta_;
};

namespace detail {
inline void require_table_x(double x, const char* who) {
    if (!std::isfinite(x) || x < 0.0) {
        throw DomainError(std::string(who) + ": x must be finite and >= 0, got " + std::to_string(x));
    }
}
} // namespace detail

[[nodiscard]] inline ProfileJet eval_profile(const Profile& profile, double x) {
    detail::require_table_x(x, "eval_profile");
    return profile.jet(x);
}

/// Curvature f''/(1+f'^2)^{3/2} of the dispersing wall.
[[nodiscard]] inline double curvature(const Profile& profile, double x) {
    detail::require_table_x(x, "curvature");
    const double f1 = profile.slope(x);
    const double q = 1.0 + f1 * f1;
    return profile.second(x) / (q * std::sqrt(q));
}

/// Arc-length coordinate along the dispersing wall,
///     r(x) = -int_0^x sqrt(1 + f'(u)^2) du,
/// with r = 0 at the vertex V = (0, f(0)) and r < 0 inside the cusp.
///
/// The integral is split as x + int_0^x g with g = sqrt(1+f'^2) - 1 written
/// without cancellation. Integrals of g over dyadic panels [2^(k-1), 2^k]
/// are tabulated once at construction, so an evaluation costs a single
/// partial-panel quadrature. Instances are immutable and thread-safe.
class ArcLength {
public:
    explicit ArcLength(Profile profile, double tol = 1e-12) : profile_(profile), tol_(tol) {
        edges_[0] = 0.0;
        prefix_[0] = 0.0;
        for (std::size_t k = 1; k < kPanels; ++k) {
            edges_[k] = std::ldexp(1.0, static_cast<int>(k) - 1);
            prefix_[k] = prefix_[k - 1] + integrate_excess(edges_[k - 1], edges_[k]);
        }
    }

    [[nodiscard]] const Profile& profile() const noexcept { return profile_; }

    /// r(x) <= 0.
    [[nodiscard]] double forward(double x) const {
        detail::require_table_x(x, "arc_length");
        return -(x + excess(x));
    }

    /// The x >= 0 with forward(x) == r.
    [[nodiscard]] double inverse(double r) const {
        if (!std::isfinite(r) || r > 0.0) {
            throw DomainError("arc_length inverse: r must be finite and <= 0, got " + std::to_string(r));
        }
        if (r == 0.0) return 0.0;
        const double length = -r;
        const double total_excess = prefix_[kPanels - 1];
        double lo = std::max(0.0, length - total_excess);
        double hi = length;
        auto fdf = [&](double x) {
            const double f1 = profile_.slope(x);
            return std::pair{x + excess(x) - length, std::sqrt(1.0 + f1 * f1)};
        };
        return safeguarded_newton(fdf, lo, hi, RootOptions{1e-15, 1e-300, 200});
    }

    /// Derivative dr/dx = -sqrt(1 + f'^2).
    [[nodiscard]] double derivative(double x) const {
        const double f1 = profile_.slope(x);
        return -std::sqrt(1.0 + f1 * f1);
    }

private:
    static constexpr std::size_t kPanels = 64;

    [[nodiscard]] double g(double u) const {
        const double f1 = profile_.slope(u);
        const double s = f1 * f1;
        return s / (std::sqrt(1.0 + s) + 1.0);
    }

    [[nodiscard]] double integrate_excess(double a, double b) const {
        auto fn = [this](double u) { return g(u); };
        return integrate(fn, a, b, tol_);
    }

    [[nodiscard]] double excess(double x) const {
        if (x == 0.0) return 0.0;
        std::size_t k = 1;
        while (k + 1 < kPanels && edges_[k] <= x) ++k;
        // x in [edges_[k-1], edges_[k])
        if (x >= edges_[kPanels - 1]) return prefix_[kPanels - 1];
        return prefix_[k - 1] + integrate_excess(edges_[k - 1], x);
    }

    Profile profile_;
    double tol_;
    std::array<double, kPanels> edges_{};
    std::array<double, kPanels> prefix_{};
};

/// Convenience wrapper: r(x) when `inverse` is false, x(r) otherwise.
[[nodiscard]] inline double arc_length(const Profile& profile, double value, bool inverse = false) {
    const ArcLength arc(profile);
    return inverse ? arc.inverse(value) : arc.forward(value);
}

/// Abscissa x_t < x of the point on U where the line through the mirrored
/// boundary point (x, -f(x)) touches U:
///     (f(x) + f(x_t)) / (x - x_t) = -f'(x_t).
/// For the canonical profile x_t = (x+1)(sqrt 2 - 1) - 1.
[[nodiscard]] inline double tangent_point(const Profile& profile, double x) {
    if (!std::isfinite(x) || !(x > 0.0)) throw DomainError("tangent_point: x must be finite and > 0");
    const double fx = profile.value(x);
    // h is increasing on u < x, h(x) = 2 f(x) > 0
    auto fdf = [&](double u) {
        return std::pair{fx + profile.value(u) + profile.slope(u) * (x - u), profile.second(u) * (x - u)};
    };
    if (fdf(0.0).first > 0.0) {
        double root = std::numeric_limits<double>::quiet_NaN();
        const double lo = -profile.shift() * (1.0 - 1e-9);
        if (fdf(lo).first < 0.0) root = safeguarded_newton(fdf, lo, 0.0);
        throw NoTangentInDomain(root);
    }
    return safeguarded_newton(fdf, 0.0, x, RootOptions{1e-13, 1e-300, 100});
}

/// Abscissa of the point of U touched by the line leaving the vertical wall
/// at height y, 0 < y < f(0).
[[nodiscard]] inline double tangent_from_wall(const Profile& profile, double y) {
    if (!(y > 0.0) || !(y < profile.value(0.0))) {
        throw DomainError("tangent_from_wall: height must lie in (0, f(0))");
    }
    // k(u) = f(u) - u f'(u) - y, decreasing from f(0) - y > 0
    auto fdf = [&](double u) {
        return std::pair{profile.value(u) - u * profile.slope(u) - y, -u * profile.second(u)};
    };
    double hi = 1.0;
    while (fdf(hi).first > 0.0) {
        hi *= 2.0;
        if (hi > 1e300) throw BracketFailure("tangent_from_wall: no tangent found");
    }
    return safeguarded_newton(fdf, 0.0, hi, RootOptions{1e-15, 1e-300, 200});
}

enum class Hypothesis { H1 = 0, H2, H3, H4, H5 };
inline constexpr std::array<const char*, 5> kHypothesisNames{"H1", "H2", "H3", "H4", "H5"};

/// Witness series for the five growth hypotheses on a grid of abscissae.
///   H1: f''(x)                  (tends to 0)
///   H2: |f'(x_t)| / |f'(x)|     (bounded above)
///   H3: f f'' / f'^2            (bounded below)
///   H4: |f'''| / f''            (bounded above)
///   H5: |f'| / f^theta          (bounded below)
/// `constant` holds the empirical sup (H1, H2, H4) or inf (H3, H5) over the
/// grid points at or beyond `threshold`. H2 entries are NaN where the
/// tangent point leaves the table.
struct HypothesisReport {
    std::vector<double> grid;
    std::array<std::vector<double>, 5> witness;
    std::array<bool, 5> pass{};
    std::array<double, 5> constant{};
    double threshold = 10.0;
    double theta = 2.0;

    [[nodiscard]] bool all_pass() const noexcept {
        return std::all_of(pass.begin(), pass.end(), [](bool b) { return b; });
    }
};

/// Geometric grid of `count` points from lo to hi.
[[nodiscard]] inline std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 2) throw DomainError("geometric_grid: need 0 < lo < hi, count >= 2");
    std::vector<double> g(count);
    const double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) g[i] = lo * std::exp(ratio * static_cast<double>(i));
    g.back() = hi;
    return g;
}

[[nodiscard]] inline HypothesisReport check_hypotheses(const Profile& profile, std::span<const double> grid,
                                                       double threshold = 10.0) {
    if (grid.size() < 8) throw DomainError("check_hypotheses: grid needs at least 8 points");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] > grid[i - 1])) throw DomainError("check_hypotheses: grid must be strictly increasing");
    }
    HypothesisReport rep;
    rep.grid.assign(grid.begin(), grid.end());
    rep.threshold = threshold;
    rep.theta = profile.theta();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (auto& w : rep.witness) w.reserve(grid.size());
    for (double x : grid) {
        const ProfileJet j = eval_profile(profile, x);
        double h2 = nan;
        if (x > 0.0) {
            try {
                const double xt = tangent_point(profile, x);
                h2 = std::fabs(profile.slope(xt)) / std::fabs(j.f1);
            } catch (const NoTangentInDomain&) {
            }
        }
        rep.witness[0].push_back(j.f2);
        rep.witness[1].push_back(h2);
        rep.witness[2].push_back(j.f * j.f2 / (j.f1 * j.f1));
        rep.witness[3].push_back(std::fabs(j.f3) / j.f2);
        rep.witness[4].push_back(std::fabs(j.f1) / std::pow(j.f, profile.theta()));
    }

    std::vector<std::size_t> tail;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid[i] >= threshold) tail.push_back(i);
    }
    if (tail.size() < 4) throw DomainError("check_hypotheses: fewer than 4 grid points beyond the threshold");
    const std::size_t half = tail.size() / 2;

    // "<<": the sup over the far half must not exceed the sup over the near half
    // ">>": the inf over the far half must not drop below the inf over the near half
    auto bounded_above = [&](const std::vector<double>& w, double& constant) {
        double near = -std::numeric_limits<double>::infinity();
        double far = near;
        for (std::size_t k = 0; k < tail.size(); ++k) {
            const double v = w[tail[k]];
            if (!std::isfinite(v)) return false;
            (k < half ? near : far) = std::max(k < half ? near : far, v);
        }
        constant = std::max(near, far);
        return far <= near * (1.0 + 1e-9) + 1e-300;
    };
    auto bounded_below = [&](const std::vector<double>& w, double& constant) {
        double near = std::numeric_limits<double>::infinity();
        double far = near;
        for (std::size_t k = 0; k < tail.size(); ++k) {
            const double v = w[tail[k]];
            if (!std::isfinite(v)) return false;
            (k < half ? near : far) = std::min(k < half ? near : far, v);
        }
        constant = std::min(near, far);
        return constant > 0.0 && far >= near * (1.0 - 1e-9);
    };

    // H1: positive and strictly decreasing beyond the threshold
    {
        const auto& w = rep.witness[0];
        bool ok = true;
        double sup = 0.0;
        for (std::size_t k = 0; k < tail.size(); ++k) {
            const double v = w[tail[k]];
            sup = std::max(sup, v);
            if (!(v > 0.0)) ok = false;
            if (k > 0 && !(v < w[tail[k - 1]])) ok = false;
        }
        rep.pass[0] = ok;
        rep.constant[0] = sup;
    }
    rep.pass[1] = bounded_above(rep.witness[1], rep.constant[1]);
    rep.pass[2] = bounded_below(rep.witness[2], rep.constant[2]);
    rep.pass[3] = bounded_above(rep.witness[3], rep.constant[3]);
    rep.pass[4] = bounded_below(rep.witness[4], rep.constant[4]);
    return rep;
}

} // namespace cuspbill
