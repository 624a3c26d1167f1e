#pragma once

// Cusp excursions of the canonical table f(x) = 1/(x+1) in the unfolded
// strip D2 = { x >= 0, |y| <= f(x) }, where reflections on H are replaced by
// straight continuation. Each collision is moved to the upper curve by
// symmetry, and the state is (t, psi): t = x + 1 and psi the angle of the
// outgoing direction below the horizontal, psi in (0, pi + alpha) with
// alpha = atan(1/t^2) the slope angle of the curve. The angle between the
// trajectory and the tangent is
//     gamma = psi - alpha          if psi - alpha <= pi/2   (entering)
//     gamma = pi - (psi - alpha)   otherwise                (exiting).
// A flight from (t, 1/t) to the opposite curve at t' = t + d satisfies
//     d^2 + (t - c/t) d - 2c = 0,   c = cot(psi),
// and the reflection there gives psi' = psi + 2 atan(1/t'^2).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "profile.hpp"
#include "rng.hpp"

namespace cuspbill {

enum class CuspPhase { Entering, Exiting };

struct CuspStep {
    double t = 0.0;
    double gamma = 0.0;
    double psi = 0.0; // outgoing angle after the new collision
    double tau = 0.0; // flight time of the step
};

namespace detail {

inline double slope_angle(double t) noexcept { return std::atan(1.0 / (t * t)); }

inline double gamma_of(double t, double psi) noexcept {
    const double rel = psi - slope_angle(t);
    return rel <= std::numbers::pi / 2 ? rel : std::numbers::pi - rel;
}

// Abscissa t' of the next curve collision from (t, psi), or nullopt when
// the trajectory reaches the wall x = 0 first.
inline std::optional<double> cusp_flight(double t, double psi) noexcept {
    if (psi >= std::numbers::pi) return std::nullopt;
    const double c = std::cos(psi) / std::sin(psi);
    const double b = t - c / t;
    const double disc = b * b + 8.0 * c;
    if (disc < 0.0) return std::nullopt;
    const double root = std::sqrt(disc);
    double d = 0.0;
    if (c >= 0.0) {
        d = b >= 0.0 ? 4.0 * c / (b + root) : 0.5 * (root - b);
    } else {
        d = 4.0 * c / (b + root);
    }
    const double tn = t + d;
    if (!(tn >= 1.0)) return std::nullopt;
    return tn;
}

} // namespace detail

/// One collision-to-collision step of the cusp recursion.
/// Entering: psi = gamma + alpha, t' > t solves
///     t' = t + (1/t + 1/t') / tan(gamma + alpha)
/// and gamma' = gamma + alpha + alpha'. Raises TurnReached if
/// gamma + alpha >= pi/2.
/// Exiting: psi = pi - gamma + alpha, t' < t and gamma' = gamma - alpha - alpha'
/// (the entering relations read backwards). Raises NoCollision when the
/// trajectory leaves the cusp through x = 0.
[[nodiscard]] inline CuspStep advance_cusp(double t, double gamma, CuspPhase phase) {
    if (!(t > 1.0) || !std::isfinite(t)) throw DomainError("advance_cusp: t must be finite and > 1");
    if (!(gamma > 0.0) || !(gamma < std::numbers::pi / 2)) throw DomainError("advance_cusp: gamma must lie in (0, pi/2)");
    const double alpha = detail::slope_angle(t);
    double psi = 0.0;
    if (phase == CuspPhase::Entering) {
        psi = gamma + alpha;
        if (psi >= std::numbers::pi / 2) throw TurnReached("advance_cusp: no forward solution, the trajectory turns");
    } else {
        psi = std::numbers::pi - gamma + alpha;
    }
    const auto tn = detail::cusp_flight(t, psi);
    if (!tn) throw NoCollision("advance_cusp: the trajectory leaves the cusp");
    CuspStep s;
    s.t = *tn;
    const double alpha_n = detail::slope_angle(s.t);
    s.psi = psi + 2.0 * alpha_n;
    s.gamma = phase == CuspPhase::Entering ? gamma + alpha + alpha_n : gamma - alpha - alpha_n;
    s.tau = (1.0 / t + 1.0 / s.t) / std::sin(psi);
    return s;
}

/// One cusp passage. Series are indexed by collision n = 1..N (element
/// n-1). tau[n-1] is the flight from collision n to n+1; tau[N-1] is the
/// flight from the last collision back to x = 0.
struct Excursion {
    std::vector<double> x;
    std::vector<double> t;
    std::vector<double> gamma;
    std::vector<double> psi;
    std::vector<double> tau;
    long N = 0;
    long N1 = 0; // 0 while the marks are undefined
    long N2 = 0;
    long N3 = 0;
    double gamma0 = std::numeric_limits<double>::quiet_NaN(); // pi/2 - |phi| at the wall
    double y0 = std::numeric_limits<double>::quiet_NaN();     // wall height in D2 of the entry
    double tau0 = std::numeric_limits<double>::quiet_NaN();   // flight from the wall to x_1
    double y_exit = std::numeric_limits<double>::quiet_NaN(); // wall height in D2 of the exit
    bool censored = false;
    bool precision_loss = false;

    [[nodiscard]] bool has_marks() const noexcept { return N1 > 0 && N3 > 0; }
    [[nodiscard]] bool from_wall() const noexcept { return std::isfinite(tau0); }
};

struct CuspSeed {
    double x1 = 0.0;
    double gamma1 = 0.0;
    double y0 = 0.0;   // wall height in D2, |y0| < 1
    double beta = 0.0; // direction above the horizontal when leaving the wall
    double tau0 = 0.0;
    bool mirrored = false; // the first hit was on the lower curve
};

namespace detail {

// First s > 0 at which (0, y0) + s (cos b, sin b) meets the curve y = 1/(x+1).
inline double first_upper_hit(double y0, double beta) noexcept {
    const double dx = std::cos(beta);
    const double dy = std::sin(beta);
    const double a = dx * dy;
    const double b = y0 * dx + dy;
    const double c = y0 - 1.0;
    const double inf = std::numeric_limits<double>::infinity();
    double s = inf;
    if (a == 0.0) {
        if (b > 0.0) s = -c / b;
    } else {
        const double disc = b * b - 4.0 * a * c;
        if (disc < 0.0) return inf;
        const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
        double r1 = q / a;
        double r2 = q != 0.0 ? c / q : r1;
        if (r1 > r2) std::swap(r1, r2);
        s = a > 0.0 ? r2 : r1;
        if (!(2.0 * a * s + b >= 0.0)) return inf;
    }
    // the product form also describes the branch with x < -1
    if (!(s > 0.0) || 1.0 + s * dx <= 0.0) return inf;
    return s;
}

} // namespace detail

/// First collision of the line leaving the wall x = 0 of D2 at height y0
/// with direction beta above the horizontal (|beta| < pi/2). In the table
/// this is the point of M4 with r = 1 - |y0| and phi = -beta (sign flipped
/// when y0 < 0).
[[nodiscard]] inline CuspSeed seed_from_wall(double y0, double beta) {
    if (!(std::fabs(y0) < 1.0) || !(std::fabs(beta) < std::numbers::pi / 2)) {
        throw DomainError("seed_from_wall: need |y0| < 1 and |beta| < pi/2");
    }
    const double s_up = detail::first_upper_hit(y0, beta);
    const double s_low = detail::first_upper_hit(-y0, -beta);
    CuspSeed seed;
    double s = s_up;
    seed.y0 = y0;
    seed.beta = beta;
    if (s_low < s_up) {
        s = s_low;
        seed.y0 = -y0;
        seed.beta = -beta;
        seed.mirrored = true;
    }
    if (!std::isfinite(s)) throw NoCollision("seed_from_wall: the line never meets the cusp");
    seed.x1 = s * std::cos(seed.beta);
    seed.tau0 = s;
    seed.gamma1 = seed.beta + detail::slope_angle(seed.x1 + 1.0);
    return seed;
}

/// Height at x = 0 of the line through the collision (x1, f(x1)) whose
/// reflected direction makes the angle gamma1 with the tangent, entering.
/// Returns nullopt if that line meets a curve of D2 before the wall.
[[nodiscard]] inline std::optional<CuspSeed> wall_of_seed(double gamma1, double x1) {
    const double t1 = x1 + 1.0;
    const double beta = gamma1 - detail::slope_angle(t1);
    if (!(std::fabs(beta) < std::numbers::pi / 2)) return std::nullopt;
    const double y0 = 1.0 / t1 - x1 * std::tan(beta);
    if (!(std::fabs(y0) < 1.0)) return std::nullopt;
    CuspSeed seed = seed_from_wall(y0, beta);
    if (seed.mirrored || std::fabs(seed.x1 - x1) > 1e-9 * t1) return std::nullopt;
    seed.x1 = x1;
    seed.gamma1 = gamma1;
    return seed;
}

struct ExcursionOptions {
    long cap = 10'000'000; // collisions
    double gamma_bar = 0.5;
};

namespace detail {

inline Excursion run_excursion(double t1, double psi1, long cap) {
    Excursion e;
    double t = t1;
    double psi = psi1;
    const auto push = [&](double tt, double ps) {
        e.t.push_back(tt);
        e.x.push_back(tt - 1.0);
        e.psi.push_back(ps);
        e.gamma.push_back(gamma_of(tt, ps));
    };
    push(t, psi);
    for (;;) {
        if (static_cast<long>(e.t.size()) >= cap) {
            e.censored = true;
            e.tau.push_back(std::numeric_limits<double>::quiet_NaN());
            break;
        }
        if (psi < std::numbers::pi / 2 && psi < 1e-14) e.precision_loss = true;
        const auto tn = cusp_flight(t, psi);
        if (!tn) {
            // straight to the wall
            const double cpsi = std::cos(psi);
            e.tau.push_back((t - 1.0) / std::fabs(cpsi));
            e.y_exit = 1.0 / t + (t - 1.0) * std::tan(psi);
            break;
        }
        e.tau.push_back((1.0 / t + 1.0 / *tn) / std::sin(psi));
        t = *tn;
        psi += 2.0 * slope_angle(t);
        push(t, psi);
    }
    e.N = static_cast<long>(e.t.size());
    e.N2 = static_cast<long>(std::max_element(e.x.begin(), e.x.end()) - e.x.begin()) + 1;
    return e;
}

} // namespace detail

/// N1 = max{n < N2 : gamma_n <= gamma_bar}, N3 = min{n > N2 : gamma_n <= gamma_bar},
/// N2 = argmax x_n. Returns {N1, N2, N3}; raises MarksUndefined.
struct SegmentMarks {
    long N1 = 0;
    long N2 = 0;
    long N3 = 0;
};

[[nodiscard]] inline SegmentMarks segment_marks(const Excursion& e, double gamma_bar) {
    if (e.censored) throw MarksUndefined("segment_marks: excursion is censored");
    if (!(gamma_bar > 0.0) || !(gamma_bar < std::numbers::pi / 2)) {
        throw DomainError("segment_marks: gamma_bar must lie in (0, pi/2)");
    }
    SegmentMarks m;
    m.N2 = static_cast<long>(std::max_element(e.x.begin(), e.x.end()) - e.x.begin()) + 1;
    for (long n = m.N2 - 1; n >= 1; --n) {
        if (e.gamma[static_cast<std::size_t>(n - 1)] <= gamma_bar) {
            m.N1 = n;
            break;
        }
    }
    for (long n = m.N2 + 1; n <= e.N; ++n) {
        if (e.gamma[static_cast<std::size_t>(n - 1)] <= gamma_bar) {
            m.N3 = n;
            break;
        }
    }
    if (m.N1 == 0 || m.N3 == 0) {
        throw MarksUndefined("segment_marks: gamma stays above gamma_bar = " + std::to_string(gamma_bar) +
                             " on one side of the turn");
    }
    return m;
}

inline void apply_marks(Excursion& e, double gamma_bar) {
    e.N2 = static_cast<long>(std::max_element(e.x.begin(), e.x.end()) - e.x.begin()) + 1;
    e.N1 = e.N3 = 0;
    if (e.censored) return;
    try {
        const SegmentMarks m = segment_marks(e, gamma_bar);
        e.N1 = m.N1;
        e.N3 = m.N3;
    } catch (const MarksUndefined&) {
    }
}

/// Iterates the recursion from the first collision (x1, gamma1), entering,
/// until the trajectory returns to the wall or `cap` collisions. The entry
/// leg is filled in when the seed is reachable from the wall.
[[nodiscard]] inline Excursion simulate_excursion(double gamma1, double x1, ExcursionOptions opt = {}) {
    if (!(gamma1 > 0.0) || !(gamma1 < std::numbers::pi / 2)) throw DomainError("simulate_excursion: gamma1 must lie in (0, pi/2)");
    if (!(x1 >= 0.0) || !std::isfinite(x1)) throw DomainError("simulate_excursion: x1 must be finite and >= 0");
    if (opt.cap < 1) throw DomainError("simulate_excursion: cap must be >= 1");
    const double t1 = x1 + 1.0;
    Excursion e = detail::run_excursion(t1, gamma1 + detail::slope_angle(t1), opt.cap);
    if (const auto seed = wall_of_seed(gamma1, x1)) {
        e.y0 = seed->y0;
        e.tau0 = seed->tau0;
        e.gamma0 = std::numbers::pi / 2 - std::fabs(seed->beta);
    }
    apply_marks(e, opt.gamma_bar);
    return e;
}

/// Excursion of the point of M4 (canonical table) with r = 1 - y and angle phi.
[[nodiscard]] inline Excursion excursion_from_wall(double y, double phi, ExcursionOptions opt = {}) {
    if (!(y > 0.0) || !(y < 1.0)) throw DomainError("excursion_from_wall: y must lie in (0, 1)");
    const CuspSeed seed = seed_from_wall(y, -phi);
    const double t1 = seed.x1 + 1.0;
    Excursion e = detail::run_excursion(t1, seed.gamma1 + detail::slope_angle(t1), opt.cap);
    e.y0 = seed.y0;
    e.tau0 = seed.tau0;
    e.gamma0 = std::numbers::pi / 2 - std::fabs(phi);
    apply_marks(e, opt.gamma_bar);
    return e;
}

/// The same passage run backwards: collisions in reverse order.
[[nodiscard]] inline Excursion reverse_excursion(const Excursion& e, double gamma_bar) {
    if (e.censored) throw DomainError("reverse_excursion: excursion is censored");
    Excursion r;
    r.x.assign(e.x.rbegin(), e.x.rend());
    r.t.assign(e.t.rbegin(), e.t.rend());
    r.gamma.assign(e.gamma.rbegin(), e.gamma.rend());
    r.psi.resize(e.psi.size());
    for (std::size_t i = 0; i < e.psi.size(); ++i) {
        // reversed outgoing direction is the mirror of the incoming one
        const std::size_t j = e.psi.size() - 1 - i;
        r.psi[i] = std::numbers::pi + 2.0 * detail::slope_angle(e.t[j]) - e.psi[j];
    }
    r.tau.resize(e.tau.size());
    for (std::size_t i = 0; i + 1 < e.tau.size(); ++i) r.tau[i] = e.tau[e.tau.size() - 2 - i];
    r.N = e.N;
    if (std::isfinite(e.y_exit)) {
        r.tau.back() = e.tau0;
        r.tau0 = e.tau.back();
        r.y0 = e.y_exit;
        r.y_exit = e.y0;
    }
    apply_marks(r, gamma_bar);
    return r;
}

struct EnsembleOptions {
    long N_lo = 100;
    long N_hi = 100'000;
    double band_lo = 0.5; // accepted band of gamma_1 N^(1/3)
    double band_hi = 2.0;
    double x_min = 0.0;
    double gamma_bar = 0.5;
    long max_attempts = 100'000; // per member
    unsigned threads = 1;
};

/// Excursions from wall points with N in [N_lo, N_hi], gamma_1 N^(1/3) in the
/// band and x_1 >= x_min, by rejection. Member i uses Philox stream (seed, i):
/// a target N* is drawn log-uniformly and the wall point from the measure
/// cos(phi) dr dphi on y < min(0.95, 1.5 N*^(-1/6)), |phi| < 2 N*^(-1/3).
[[nodiscard]] inline std::vector<Excursion> conditioned_ensemble(std::size_t count, std::uint64_t seed, EnsembleOptions opt = {}) {
    if (opt.N_lo < 1 || opt.N_hi <= opt.N_lo) throw DomainError("conditioned_ensemble: need 1 <= N_lo < N_hi");
    if (!(opt.band_lo > 0.0) || !(opt.band_hi > opt.band_lo)) throw DomainError("conditioned_ensemble: invalid band");
    const ExcursionOptions ex{2 * opt.N_hi + 2, opt.gamma_bar};
    return parallel_map<Excursion>(count, opt.threads, [&](std::size_t i) {
        PhiloxStream rng(seed, i);
        const double la = std::log(static_cast<double>(opt.N_lo));
        const double lb = std::log(static_cast<double>(opt.N_hi));
        for (long attempt = 0; attempt < opt.max_attempts; ++attempt) {
            const double target = std::exp(la + (lb - la) * rng.uniform());
            const double ymax = std::min(0.95, 1.5 * std::pow(target, -1.0 / 6.0));
            const double pmax = std::min(1.5, 2.0 * std::cbrt(1.0 / target));
            const double y = ymax * rng.uniform_pos();
            const double phi = std::asin(std::sin(pmax) * (2.0 * rng.uniform() - 1.0));
            if (phi == 0.0) continue;
            Excursion e = excursion_from_wall(y, phi, ex);
            if (e.censored || e.N < opt.N_lo || e.N > opt.N_hi || e.x[0] < opt.x_min) continue;
            const double band = e.gamma[0] * std::cbrt(static_cast<double>(e.N));
            if (band < opt.band_lo || band > opt.band_hi) continue;
            return e;
        }
        throw NumericalError("conditioned_ensemble: no accepted excursion after max_attempts draws");
    });
}

struct ExcursionDiagnostics {
    std::vector<double> omega;           // gamma_n t_n^2
    std::vector<double> u;               // t_n / t_{n+1}, length N-1
    std::vector<double> kappa;           // curvature at x_n
    std::vector<unsigned char> lower_ok; // 2n - 2 < omega_n, entering indices
    double upper_excess = 0.0;           // max over entering n of omega_n - 6n - 2 ln n
    double sum_inv_t2 = 0.0;             // sum over entering n of t_n^-2
    long entering_end = 0;               // last index of the entering period
    bool lower_all = true;
};

/// Entering period is 1..N1 when the marks exist, otherwise 1..N2-1.
[[nodiscard]] inline ExcursionDiagnostics excursion_diagnostics(const Excursion& e) {
    ExcursionDiagnostics d;
    const Profile canon = Profile::reciprocal();
    const std::size_t n_all = e.t.size();
    d.omega.resize(n_all);
    d.kappa.resize(n_all);
    for (std::size_t i = 0; i < n_all; ++i) {
        d.omega[i] = e.gamma[i] * e.t[i] * e.t[i];
        d.kappa[i] = curvature(canon, e.x[i]);
    }
    if (n_all > 1) {
        d.u.resize(n_all - 1);
        for (std::size_t i = 0; i + 1 < n_all; ++i) d.u[i] = e.t[i] / e.t[i + 1];
    }
    d.entering_end = e.N1 > 0 ? e.N1 : std::max(0L, e.N2 - 1);
    d.upper_excess = -std::numeric_limits<double>::infinity();
    CompensatedSum s;
    for (long n = 1; n <= d.entering_end; ++n) {
        const auto i = static_cast<std::size_t>(n - 1);
        const double nn = static_cast<double>(n);
        const bool ok = d.omega[i] > 2.0 * nn - 2.0;
        d.lower_ok.push_back(ok ? 1 : 0);
        d.lower_all = d.lower_all && ok;
        d.upper_excess = std::max(d.upper_excess, d.omega[i] - 6.0 * nn - 2.0 * std::log(nn));
        s += 1.0 / (e.t[i] * e.t[i]);
    }
    d.sum_inv_t2 = s.value();
    return d;
}

struct ExponentFit {
    std::string name;
    double slope = 0.0;
    double stderr_ = 0.0;
    double intercept = 0.0;
    double residual_rms = 0.0;
    double range_lo = 0.0; // range of the abscissa
    double range_hi = 0.0;
    std::size_t points = 0;
};

struct ExponentReport {
    ExponentFit t1_vs_N;  // t_1 = x_1 + 1 against N
    ExponentFit x1_vs_N;  // raw x_1 against N
    ExponentFit tN2_vs_N; // t_{N2} against N
    ExponentFit xN2_vs_N;
    ExponentFit xn_vs_n; // within-excursion, t_n against n over [n_lo, N1]
    ExponentFit gamman_vs_n;
    ExponentFit taun_vs_n;
    ExponentFit N_vs_gamma1;
    double omega_ratio_min = 0.0; // omega_n / (6n) over n >= omega_n_min, entering
    double omega_ratio_max = 0.0;
    std::size_t excursions = 0;
    double N_min = 0.0;
    double N_max = 0.0;
};

struct ExponentOptions {
    long n_lo = 10;             // lower end of the within-excursion fits
    long omega_n_min = 100;     // lower end of the omega / 6n band
    int points_per_excursion = 24; // log-spaced indices per excursion
    double min_decades = 2.0;
};

namespace detail {

inline ExponentFit make_fit(std::string name, std::span<const double> lx, std::span<const double> ly) {
    ExponentFit f;
    f.name = std::move(name);
    const LinearFit lf = fit_line(lx, ly);
    f.slope = lf.slope;
    f.stderr_ = lf.slope_stderr;
    f.intercept = lf.intercept;
    f.residual_rms = lf.residual_rms;
    f.points = lf.n;
    f.range_lo = std::exp(*std::min_element(lx.begin(), lx.end()));
    f.range_hi = std::exp(*std::max_element(lx.begin(), lx.end()));
    return f;
}

// Log-log slope pooled over excursions with a separate intercept for each
// (the within estimator): both coordinates are centred per excursion.
struct WithinAccumulator {
    std::vector<double> lx;
    std::vector<double> ly;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;

    void add_group(const std::vector<double>& gx, const std::vector<double>& gy) {
        if (gx.size() < 2) return;
        double mx = 0.0;
        double my = 0.0;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            mx += std::log(gx[i]);
            my += std::log(gy[i]);
            lo = std::min(lo, gx[i]);
            hi = std::max(hi, gx[i]);
        }
        mx /= static_cast<double>(gx.size());
        my /= static_cast<double>(gx.size());
        for (std::size_t i = 0; i < gx.size(); ++i) {
            lx.push_back(std::log(gx[i]) - mx);
            ly.push_back(std::log(gy[i]) - my);
        }
    }

    ExponentFit fit(std::string name) const {
        ExponentFit f;
        f.name = std::move(name);
        const LinearFit lf = fit_line(lx, ly);
        f.slope = lf.slope;
        f.stderr_ = lf.slope_stderr;
        f.intercept = 0.0;
        f.residual_rms = lf.residual_rms;
        f.points = lf.n;
        f.range_lo = lo;
        f.range_hi = hi;
        return f;
    }
};

} // namespace detail

/// Log-log exponents over an ensemble of uncensored excursions.
[[nodiscard]] inline ExponentReport fit_excursion_exponents(std::span<const Excursion> ensemble, ExponentOptions opt = {}) {
    std::vector<const Excursion*> use;
    for (const auto& e : ensemble) {
        if (!e.censored && e.N >= 2) use.push_back(&e);
    }
    if (use.size() < 4) throw InsufficientData("fit_excursion_exponents: fewer than 4 usable excursions");
    double nmin = std::numeric_limits<double>::infinity();
    double nmax = 0.0;
    for (const auto* e : use) {
        nmin = std::min(nmin, static_cast<double>(e->N));
        nmax = std::max(nmax, static_cast<double>(e->N));
    }
    if (std::log10(nmax / nmin) < opt.min_decades) {
        throw InsufficientRange("fit_excursion_exponents: N spans " + std::to_string(std::log10(nmax / nmin)) +
                                " decades, need " + std::to_string(opt.min_decades));
    }

    ExponentReport rep;
    rep.excursions = use.size();
    rep.N_min = nmin;
    rep.N_max = nmax;
    std::vector<double> lN, lt1, lx1, ltN2, lxN2, lg1, lN_g;
    detail::WithinAccumulator acc_t, acc_g, acc_tau;
    double wmin = std::numeric_limits<double>::infinity();
    double wmax = -wmin;
    for (const auto* e : use) {
        const double N = static_cast<double>(e->N);
        const auto i2 = static_cast<std::size_t>(e->N2 - 1);
        lN.push_back(std::log(N));
        lt1.push_back(std::log(e->t[0]));
        ltN2.push_back(std::log(e->t[i2]));
        lxN2.push_back(std::log(e->x[i2]));
        if (e->x[0] > 0.0) {
            lx1.push_back(std::log(e->x[0]));
            lN_g.push_back(std::log(N));
        }
        lg1.push_back(std::log(e->gamma[0]));

        if (e->N1 >= opt.n_lo + 2) {
            std::vector<double> gn, gt, gg, gtau;
            const double a = std::log(static_cast<double>(opt.n_lo));
            const double b = std::log(static_cast<double>(e->N1));
            long last = -1;
            for (int k = 0; k < opt.points_per_excursion; ++k) {
                const double frac = static_cast<double>(k) / (opt.points_per_excursion - 1);
                const long n = std::lround(std::exp(a + frac * (b - a)));
                if (n == last) continue;
                last = n;
                const auto i = static_cast<std::size_t>(n - 1);
                gn.push_back(static_cast<double>(n));
                gt.push_back(e->t[i]);
                gg.push_back(e->gamma[i]);
                gtau.push_back(e->tau[i]);
            }
            acc_t.add_group(gn, gt);
            acc_g.add_group(gn, gg);
            acc_tau.add_group(gn, gtau);
        }
        for (long n = opt.omega_n_min; n <= e->N1; ++n) {
            const auto i = static_cast<std::size_t>(n - 1);
            const double ratio = e->gamma[i] * e->t[i] * e->t[i] / (6.0 * static_cast<double>(n));
            wmin = std::min(wmin, ratio);
            wmax = std::max(wmax, ratio);
        }
    }
    rep.t1_vs_N = detail::make_fit("t1_vs_N", lN, lt1);
    rep.x1_vs_N = detail::make_fit("x1_vs_N", lN_g, lx1);
    rep.tN2_vs_N = detail::make_fit("tN2_vs_N", lN, ltN2);
    rep.xN2_vs_N = detail::make_fit("xN2_vs_N", lN, lxN2);
    rep.N_vs_gamma1 = detail::make_fit("N_vs_gamma1", lg1, lN);
    if (acc_t.lx.size() >= 4) {
        rep.xn_vs_n = acc_t.fit("xn_vs_n");
        rep.gamman_vs_n = acc_g.fit("gamman_vs_n");
        rep.taun_vs_n = acc_tau.fit("taun_vs_n");
    }
    rep.omega_ratio_min = std::isfinite(wmin) ? wmin : std::numeric_limits<double>::quiet_NaN();
    rep.omega_ratio_max = std::isfinite(wmax) ? wmax : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

} // namespace cuspbill
