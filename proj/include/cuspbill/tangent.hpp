#pragma once

// Tangent dynamics along cusp excursions.
//
// p-norm of a tangent vector (dr, dphi) at (r, phi): cos(phi) |dr|.
// Front curvature after the n-th collision obeys
//     B_{n+1} = 2 K_{n+1} / sin(gamma_{n+1}) + B_n / (1 + tau_n B_n)
// and the p-norm of an unstable vector grows by 1 + lambda_n, lambda_n = tau_n B_n,
// along the flight that follows the collision.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "billiard.hpp"
#include "cusp.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "profile.hpp"
#include "rng.hpp"

namespace cuspbill {

struct PNormVector {
    double dr = 0.0;
    double dphi = 0.0;
    double base_phi = 0.0;

    [[nodiscard]] double p_norm() const noexcept { return std::cos(base_phi) * std::fabs(dr); }
    [[nodiscard]] bool unstable() const noexcept { return dr * dphi >= 0.0; }
    [[nodiscard]] bool stable() const noexcept { return dr * dphi <= 0.0; }
};

[[nodiscard]] inline double front_curvature_step(double B, double tau, double K_next, double gamma_next) {
    if (!(gamma_next > 0.0)) throw DomainError("front_curvature_step: gamma_next must be > 0");
    if (!(B >= 0.0) || !(tau > 0.0) || !(K_next > 0.0) || !std::isfinite(B) || !std::isfinite(tau)) {
        throw DomainError("front_curvature_step: need B >= 0, tau > 0, K_next > 0");
    }
    return 2.0 * K_next / std::sin(gamma_next) + B / (1.0 + tau * B);
}

/// Per-leg quantities of one excursion. Leg 0 runs from the wall to x_1 and
/// carries the initial front curvature B0; leg n (1..N) follows the n-th
/// collision on U, leg N ending on the wall.
struct ExpansionLedger {
    std::vector<double> K;      // curvature at x_n, legs 1..N (K[0] = 0 for the wall)
    std::vector<double> B;      // outgoing front curvature per leg
    std::vector<double> lambda; // tau B per leg
    std::vector<double> cum_log; // running sum of log(1 + lambda)
    double log_entering = 0.0;  // legs 0..N1
    double log_turning = 0.0;   // legs N1+1..N3-1
    double log_exiting = 0.0;   // legs N3..N
    double log_total = 0.0;
    double total = 0.0;          // exp(log_total)
    double direct_product = 0.0; // prod(1 + lambda) by plain multiplication
    double sum_lambda_sq = 0.0;
    double sum_lambda_turning = 0.0;
    double B0 = 0.0;
    bool has_marks = false;
};

/// Builds the ledger of an uncensored excursion started from the wall.
[[nodiscard]] inline ExpansionLedger expansion_ledger(const Excursion& e, double B0 = 0.0) {
    if (e.censored) throw DomainError("expansion_ledger: excursion is censored");
    if (!e.from_wall()) throw DomainError("expansion_ledger: excursion has no entry leg from the wall");
    if (!(B0 >= 0.0)) throw DomainError("expansion_ledger: B0 must be >= 0");
    const Profile canon = Profile::reciprocal();
    const auto N = static_cast<std::size_t>(e.N);
    ExpansionLedger L;
    L.B0 = B0;
    L.has_marks = e.has_marks();
    L.K.resize(N + 1);
    L.B.resize(N + 1);
    L.lambda.resize(N + 1);
    L.cum_log.resize(N + 1);
    L.K[0] = 0.0;
    L.B[0] = B0;
    L.lambda[0] = e.tau0 * B0;
    for (std::size_t n = 1; n <= N; ++n) {
        L.K[n] = curvature(canon, e.x[n - 1]);
        const double tau_prev = n == 1 ? e.tau0 : e.tau[n - 2];
        L.B[n] = front_curvature_step(L.B[n - 1], tau_prev, L.K[n], e.gamma[n - 1]);
        L.lambda[n] = e.tau[n - 1] * L.B[n];
    }
    CompensatedSum total;
    CompensatedSum enter;
    CompensatedSum turn;
    CompensatedSum exit;
    CompensatedSum sq;
    CompensatedSum lam_turn;
    double direct = 1.0;
    for (std::size_t n = 0; n <= N; ++n) {
        const double lg = std::log1p(L.lambda[n]);
        total += lg;
        L.cum_log[n] = total.value();
        sq += L.lambda[n] * L.lambda[n];
        direct *= 1.0 + L.lambda[n];
        if (L.has_marks) {
            const auto nl = static_cast<long>(n);
            if (nl <= e.N1) {
                enter += lg;
            } else if (nl < e.N3) {
                turn += lg;
                lam_turn += L.lambda[n];
            } else {
                exit += lg;
            }
        }
    }
    L.log_total = total.value();
    L.total = std::exp(L.log_total);
    L.direct_product = direct;
    L.sum_lambda_sq = sq.value();
    L.log_entering = enter.value();
    L.log_turning = turn.value();
    L.log_exiting = exit.value();
    L.sum_lambda_turning = lam_turn.value();
    return L;
}

/// Image of a section map together with the walls met on the way.
struct MapImage {
    PhasePoint point;
    std::vector<Wall> itinerary;
};

using Jacobian = std::array<std::array<double, 2>, 2>;

[[nodiscard]] inline double det(const Jacobian& j) noexcept { return j[0][0] * j[1][1] - j[0][1] * j[1][0]; }

/// Central-difference Jacobian in (r, phi) of a map returning PhasePoint or
/// MapImage. For MapImage results the four perturbed itineraries must match
/// the itinerary of z, otherwise SingularityStraddle is raised.
template <class Map>
[[nodiscard]] Jacobian jacobian_fd(Map&& map, const PhasePoint& z, double h = 1e-7) {
    using Result = std::decay_t<decltype(map(z))>;
    constexpr bool with_itinerary = std::is_same_v<Result, MapImage>;
    auto point_of = [](const Result& res) -> const PhasePoint& {
        if constexpr (with_itinerary) {
            return res.point;
        } else {
            return res;
        }
    };
    std::vector<Wall> ref;
    if constexpr (with_itinerary) ref = map(z).itinerary;
    std::array<PhasePoint, 4> img{};
    const std::array<PhasePoint, 4> args{PhasePoint{z.section, z.r + h, z.phi}, PhasePoint{z.section, z.r - h, z.phi},
                                         PhasePoint{z.section, z.r, z.phi + h}, PhasePoint{z.section, z.r, z.phi - h}};
    for (std::size_t k = 0; k < 4; ++k) {
        if ((z.r > 0.0) != (args[k].r > 0.0) || args[k].r == 0.0) {
            throw SingularityStraddle("jacobian_fd: perturbation leaves the chart");
        }
        const Result res = map(args[k]);
        if constexpr (with_itinerary) {
            if (res.itinerary != ref) throw SingularityStraddle("jacobian_fd: perturbed orbits change itinerary");
        }
        img[k] = point_of(res);
    }
    if ((img[0].r > 0.0) != (img[1].r > 0.0) || (img[0].r > 0.0) != (img[2].r > 0.0) ||
        (img[0].r > 0.0) != (img[3].r > 0.0)) {
        throw SingularityStraddle("jacobian_fd: perturbed images lie in different sections");
    }
    Jacobian j{};
    j[0][0] = (img[0].r - img[1].r) / (2.0 * h);
    j[1][0] = (img[0].phi - img[1].phi) / (2.0 * h);
    j[0][1] = (img[2].r - img[3].r) / (2.0 * h);
    j[1][1] = (img[2].phi - img[3].phi) / (2.0 * h);
    return j;
}

/// T5^k as a map with itinerary, for use with jacobian_fd.
[[nodiscard]] inline auto t5_power_map(const Billiard& billiard, long k = 1) {
    return [&billiard, k](const PhasePoint& z) {
        MapImage out;
        FlowState s = billiard.to_state(z);
        for (long i = 0; i < k; ++i) {
            s = billiard.advance(s, Section::M5, [&](const CollisionEvent& ev) { out.itinerary.push_back(ev.point.wall); });
        }
        out.point = billiard.to_phase(s);
        return out;
    };
}

/// |det J cos(phi') / cos(phi) - 1| for the map image of z.
[[nodiscard]] inline double measure_defect(const Jacobian& j, const PhasePoint& z, const PhasePoint& image) {
    return std::fabs(det(j) * std::cos(image.phi) / std::cos(z.phi) - 1.0);
}

/// p-norm growth of the flat front leaving the wall at z (a point of M4)
/// after `steps` applications of T5, by finite differences.
[[nodiscard]] inline double fd_wall_expansion(const Billiard& billiard, const PhasePoint& z, long steps, double h = 1e-7) {
    auto map = t5_power_map(billiard, steps);
    const Jacobian j = jacobian_fd(map, z, h);
    const PhasePoint img = map(z).point;
    // tangent vector (dr, dphi) = (1, 0): parallel rays leaving a flat wall
    return std::cos(img.phi) * std::fabs(j[0][0]) / std::cos(z.phi);
}

struct HyperbolicityReport {
    long cone_samples = 0;
    long cone_violations = 0;
    long cone_skipped = 0; // straddling or singular samples
    long measure_samples = 0;
    long measure_skipped = 0;
    double measure_defect_max = 0.0;
    std::vector<long> N;
    std::vector<double> total_over_N;
    std::vector<double> log_entering_over_lnN; // NaN without marks
    std::vector<double> log_exiting_over_lnN;
    std::vector<double> sum_lambda_sq;
    std::vector<double> sum_lambda_turning;
    double ledger_vs_direct_max = 0.0; // relative
    double entering_slope = 0.0; // d log(entering product) / d ln N over the ensemble
    double exiting_slope = 0.0;
    double total_slope = 0.0;
    std::uint64_t seed = 0;
};

struct HyperbolicityOptions {
    double B0 = 0.0;
    double h = 1e-7;
    double x_max = 20.0; // points of M are drawn with x in (0, x_max]
    unsigned threads = 1;
};

/// Random point of M5: half the draws on M4 with density cos(phi), half on
/// U over x in (0, x_max] with density cos(phi) in (r, phi).
[[nodiscard]] inline PhasePoint random_m5_point(const Billiard& billiard, PhiloxStream& rng, double x_max) {
    const double s = std::asin(2.0 * rng.uniform() - 1.0);
    if (rng.uniform() < 0.5) return {Section::M4, billiard.f0() * rng.uniform_pos(), s};
    const double r_min = arc_length(billiard.profile(), x_max);
    return {Section::M, r_min * rng.uniform_pos(), s};
}

namespace detail {

struct ConeSample {
    bool skipped = true;
    bool violation = false;
    bool measured = false;
    double defect = 0.0;
};

inline ConeSample cone_sample(const Billiard& billiard, std::uint64_t seed, std::size_t index, double h, double x_max) {
    PhiloxStream rng(seed, index);
    const PhasePoint z = random_m5_point(billiard, rng, x_max);
    // unstable direction (cos a, sin a) with a in (0, pi/2), sign shared
    const double a = 0.5 * std::numbers::pi * rng.uniform_pos();
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    ConeSample out;
    try {
        auto map = t5_power_map(billiard, 1);
        const Jacobian j = jacobian_fd(map, z, h);
        const PhasePoint img = map(z).point;
        const double dr = sign * std::cos(a);
        const double dphi = sign * std::sin(a);
        const double dr1 = j[0][0] * dr + j[0][1] * dphi;
        const double dphi1 = j[1][0] * dr + j[1][1] * dphi;
        out.skipped = false;
        out.violation = !(dr1 * dphi1 > 0.0);
        out.measured = true;
        out.defect = measure_defect(j, z, img);
    } catch (const SingularityStraddle&) {
    } catch (const SingularOrbit&) {
    }
    return out;
}

} // namespace detail

/// Cone invariance and measure preservation of T5 at `samples` random points
/// of M5, plus the expansion ledger of every uncensored excursion of the
/// ensemble that starts on the wall.
[[nodiscard]] inline HyperbolicityReport hyperbolicity_checks(const Billiard& billiard, std::span<const Excursion> ensemble,
                                                              long samples, std::uint64_t seed,
                                                              HyperbolicityOptions opt = {}) {
    if (samples < 0) throw DomainError("hyperbolicity_checks: samples must be >= 0");
    HyperbolicityReport rep;
    rep.seed = seed;
    const auto cones = parallel_map<detail::ConeSample>(static_cast<std::size_t>(samples), opt.threads, [&](std::size_t i) {
        return detail::cone_sample(billiard, seed, i, opt.h, opt.x_max);
    });
    for (const auto& c : cones) {
        if (c.skipped) {
            ++rep.cone_skipped;
            ++rep.measure_skipped;
            continue;
        }
        ++rep.cone_samples;
        rep.cone_violations += c.violation ? 1 : 0;
        ++rep.measure_samples;
        rep.measure_defect_max = std::max(rep.measure_defect_max, c.defect);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> lnNs, log_total, lnN_marked, log_enter, log_exit;
    for (const Excursion& e : ensemble) {
        if (e.censored || !e.from_wall() || e.N < 2) continue;
        const ExpansionLedger L = expansion_ledger(e, opt.B0);
        const double lnN = std::log(static_cast<double>(e.N));
        rep.N.push_back(e.N);
        rep.total_over_N.push_back(L.total / static_cast<double>(e.N));
        rep.log_entering_over_lnN.push_back(L.has_marks ? L.log_entering / lnN : nan);
        rep.log_exiting_over_lnN.push_back(L.has_marks ? L.log_exiting / lnN : nan);
        rep.sum_lambda_sq.push_back(L.sum_lambda_sq);
        rep.sum_lambda_turning.push_back(L.has_marks ? L.sum_lambda_turning : nan);
        if (std::isfinite(L.direct_product)) {
            rep.ledger_vs_direct_max = std::max(rep.ledger_vs_direct_max, std::fabs(L.total / L.direct_product - 1.0));
        }
        lnNs.push_back(lnN);
        log_total.push_back(L.log_total);
        if (L.has_marks) {
            lnN_marked.push_back(lnN);
            log_enter.push_back(L.log_entering);
            log_exit.push_back(L.log_exiting);
        }
    }
    rep.total_slope = lnNs.size() >= 4 ? fit_line(lnNs, log_total).slope : nan;
    rep.entering_slope = lnN_marked.size() >= 4 ? fit_line(lnN_marked, log_enter).slope : nan;
    rep.exiting_slope = lnN_marked.size() >= 4 ? fit_line(lnN_marked, log_exit).slope : nan;
    return rep;
}

} // namespace cuspbill
