#pragma once

// Monte Carlo estimates on the wall section M4: return-time law, tail
// measure, strip geometry of E_N = {R = N+1} near the corner (r, phi) = (f(0), 0)
// and the correlation mu(E_m n T5^(m+1) E_m).
//
// Sample i of a run with seed s draws from the Philox stream (s, i), so
// every estimate is a deterministic function of (seed, sample count).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "billiard.hpp"
#include "errors.hpp"
#include "numerics.hpp"
#include "parallel.hpp"
#include "profile.hpp"
#include "rng.hpp"

namespace cuspbill {

struct M4Sample {
    double r = 0.0;
    double phi = 0.0;

    [[nodiscard]] PhasePoint point() const noexcept { return {Section::M4, r, phi}; }
};

/// Draws from cos(phi) dr dphi on a rectangle [r_lo, r_hi] x [-a, a] of M4:
/// r uniform and sin(phi) uniform.
class M4Sampler {
public:
    M4Sampler(std::uint64_t seed, double r_lo, double r_hi, double phi_max = std::numbers::pi / 2)
        : seed_(seed), r_lo_(r_lo), r_hi_(r_hi), sin_max_(std::sin(phi_max)) {
        if (!(r_hi > r_lo) || !(r_lo >= 0.0) || !(phi_max > 0.0) || !(phi_max <= std::numbers::pi / 2)) {
            throw DomainError("M4Sampler: invalid rectangle");
        }
    }

    /// The whole of M4 for a table with f(0) = f0.
    [[nodiscard]] static M4Sampler whole(std::uint64_t seed, double f0 = 1.0) { return {seed, 0.0, f0}; }

    [[nodiscard]] M4Sample operator()(std::uint64_t index) const noexcept {
        PhiloxStream rng(seed_, index);
        M4Sample s;
        // r in (r_lo, r_hi]
        s.r = r_hi_ - (r_hi_ - r_lo_) * rng.uniform();
        if (!(s.r > 0.0)) s.r = r_hi_;
        s.phi = std::asin(sin_max_ * (2.0 * rng.uniform() - 1.0));
        return s;
    }

    /// mu of the rectangle: (r_hi - r_lo) * 2 sin(phi_max).
    [[nodiscard]] double measure() const noexcept { return (r_hi_ - r_lo_) * 2.0 * sin_max_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] double r_lo() const noexcept { return r_lo_; }
    [[nodiscard]] double r_hi() const noexcept { return r_hi_; }
    [[nodiscard]] double phi_max() const noexcept { return std::asin(sin_max_); }

private:
    std::uint64_t seed_;
    double r_lo_;
    double r_hi_;
    double sin_max_;
};

[[nodiscard]] inline std::vector<M4Sample> sample_m4(std::size_t n, std::uint64_t seed, double f0 = 1.0) {
    if (n < 1) throw DomainError("sample_m4: n must be >= 1");
    const M4Sampler s = M4Sampler::whole(seed, f0);
    std::vector<M4Sample> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = s(i);
    return out;
}

/// Counts of N = R - 1 over a sample of M4.
struct ReturnHistogram {
    std::map<long, long> counts;
    long censored = 0;
    long singular = 0; // discarded samples
    long total = 0;    // sum of counts + censored
    long cap = 0;
    double normalizer = 2.0; // mu(M4)
    std::uint64_t seed = 0;

    [[nodiscard]] double mu_hat(long N) const {
        const auto it = counts.find(N);
        return it == counts.end() ? 0.0 : normalizer * static_cast<double>(it->second) / static_cast<double>(total);
    }
    [[nodiscard]] double mu_censored() const { return normalizer * static_cast<double>(censored) / static_cast<double>(total); }
    /// Samples with R - 1 >= N, censored ones included.
    [[nodiscard]] long tail_count(long N) const {
        long c = censored;
        for (auto it = counts.lower_bound(N); it != counts.end(); ++it) c += it->second;
        return c;
    }
    [[nodiscard]] double mu_tail(long N) const { return normalizer * static_cast<double>(tail_count(N)) / static_cast<double>(total); }
    [[nodiscard]] long count_range(long lo, long hi) const {
        long c = 0;
        for (auto it = counts.lower_bound(lo); it != counts.end() && it->first <= hi; ++it) c += it->second;
        return c;
    }
};

struct HistogramOptions {
    long cap = 4096;
    unsigned threads = 1;
    std::size_t chunk = 4096;
};

[[nodiscard]] inline ReturnHistogram return_histogram(const Billiard& billiard, const M4Sampler& sampler, std::size_t samples,
                                                      HistogramOptions opt = {}) {
    if (opt.cap < 16) throw DomainError("return_histogram: cap must be >= 16");
    const std::size_t chunks = (samples + opt.chunk - 1) / opt.chunk;
    struct Partial {
        std::vector<long> values; // R - 1, or -1 censored, -2 singular
    };
    auto parts = parallel_map<Partial>(chunks, opt.threads, [&](std::size_t c) {
        Partial p;
        const std::size_t lo = c * opt.chunk;
        const std::size_t hi = std::min(samples, lo + opt.chunk);
        p.values.reserve(hi - lo);
        for (std::size_t i = lo; i < hi; ++i) {
            const M4Sample s = sampler(i);
            try {
                const ReturnTime rt = billiard.return_time(s.point(), opt.cap);
                p.values.push_back(rt.censored ? -1 : rt.value - 1);
            } catch (const SingularOrbit&) {
                p.values.push_back(-2);
            }
        }
        return p;
    });
    ReturnHistogram h;
    h.cap = opt.cap;
    h.normalizer = sampler.measure();
    h.seed = sampler.seed();
    for (const auto& p : parts) {
        for (long v : p.values) {
            if (v == -2) {
                ++h.singular;
                continue;
            }
            ++h.total;
            if (v == -1) {
                ++h.censored;
            } else {
                ++h.counts[v];
            }
        }
    }
    return h;
}

enum class Binning { Raw, Dyadic };

struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_ = 0.0;
    long bin_lo = 0;
    long bin_hi = 0;
    Binning binning = Binning::Raw;
    std::size_t points = 0;
    std::vector<double> xs; // abscissae used
    std::vector<double> ys;
};

/// OLS of log y on log x over points with lo <= x <= hi.
[[nodiscard]] inline PowerLawFit fit_power_law(std::span<const double> xs, std::span<const double> ys, double lo = 0.0,
                                               double hi = std::numeric_limits<double>::infinity()) {
    if (xs.size() != ys.size()) throw DomainError("fit_power_law: size mismatch");
    std::vector<double> lx;
    std::vector<double> ly;
    PowerLawFit fit;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < lo || xs[i] > hi) continue;
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) throw DomainError("fit_power_law: values must be positive");
        lx.push_back(std::log(xs[i]));
        ly.push_back(std::log(ys[i]));
        fit.xs.push_back(xs[i]);
        fit.ys.push_back(ys[i]);
    }
    if (lx.size() < 4) throw InsufficientData("fit_power_law: need at least 4 points in range");
    const LinearFit lf = fit_line(lx, ly);
    fit.slope = lf.slope;
    fit.intercept = lf.intercept;
    fit.stderr_ = lf.slope_stderr;
    fit.points = lx.size();
    fit.bin_lo = static_cast<long>(std::floor(*std::min_element(fit.xs.begin(), fit.xs.end())));
    fit.bin_hi = static_cast<long>(std::ceil(*std::max_element(fit.xs.begin(), fit.xs.end())));
    return fit;
}

/// Slope of mu(E_N) from dyadic bins [2^k, 2^(k+1) - 1] inside [N_lo, N_hi].
/// Each bin gives the mean mu(E_N) per unit N, placed at its geometric centre.
/// Bins with fewer than `floor` counts are dropped.
[[nodiscard]] inline PowerLawFit fit_return_law(const ReturnHistogram& h, long N_lo, long N_hi, long floor = 30) {
    std::vector<double> xs;
    std::vector<double> ys;
    long lo_used = 0;
    long hi_used = 0;
    for (long lo = 1; lo <= N_hi; lo *= 2) {
        const long hi = 2 * lo - 1;
        if (lo < N_lo || hi > N_hi) continue;
        const long c = h.count_range(lo, hi);
        if (c < floor) continue;
        const double width = static_cast<double>(hi - lo + 1);
        xs.push_back(std::sqrt(static_cast<double>(lo) * static_cast<double>(hi + 1)));
        ys.push_back(h.normalizer * static_cast<double>(c) / (static_cast<double>(h.total) * width));
        if (lo_used == 0) lo_used = lo;
        hi_used = hi;
    }
    PowerLawFit fit = fit_power_law(xs, ys);
    fit.binning = Binning::Dyadic;
    fit.bin_lo = lo_used;
    fit.bin_hi = hi_used;
    return fit;
}

/// Slope of mu(R - 1 >= N) at N = N_lo, 2 N_lo, ... <= N_hi.
[[nodiscard]] inline PowerLawFit fit_tail_law(const ReturnHistogram& h, long N_lo, long N_hi, long floor = 30) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (long N = N_lo; N <= N_hi; N *= 2) {
        const long c = h.tail_count(N);
        if (c < floor) continue;
        xs.push_back(static_cast<double>(N));
        ys.push_back(h.mu_tail(N));
    }
    PowerLawFit fit = fit_power_law(xs, ys);
    fit.binning = Binning::Dyadic;
    fit.bin_lo = N_lo;
    fit.bin_hi = static_cast<long>(xs.empty() ? 0 : xs.back());
    return fit;
}

enum class Sampling { Plain, CornerStratified };

[[nodiscard]] inline const char* sampling_name(Sampling s) noexcept {
    return s == Sampling::Plain ? "plain" : "corner-stratified";
}

struct CorrelationOptions {
    Sampling strategy = Sampling::Plain;
    double kappa = 1.0; // stratum scale, see corner_sampler
    long N_A = 16;      // A = union of E_n over n >= N_A
    unsigned threads = 1;
    std::size_t chunk = 2048;
    long A_trials = 1'000'000; // the A estimate uses the first A_trials samples
    long min_hits = 0;          // > 0: keep doubling the sample until this many hits
    long max_trials = 200'000'000;
    bool keep_points = true;
};

struct CorrelationEstimate {
    long m = 0;
    Sampling strategy = Sampling::Plain;
    double kappa = 0.0;
    double region_measure = 0.0;
    long trials = 0;
    long trials_A = 0;
    long hits = 0;
    long hits_A = 0;
    long singular = 0;
    double mu_EmTEm = 0.0;
    double stderr_ = 0.0;
    double mu_AtailTA = 0.0;
    double stderr_A = 0.0;
    bool zero_hits = false;
    double upper_bound = 0.0; // one-sided 95% bound when zero_hits
    std::uint64_t seed = 0;
    std::vector<M4Sample> hit_points;   // z with R(z) = m + 1 = R(T5^(m+1) z)
    std::vector<M4Sample> image_points; // T5^(m+1) z for those z
};

/// Rectangle [f0 - kappa m^(-1/6) f0, f0] x [-kappa m^(-1/3), kappa m^(-1/3)],
/// clipped to M4.
[[nodiscard]] inline M4Sampler corner_sampler(std::uint64_t seed, long m, double kappa, double f0 = 1.0) {
    const double md = static_cast<double>(m);
    const double dr = std::min(1.0, kappa * std::pow(md, -1.0 / 6.0)) * f0;
    const double a = std::min(std::numbers::pi / 2, kappa * std::pow(md, -1.0 / 3.0));
    return {seed, f0 - dr, f0, a};
}

namespace detail {

struct TrialOutcome {
    bool hit = false;
    bool hit_A = false;
    bool singular = false;
    PhasePoint image;
};

inline TrialOutcome correlation_trial(const Billiard& b, const PhasePoint& z, long m, long N_A, bool with_A) {
    TrialOutcome out;
    try {
        FlowState s = b.to_state(z);
        long first = -1;
        long k = 0;
        while (k < m + 1) {
            s = b.advance(s, Section::M5);
            ++k;
            if (first < 0 && s.point.wall == Wall::L) {
                first = k;
                if (!with_A || first < N_A + 1) break;
            }
        }
        const bool full = k == m + 1; // s = T5^(m+1) z
        const bool z_in_Em = first == m + 1;
        const bool z_in_A = with_A && (first < 0 || first >= N_A + 1);
        if (!full || s.point.wall != Wall::L || !(z_in_Em || z_in_A)) return out;
        const ReturnTime rw = b.return_time(s, std::max(m + 2, N_A + 1));
        const long Rw = rw.censored ? std::numeric_limits<long>::max() : rw.value;
        out.hit_A = z_in_A && Rw >= N_A + 1;
        out.hit = z_in_Em && Rw == m + 1;
        if (out.hit) out.image = b.to_phase(s);
    } catch (const SingularOrbit&) {
        out = TrialOutcome{};
        out.singular = true;
    }
    return out;
}

} // namespace detail

/// Estimates mu(E_m n T5^-(m+1) E_m) and mu(A n T5^-(m+1) A). A trial z hits
/// when R(z) = m + 1 and R(T5^(m+1) z) = m + 1.
[[nodiscard]] inline CorrelationEstimate correlation_estimate(const Billiard& billiard, long m, long trials, std::uint64_t seed,
                                                              CorrelationOptions opt = {}) {
    if (m < 1) throw DomainError("correlation_estimate: m must be >= 1");
    if (trials < 1) throw DomainError("correlation_estimate: trials must be >= 1");
    const double f0 = billiard.f0();
    const M4Sampler sampler = opt.strategy == Sampling::Plain ? M4Sampler::whole(seed, f0)
                                                              : corner_sampler(seed, m, opt.kappa, f0);
    struct Partial {
        long hits = 0;
        long hits_A = 0;
        long singular = 0;
        std::vector<M4Sample> pts;
        std::vector<M4Sample> imgs;
    };
    CorrelationEstimate est;
    est.m = m;
    est.strategy = opt.strategy;
    est.kappa = opt.strategy == Sampling::Plain ? 0.0 : opt.kappa;
    est.region_measure = sampler.measure();
    est.seed = seed;
    // samples [begin, end), merged in index order
    const auto run = [&](std::size_t begin, std::size_t end) {
        const std::size_t chunks = (end - begin + opt.chunk - 1) / opt.chunk;
        auto parts = parallel_map<Partial>(chunks, opt.threads, [&](std::size_t c) {
            Partial p;
            const std::size_t lo = begin + c * opt.chunk;
            const std::size_t hi = std::min(end, lo + opt.chunk);
            for (std::size_t i = lo; i < hi; ++i) {
                const M4Sample s = sampler(i);
                const bool with_A = static_cast<long>(i) < opt.A_trials;
                const auto o = detail::correlation_trial(billiard, s.point(), m, opt.N_A, with_A);
                p.singular += o.singular ? 1 : 0;
                p.hits_A += o.hit_A ? 1 : 0;
                if (o.hit) {
                    ++p.hits;
                    if (opt.keep_points) {
                        p.pts.push_back(s);
                        p.imgs.push_back({o.image.r, o.image.phi});
                    }
                }
            }
            return p;
        });
        for (auto& p : parts) {
            est.hits += p.hits;
            est.hits_A += p.hits_A;
            est.singular += p.singular;
            est.hit_points.insert(est.hit_points.end(), p.pts.begin(), p.pts.end());
            est.image_points.insert(est.image_points.end(), p.imgs.begin(), p.imgs.end());
        }
        est.trials = static_cast<long>(end);
    };
    run(0, static_cast<std::size_t>(trials));
    // sequential stopping: double the sample until min_hits or max_trials
    while (opt.min_hits > 0 && est.hits < opt.min_hits && est.trials < opt.max_trials) {
        const long next = std::min(opt.max_trials, 2 * est.trials);
        run(static_cast<std::size_t>(est.trials), static_cast<std::size_t>(next));
    }
    const double nt = static_cast<double>(est.trials);
    const double p_hit = static_cast<double>(est.hits) / nt;
    est.trials_A = std::min(est.trials, opt.A_trials);
    const double nA = static_cast<double>(std::max(1L, est.trials_A));
    const double p_A = static_cast<double>(est.hits_A) / nA;
    est.mu_EmTEm = est.region_measure * p_hit;
    est.stderr_ = est.region_measure * std::sqrt(p_hit * (1.0 - p_hit) / nt);
    est.mu_AtailTA = est.region_measure * p_A;
    est.stderr_A = est.region_measure * std::sqrt(p_A * (1.0 - p_A) / nA);
    if (est.hits == 0) {
        est.zero_hits = true;
        est.upper_bound = est.region_measure * 3.0 / nt; // rule of three
    }
    return est;
}

/// Smallest kappa whose corner rectangle contains the given fraction of the
/// points of E_m found by plain sampling.
struct KappaCalibration {
    double kappa = 0.0;
    long points = 0;
    long trials = 0;
};

[[nodiscard]] inline KappaCalibration calibrate_kappa(const Billiard& billiard, long m, long trials, std::uint64_t seed,
                                                      double coverage = 0.99, unsigned threads = 1) {
    const double f0 = billiard.f0();
    const M4Sampler sampler = M4Sampler::whole(seed, f0);
    const double md = static_cast<double>(m);
    auto stat = parallel_map<double>(static_cast<std::size_t>(trials), threads, [&](std::size_t i) {
        const M4Sample s = sampler(i);
        try {
            const ReturnTime rt = billiard.return_time(s.point(), m + 1);
            if (rt.censored || rt.value != m + 1) return -1.0;
        } catch (const SingularOrbit&) {
            return -1.0;
        }
        return std::max((f0 - s.r) / f0 * std::pow(md, 1.0 / 6.0), std::fabs(s.phi) * std::pow(md, 1.0 / 3.0));
    });
    std::vector<double> q;
    for (double v : stat) {
        if (v >= 0.0) q.push_back(v);
    }
    if (q.size() < 20) throw InsufficientData("calibrate_kappa: fewer than 20 points of E_m");
    std::sort(q.begin(), q.end());
    const auto idx = static_cast<std::size_t>(std::ceil(coverage * static_cast<double>(q.size()))) - 1;
    KappaCalibration k;
    k.kappa = q[std::min(idx, q.size() - 1)];
    k.points = static_cast<long>(q.size());
    k.trials = trials;
    return k;
}

struct KsResult {
    double D = 0.0;
    double p = 1.0;
};

/// P(K > lambda) for the Kolmogorov distribution.
[[nodiscard]] inline double kolmogorov_q(double lambda) noexcept {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 100; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

namespace detail {

inline double ks_pvalue(double D, double ne) noexcept {
    const double sq = std::sqrt(ne);
    return kolmogorov_q((sq + 0.12 + 0.11 / sq) * D);
}

} // namespace detail

template <class Cdf>
[[nodiscard]] KsResult ks_one_sample(std::vector<double> xs, Cdf&& cdf) {
    if (xs.empty()) throw InsufficientData("ks_one_sample: empty sample");
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double D = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = cdf(xs[i]);
        D = std::max({D, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return {D, detail::ks_pvalue(D, n)};
}

[[nodiscard]] inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw InsufficientData("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double D = 0.0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        D = std::max(D, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return {D, detail::ks_pvalue(D, na * nb / (na + nb))};
}

/// Reflection test for a point set that should be invariant under
/// (r, phi) -> (r, -phi): two-sided sign test on phi, and two-sample KS tests
/// of r and |phi| between the phi > 0 and phi < 0 halves.
struct SymmetryTest {
    long positive = 0;
    long negative = 0;
    double sign_p = 1.0;
    KsResult ks_r;
    KsResult ks_abs_phi;

    [[nodiscard]] double min_p() const noexcept { return std::min({sign_p, ks_r.p, ks_abs_phi.p}); }
};

[[nodiscard]] inline SymmetryTest reflection_symmetry(std::span<const M4Sample> pts) {
    SymmetryTest t;
    std::vector<double> rp, rn, ap, an;
    for (const auto& p : pts) {
        if (p.phi > 0.0) {
            ++t.positive;
            rp.push_back(p.r);
            ap.push_back(p.phi);
        } else if (p.phi < 0.0) {
            ++t.negative;
            rn.push_back(p.r);
            an.push_back(-p.phi);
        }
    }
    const long n = t.positive + t.negative;
    if (t.positive == 0 || t.negative == 0) {
        t.sign_p = n == 0 ? 1.0 : std::min(1.0, 2.0 * std::pow(0.5, static_cast<double>(n)));
        return t;
    }
    const boost::math::binomial_distribution<double> bin(static_cast<double>(n), 0.5);
    const double k = static_cast<double>(std::min(t.positive, t.negative));
    t.sign_p = std::min(1.0, 2.0 * boost::math::cdf(bin, k));
    t.ks_r = ks_two_sample(rp, rn);
    t.ks_abs_phi = ks_two_sample(ap, an);
    return t;
}

/// Location of E_N near the corner (r, phi) = (f(0), 0).
struct StripGeometry {
    long N = 0;
    double offset_r1 = 0.0;    // |phi| of the middle of E_N on the edge r = f(0)
    double thickness_phi = 0.0; // phi-extent of E_N on that edge
    double boundary_slope = 0.0; // dphi/dr of the boundary {R >= N+1} at the edge
    double width = 0.0;          // thickness across the strip
    double length_Sstar = 0.0;   // distance from the corner to the far end along S*
    double y_star = 0.0;         // wall height of that end
    bool found = false;
    std::string note;
};

struct StripOptions {
    double edge_y = 1e-10; // the edge r = f(0) is probed at this height
    double phi_tol = 1e-13;
    double y_tol = 1e-12;
    double sstar_offset = 1e-9; // phi distance below S*
    double sstar_y_lo = 1e-4;
};

namespace detail {

inline bool returns_late(const Billiard& b, double r, double phi, long N) {
    try {
        return b.return_time(PhasePoint{Section::M4, r, phi}, N).censored;
    } catch (const SingularOrbit&) {
        return false;
    }
}

// phi of the ray from the wall at height y tangent to U.
inline double sstar_phi(const Profile& p, double y) {
    const double u = tangent_from_wall(p, y);
    return std::atan((y - p.value(u)) / u);
}

inline double edge_transition(const Billiard& b, double r, long threshold, double tol) {
    // phi -> 0 from below aims along the corner into the cusp
    const double a = -1.2;
    const double c = -1e-12;
    const bool pa = returns_late(b, r, a, threshold);
    const bool pc = returns_late(b, r, c, threshold);
    if (pa == pc) throw StripNotFound("no transition to R > " + std::to_string(threshold) + " on the edge");
    return bisect_predicate([&](double phi) { return returns_late(b, r, phi, threshold); }, a, c, tol);
}

} // namespace detail

/// Bisection probes of E_N = {R = N+1}: on the edge r = f(0) (offset and
/// thickness), along the edge at `probes` heights for the boundary slope,
/// and along the tangency curve S* for the length.
[[nodiscard]] inline StripGeometry strip_probe(const Billiard& billiard, long N, int probes = 4, StripOptions opt = {}) {
    if (N < 16) throw DomainError("strip_probe: N must be >= 16");
    if (probes < 2) throw DomainError("strip_probe: probes must be >= 2");
    StripGeometry g;
    g.N = N;
    const double f0 = billiard.f0();
    try {
        const double r_edge = f0 - opt.edge_y;
        const double phi_in = detail::edge_transition(billiard, r_edge, N, opt.phi_tol);     // R >= N+1 beyond
        const double phi_out = detail::edge_transition(billiard, r_edge, N + 1, opt.phi_tol); // R >= N+2 beyond
        g.offset_r1 = std::fabs(0.5 * (phi_in + phi_out));
        g.thickness_phi = std::fabs(phi_out - phi_in);

        // slope of the boundary {R >= N+1} near the edge
        std::vector<double> dr;
        std::vector<double> dphi;
        const double step = 1e-3 * g.offset_r1;
        for (int j = 0; j < probes; ++j) {
            const double y = opt.edge_y + step * static_cast<double>(j);
            dr.push_back(-(y - opt.edge_y));
            dphi.push_back(detail::edge_transition(billiard, f0 - y, N, opt.phi_tol) - phi_in);
        }
        g.boundary_slope = fit_line(dr, dphi).slope;
        g.width = g.thickness_phi / std::sqrt(1.0 + g.boundary_slope * g.boundary_slope);

        // far end of E_N along S*
        auto late_below_sstar = [&](double y) {
            const double ps = detail::sstar_phi(billiard.profile(), y);
            return detail::returns_late(billiard, f0 - y, ps - opt.sstar_offset, N);
        };
        const double y_lo = opt.sstar_y_lo;
        const double y_hi = 0.999 * f0;
        if (!late_below_sstar(y_lo) || late_below_sstar(y_hi)) throw StripNotFound("no transition along S*");
        g.y_star = bisect_predicate(late_below_sstar, y_lo, y_hi, opt.y_tol);
        g.length_Sstar = std::hypot(g.y_star, detail::sstar_phi(billiard.profile(), g.y_star));
        g.found = true;
    } catch (const StripNotFound& e) {
        g.found = false;
        g.note = e.what();
    }
    return g;
}

} // namespace cuspbill
