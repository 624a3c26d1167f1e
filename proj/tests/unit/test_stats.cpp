#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cuspbill/stats.hpp"

using namespace cuspbill;

namespace {

const Billiard& canon() {
    static const Billiard b{Profile::reciprocal()};
    return b;
}

} // namespace

TEST(Sampler, SymmetricMoments) {
    const std::size_t n = 200'000;
    const auto s = sample_m4(n, 42);
    double mean_sin = 0.0, pos = 0.0, mean_r = 0.0, mean_sin2 = 0.0;
    for (const auto& p : s) {
        ASSERT_GT(p.r, 0.0);
        ASSERT_LE(p.r, 1.0);
        ASSERT_LT(std::fabs(p.phi), std::numbers::pi / 2);
        mean_sin += std::sin(p.phi);
        mean_sin2 += std::sin(p.phi) * std::sin(p.phi);
        pos += p.phi > 0.0 ? 1.0 : 0.0;
        mean_r += p.r;
    }
    const double nd = static_cast<double>(n);
    const double tol = 3.0 / std::sqrt(nd);
    EXPECT_NEAR(mean_sin / nd, 0.0, tol);
    EXPECT_NEAR(pos / nd, 0.5, tol);
    EXPECT_NEAR(mean_r / nd, 0.5, tol);
    // sin(phi) uniform on (-1, 1): E sin^2 = 1/3
    EXPECT_NEAR(mean_sin2 / nd, 1.0 / 3.0, tol);
}

TEST(Sampler, SinPhiIsUniform) {
    std::vector<double> xs;
    for (const auto& p : sample_m4(50'000, 7)) xs.push_back(std::sin(p.phi));
    const KsResult ks = ks_one_sample(xs, [](double v) { return 0.5 * (v + 1.0); });
    EXPECT_GT(ks.p, 0.01);
}

TEST(Sampler, DeterministicAndIndexAddressed) {
    const M4Sampler a = M4Sampler::whole(99);
    const auto s = sample_m4(100, 99);
    for (std::uint64_t i = 0; i < 100; ++i) {
        EXPECT_EQ(a(i).r, s[i].r);
        EXPECT_EQ(a(i).phi, s[i].phi);
    }
    EXPECT_NE(M4Sampler::whole(100)(0).r, a(0).r);
    EXPECT_DOUBLE_EQ(a.measure(), 2.0);
}

TEST(Ks, DetectsShiftedSample) {
    std::vector<double> xs;
    for (const auto& p : sample_m4(5000, 1)) xs.push_back(0.2 + 0.8 * std::sin(p.phi));
    EXPECT_LT(ks_one_sample(xs, [](double v) { return std::clamp(0.5 * (v + 1.0), 0.0, 1.0); }).p, 1e-6);
    EXPECT_NEAR(kolmogorov_q(0.0), 1.0, 0.0);
    // tabulated: Q(1.36) = 0.0494
    EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 5e-4);
}

TEST(Histogram, PartitionIsExact) {
    const M4Sampler sampler = M4Sampler::whole(5);
    const ReturnHistogram h = return_histogram(canon(), sampler, 20'000, HistogramOptions{256, 1, 4096});
    long sum = h.censored;
    double mu = h.mu_censored();
    for (const auto& [N, c] : h.counts) {
        sum += c;
        mu += h.mu_hat(N);
    }
    EXPECT_EQ(sum, h.total);
    EXPECT_EQ(h.total + h.singular, 20'000);
    EXPECT_NEAR(mu, h.normalizer, 1e-12);
    EXPECT_LT(h.singular, 10);
    long prev = h.total + 1;
    for (long N = 1; N <= 256; ++N) {
        EXPECT_LE(h.tail_count(N), prev);
        prev = h.tail_count(N);
    }
}

TEST(Histogram, ThreadCountDoesNotChangeResult) {
    const M4Sampler sampler = M4Sampler::whole(8);
    const auto a = return_histogram(canon(), sampler, 12'000, HistogramOptions{512, 1, 1000});
    const auto b = return_histogram(canon(), sampler, 12'000, HistogramOptions{512, 4, 1000});
    EXPECT_EQ(a.counts, b.counts);
    EXPECT_EQ(a.censored, b.censored);
}

TEST(PowerLaw, ExactData) {
    std::vector<double> xs, ys;
    for (double x = 1; x < 1000; x *= 1.5) {
        xs.push_back(x);
        ys.push_back(3.0 * std::pow(x, -4.0 / 3.0));
    }
    const PowerLawFit f = fit_power_law(xs, ys);
    EXPECT_NEAR(f.slope, -4.0 / 3.0, 1e-12);
    EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
    EXPECT_NEAR(f.stderr_, 0.0, 1e-10);
}

TEST(PowerLaw, ConstantData) {
    const std::vector<double> xs{1, 2, 4, 8, 16}, ys(5, 2.5);
    EXPECT_NEAR(fit_power_law(xs, ys).slope, 0.0, 1e-14);
}

TEST(PowerLaw, NoisyDataWithinThreeStderr) {
    std::mt19937_64 gen(2024);
    std::normal_distribution<double> eps(0.0, 0.1);
    std::vector<double> xs, ys;
    for (double x = 1; x < 1e4; x *= 1.2) {
        xs.push_back(x);
        ys.push_back(std::pow(x, -0.7) * std::exp(eps(gen)));
    }
    const PowerLawFit f = fit_power_law(xs, ys);
    EXPECT_LT(std::fabs(f.slope + 0.7), 3.0 * f.stderr_);
}

TEST(PowerLaw, InsufficientData) {
    const std::vector<double> xs{1, 2, 3}, ys{1, 2, 3};
    EXPECT_THROW((void)fit_power_law(xs, ys), InsufficientData);
    const std::vector<double> xs2{1, 2, 3, 4, 5}, ys2{1, 2, 3, 4, 5};
    EXPECT_THROW((void)fit_power_law(xs2, ys2, 2.5, 10.0), InsufficientData);
}

TEST(Correlation, HitsSatisfyDefinition) {
    CorrelationOptions opt;
    opt.A_trials = 0;
    const CorrelationEstimate e = correlation_estimate(canon(), 16, 300'000, 77, opt);
    ASSERT_GT(e.hits, 0);
    ASSERT_EQ(static_cast<long>(e.hit_points.size()), e.hits);
    for (std::size_t i = 0; i < e.hit_points.size(); ++i) {
        const PhasePoint z = e.hit_points[i].point();
        EXPECT_EQ(canon().return_time(z, 100).value, 17);
        const PhasePoint w = e.image_points[i].point();
        EXPECT_EQ(w.section, Section::M4);
        EXPECT_EQ(canon().return_time(w, 100).value, 17);
    }
    EXPECT_NEAR(e.mu_EmTEm, e.region_measure * static_cast<double>(e.hits) / static_cast<double>(e.trials), 1e-15);
}

TEST(Correlation, StratumContainsHits) {
    const KappaCalibration k = calibrate_kappa(canon(), 16, 400'000, 3);
    EXPECT_GT(k.kappa, 0.5);
    EXPECT_LT(k.kappa, 3.0);
    CorrelationOptions opt;
    opt.strategy = Sampling::CornerStratified;
    opt.kappa = k.kappa;
    opt.A_trials = 50'000;
    const CorrelationEstimate s = correlation_estimate(canon(), 16, 200'000, 78, opt);
    EXPECT_GT(s.hits, 10);
    EXPECT_LT(s.region_measure, 2.0);
    EXPECT_GE(s.mu_AtailTA + 3.0 * s.stderr_A, s.mu_EmTEm - 3.0 * s.stderr_);
    const M4Sampler box = corner_sampler(1, 16, k.kappa);
    for (const auto& p : s.hit_points) {
        EXPECT_GE(p.r, box.r_lo());
        EXPECT_LE(std::fabs(p.phi), box.phi_max() + 1e-15);
    }
}

TEST(Correlation, ZeroHitsGivesBound) {
    CorrelationOptions opt;
    opt.A_trials = 0;
    const CorrelationEstimate e = correlation_estimate(canon(), 128, 2000, 1, opt);
    EXPECT_TRUE(e.zero_hits);
    EXPECT_NEAR(e.upper_bound, 2.0 * 3.0 / 2000.0, 1e-12);
}

TEST(Symmetry, ReflectedSetMatches) {
    std::vector<M4Sample> pts;
    for (const auto& p : sample_m4(4000, 12)) pts.push_back(p);
    EXPECT_GT(reflection_symmetry(pts).min_p(), 0.01);
    std::vector<M4Sample> skew;
    for (const auto& p : pts) skew.push_back({p.phi > 0 ? p.r * p.r : p.r, p.phi});
    EXPECT_LT(reflection_symmetry(skew).ks_r.p, 1e-6);
}

TEST(Strips, ProbeFindsGeometry) {
    const StripGeometry g64 = strip_probe(canon(), 64);
    const StripGeometry g256 = strip_probe(canon(), 256);
    ASSERT_TRUE(g64.found) << g64.note;
    ASSERT_TRUE(g256.found) << g256.note;
    EXPECT_GT(g64.offset_r1, g256.offset_r1);
    EXPECT_GT(g64.width, g256.width);
    EXPECT_GT(g64.length_Sstar, g256.length_Sstar);
    // the edge point at the strip centre returns after N + 1 steps
    const PhasePoint z{Section::M4, 1.0 - 1e-10, -g64.offset_r1};
    EXPECT_EQ(canon().return_time(z, 1000).value, 65);
    EXPECT_THROW((void)strip_probe(canon(), 8), DomainError);
}
