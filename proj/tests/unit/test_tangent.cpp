#include <gtest/gtest.h>

#include <cmath>

#include "cuspbill/cusp.hpp"
#include "cuspbill/tangent.hpp"

using namespace cuspbill;

TEST(FrontCurvature, FlatIncomingFront) {
    const double K = 0.3, g = 0.2;
    EXPECT_DOUBLE_EQ(front_curvature_step(0.0, 1.7, K, g), 2.0 * K / std::sin(g));
}

TEST(FrontCurvature, LongFlightLimit) {
    const double K = 0.3, g = 0.2;
    const double far = front_curvature_step(5.0, 1e12, K, g);
    EXPECT_NEAR(far, 2.0 * K / std::sin(g), 1e-11);
    EXPECT_NEAR(front_curvature_step(5.0, 2.0, K, g), 2.0 * K / std::sin(g) + 5.0 / 11.0, 1e-15);
}

TEST(FrontCurvature, Errors) {
    EXPECT_THROW((void)front_curvature_step(-1.0, 1.0, 1.0, 0.1), DomainError);
    EXPECT_THROW((void)front_curvature_step(1.0, 0.0, 1.0, 0.1), DomainError);
    EXPECT_THROW((void)front_curvature_step(1.0, 1.0, 1.0, 0.0), DomainError);
}

TEST(PNorm, ConeMembership) {
    EXPECT_TRUE((PNormVector{1.0, 2.0, 0.3}).unstable());
    EXPECT_FALSE((PNormVector{1.0, -2.0, 0.3}).unstable());
    EXPECT_TRUE((PNormVector{1.0, -2.0, 0.3}).stable());
    EXPECT_NEAR((PNormVector{2.0, 5.0, 0.5}).p_norm(), 2.0 * std::cos(0.5), 1e-15);
}

TEST(Ledger, RecursionAndProducts) {
    const Excursion e = excursion_from_wall(0.05, 0.02);
    ASSERT_TRUE(e.has_marks());
    const ExpansionLedger L = expansion_ledger(e);
    ASSERT_EQ(L.lambda.size(), static_cast<std::size_t>(e.N + 1));
    const Profile p = Profile::reciprocal();
    double B = L.B0;
    for (long n = 1; n <= e.N; ++n) {
        const auto i = static_cast<std::size_t>(n);
        B = front_curvature_step(B, i == 1 ? e.tau0 : e.tau[i - 2], curvature(p, e.x[i - 1]), e.gamma[i - 1]);
        EXPECT_NEAR(L.B[i], B, 1e-12 * B);
        EXPECT_NEAR(L.lambda[i], e.tau[i - 1] * B, 1e-12 * L.lambda[i]);
    }
    EXPECT_NEAR(L.log_entering + L.log_turning + L.log_exiting, L.log_total, 1e-12 * L.log_total);
    EXPECT_NEAR(L.total / L.direct_product, 1.0, 1e-12);
    EXPECT_NEAR(std::log(L.total), L.cum_log.back(), 1e-12 * L.log_total);
}

TEST(Ledger, MatchesFiniteDifferenceExpansion) {
    const Billiard b{Profile::reciprocal()};
    int checked = 0;
    for (double phi : {0.4, -0.3, 0.2, -0.15, 0.1}) {
        const double y = 0.3;
        const Excursion e = excursion_from_wall(y, phi);
        if (e.N > 700 || e.N < 5) continue;
        ++checked;
        const ExpansionLedger L = expansion_ledger(e);
        const double fd = fd_wall_expansion(b, PhasePoint{Section::M4, 1.0 - y, phi}, e.N + 1);
        EXPECT_NEAR(L.total / fd, 1.0, 1e-5) << e.N;
    }
    EXPECT_GE(checked, 2);
}

TEST(Ledger, LambdaScalesLikeInverseN) {
    EnsembleOptions opt;
    opt.N_lo = 1000;
    opt.N_hi = 100000;
    const auto ens = conditioned_ensemble(12, 8, opt);
    double lo = 1e9, hi = 0.0, turn_lo = 1e9, turn_hi = 0.0, sq = 0.0;
    for (const auto& e : ens) {
        const ExpansionLedger L = expansion_ledger(e);
        for (long n = 10; n <= e.N1; ++n) {
            const double v = L.lambda[static_cast<std::size_t>(n)] * static_cast<double>(n);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (long n = e.N1; n <= e.N3; ++n) {
            const double v = L.lambda[static_cast<std::size_t>(n)] * static_cast<double>(e.N);
            turn_lo = std::min(turn_lo, v);
            turn_hi = std::max(turn_hi, v);
        }
        sq = std::max(sq, L.sum_lambda_sq);
    }
    EXPECT_GT(lo, 0.1);
    EXPECT_LT(hi, 10.0);
    EXPECT_GT(turn_lo, 0.01);
    EXPECT_LT(turn_hi, 100.0);
    EXPECT_LT(sq, 2000.0);
}

TEST(Hyperbolicity, SmallRun) {
    EnsembleOptions opt;
    opt.N_lo = 100;
    opt.N_hi = 20000;
    const auto ens = conditioned_ensemble(40, 12, opt);
    const Billiard b{Profile::reciprocal()};
    const HyperbolicityReport r = hyperbolicity_checks(b, ens, 200, 5);
    EXPECT_EQ(r.cone_violations, 0);
    EXPECT_GT(r.cone_samples, 150);
    EXPECT_LE(r.measure_defect_max, 1e-5);
    EXPECT_LE(r.ledger_vs_direct_max, 1e-8);
    ASSERT_EQ(r.total_over_N.size(), ens.size());
    for (double v : r.total_over_N) EXPECT_GT(v, 0.5);
    HyperbolicityOptions par;
    par.threads = 3;
    const HyperbolicityReport r3 = hyperbolicity_checks(b, ens, 200, 5, par);
    EXPECT_EQ(r3.measure_defect_max, r.measure_defect_max);
    EXPECT_EQ(r3.total_over_N, r.total_over_N);
}
