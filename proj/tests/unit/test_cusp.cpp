#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cuspbill/crosscheck.hpp"
#include "cuspbill/cusp.hpp"

using namespace cuspbill;

namespace {

// Root of t' - t - (1/t + 1/t') / tan(psi) on (t, hi) by plain bisection.
double flight_oracle(double t, double psi) {
    auto g = [&](double u) { return u - t - (1.0 / t + 1.0 / u) / std::tan(psi); };
    double lo = t, hi = t + 1.0;
    while (g(hi) < 0.0) hi = t + 2.0 * (hi - t);
    while (hi - lo > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Excursion wall_excursion(double y, double phi, double gamma_bar = 0.5) {
    return excursion_from_wall(y, phi, ExcursionOptions{10'000'000, gamma_bar});
}

} // namespace

TEST(AdvanceCusp, MatchesBisectionOracle) {
    const double t = 100.0, gamma = 0.01;
    const double psi = gamma + std::atan(1.0 / (t * t));
    const double tn = flight_oracle(t, psi);
    const double gn = gamma + std::atan(1.0 / (t * t)) + std::atan(1.0 / (tn * tn));
    const CuspStep s = advance_cusp(t, gamma, CuspPhase::Entering);
    EXPECT_NEAR(s.t, tn, 1e-9);
    EXPECT_NEAR(s.gamma, gn, 1e-14);
    EXPECT_NEAR(s.t, 101.97, 0.01);
    EXPECT_NEAR(s.gamma, 0.010196, 1e-6);
}

TEST(AdvanceCusp, ExitingInvertsEntering) {
    const CuspStep a = advance_cusp(50.0, 0.05, CuspPhase::Entering);
    const CuspStep b = advance_cusp(a.t, a.gamma, CuspPhase::Exiting);
    EXPECT_NEAR(b.t, 50.0, 1e-10);
    EXPECT_NEAR(b.gamma, 0.05, 1e-14);
}

TEST(AdvanceCusp, Errors) {
    EXPECT_THROW((void)advance_cusp(0.5, 0.1, CuspPhase::Entering), DomainError);
    EXPECT_THROW((void)advance_cusp(10.0, 0.0, CuspPhase::Entering), DomainError);
    EXPECT_THROW((void)advance_cusp(10.0, 1.5707, CuspPhase::Entering), TurnReached);
}

TEST(Excursion, EnteringIncrementsAreExact) {
    const Excursion e = wall_excursion(0.05, 0.02);
    ASSERT_FALSE(e.censored);
    ASSERT_GT(e.N, 100);
    for (long n = 1; n + 1 < e.N2; ++n) {
        const auto i = static_cast<std::size_t>(n - 1);
        EXPECT_GT(e.t[i + 1], e.t[i]);
        const double inc = std::atan(1.0 / (e.t[i] * e.t[i])) + std::atan(1.0 / (e.t[i + 1] * e.t[i + 1]));
        EXPECT_NEAR(e.gamma[i + 1] - e.gamma[i], inc, 1e-14);
    }
}

TEST(Excursion, RecursionAgreesWithFlow) {
    const Billiard b{Profile::reciprocal()};
    for (double y : {0.3, 0.1, 0.05}) {
        for (double phi : {0.05, -0.1, 0.2}) {
            const Excursion e = wall_excursion(y, phi);
            if (e.N > 1000) continue;
            const FlowAgreement a = compare_with_flow(b, e, y, phi);
            EXPECT_EQ(a.R, e.N + 1);
            EXPECT_LE(a.max_dx, 1e-9 * (1.0 + e.x[static_cast<std::size_t>(e.N2 - 1)]));
            EXPECT_LE(a.max_dgamma, 1e-9);
        }
    }
}

TEST(Excursion, CapCensors) {
    const Excursion e = simulate_excursion(1e-3, 10.0, ExcursionOptions{50, 0.5});
    EXPECT_TRUE(e.censored);
    EXPECT_EQ(e.N, 50);
}

TEST(Excursion, TurnSymmetryInequalities) {
    int checked = 0;
    for (double y : {0.2, 0.08, 0.03}) {
        for (double phi : {0.01, 0.03, -0.05, 0.08}) {
            const Excursion e = wall_excursion(y, phi);
            if (e.censored || e.N < 20) continue;
            const long N2 = e.N2;
            auto X = [&](long n) { return e.x[static_cast<std::size_t>(n - 1)]; };
            auto G = [&](long n) { return e.gamma[static_cast<std::size_t>(n - 1)]; };
            const long s = (N2 + 1 <= e.N && X(N2 + 1) >= X(N2 - 1)) ? 1 : -1;
            for (long i = 1; N2 - i >= 1 && N2 + i <= e.N; ++i) {
                EXPECT_LE(X(N2 - s * i), X(N2 + s * i) * (1 + 1e-12));
                EXPECT_LE(G(N2 - s * i), G(N2 + s * i) * (1 + 1e-12) + 1e-15);
            }
            EXPECT_LE(std::fabs(static_cast<double>(N2) - 0.5 * static_cast<double>(e.N)), 2.0);
            ++checked;
        }
    }
    EXPECT_GT(checked, 6);
}

TEST(SegmentMarks, MonotoneEnteringData) {
    Excursion e;
    e.gamma = {0.01, 0.05, 0.08, 0.2, 0.6, 1.2, 0.4, 0.09, 0.03};
    e.x = {1, 2, 3, 4, 5, 6, 5, 4, 3};
    e.N = 9;
    const SegmentMarks m = segment_marks(e, 0.1);
    EXPECT_EQ(m.N2, 6);
    EXPECT_EQ(m.N1, 3);
    EXPECT_EQ(m.N3, 8);
    EXPECT_THROW((void)segment_marks(e, 0.005), MarksUndefined);
}

TEST(SegmentMarks, ReversalSwapsN1AndN3) {
    const Excursion e = wall_excursion(0.05, 0.02);
    ASSERT_TRUE(e.has_marks());
    const Excursion r = reverse_excursion(e, 0.5);
    ASSERT_TRUE(r.has_marks());
    EXPECT_EQ(r.N1, e.N + 1 - e.N3);
    EXPECT_EQ(r.N3, e.N + 1 - e.N1);
    EXPECT_EQ(r.N2, e.N + 1 - e.N2);
}

TEST(SegmentMarks, SegmentsScaleWithN) {
    EnsembleOptions opt;
    opt.N_lo = 1000;
    opt.N_hi = 30000;
    const auto ens = conditioned_ensemble(40, 3, opt);
    double lo = 1e9, hi = 0;
    for (const auto& e : ens) {
        ASSERT_TRUE(e.has_marks());
        const double N = static_cast<double>(e.N);
        for (double seg : {double(e.N1), double(e.N2 - e.N1), double(e.N3 - e.N2), double(e.N - e.N3)}) {
            lo = std::min(lo, seg / N);
            hi = std::max(hi, seg / N);
        }
    }
    EXPECT_GT(lo, 0.005);
    EXPECT_LT(hi, 0.6);
}

TEST(Ensemble, MembersSatisfyConditioning) {
    const auto ens = conditioned_ensemble(30, 9);
    ASSERT_EQ(ens.size(), 30u);
    for (const auto& e : ens) {
        EXPECT_FALSE(e.censored);
        EXPECT_GE(e.N, 100);
        EXPECT_LE(e.N, 100000);
        const double band = e.gamma[0] * std::cbrt(static_cast<double>(e.N));
        EXPECT_GE(band, 0.5);
        EXPECT_LE(band, 2.0);
        EXPECT_TRUE(e.from_wall());
    }
    const auto again = conditioned_ensemble(30, 9, EnsembleOptions{.threads = 3});
    for (std::size_t i = 0; i < ens.size(); ++i) EXPECT_EQ(ens[i].x, again[i].x);
}

TEST(Diagnostics, OmegaBoundsAndMonotoneT) {
    EnsembleOptions opt;
    opt.N_lo = 10000;
    opt.N_hi = 100000;
    for (const auto& e : conditioned_ensemble(6, 21, opt)) {
        const ExcursionDiagnostics d = excursion_diagnostics(e);
        EXPECT_TRUE(d.lower_all);
        for (long n = 1; n < e.N2 - 1; ++n) EXPECT_LT(d.u[static_cast<std::size_t>(n - 1)], 1.0);
        for (long n = 100; n <= e.N1; ++n) {
            const double ratio = d.omega[static_cast<std::size_t>(n - 1)] / (6.0 * static_cast<double>(n));
            EXPECT_GE(ratio, 0.9);
            EXPECT_LE(ratio, 1.1);
        }
        EXPECT_LT(d.sum_inv_t2, 10.0);
    }
}

TEST(Exponents, SyntheticPowerLawsAreExact) {
    std::vector<Excursion> ens;
    for (double N = 100; N <= 1e5; N *= 2.0) {
        Excursion e;
        e.N = static_cast<long>(N);
        e.N2 = e.N / 2;
        e.N1 = e.N / 4;
        e.N3 = 3 * e.N / 4;
        const double Nd = static_cast<double>(e.N);
        for (long n = 1; n <= e.N; ++n) {
            const double nd = static_cast<double>(n);
            e.t.push_back(std::pow(Nd, 1.0 / 6.0) * std::cbrt(nd));
            e.gamma.push_back(std::cbrt(nd / Nd));
            e.tau.push_back(std::pow(nd, -2.0 / 3.0) * std::pow(Nd, 1.0 / 6.0));
        }
        e.x = e.t;
        e.t[static_cast<std::size_t>(e.N2 - 1)] = e.x[static_cast<std::size_t>(e.N2 - 1)] = std::sqrt(Nd);
        ens.push_back(std::move(e));
    }
    const ExponentReport r = fit_excursion_exponents(ens);
    EXPECT_NEAR(r.t1_vs_N.slope, 1.0 / 6.0, 1e-12);
    EXPECT_NEAR(r.x1_vs_N.slope, 1.0 / 6.0, 1e-12);
    EXPECT_NEAR(r.xN2_vs_N.slope, 0.5, 1e-12);
    EXPECT_NEAR(r.N_vs_gamma1.slope, -3.0, 1e-9);
    EXPECT_NEAR(r.xn_vs_n.slope, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.gamman_vs_n.slope, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.taun_vs_n.slope, -2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.xN2_vs_N.stderr_, 0.0, 1e-10);
}

TEST(Exponents, NeedsTwoDecades) {
    EnsembleOptions opt;
    opt.N_lo = 100;
    opt.N_hi = 900;
    const auto ens = conditioned_ensemble(12, 4, opt);
    EXPECT_THROW((void)fit_excursion_exponents(ens), InsufficientRange);
}
