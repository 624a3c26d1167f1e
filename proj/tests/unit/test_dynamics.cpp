#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cuspbill/billiard.hpp"
#include "cuspbill/rng.hpp"
#include "cuspbill/tangent.hpp"

using namespace cuspbill;

namespace {

const Billiard& canon() {
    static const Billiard b{Profile::reciprocal()};
    return b;
}

double simpson(auto&& g, double a, double b, long panels) {
    const double h = (b - a) / static_cast<double>(panels);
    double s = g(a) + g(b);
    for (long i = 1; i < panels; ++i) s += g(a + h * static_cast<double>(i)) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double wall_residual(const BoundaryPoint& p) {
    switch (p.wall) {
    case Wall::U: return p.pos.y - 1.0 / (p.pos.x + 1.0);
    case Wall::L: return p.pos.x;
    case Wall::H: return p.pos.y;
    }
    return 1.0;
}

} // namespace

TEST(NextCollision, HorizontalRayHitsU) {
    const auto ev = canon().next_collision({0.0, 0.5}, {1.0, 0.0});
    EXPECT_EQ(ev.point.wall, Wall::U);
    EXPECT_NEAR(ev.point.pos.x, 1.0, 1e-14);
    EXPECT_NEAR(ev.point.pos.y, 0.5, 1e-14);
    EXPECT_NEAR(ev.flight_time, 1.0, 1e-14);
}

TEST(NextCollision, VerticalDropHitsH) {
    const auto ev = canon().next_collision({1.0, 0.5}, {0.0, -1.0});
    EXPECT_EQ(ev.point.wall, Wall::H);
    EXPECT_NEAR(ev.point.pos.x, 1.0, 1e-15);
    EXPECT_NEAR(ev.point.pos.y, 0.0, 1e-15);
    EXPECT_NEAR(ev.flight_time, 0.5, 1e-15);
}

TEST(NextCollision, LeftwardRayHitsL) {
    const auto ev = canon().next_collision({2.0, 0.1}, {-1.0, 0.0});
    EXPECT_EQ(ev.point.wall, Wall::L);
    EXPECT_NEAR(ev.point.pos.y, 0.1, 1e-15);
    EXPECT_NEAR(ev.flight_time, 2.0, 1e-15);
}

TEST(NextCollision, AimingAtVertexRaises) {
    const double s = 1.0 / std::sqrt(2.0);
    EXPECT_THROW((void)canon().next_collision({1.0, 0.0}, {-s, s}, Wall::H), VertexHit);
}

TEST(Reflect, FlatWalls) {
    const Billiard& b = canon();
    const Vec2 h = b.reflect({0.6, -0.8}, b.on_wall(Wall::H, 2.0));
    EXPECT_DOUBLE_EQ(h.x, 0.6);
    EXPECT_DOUBLE_EQ(h.y, 0.8);
    const Vec2 l = b.reflect({-0.6, 0.8}, b.on_wall(Wall::L, 0.3));
    EXPECT_DOUBLE_EQ(l.x, 0.6);
    EXPECT_DOUBLE_EQ(l.y, 0.8);
}

TEST(Reflect, CurvedWall) {
    // n = (f', -1) / sqrt(1 + f'^2) with f' = -1/4, d' = d - 2 (d.n) n
    const double fp = -0.25;
    const double k = std::sqrt(1.0 + fp * fp);
    const double nx = fp / k, ny = -1.0 / k;
    const double dn = nx;
    const Vec2 d = canon().reflect({1.0, 0.0}, canon().on_wall(Wall::U, 1.0));
    EXPECT_NEAR(d.x, 1.0 - 2.0 * dn * nx, 1e-15);
    EXPECT_NEAR(d.y, -2.0 * dn * ny, 1e-15);
    EXPECT_NEAR(d.x, 0.88235, 1e-5);
    EXPECT_NEAR(d.y, -0.47059, 1e-5);
    EXPECT_NEAR(norm(d), 1.0, 1e-15);
}

TEST(Reflect, RejectsOutgoingDirection) {
    EXPECT_THROW((void)canon().reflect({0.0, 1.0}, canon().on_wall(Wall::H, 1.0)), DomainError);
}

TEST(StepSection, HorizontalLaunchLandsAtXOne) {
    const auto [w, seg] = canon().step_section(PhasePoint{Section::M4, 0.5, 0.0}, Section::M5);
    EXPECT_EQ(w.section, Section::M);
    auto g = [](double x) { return std::sqrt(1.0 + std::pow(x + 1.0, -4)); };
    EXPECT_NEAR(w.r, -simpson(g, 0.0, 1.0, 100'000), 1e-11);
    // incidence angle of the horizontal ray against the normal at x = 1
    const double cos_inc = 0.25 / std::sqrt(1.0 + 0.0625);
    EXPECT_NEAR(std::fabs(w.phi), std::acos(cos_inc), 1e-13);
    ASSERT_EQ(seg.events.size(), 1u);
    EXPECT_EQ(seg.counted_collisions, 1);
}

TEST(StepSection, EventsLieOnWallsAndTimesArePositive) {
    PhiloxStream rng(11, 0);
    long checked = 0;
    for (int i = 0; i < 200; ++i) {
        const PhasePoint z = random_m5_point(canon(), rng, 20.0);
        try {
            const auto [w, seg] = canon().step_section(z, Section::M);
            double total = 0.0;
            for (const auto& ev : seg.events) {
                EXPECT_LE(std::fabs(wall_residual(ev.point)), 1e-12);
                EXPECT_GT(ev.flight_time, 0.0);
                total += ev.flight_time;
                ++checked;
            }
            EXPECT_GT(total, 0.0);
        } catch (const SingularOrbit&) {
        }
    }
    EXPECT_GT(checked, 150);
}

TEST(StepSection, UnfoldingIsStraight) {
    // the orbit leaving L low and nearly horizontal bounces on H before U
    const Billiard& b = canon();
    int orbits = 0;
    for (double phi : {0.2, 0.35, 0.5, 0.7}) {
        const PhasePoint z{Section::M4, 0.95, phi};
        const FlowState s0 = b.to_state(z);
        const auto [w, seg] = b.step_section(z, Section::M5);
        Vec2 p0 = s0.point.pos;
        Vec2 d0 = s0.dir;
        double sign = 1.0;
        int h_hits = 0;
        for (const auto& ev : seg.events) {
            const Vec2 q{ev.point.pos.x, sign * ev.point.pos.y};
            const double cross = (q.x - p0.x) * d0.y - (q.y - p0.y) * d0.x;
            EXPECT_LE(std::fabs(cross), 1e-9);
            if (ev.point.wall == Wall::H) {
                sign = -sign;
                ++h_hits;
            }
        }
        if (h_hits > 0) ++orbits;
    }
    EXPECT_GT(orbits, 0);
}

TEST(ReturnTime, OrthogonalBounceReturnsAtTwo) {
    // ray leaving U along its inward normal near the vertex reaches L;
    // the reversed ray returns after a single bounce
    const Billiard& b = canon();
    const BoundaryPoint p = b.on_wall(Wall::U, 0.1);
    const Vec2 n = b.inward_normal(p);
    const double y = p.pos.y + (p.pos.x / -n.x) * n.y;
    ASSERT_GT(y, 0.0);
    FlowState s{b.on_wall(Wall::L, y), {-n.x, -n.y}};
    const ReturnTime rt = b.return_time(s, 100);
    EXPECT_FALSE(rt.censored);
    EXPECT_EQ(rt.value, 2);
}

TEST(ReturnTime, EqualsUCollisionsPlusOne) {
    const Billiard& b = canon();
    PhiloxStream rng(5, 1);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const double r = rng.uniform_pos();
        const double phi = std::asin(2.0 * rng.uniform() - 1.0);
        const PhasePoint z{Section::M4, r, phi};
        try {
            const ReturnTime rt = b.return_time(z, 1000);
            if (rt.censored) continue;
            long u_hits = 0;
            (void)b.advance(b.to_state(z), Section::M4, [&](const CollisionEvent& ev) {
                if (ev.point.wall == Wall::U) ++u_hits;
            });
            EXPECT_EQ(rt.value, u_hits + 1);
            ++checked;
        } catch (const SingularOrbit&) {
        }
    }
    EXPECT_GT(checked, 250);
}

TEST(ReturnTime, DeepCuspIsCensored) {
    const ReturnTime rt = canon().return_time(PhasePoint{Section::M4, 1.0 - 1e-3, 0.0}, 10);
    EXPECT_TRUE(rt.censored);
}

TEST(TimeReverse, FlipsAngle) {
    const PhasePoint z = time_reverse(PhasePoint{Section::M, -2.0, 0.3});
    EXPECT_EQ(z.r, -2.0);
    EXPECT_EQ(z.phi, -0.3);
    EXPECT_EQ(time_reverse(z), (PhasePoint{Section::M, -2.0, 0.3}));
}

TEST(TimeReverse, ConjugatesT5ToItsInverse) {
    const Billiard& b = canon();
    PhiloxStream rng(3, 2);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const PhasePoint z = random_m5_point(b, rng, 20.0);
        try {
            const PhasePoint back = b.t5(time_reverse(b.t5(z)));
            EXPECT_NEAR(back.r, z.r, 1e-9);
            EXPECT_NEAR(back.phi, -z.phi, 1e-9);
            ++checked;
        } catch (const SingularOrbit&) {
        }
    }
    EXPECT_GT(checked, 250);
}

TEST(PhaseChart, RoundTrip) {
    const Billiard& b = canon();
    for (const PhasePoint z : {PhasePoint{Section::M4, 0.3, 0.4}, PhasePoint{Section::M, -3.5, -1.1}}) {
        const PhasePoint w = b.to_phase(b.to_state(z));
        EXPECT_NEAR(w.r, z.r, 1e-12);
        EXPECT_NEAR(w.phi, z.phi, 1e-14);
    }
    EXPECT_THROW((void)b.to_state(PhasePoint{Section::M, 0.0, 0.1}), DomainError);
    EXPECT_THROW((void)b.to_state(PhasePoint{Section::M4, 1.5, 0.1}), DomainError);
}

TEST(Jacobian, IdentityAndReversal) {
    // a power-of-two step keeps the differences exact
    const PhasePoint z{Section::M, -1.3, 0.4};
    const double h = 0x1p-24;
    const Jacobian id = jacobian_fd([](const PhasePoint& p) { return p; }, z, h);
    EXPECT_NEAR(id[0][0], 1.0, 1e-10);
    EXPECT_NEAR(id[0][1], 0.0, 1e-10);
    EXPECT_NEAR(id[1][0], 0.0, 1e-10);
    EXPECT_NEAR(id[1][1], 1.0, 1e-10);
    const Jacobian rev = jacobian_fd([](const PhasePoint& p) { return time_reverse(p); }, z, h);
    EXPECT_NEAR(rev[0][0], 1.0, 1e-10);
    EXPECT_NEAR(rev[0][1], 0.0, 1e-10);
    EXPECT_NEAR(rev[1][0], 0.0, 1e-10);
    EXPECT_NEAR(rev[1][1], -1.0, 1e-10);
}

TEST(Jacobian, T5PreservesMeasure) {
    const Billiard& b = canon();
    auto map = t5_power_map(b);
    PhiloxStream rng(17, 0);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const PhasePoint z = random_m5_point(b, rng, 20.0);
        try {
            const Jacobian j = jacobian_fd(map, z);
            EXPECT_LE(measure_defect(j, z, map(z).point), 1e-5);
            ++checked;
        } catch (const NumericalError&) {
        }
    }
    EXPECT_GT(checked, 250);
}

TEST(Singularity, S1MinusIsReversedS1Plus) {
    const auto plus = trace_singularity(canon(), SingularityKind::S1plus, 24);
    const auto minus = trace_singularity(canon(), SingularityKind::S1minus, 24);
    ASSERT_EQ(plus.points.size(), minus.points.size());
    ASSERT_FALSE(plus.points.empty());
    for (std::size_t i = 0; i < plus.points.size(); ++i) EXPECT_EQ(time_reverse(plus.points[i]), minus.points[i]);
}

// phi as a function of r along the plus curves: dphi/dr < 0
TEST(Singularity, PlusCurvesAreMonotone) {
    for (auto kind : {SingularityKind::S1plus, SingularityKind::S2plus}) {
        const auto c = trace_singularity(canon(), kind, 32);
        ASSERT_GT(c.points.size(), 8u) << singularity_name(kind);
        for (std::size_t i = 1; i < c.points.size(); ++i) {
            EXPECT_LT(c.points[i].r, c.points[i - 1].r);
            EXPECT_GT(c.points[i].phi, c.points[i - 1].phi) << singularity_name(kind) << " at " << i;
        }
    }
}

TEST(Singularity, S2PlusAimsAtVertexNearIt) {
    const Billiard& b = canon();
    SingularityOptions opt;
    opt.x_lo = 0.05;
    opt.x_hi = 0.5;
    const auto c = trace_singularity(b, SingularityKind::S2plus, 12, opt);
    ASSERT_FALSE(c.points.empty());
    for (const PhasePoint& z : c.points) {
        const FlowState s = b.to_state(z);
        const CollisionEvent ev = b.next_collision(s.point.pos, s.dir, Wall::U);
        ASSERT_EQ(ev.point.wall, Wall::H);
        // distance from V to the reflected ray
        const Vec2 v = b.vertex();
        const Vec2 q = ev.point.pos;
        const Vec2 d = ev.outgoing;
        const double dist = std::fabs((v.x - q.x) * d.y - (v.y - q.y) * d.x);
        EXPECT_LT(dist, 1e-8);
    }
}
