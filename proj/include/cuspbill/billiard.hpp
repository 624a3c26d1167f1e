#pragma once

// Billiard flow in the cusp table and its Poincare sections.
//
// Walls: U is the graph of f, L the vertical segment x = 0, H the horizontal
// half-line y = 0. Sections: M (collisions on U), M4 (collisions on L) and
// M5 = M u M4. H is crossed by explicit reflection and never counts as a
// section hit.
//
// Phase coordinates (r, phi):
//   on U, r = arc_length(x) < 0 with r = 0 at the vertex V = (0, f(0));
//   on L, r = f(0) - y in (0, f(0)], so r = f(0) at the corner (0, 0).
//   phi is the angle from the inward normal n to the outgoing velocity,
//   positive towards the direction of increasing r. In both charts the unit
//   vector of increasing r is n rotated by -90 degrees, so that
//       v = cos(phi) n + sin(phi) tau,  tau = (n.y, -n.x).
//   With this orientation dr*dphi > 0 describes divergent beams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "numerics.hpp"
#include "profile.hpp"

namespace cuspbill {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

[[nodiscard]] inline double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
[[nodiscard]] inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }

enum class Wall : std::uint8_t { U, L, H };
enum class Section : std::uint8_t { M, M4, M5 };

[[nodiscard]] inline const char* wall_name(Wall w) noexcept {
    switch (w) {
    case Wall::U: return "U";
    case Wall::L: return "L";
    case Wall::H: return "H";
    }
    return "?";
}

[[nodiscard]] inline const char* section_name(Section s) noexcept {
    switch (s) {
    case Section::M: return "M";
    case Section::M4: return "M4";
    case Section::M5: return "M5";
    }
    return "?";
}

[[nodiscard]] constexpr bool in_section(Wall w, Section s) noexcept {
    switch (s) {
    case Section::M: return w == Wall::U;
    case Section::M4: return w == Wall::L;
    case Section::M5: return w != Wall::H;
    }
    return false;
}

/// A point of the boundary. `param` is x on U and H, y on L.
struct BoundaryPoint {
    Wall wall = Wall::L;
    Vec2 pos;
    double param = 0.0;
};

/// A point of M (r < 0) or M4 (r > 0). `section` records which.
struct PhasePoint {
    Section section = Section::M4;
    double r = 0.0;
    double phi = 0.0;

    friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

struct CollisionEvent {
    BoundaryPoint point;
    Vec2 incoming;
    Vec2 outgoing;
    double flight_time = 0.0;
    bool tangential = false;
};

struct OrbitSegment {
    std::vector<CollisionEvent> events;
    long counted_collisions = 0; // hits on U and L
};

/// Cartesian state right after a collision.
struct FlowState {
    BoundaryPoint point;
    Vec2 dir;
};

struct ReturnTime {
    long value = 0;
    bool censored = false;
};

struct BilliardOptions {
    double tangency_eps = 1e-12;  // sine of the incidence angle
    double vertex_radius = 1e-12; // exclusion radius around V and (0, 0)
    long collision_budget = 10'000'000;
};

/// (r, phi) -> (r, -phi).
[[nodiscard]] constexpr PhasePoint time_reverse(PhasePoint z) noexcept { return {z.section, z.r, -z.phi}; }

class Billiard {
public:
    explicit Billiard(Profile profile, BilliardOptions options = {})
        : profile_(profile), arc_(profile), options_(options), f0_(profile.value(0.0)) {}

    [[nodiscard]] const Profile& profile() const noexcept { return profile_; }
    [[nodiscard]] const ArcLength& arc() const noexcept { return arc_; }
    [[nodiscard]] const BilliardOptions& options() const noexcept { return options_; }
    [[nodiscard]] double f0() const noexcept { return f0_; }
    [[nodiscard]] Vec2 vertex() const noexcept { return {0.0, f0_}; }

    /// Unit inward normal at a boundary point.
    [[nodiscard]] Vec2 inward_normal(const BoundaryPoint& p) const noexcept {
        switch (p.wall) {
        case Wall::L: return {1.0, 0.0};
        case Wall::H: return {0.0, 1.0};
        case Wall::U: break;
        }
        const double f1 = profile_.slope(p.param);
        const double k = std::sqrt(1.0 + f1 * f1);
        return {f1 / k, -1.0 / k};
    }

    [[nodiscard]] BoundaryPoint on_wall(Wall w, double param) const {
        switch (w) {
        case Wall::U: return {w, {param, profile_.value(param)}, param};
        case Wall::L: return {w, {0.0, param}, param};
        case Wall::H: return {w, {param, 0.0}, param};
        }
        return {};
    }

    /// Specular reflection d' = d - 2 (d.n) n.
    [[nodiscard]] Vec2 reflect(Vec2 d, const BoundaryPoint& p) const {
        const Vec2 n = inward_normal(p);
        const double dn = dot(d, n);
        if (!(dn < 0.0)) throw DomainError("reflect: direction does not point into the wall");
        return reflect_unchecked(d, n, dn, p.wall);
    }

    /// First boundary point reached from `point` along the unit direction
    /// `dir`. `from` names the wall the point lies on, if any; when omitted
    /// it is inferred. The returned event carries the reflected direction.
    [[nodiscard]] CollisionEvent next_collision(Vec2 point, Vec2 dir, std::optional<Wall> from = std::nullopt) const {
        if (!from) from = infer_wall(point);
        Hit h = find_hit(point, dir, from);
        CollisionEvent ev;
        ev.point = h.point;
        ev.incoming = dir;
        ev.flight_time = h.s;
        const Vec2 n = inward_normal(h.point);
        const double dn = dot(dir, n);
        ev.tangential = h.point.wall == Wall::U && std::fabs(dn) < options_.tangency_eps;
        ev.outgoing = ev.tangential ? dir : reflect_unchecked(dir, n, dn, h.point.wall);
        return ev;
    }

    /// Cartesian state of a phase point.
    [[nodiscard]] FlowState to_state(const PhasePoint& z) const {
        if (!std::isfinite(z.r) || !std::isfinite(z.phi) || !(std::fabs(z.phi) < std::numbers::pi / 2)) {
            throw DomainError("phase point must have finite r and |phi| < pi/2");
        }
        FlowState s;
        if (z.r > 0.0) {
            if (z.r > f0_) throw DomainError("phase point on L must have r <= f(0)");
            s.point = on_wall(Wall::L, f0_ - z.r);
        } else if (z.r < 0.0) {
            s.point = on_wall(Wall::U, arc_.inverse(z.r));
        } else {
            throw DomainError("phase point r = 0 is the vertex");
        }
        const Vec2 n = inward_normal(s.point);
        const Vec2 tau{n.y, -n.x};
        const double c = std::cos(z.phi);
        const double sn = std::sin(z.phi);
        s.dir = {c * n.x + sn * tau.x, c * n.y + sn * tau.y};
        return s;
    }

    /// Phase point of a state based on U or L.
    [[nodiscard]] PhasePoint to_phase(const FlowState& s) const {
        PhasePoint z;
        switch (s.point.wall) {
        case Wall::L:
            z.section = Section::M4;
            z.r = f0_ - s.point.param;
            break;
        case Wall::U:
            z.section = Section::M;
            z.r = arc_.forward(s.point.param);
            break;
        case Wall::H: throw DomainError("to_phase: H is not part of any section");
        }
        const Vec2 n = inward_normal(s.point);
        const Vec2 tau{n.y, -n.x};
        z.phi = std::atan2(dot(s.dir, tau), dot(s.dir, n));
        return z;
    }

    /// Flows from `s` until the first hit on `target`, reporting every
    /// collision (H included) to `observer`. Tangencies and vertex hits
    /// raise SingularOrbit.
    template <class Observer>
    [[nodiscard]] FlowState advance(FlowState s, Section target, Observer&& observer) const {
        for (long count = 0;; ++count) {
            if (count >= options_.collision_budget) {
                throw ExcursionCap("collision budget of " + std::to_string(options_.collision_budget) + " exceeded");
            }
            Hit h;
            try {
                h = find_hit(s.point.pos, s.dir, s.point.wall);
            } catch (const VertexHit& e) {
                throw SingularOrbit(e.what());
            }
            const Vec2 n = inward_normal(h.point);
            const double dn = dot(s.dir, n);
            if (h.point.wall == Wall::U && std::fabs(dn) < options_.tangency_eps) {
                throw SingularOrbit("tangential collision on U at x = " + std::to_string(h.point.param));
            }
            CollisionEvent ev;
            ev.point = h.point;
            ev.incoming = s.dir;
            ev.outgoing = reflect_unchecked(s.dir, n, dn, h.point.wall);
            ev.flight_time = h.s;
            observer(static_cast<const CollisionEvent&>(ev));
            s.point = h.point;
            s.dir = ev.outgoing;
            if (in_section(h.point.wall, target)) return s;
        }
    }

    [[nodiscard]] FlowState advance(FlowState s, Section target) const {
        return advance(s, target, [](const CollisionEvent&) {});
    }

    /// One application of T (target M), T4 (target M4) or T5 (target M5).
    [[nodiscard]] std::pair<PhasePoint, OrbitSegment> step_section(const PhasePoint& z, Section target) const {
        OrbitSegment seg;
        const FlowState end = advance(to_state(z), target, [&](const CollisionEvent& ev) {
            seg.events.push_back(ev);
            if (ev.point.wall != Wall::H) ++seg.counted_collisions;
        });
        return {to_phase(end), std::move(seg)};
    }

    /// T5 as a plain map.
    [[nodiscard]] PhasePoint t5(const PhasePoint& z) const { return to_phase(advance(to_state(z), Section::M5)); }

    /// R(z) = inf{n >= 1 : T5^n z in M4}, censored once it would exceed cap.
    [[nodiscard]] ReturnTime return_time(const PhasePoint& z, long cap) const {
        if (!(z.r > 0.0)) throw DomainError("return_time: z must lie in M4");
        return return_time(to_state(z), cap);
    }

    [[nodiscard]] ReturnTime return_time(FlowState s, long cap) const {
        if (cap < 1) throw DomainError("return_time: cap must be >= 1");
        for (long n = 1; n <= cap; ++n) {
            s = advance(s, Section::M5);
            if (s.point.wall == Wall::L) return {n, false};
        }
        return {cap, true};
    }

private:
    struct Hit {
        BoundaryPoint point;
        double s = 0.0;
    };

    static constexpr double kInf = std::numeric_limits<double>::infinity();

    [[nodiscard]] Vec2 reflect_unchecked(Vec2 d, Vec2 n, double dn, Wall w) const noexcept {
        switch (w) {
        case Wall::L: return {-d.x, d.y};
        case Wall::H: return {d.x, -d.y};
        case Wall::U: break;
        }
        Vec2 r{d.x - 2.0 * dn * n.x, d.y - 2.0 * dn * n.y};
        const double len = std::hypot(r.x, r.y);
        return {r.x / len, r.y / len};
    }

    [[nodiscard]] std::optional<Wall> infer_wall(Vec2 p) const {
        if (p.x == 0.0) return Wall::L;
        if (p.y == 0.0) return Wall::H;
        if (p.x > 0.0 && std::fabs(p.y - profile_.value(p.x)) <= 1e-13 * std::max(1.0, p.y)) return Wall::U;
        return std::nullopt;
    }

    // Smallest s > 0 with p + s d on U, or +inf. `limit` bounds the search
    // (the first flat-wall hit); the part of the ray beyond it is irrelevant.
    [[nodiscard]] double hit_u(Vec2 p, Vec2 d, bool on_u, double limit) const {
        // g(s) = y(s) - f(x(s)) is concave, so a ray leaving U never returns to it
        if (on_u) return kInf;
        if (profile_.has_quadratic_chords()) return hit_u_quadratic(p, d, limit);
        return hit_u_generic(p, d, limit);
    }

    [[nodiscard]] double hit_u_quadratic(Vec2 p, Vec2 d, double limit) const {
        // (y + s dy)(x + b + s dx) = c on the physical branch
        const double c0 = profile_.scale();
        const double t = p.x + profile_.shift();
        const double a = d.x * d.y;
        const double b = p.y * d.x + t * d.y;
        const double c = p.y * t - c0;
        double s = kInf;
        if (a == 0.0) {
            if (b > 0.0) s = -c / b;
        } else {
            const double disc = b * b - 4.0 * a * c;
            if (disc < 0.0) return kInf;
            const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
            double r1 = q / a;
            double r2 = q != 0.0 ? c / q : r1;
            if (r1 > r2) std::swap(r1, r2);
            // upward crossing of h(s) = a s^2 + b s + c
            if (a > 0.0) {
                s = r2;
            } else {
                s = r1;
            }
            if (!(2.0 * a * s + b >= 0.0)) return kInf;
        }
        if (!(s > 0.0) || s > limit) return kInf;
        return s;
    }

    [[nodiscard]] double hit_u_generic(Vec2 p, Vec2 d, double limit) const {
        auto g = [&](double s) { return p.y + s * d.y - profile_.value(p.x + s * d.x); };
        auto dg = [&](double s) { return d.y - profile_.slope(p.x + s * d.x) * d.x; };
        if (!(dg(0.0) > 0.0)) return kInf;
        double peak = limit;
        if (!std::isfinite(peak)) {
            double hi = 1.0;
            while (dg(hi) > 0.0 && g(hi) < 0.0) {
                hi *= 2.0;
                if (hi > 1e300) return kInf;
            }
            peak = hi;
        }
        if (dg(peak) < 0.0) {
            auto fdf = [&](double s) {
                return std::pair{dg(s), -profile_.second(p.x + s * d.x) * d.x * d.x};
            };
            peak = safeguarded_newton(fdf, 0.0, peak, RootOptions{1e-15, 1e-300, 200});
        }
        if (g(peak) < 0.0) return kInf;
        auto fdf = [&](double s) { return std::pair{g(s), dg(s)}; };
        return safeguarded_newton(fdf, 0.0, peak, RootOptions{1e-15, 1e-300, 200});
    }

    [[nodiscard]] Hit find_hit(Vec2 p, Vec2 d, std::optional<Wall> from) const {
        double s_l = kInf;
        double s_h = kInf;
        if (d.x < 0.0 && from != Wall::L) s_l = -p.x / d.x;
        if (d.y < 0.0 && from != Wall::H) s_h = -p.y / d.y;
        const double flat = std::min(s_l, s_h);
        const double s_u = hit_u(p, d, from == Wall::U, flat);

        Hit h;
        if (s_u <= flat && std::isfinite(s_u)) {
            const double x = std::max(0.0, p.x + s_u * d.x);
            if (x < options_.vertex_radius) throw VertexHit("orbit reaches the vertex V");
            h.point = on_wall(Wall::U, x);
            h.s = s_u;
        } else if (s_l <= s_h && std::isfinite(s_l)) {
            const double y = p.y + s_l * d.y;
            if (y < options_.vertex_radius || y > f0_ - options_.vertex_radius) {
                throw VertexHit(y < 0.5 * f0_ ? "orbit reaches the corner (0, 0)" : "orbit reaches the vertex V");
            }
            h.point = on_wall(Wall::L, y);
            h.s = s_l;
        } else if (std::isfinite(s_h)) {
            const double x = p.x + s_h * d.x;
            if (x < options_.vertex_radius) throw VertexHit("orbit reaches the corner (0, 0)");
            h.point = on_wall(Wall::H, x);
            h.s = s_h;
        } else {
            throw NoCollision("ray escapes along the cusp without a collision");
        }
        return h;
    }

    Profile profile_;
    ArcLength arc_;
    BilliardOptions options_;
    double f0_;
};

enum class SingularityKind { S1plus, S2plus, S1minus, S2minus };

[[nodiscard]] inline const char* singularity_name(SingularityKind k) noexcept {
    switch (k) {
    case SingularityKind::S1plus: return "S1plus";
    case SingularityKind::S2plus: return "S2plus";
    case SingularityKind::S1minus: return "S1minus";
    case SingularityKind::S2minus: return "S2minus";
    }
    return "?";
}

struct SingularityOptions {
    double x_lo = 0.05; // abscissa range of the base points on U
    double x_hi = 20.0;
    int phi_scan = 2000; // coarse phi grid per base point
    double phi_tol = 1e-14;
};

struct SingularityCurve {
    SingularityKind kind = SingularityKind::S1plus;
    std::vector<PhasePoint> points; // ordered by decreasing r
    std::vector<double> omitted_r;  // grid points without a bracket
};

namespace detail {

// Walls met by the orbit of a point of M before its next regular hit on U:
// bit 0 for L, bit 1 for H. Tangential touches of U are flown through.
// Returns -1 when the orbit runs into a vertex.
inline int itinerary_label(const Billiard& b, const FlowState& start) {
    Vec2 p = start.point.pos;
    Vec2 d = start.dir;
    std::optional<Wall> from = Wall::U;
    int label = 0;
    for (int k = 0; k < 16; ++k) {
        CollisionEvent ev;
        try {
            ev = b.next_collision(p, d, from);
        } catch (const VertexHit&) {
            return -1;
        } catch (const NoCollision&) {
            return -1;
        }
        if (ev.point.wall == Wall::U) {
            if (!ev.tangential) return label;
        } else {
            label |= ev.point.wall == Wall::L ? 1 : 2;
        }
        p = ev.point.pos;
        d = ev.outgoing;
        from = ev.point.wall;
    }
    return -1;
}

} // namespace detail

/// Singularity curves of T on M. For each base point on a geometric grid
/// of abscissae, phi is scanned from the vertex side (phi near pi/2) to the
/// cusp side and the switch of itinerary is located by bisection:
///   S1plus separates orbits that return to U after L alone from those
///   that also meet H (tangency on U after a rebound on L);
///   S2plus separates orbits that return after H alone from those that also
///   meet L (aiming at V after a rebound on H, or tangency on U).
/// The minus curves are the time reversals of the plus curves.
[[nodiscard]] inline SingularityCurve trace_singularity(const Billiard& billiard, SingularityKind kind, int resolution,
                                                        SingularityOptions opt = {}) {
    if (resolution < 2) throw DomainError("trace_singularity: resolution must be >= 2");
    const bool second = kind == SingularityKind::S2plus || kind == SingularityKind::S2minus;
    const bool minus = kind == SingularityKind::S1minus || kind == SingularityKind::S2minus;
    const int wanted = second ? 2 : 1;

    SingularityCurve curve;
    curve.kind = kind;
    const auto xs = geometric_grid(opt.x_lo, opt.x_hi, static_cast<std::size_t>(resolution));
    const double edge = 1e-9;
    const double lo_phi = -std::numbers::pi / 2 + edge;
    const double hi_phi = std::numbers::pi / 2 - edge;

    for (double x : xs) {
        const double r = billiard.arc().forward(x);
        auto label_at = [&](double phi) { return detail::itinerary_label(billiard, billiard.to_state({Section::M, r, phi})); };
        // the wanted itinerary occupies one end of the phi range: L-only near
        // the vertex side, H-only near the cusp side
        std::optional<std::pair<double, double>> bracket;
        double prev_phi = second ? lo_phi : hi_phi;
        bool prev_in = label_at(prev_phi) == wanted;
        for (int i = 1; i <= opt.phi_scan && prev_in; ++i) {
            const double frac = static_cast<double>(i) / opt.phi_scan;
            const double phi = second ? lo_phi + frac * (hi_phi - lo_phi) : hi_phi - frac * (hi_phi - lo_phi);
            const bool in = label_at(phi) == wanted;
            if (!in) {
                bracket = std::pair{prev_phi, phi};
                break;
            }
            prev_phi = phi;
        }
        if (!bracket) {
            curve.omitted_r.push_back(r);
            continue;
        }
        const double phi_star = bisect_predicate([&](double phi) { return label_at(phi) == wanted; }, bracket->first,
                                                 bracket->second, opt.phi_tol);
        PhasePoint z{Section::M, r, phi_star};
        curve.points.push_back(minus ? time_reverse(z) : z);
    }
    return curve;
}

} // namespace cuspbill
