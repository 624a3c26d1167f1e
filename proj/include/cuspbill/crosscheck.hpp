#pragma once

// Comparison of the (t, gamma) recursion with the Cartesian flow for one
// excursion leaving the wall.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "billiard.hpp"
#include "cusp.hpp"
#include "errors.hpp"

namespace cuspbill {

struct FlowAgreement {
    long N = 0;
    long R = 0; // return time of the flow
    double max_dx = 0.0;
    double max_dgamma = 0.0;
};

/// Replays the excursion of the wall point (f(0) - y, phi) with the flow and
/// records the largest deviation in x_n and gamma_n over its U collisions.
/// The billiard must use the reciprocal profile.
[[nodiscard]] inline FlowAgreement compare_with_flow(const Billiard& billiard, const Excursion& e, double y, double phi) {
    if (e.censored) throw DomainError("compare_with_flow: excursion is censored");
    FlowAgreement out;
    out.N = e.N;
    FlowState s = billiard.to_state(PhasePoint{Section::M4, billiard.f0() - y, phi});
    long steps = 0;
    for (long n = 0; n < e.N; ++n) {
        s = billiard.advance(s, Section::M5);
        ++steps;
        if (s.point.wall != Wall::U) throw NumericalError("compare_with_flow: flow left the cusp early");
        const PhasePoint z = billiard.to_phase(s);
        const auto k = static_cast<std::size_t>(n);
        out.max_dx = std::max(out.max_dx, std::fabs(s.point.param - e.x[k]));
        out.max_dgamma = std::max(out.max_dgamma, std::fabs(std::numbers::pi / 2 - std::fabs(z.phi) - e.gamma[k]));
    }
    s = billiard.advance(s, Section::M5);
    ++steps;
    if (s.point.wall != Wall::L) throw NumericalError("compare_with_flow: flow stayed in the cusp");
    out.R = steps;
    return out;
}

} // namespace cuspbill
