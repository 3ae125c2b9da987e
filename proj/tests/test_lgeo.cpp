/// @file test_lgeo.cpp
/// L-length quadrature oracles, L-geodesic minimization against the flat
/// closed form, curved-flow minimization stability, the reduced cost c, the
/// stable square-root expansion tail, and the periodic cost-matrix export.

#include <catch_amalgamated.hpp>

#include "rfl/lgeo.hpp"
#include "rfl/spacetime.hpp"

#include <cmath>

using namespace rfl;

namespace {

Vec vec1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

// Exact flat-space optimum: Q = |y-x|^2 / (2 (sqrt(tau2) - sqrt(tau1))).
double flat_q(const Vec& x, const Vec& y, double tau1, double tau2) {
    return (y - x).squaredNorm() / (2.0 * (std::sqrt(tau2) - std::sqrt(tau1)));
}

}  // namespace

TEST_CASE("discrete curves validate their shape", "[lgeo]") {
    CHECK_THROWS_AS(constant_curve(vec1(0.0), 1.0, 4.0, 7), ConfigError);
    CHECK_THROWS_AS(constant_curve(vec1(0.0), 1.0, 4.0, 9), ConfigError);
    CHECK_THROWS_AS(constant_curve(vec1(0.0), 4.0, 1.0, 8), ConfigError);
    const DiscreteCurve c = constant_curve(vec1(0.0), 1.0, 4.0, 8);
    CHECK(c.segments() == 8);
    CHECK(c.dt() == 0.375);
    CHECK(c.tau_at(8) == 4.0);
}

TEST_CASE("sqrt-tau interpolation hits both endpoints", "[lgeo]") {
    const DiscreteCurve c = sqrt_tau_curve(vec1(0.0), vec1(1.0), 1.0, 4.0, 16);
    CHECK(c.nodes.front()[0] == 0.0);
    CHECK(c.nodes.back()[0] == 1.0);
    // Interior nodes follow (sqrt(t)-1)/(sqrt(4)-1).
    const double t = c.tau_at(7);
    CHECK(std::abs(c.nodes[7][0] - (std::sqrt(t) - 1.0)) < 1e-14);
}

TEST_CASE("L-length of the flat minimizing profile", "[lgeo]") {
    const FlowFamily f = flat_flow(1);
    const DiscreteCurve c = curve_from(
        [](double t) { return Vec(vec1((std::sqrt(t) - 1.0) / 1.0)); }, 1.0, 4.0,
        64);
    CHECK(std::abs(l_length(f, c) - 0.5) < 2e-3);
    // The segment-midpoint quadrature agrees at O(K^-2).
    CHECK(std::abs(l_length_segments(f, c) - l_length(f, c)) < 5e-4);
}

TEST_CASE("plain-time length of the straight flat line", "[lgeo]") {
    const FlowFamily f = flat_flow(1);
    const DiscreteCurve line = curve_from(
        [](double t) { return Vec(vec1((t - 1.0) / 3.0)); }, 1.0, 4.0, 64);
    CHECK(std::abs(l0_length(f, line) - 1.0 / 3.0) < 1e-10);
}

TEST_CASE("constant curve on the shrinking sphere", "[lgeo]") {
    const FlowFamily f = sphere_flow(2);
    const DiscreteCurve c = constant_curve(vec2(1.4, 2.0), 1.0, 4.0, 64);
    // L = int sqrt(t) R dt = int_1^4 t^{-1/2} dt = 2; L0 = int R dt = ln 4.
    CHECK(std::abs(l_length(f, c) - 2.0) < 2e-6);
    CHECK(std::abs(l0_length(f, c) - std::log(4.0)) < 5e-6);
}

TEST_CASE("space-time lengths against hand values", "[lgeo]") {
    const FlowFamily f = flat_flow(2);
    const DiscreteCurve c = constant_curve(vec2(0.0, 0.0), 1.0, 4.0, 64);
    SECTION("steady: constant 00-component integrates exactly") {
        SpacetimeMetric sm{f, 100.0, SolitonKind::steady};
        CHECK(std::abs(spacetime_length(sm, c) - 30.0) < 1e-9);
    }
    SECTION("shrinking: leading term sqrt(N/2)(tau1^-1/2 - tau2^-1/2) * 2") {
        SpacetimeMetric sm{f, 1e4, SolitonKind::shrinking};
        CHECK(std::abs(spacetime_length(sm, c) - std::sqrt(5000.0)) < 0.02);
    }
}

TEST_CASE("flat minimization reproduces the closed form", "[lgeo]") {
    const FlowFamily f = flat_flow(1);
    const MinimizeResult r = minimize_l(f, vec1(0.0), vec1(1.0), 1.0, 4.0, 128);
    CHECK(r.converged);
    CHECK(r.grad_norm <= 1e-9);
    CHECK(r.iterations == 0);  // translation-invariant flows solve in closed form
    CHECK(std::abs(r.q - 0.5) < 1e-4);
    // Minimizer nodes are sqrt(tau)-linear.
    double node_gap = 0.0;
    for (int k = 0; k <= r.curve.segments(); ++k) {
        const double t = r.curve.tau_at(k);
        node_gap = std::max(node_gap,
                            std::abs(r.curve.nodes[k][0] - (std::sqrt(t) - 1.0)));
    }
    CHECK(node_gap < 1e-4);
}

TEST_CASE("frozen 2-D flat instance", "[lgeo]") {
    const FlowFamily f = flat_flow(2);
    const Vec x = vec2(-0.8, 0.4), y = vec2(0.9, -0.6);
    const MinimizeResult r = minimize_l(f, x, y, 0.6, 1.8, 256);
    CHECK(r.converged);
    CHECK(std::abs(r.q - 3.4300871607) < 1e-8);
    CHECK(std::abs(r.q - flat_q(x, y, 0.6, 1.8)) < 2.5e-5);
    CHECK(r.q >= flat_q(x, y, 0.6, 1.8) - 1e-12);  // quadrature overshoots
}

TEST_CASE("reduced cost c on oracle pairs", "[lgeo]") {
    const FlowFamily f = flat_flow(1);
    // c = Q - n (sqrt(tau2) - sqrt(tau1)) = 0.5 - 1 = -0.5.
    CHECK(std::abs(cost_c(f, vec1(0.0), vec1(1.0), 1.0, 4.0, 128) + 0.5) < 1e-4);

    const FlowFamily s = sphere_flow(2);
    const Vec p = vec2(1.4, 2.0);
    // Coincident endpoints on the sphere: Q = 2 (sqrt 4 - sqrt 1), so c = 0.
    CHECK(std::abs(cost_c(s, p, p, 1.0, 4.0, 32)) < 1e-4);
}

TEST_CASE("curved-flow minimization is stable", "[lgeo]") {
    const FlowFamily f = sphere_flow(2);
    const Vec x = vec2(1.4, 1.6), y = vec2(1.6, 1.9);
    const MinimizeResult r32 = minimize_l(f, x, y, 1.0, 4.0, 32);
    CHECK(r32.converged);
    CHECK(r32.grad_norm <= 1e-9);
    CHECK(std::abs(r32.q - 2.25937635) < 2e-4);  // frozen value
    // Scalar curvature alone forces L >= int sqrt(t) R dt = 2.
    CHECK(r32.q >= 2.0 - 1e-9);
    // The minimizer beats the sqrt-tau initial curve under the same quadrature.
    CHECK(r32.q <= l_length(f, sqrt_tau_curve(x, y, 1.0, 4.0, 32)) + 1e-12);

    const MinimizeResult r64 = minimize_l(f, x, y, 1.0, 4.0, 64);
    CHECK(std::abs(r64.q - r32.q) <= 1e-3);  // K-refinement stability
}

TEST_CASE("random node perturbations cannot improve the minimizer", "[lgeo]") {
    const FlowFamily f = sphere_flow(2);
    const MinimizeResult r =
        minimize_l(f, vec2(1.4, 1.6), vec2(1.6, 1.9), 1.0, 4.0, 32);
    const double base = l_length_segments(f, r.curve);
    for (int trial = 0; trial < 10; ++trial) {
        DiscreteCurve c = r.curve;
        for (int k = 1; k < c.segments(); ++k) {
            for (int d = 0; d < 2; ++d) {
                const double u =
                    halton_radical_inverse(1 + trial * 64 + k * 2 + d, 3);
                c.nodes[k][d] += (u > 0.5 ? 1.0 : -1.0) * 1e-3;
            }
        }
        CHECK(l_length_segments(f, c) >= base - 1e-8);
    }
}

TEST_CASE("stable square-root expansion tail", "[lgeo]") {
    SECTION("moderate argument matches direct evaluation") {
        // sqrt(A(1+b)) - sqrt(A) - sqrt(A) b/2 at A=2.25, b=0.3.
        const double direct = std::sqrt(2.25 * 1.3) - 1.5 - 1.5 * 0.15;
        CHECK(std::abs(detail::sqrt_expansion_tail(2.25, 0.3, "test") - direct) <
              1e-12);
    }
    SECTION("tiny argument avoids catastrophic cancellation") {
        // Exact rewrite gives -sqrt(A) b^2/8 + O(b^3); the naive difference
        // would be pure round-off at this size.
        const double tail = detail::sqrt_expansion_tail(1.0, 1e-9, "test");
        CHECK(std::abs(tail + 1.25e-19) < 1e-25);
    }
    SECTION("non-positive radicand is rejected") {
        CHECK_THROWS_AS(detail::sqrt_expansion_tail(1.0, -2.0, "test"),
                        PositivityError);
    }
}

TEST_CASE("length expansion remainders", "[lgeo]") {
    const std::vector<double> ns = {1e2, 1e3, 1e4, 1e5};
    SECTION("constant sphere curve collapses the tail exactly") {
        // Einstein identity R/tau = n/(2 tau^2) zeroes the expansion argument
        // pointwise, so the fused remainder is exactly zero for every N.
        const DiscreteCurve c = constant_curve(vec2(1.4, 2.0), 0.8, 2.0, 64);
        const ExpansionReport er =
            expansion_check(sphere_flow(2), SolitonKind::shrinking, c, ns);
        for (double r : er.remainders) CHECK(r < 1e-13);
        CHECK(er.fit.below_noise);
    }
    SECTION("moving sphere curve decays like N^-3/2") {
        const DiscreteCurve c = curve_from(
            [](double t) { return Vec(vec2(1.2 + 0.25 * (t - 0.8), 2.0)); }, 0.8,
            2.0, 64);
        const ExpansionReport er =
            expansion_check(sphere_flow(2), SolitonKind::shrinking, c, ns);
        CHECK(std::abs(er.fit.slope + 1.5) <= 0.1);
        CHECK(er.fit.r_squared > 0.98);
    }
    SECTION("steady flat line decays like N^-3/2") {
        const DiscreteCurve c = curve_from(
            [](double t) { return Vec(vec2(0.5 * (t - 0.8), 0.1 * (t - 0.8))); },
            0.8, 2.0, 64);
        const ExpansionReport er =
            expansion_check(flat_flow(2), SolitonKind::steady, c, ns);
        CHECK(std::abs(er.fit.slope + 1.5) <= 0.1);
    }
}

TEST_CASE("periodic cost-matrix export takes the short way around", "[lgeo]") {
    const FlowFamily f = flat_flow(1);
    const std::vector<Vec> xs = {vec1(0.3)};
    const std::vector<Vec> ys = {vec1(6.0)};
    const Mat Q = cost_q_matrix(f, xs, ys, 1.0, 4.0, 64, 2.0 * M_PI);
    const double d_short = 2.0 * M_PI - 5.7;  // winding beats the direct gap
    CHECK(std::abs(Q(0, 0) - d_short * d_short / 2.0) < 1e-4);

    // Without the period the direct displacement is the only option.
    const Mat Qd = cost_q_matrix(f, xs, ys, 1.0, 4.0, 64);
    CHECK(std::abs(Qd(0, 0) - 5.7 * 5.7 / 2.0) < 5e-3);
    // Periodic export is one-dimensional only.
    const FlowFamily f2 = flat_flow(2);
    const std::vector<Vec> zs = {vec2(0.0, 0.0)};
    CHECK_THROWS_AS(cost_q_matrix(f2, zs, zs, 1.0, 4.0, 64, 2.0 * M_PI),
                    ConfigError);
}
