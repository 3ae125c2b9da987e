/// @file test_fd.cpp
/// Finite-difference engine: stencil exactness on polynomials, accuracy on
/// transcendental functions, the Richardson error estimate's convergence
/// order, and domain-margin enforcement.

#include <catch_amalgamated.hpp>

#include "rfl/fd.hpp"

#include <cmath>

using namespace rfl;

namespace {

Vec vec1(double x) {
    Vec v(1);
    v[0] = x;
    return v;
}

}  // namespace

TEST_CASE("first derivative of x^2 at x=3 is exact", "[fd]") {
    const ScalarFn f = [](const Vec& x) { return x[0] * x[0]; };
    const FdResult r = fd_partial(f, vec1(3.0), 0);
    CHECK(std::abs(r.value - 6.0) < 1e-9);
    CHECK(r.error < 1e-9);
}

TEST_CASE("second derivative of sin at 0 vanishes", "[fd]") {
    const ScalarFn f = [](const Vec& x) { return std::sin(x[0]); };
    const FdResult r = fd_second(f, vec1(0.0), 0);
    CHECK(std::abs(r.value) < 1e-8);
}

TEST_CASE("first derivative of exp at 1 matches e", "[fd]") {
    const ScalarFn f = [](const Vec& x) { return std::exp(x[0]); };
    const FdResult r = fd_partial(f, vec1(1.0), 0);
    CHECK(std::abs(r.value - std::exp(1.0)) < 1e-9);
    // The estimate tracks truncation; round-off at step 1e-3 adds ~eps*f/h.
    CHECK(std::abs(r.value - std::exp(1.0)) <= 10.0 * r.error + 1e-12);
}

TEST_CASE("mixed partial of x*y^2 at (2,3)", "[fd]") {
    const ScalarFn f = [](const Vec& x) { return x[0] * x[1] * x[1]; };
    Vec p(2);
    p << 2.0, 3.0;
    const FdResult r = fd_mixed(f, p, 0, 1);
    CHECK(std::abs(r.value - 6.0) < 1e-7);
}

TEST_CASE("mixed partial with equal indices falls back to the pure second",
          "[fd]") {
    const ScalarFn f = [](const Vec& x) { return std::cos(2.0 * x[0]) + x[1]; };
    Vec p(2);
    p << 0.3, 1.0;
    const FdResult pure = fd_second(f, p, 0);
    const FdResult mixed = fd_mixed(f, p, 0, 0);
    CHECK(mixed.value == pure.value);
    CHECK(std::abs(mixed.value + 4.0 * std::cos(0.6)) < 1e-7);
}

TEST_CASE("halving the base step cuts the error estimate by >= 8", "[fd]") {
    // The stencils are 4th order, so the Richardson remainder scale drops
    // ~16x per halving while truncation still dominates round-off.
    const ScalarFn f = [](const Vec& x) { return std::exp(x[0]); };
    FdOptions coarse, fine;
    coarse.base_step = 1e-2;
    fine.base_step = 5e-3;
    const FdResult rc = fd_partial(f, vec1(0.5), 0, coarse);
    const FdResult rf = fd_partial(f, vec1(0.5), 0, fine);
    REQUIRE(rf.error > 0.0);
    CHECK(rc.error / rf.error >= 8.0);

    const FdResult sc = fd_second(f, vec1(0.5), 0, coarse);
    const FdResult sf = fd_second(f, vec1(0.5), 0, fine);
    REQUIRE(sf.error > 0.0);
    CHECK(sc.error / sf.error >= 8.0);
}

TEST_CASE("step scales with the coordinate magnitude", "[fd]") {
    FdOptions opts;
    opts.base_step = 1e-3;
    CHECK(fd_step(vec1(0.5), 0, opts) == 1e-3);
    CHECK(fd_step(vec1(200.0), 0, opts) == 0.2);
    CHECK(fd_margin(vec1(0.5), 0, opts) == 2e-3);
}

TEST_CASE("stencil outside the domain raises DomainError", "[fd]") {
    Box dom;
    dom.lo = vec1(0.0);
    dom.hi = vec1(1.0);
    const ScalarFn f = [](const Vec& x) { return x[0] * x[0]; };
    CHECK_THROWS_AS(fd_partial(f, vec1(0.9995), 0, {}, &dom), DomainError);
    CHECK_THROWS_AS(fd_second(f, vec1(0.0005), 0, {}, &dom), DomainError);
    // Interior points with full margin are fine.
    CHECK_NOTHROW(fd_partial(f, vec1(0.5), 0, {}, &dom));
}
