/// @file fd.hpp
/// Fourth-order central finite differences with one Richardson
/// extrapolation level and a per-evaluation error estimate.
#pragma once

#include "rfl/common.hpp"

#include <cmath>

namespace rfl {

struct FdOptions {
    /// Relative base step; the actual step is base_step * max(1, |x_d|).
    double base_step = 1e-3;
};

struct FdResult {
    double value = 0.0;
    double error = 0.0;  // |D(h/2) - D(h)| / 15, the Richardson remainder scale
};

using ScalarFn = std::function<double(const Vec&)>;

inline double fd_step(const Vec& x, int dir, const FdOptions& opts) {
    return opts.base_step * std::max(1.0, std::abs(x[dir]));
}

/// Widest stencil excursion along one axis for the given step, used for
/// domain-margin checks before any function evaluation happens.
inline double fd_margin(const Vec& x, int dir, const FdOptions& opts) {
    return 2.0 * fd_step(x, dir, opts);
}

namespace detail {

// f'(x) with the 5-point 4th-order stencil.
template <class F>
double d1_stencil(const F& f, const Vec& x, int dir, double h) {
    Vec e = Vec::Zero(x.size());
    e[dir] = 1.0;
    return (-f(x + 2.0 * h * e) + 8.0 * f(x + h * e) - 8.0 * f(x - h * e) +
            f(x - 2.0 * h * e)) /
           (12.0 * h);
}

// f''(x) with the 5-point 4th-order stencil.
template <class F>
double d2_stencil(const F& f, const Vec& x, int dir, double h) {
    Vec e = Vec::Zero(x.size());
    e[dir] = 1.0;
    return (-f(x + 2.0 * h * e) + 16.0 * f(x + h * e) - 30.0 * f(x) +
            16.0 * f(x - h * e) - f(x - 2.0 * h * e)) /
           (12.0 * h * h);
}

// Mixed second derivative as nested 4th-order first differences.
template <class F>
double dmixed_stencil(const F& f, const Vec& x, int a, int b, double ha,
                      double hb) {
    static const double c[4] = {-1.0, 8.0, -8.0, 1.0};
    static const int off[4] = {2, 1, -1, -2};
    Vec ea = Vec::Zero(x.size()), eb = Vec::Zero(x.size());
    ea[a] = 1.0;
    eb[b] = 1.0;
    double acc = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            acc += c[i] * c[j] * f(x + off[i] * ha * ea + off[j] * hb * eb);
        }
    }
    return acc / (144.0 * ha * hb);
}

// One Richardson level on top of a 4th-order stencil: the h/2 and h values
// combine to 6th order, and their spread scales the truncation estimate.
template <class Stencil>
FdResult richardson(const Stencil& stencil, double h) {
    const double coarse = stencil(h);
    const double fine = stencil(0.5 * h);
    FdResult r;
    r.value = (16.0 * fine - coarse) / 15.0;
    r.error = std::abs(fine - coarse) / 15.0;
    return r;
}

}  // namespace detail

/// First partial derivative along `dir`; if `dom` is given the whole stencil
/// must fit inside it.
inline FdResult fd_partial(const ScalarFn& f, const Vec& x, int dir,
                           const FdOptions& opts = {},
                           const Box* dom = nullptr) {
    const double h = fd_step(x, dir, opts);
    if (dom) dom->require(x, 2.0 * h, "fd_partial");
    return detail::richardson(
        [&](double hh) { return detail::d1_stencil(f, x, dir, hh); }, h);
}

/// Pure second partial derivative along `dir`.
inline FdResult fd_second(const ScalarFn& f, const Vec& x, int dir,
                          const FdOptions& opts = {},
                          const Box* dom = nullptr) {
    const double h = fd_step(x, dir, opts);
    if (dom) dom->require(x, 2.0 * h, "fd_second");
    return detail::richardson(
        [&](double hh) { return detail::d2_stencil(f, x, dir, hh); }, h);
}

/// Mixed partial d^2 f / dx_a dx_b (a != b delegates to the nested stencil,
/// a == b to fd_second).
inline FdResult fd_mixed(const ScalarFn& f, const Vec& x, int a, int b,
                         const FdOptions& opts = {}, const Box* dom = nullptr) {
    if (a == b) return fd_second(f, x, a, opts, dom);
    const double ha = fd_step(x, a, opts);
    const double hb = fd_step(x, b, opts);
    if (dom) {
        dom->require(x, 2.0 * std::max(ha, hb), "fd_mixed");
    }
    const double coarse = detail::dmixed_stencil(f, x, a, b, ha, hb);
    const double fine = detail::dmixed_stencil(f, x, a, b, 0.5 * ha, 0.5 * hb);
    FdResult r;
    r.value = (16.0 * fine - coarse) / 15.0;
    r.error = std::abs(fine - coarse) / 15.0;
    return r;
}

}  // namespace rfl
