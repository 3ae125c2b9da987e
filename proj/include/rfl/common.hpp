/// @file common.hpp
/// Shared value types, error hierarchy, linear-algebra helpers and
/// deterministic sampling used by every module in the library.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <cstdio>
#include <functional>
#include <future>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// ---------------------------------------------------------------------------
// Errors.  All library failures are typed so callers can map them to the
// documented exit codes (config errors vs. computation failures).
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A point (or a finite-difference stencil around it) left the chart box or
/// the admissible time interval.
struct DomainError : Error {
    using Error::Error;
};

/// A matrix inverse was requested beyond the supported condition number.
struct ConditioningError : Error {
    using Error::Error;
};

/// A quantity that must be positive (time component of a soliton metric,
/// measure weights beyond clipping tolerance) failed the check.
struct PositivityError : Error {
    double min_admissible = 0.0;
    PositivityError(const std::string& msg, double min_adm)
        : Error(msg), min_admissible(min_adm) {}
};

/// Bad user input: unknown keys, malformed config lines, invalid ranges.
struct ConfigError : Error {
    using Error::Error;
};

/// Internal invariant broken (unbalanced transport marginals, simplex
/// iteration cap, dual/primal mismatch).  Indicates a bug, not bad input.
struct InternalError : Error {
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Axis-aligned open box; every chart carries one.  FD code asks for
// containment with a margin so whole stencils stay inside.
// ---------------------------------------------------------------------------

struct Box {
    Vec lo;
    Vec hi;

    int dim() const { return static_cast<int>(lo.size()); }

    bool contains(const Vec& x, double margin = 0.0) const {
        if (x.size() != lo.size()) return false;
        for (int i = 0; i < lo.size(); ++i) {
            if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) return false;
        }
        return true;
    }

    void require(const Vec& x, double margin, const char* who) const {
        if (!contains(x, margin)) {
            throw DomainError(std::string(who) +
                              ": point (with stencil margin " +
                              std::to_string(margin) + ") outside chart box");
        }
    }

    Vec center() const { return 0.5 * (lo + hi); }
};

// ---------------------------------------------------------------------------
// Symmetric inverse with conditioning report.
// ---------------------------------------------------------------------------

struct SymInverse {
    Mat inverse;
    double condition;  // ratio |lambda|_max / |lambda|_min
};

/// Inverts a symmetric matrix via its eigendecomposition.  Refuses condition
/// numbers above `max_condition` instead of returning garbage.
inline SymInverse sym_inverse(const Mat& a, double max_condition = 1e12) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a);
    if (es.info() != Eigen::Success) {
        throw ConditioningError("sym_inverse: eigendecomposition failed");
    }
    const Vec& ev = es.eigenvalues();
    double abs_min = std::abs(ev[0]), abs_max = std::abs(ev[0]);
    for (int i = 1; i < ev.size(); ++i) {
        abs_min = std::min(abs_min, std::abs(ev[i]));
        abs_max = std::max(abs_max, std::abs(ev[i]));
    }
    const double cond = (abs_min == 0.0) ? std::numeric_limits<double>::infinity()
                                         : abs_max / abs_min;
    if (!(cond <= max_condition)) {
        char buf[128];
        std::snprintf(buf, sizeof buf,
                      "sym_inverse: condition number %.3e exceeds limit %.3e",
                      cond, max_condition);
        throw ConditioningError(buf);
    }
    Mat inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
              es.eigenvectors().transpose();
    return {std::move(inv), cond};
}

// ---------------------------------------------------------------------------
// Deterministic low-discrepancy sampling.  Halton sequence; the seed only
// offsets the start index, so a (seed, count) pair always reproduces the
// same point set on every platform.
// ---------------------------------------------------------------------------

inline double halton_radical_inverse(std::uint64_t i, std::uint64_t base) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

inline Vec halton_point(std::uint64_t index, int dim) {
    static const std::uint64_t primes[] = {2, 3, 5, 7, 11, 13, 17, 19};
    if (dim > 8) throw ConfigError("halton_point: dimension > 8 unsupported");
    Vec p(dim);
    for (int d = 0; d < dim; ++d) {
        p[d] = halton_radical_inverse(index, primes[d]);
    }
    return p;
}

/// `count` points in the interior of `box`, keeping `margin_frac` of each
/// side length clear of the boundary.
inline std::vector<Vec> sample_box(const Box& box, int count, unsigned seed,
                                   double margin_frac = 0.12) {
    std::vector<Vec> pts;
    pts.reserve(count);
    const std::uint64_t start = 100 + static_cast<std::uint64_t>(seed) * 1000;
    for (int k = 0; k < count; ++k) {
        Vec u = halton_point(start + static_cast<std::uint64_t>(k), box.dim());
        Vec x(box.dim());
        for (int d = 0; d < box.dim(); ++d) {
            const double m = margin_frac * (box.hi[d] - box.lo[d]);
            x[d] = box.lo[d] + m + u[d] * (box.hi[d] - box.lo[d] - 2.0 * m);
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

/// Evenly spaced values in [lo, hi] inclusive.
inline std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> v(count);
    if (count == 1) {
        v[0] = lo;
        return v;
    }
    for (int i = 0; i < count; ++i) {
        v[i] = lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    }
    return v;
}

// ---------------------------------------------------------------------------
// Deterministic parallel map: result order is by index, independent of
// scheduling.  Exceptions from workers propagate to the caller.
// ---------------------------------------------------------------------------

template <class T, class F>
auto parallel_map(const std::vector<T>& items, F&& fn)
    -> std::vector<decltype(fn(items[0]))> {
    using R = decltype(fn(items[0]));
    std::vector<std::future<R>> futs;
    futs.reserve(items.size());
    for (const T& item : items) {
        futs.push_back(std::async(std::launch::async, [&fn, &item] { return fn(item); }));
    }
    std::vector<R> out;
    out.reserve(items.size());
    for (auto& f : futs) out.push_back(f.get());
    return out;
}

/// Fixed-precision numeric formatting shared by every report writer, so the
/// same inputs always serialize to the same bytes.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline double sup_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }
inline double sup_abs(const Vec& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace rfl
