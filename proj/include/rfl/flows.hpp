/// @file flows.hpp
/// Catalogue of exact reverse Ricci flows dg/dtau = 2 Ric(g) on a chart,
/// with analytic curvature data, plus residual operators that check the
/// catalogue against the tensor machinery.
#pragma once

#include "rfl/common.hpp"
#include "rfl/tensor.hpp"

#include <cmath>
#include <string>

namespace rfl {

struct Chart {
    std::string name;
    int dim = 0;
    Box box;
};

/// A point on the space-time: backward time tau plus chart coordinates.
struct SpacetimePoint {
    double tau = 1.0;
    Vec x;
};

/// One flow family: the metric g(x, tau) and its exact derivatives and
/// curvature.  Every member function is total on chart x (tau_min, tau_max);
/// the admissibility check guards both.
struct FlowFamily {
    std::string key;
    Chart chart;
    double tau_min = 0.0;
    double tau_max = 0.0;
    bool is_einstein_shrinker = false;
    bool translation_invariant = false;

    std::function<Mat(const Vec&, double)> metric;
    std::function<Mat(const Vec&, double, int)> metric_dx;
    std::function<Mat(const Vec&, double, int, int)> metric_dxdx;
    std::function<Mat(const Vec&, double)> metric_dtau;
    std::function<Mat(const Vec&, double)> ricci;
    std::function<double(const Vec&, double)> scalar;
    std::function<Vec(const Vec&, double)> scalar_dx;
    std::function<double(const Vec&, double)> scalar_dtau;

    int dim() const { return chart.dim; }

    void require_admissible(const SpacetimePoint& p, double margin_x = 0.0,
                            double margin_tau = 0.0) const {
        if (!(p.tau > tau_min + margin_tau && p.tau < tau_max - margin_tau)) {
            throw DomainError(key + ": tau = " + format_double(p.tau) +
                              " outside (" + format_double(tau_min) + ", " +
                              format_double(tau_max) + ")");
        }
        chart.box.require(p.x, margin_x, key.c_str());
    }
};

/// Fixed-tau slice as a MetricField.  With `analytic` the exact coordinate
/// derivatives are attached; without it the tensor module falls back to FD
/// and the slice exercises the full numeric pipeline.
inline MetricField spatial_field(const FlowFamily& f, double tau,
                                 bool analytic = true) {
    MetricField m;
    m.dim = f.dim();
    m.domain = f.chart.box;
    auto g = f.metric;
    m.g = [g, tau](const Vec& x) { return g(x, tau); };
    if (analytic) {
        auto dg = f.metric_dx;
        auto d2g = f.metric_dxdx;
        m.dg = [dg, tau](const Vec& x, int k) { return dg(x, tau, k); };
        m.d2g = [d2g, tau](const Vec& x, int k, int l) { return d2g(x, tau, k, l); };
    }
    return m;
}

// ---------------------------------------------------------------------------
// Builders.
// ---------------------------------------------------------------------------

namespace detail {

inline Mat diag3(double a, double b, double c) {
    Mat m = Mat::Zero(3, 3);
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = c;
    return m;
}

inline Mat diag2(double a, double b) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

}  // namespace detail

/// Round shrinking sphere, normalized so g(tau) = 2(n-1) tau g_round and
/// R = n / (2 tau).  Supported n: 2 (coords theta, phi) and 3 (chi, theta, phi).
inline FlowFamily sphere_flow(int n) {
    if (n != 2 && n != 3) throw ConfigError("sphere_flow: n must be 2 or 3");
    FlowFamily f;
    f.key = "sphere" + std::to_string(n);
    f.tau_min = 0.01;
    f.tau_max = 64.0;
    f.is_einstein_shrinker = true;
    f.chart.dim = n;
    f.chart.name = (n == 2) ? "polar-s2" : "polar-s3";
    f.chart.box.lo = Vec(n);
    f.chart.box.hi = Vec(n);
    for (int i = 0; i + 1 < n; ++i) {
        f.chart.box.lo[i] = 0.1;
        f.chart.box.hi[i] = M_PI - 0.1;
    }
    f.chart.box.lo[n - 1] = 0.0;
    f.chart.box.hi[n - 1] = 2.0 * M_PI;

    const double c = 2.0 * (n - 1);  // g = c tau g_round
    if (n == 2) {
        auto round = [](const Vec& x) {
            return detail::diag2(1.0, std::sin(x[0]) * std::sin(x[0]));
        };
        auto round_dx = [](const Vec& x, int k) {
            if (k != 0) return detail::diag2(0.0, 0.0);
            return detail::diag2(0.0, std::sin(2.0 * x[0]));
        };
        auto round_dxdx = [](const Vec& x, int k, int l) {
            if (k != 0 || l != 0) return detail::diag2(0.0, 0.0);
            return detail::diag2(0.0, 2.0 * std::cos(2.0 * x[0]));
        };
        f.metric = [c, round](const Vec& x, double tau) { return Mat(c * tau * round(x)); };
        f.metric_dx = [c, round_dx](const Vec& x, double tau, int k) {
            return Mat(c * tau * round_dx(x, k));
        };
        f.metric_dxdx = [c, round_dxdx](const Vec& x, double tau, int k, int l) {
            return Mat(c * tau * round_dxdx(x, k, l));
        };
        f.metric_dtau = [c, round](const Vec& x, double) { return Mat(c * round(x)); };
        f.ricci = [round](const Vec& x, double) { return Mat(1.0 * round(x)); };
    } else {
        auto round = [](const Vec& x) {
            const double s0 = std::sin(x[0]), s1 = std::sin(x[1]);
            return detail::diag3(1.0, s0 * s0, s0 * s0 * s1 * s1);
        };
        auto round_dx = [](const Vec& x, int k) {
            const double s0 = std::sin(x[0]), s1 = std::sin(x[1]);
            if (k == 0) return detail::diag3(0.0, std::sin(2.0 * x[0]),
                                             std::sin(2.0 * x[0]) * s1 * s1);
            if (k == 1) return detail::diag3(0.0, 0.0, s0 * s0 * std::sin(2.0 * x[1]));
            return detail::diag3(0.0, 0.0, 0.0);
        };
        auto round_dxdx = [](const Vec& x, int k, int l) {
            const double s0 = std::sin(x[0]), s1 = std::sin(x[1]);
            if (k > l) std::swap(k, l);
            if (k == 0 && l == 0)
                return detail::diag3(0.0, 2.0 * std::cos(2.0 * x[0]),
                                     2.0 * std::cos(2.0 * x[0]) * s1 * s1);
            if (k == 0 && l == 1)
                return detail::diag3(0.0, 0.0, std::sin(2.0 * x[0]) * std::sin(2.0 * x[1]));
            if (k == 1 && l == 1)
                return detail::diag3(0.0, 0.0, s0 * s0 * 2.0 * std::cos(2.0 * x[1]));
            return detail::diag3(0.0, 0.0, 0.0);
        };
        f.metric = [c, round](const Vec& x, double tau) { return Mat(c * tau * round(x)); };
        f.metric_dx = [c, round_dx](const Vec& x, double tau, int k) {
            return Mat(c * tau * round_dx(x, k));
        };
        f.metric_dxdx = [c, round_dxdx](const Vec& x, double tau, int k, int l) {
            return Mat(c * tau * round_dxdx(x, k, l));
        };
        f.metric_dtau = [c, round](const Vec& x, double) { return Mat(c * round(x)); };
        f.ricci = [round](const Vec& x, double) { return Mat(2.0 * round(x)); };
    }
    const double nn = n;
    f.scalar = [nn](const Vec&, double tau) { return nn / (2.0 * tau); };
    f.scalar_dx = [n](const Vec&, double) { return Vec(Vec::Zero(n)); };
    f.scalar_dtau = [nn](const Vec&, double tau) { return -nn / (2.0 * tau * tau); };
    return f;
}

/// Static flat space in Cartesian coordinates; every curvature datum is zero.
inline FlowFamily flat_flow(int n) {
    if (n < 1 || n > 3) throw ConfigError("flat_flow: n must be 1..3");
    FlowFamily f;
    f.key = "flat" + std::to_string(n);
    f.tau_min = 0.01;
    f.tau_max = 64.0;
    f.translation_invariant = true;
    f.chart.dim = n;
    f.chart.name = "cartesian-flat";
    f.chart.box.lo = Vec::Constant(n, -15.0);
    f.chart.box.hi = Vec::Constant(n, 15.0);
    f.metric = [n](const Vec&, double) { return Mat(Mat::Identity(n, n)); };
    f.metric_dx = [n](const Vec&, double, int) { return Mat(Mat::Zero(n, n)); };
    f.metric_dxdx = [n](const Vec&, double, int, int) { return Mat(Mat::Zero(n, n)); };
    f.metric_dtau = [n](const Vec&, double) { return Mat(Mat::Zero(n, n)); };
    f.ricci = [n](const Vec&, double) { return Mat(Mat::Zero(n, n)); };
    f.scalar = [](const Vec&, double) { return 0.0; };
    f.scalar_dx = [n](const Vec&, double) { return Vec(Vec::Zero(n)); };
    f.scalar_dtau = [](const Vec&, double) { return 0.0; };
    return f;
}

/// Expanding hyperbolic space on the Poincare ball, g = 2(n-1)(C - tau) g_hyp,
/// R = -n / (2 (C - tau)).  Runs backward toward tau = C where it degenerates.
inline FlowFamily hyperbolic_flow(int n, double C = 10.0) {
    if (n < 2 || n > 3) throw ConfigError("hyperbolic_flow: n must be 2 or 3");
    if (!(C > 1.0)) throw ConfigError("hyperbolic_flow: C must exceed 1");
    FlowFamily f;
    f.key = "hyp" + std::to_string(n);
    f.tau_min = 0.01;
    f.tau_max = C - 0.1;
    f.chart.dim = n;
    f.chart.name = "poincare-ball";
    f.chart.box.lo = Vec::Constant(n, -0.5);
    f.chart.box.hi = Vec::Constant(n, 0.5);

    auto lam = [](const Vec& x) {
        const double u = 1.0 - x.squaredNorm();
        return 4.0 / (u * u);
    };
    auto dlam = [](const Vec& x, int k) {
        const double u = 1.0 - x.squaredNorm();
        return 16.0 * x[k] / (u * u * u);
    };
    auto d2lam = [](const Vec& x, int k, int l) {
        const double u = 1.0 - x.squaredNorm();
        const double kron = (k == l) ? 1.0 : 0.0;
        return 16.0 * (kron / (u * u * u) + 6.0 * x[k] * x[l] / (u * u * u * u));
    };
    const double c = 2.0 * (n - 1);
    f.metric = [n, c, C, lam](const Vec& x, double tau) {
        return Mat(c * (C - tau) * lam(x) * Mat::Identity(n, n));
    };
    f.metric_dx = [n, c, C, dlam](const Vec& x, double tau, int k) {
        return Mat(c * (C - tau) * dlam(x, k) * Mat::Identity(n, n));
    };
    f.metric_dxdx = [n, c, C, d2lam](const Vec& x, double tau, int k, int l) {
        return Mat(c * (C - tau) * d2lam(x, k, l) * Mat::Identity(n, n));
    };
    f.metric_dtau = [n, c, lam](const Vec& x, double) {
        return Mat(-c * lam(x) * Mat::Identity(n, n));
    };
    f.ricci = [n, lam](const Vec& x, double) {
        return Mat(-(n - 1.0) * lam(x) * Mat::Identity(n, n));
    };
    const double nn = n;
    f.scalar = [nn, C](const Vec&, double tau) { return -nn / (2.0 * (C - tau)); };
    f.scalar_dx = [n](const Vec&, double) { return Vec(Vec::Zero(n)); };
    f.scalar_dtau = [nn, C](const Vec&, double tau) {
        return -nn / (2.0 * (C - tau) * (C - tau));
    };
    return f;
}

/// Block product of two flows; curvature data combine blockwise and scalar
/// curvatures add.
inline FlowFamily product_flow(const FlowFamily& a, const FlowFamily& b) {
    FlowFamily f;
    f.key = "prod:" + a.key + "+" + b.key;
    f.tau_min = std::max(a.tau_min, b.tau_min);
    f.tau_max = std::min(a.tau_max, b.tau_max);
    if (!(f.tau_min < f.tau_max)) {
        throw ConfigError("product_flow: empty common tau interval");
    }
    const int n1 = a.dim(), n2 = b.dim(), n = n1 + n2;
    f.is_einstein_shrinker = false;
    f.translation_invariant = a.translation_invariant && b.translation_invariant;
    f.chart.dim = n;
    f.chart.name = a.chart.name + "*" + b.chart.name;
    f.chart.box.lo = Vec(n);
    f.chart.box.hi = Vec(n);
    f.chart.box.lo << a.chart.box.lo, b.chart.box.lo;
    f.chart.box.hi << a.chart.box.hi, b.chart.box.hi;

    auto split = [n1, n2](const Vec& x) {
        return std::pair<Vec, Vec>(x.head(n1), x.tail(n2));
    };
    auto assemble = [n, n1, n2](const Mat& m1, const Mat& m2) {
        Mat m = Mat::Zero(n, n);
        m.topLeftCorner(n1, n1) = m1;
        m.bottomRightCorner(n2, n2) = m2;
        return m;
    };
    f.metric = [=](const Vec& x, double tau) {
        auto [x1, x2] = split(x);
        return assemble(a.metric(x1, tau), b.metric(x2, tau));
    };
    f.metric_dx = [=](const Vec& x, double tau, int k) {
        auto [x1, x2] = split(x);
        if (k < n1) return assemble(a.metric_dx(x1, tau, k), Mat::Zero(n2, n2));
        return assemble(Mat::Zero(n1, n1), b.metric_dx(x2, tau, k - n1));
    };
    f.metric_dxdx = [=](const Vec& x, double tau, int k, int l) {
        auto [x1, x2] = split(x);
        if (k < n1 && l < n1)
            return assemble(a.metric_dxdx(x1, tau, k, l), Mat::Zero(n2, n2));
        if (k >= n1 && l >= n1)
            return assemble(Mat::Zero(n1, n1), b.metric_dxdx(x2, tau, k - n1, l - n1));
        return Mat(Mat::Zero(n, n));
    };
    f.metric_dtau = [=](const Vec& x, double tau) {
        auto [x1, x2] = split(x);
        return assemble(a.metric_dtau(x1, tau), b.metric_dtau(x2, tau));
    };
    f.ricci = [=](const Vec& x, double tau) {
        auto [x1, x2] = split(x);
        return assemble(a.ricci(x1, tau), b.ricci(x2, tau));
    };
    f.scalar = [=](const Vec& x, double tau) {
        auto [x1, x2] = split(x);
        return a.scalar(x1, tau) + b.scalar(x2, tau);
    };
    f.scalar_dx = [=](const Vec& x, double tau) {
        auto [x1, x2] = split(x);
        Vec g(n);
        g << a.scalar_dx(x1, tau), b.scalar_dx(x2, tau);
        return g;
    };
    f.scalar_dtau = [=](const Vec& x, double tau) {
        auto [x1, x2] = split(x);
        return a.scalar_dtau(x1, tau) + b.scalar_dtau(x2, tau);
    };
    return f;
}

/// Same round 2-sphere but with the coordinate pole moved to the x-axis;
/// used to confirm chart independence of every invariant.
inline FlowFamily sphere_flow_rotated(int n) {
    if (n != 2) throw ConfigError("sphere_flow_rotated: only n = 2");
    FlowFamily f = sphere_flow(2);
    f.key = "sphere2@x";
    f.chart.name = "polar-s2-xpole";
    return f;
}

/// Coordinates of the same geometric point of S^2 in the rotated chart whose
/// pole sits at +x.  Embedding (sin t cos p, sin t sin p, cos t); new frame
/// reads latitude from the x-axis and longitude in the (y, z)-plane.
inline Vec sphere2_to_rotated(const Vec& tp) {
    const double t = tp[0], p = tp[1];
    const double px = std::sin(t) * std::cos(p);
    const double py = std::sin(t) * std::sin(p);
    const double pz = std::cos(t);
    double t2 = std::acos(std::min(1.0, std::max(-1.0, px)));
    double p2 = std::atan2(pz, py);
    if (p2 < 0.0) p2 += 2.0 * M_PI;
    Vec out(2);
    out << t2, p2;
    return out;
}

/// Parses the public flow keys: sphere2, sphere3, flat1..flat3, hyp2, hyp3,
/// prod:<key>+<key>.
inline FlowFamily flow_by_key(const std::string& key) {
    if (key == "sphere2") return sphere_flow(2);
    if (key == "sphere3") return sphere_flow(3);
    if (key == "flat1") return flat_flow(1);
    if (key == "flat2") return flat_flow(2);
    if (key == "flat3") return flat_flow(3);
    if (key == "hyp2") return hyperbolic_flow(2);
    if (key == "hyp3") return hyperbolic_flow(3);
    if (key.rfind("prod:", 0) == 0) {
        const std::string rest = key.substr(5);
        const auto plus = rest.find('+');
        if (plus == std::string::npos) {
            throw ConfigError("flow_by_key: product key needs '+' between factors");
        }
        return product_flow(flow_by_key(rest.substr(0, plus)),
                            flow_by_key(rest.substr(plus + 1)));
    }
    throw ConfigError("flow_by_key: unknown flow key '" + key + "'");
}

// ---------------------------------------------------------------------------
// Self-consistency operators: the catalogue data against the tensor module.
// ---------------------------------------------------------------------------

inline TensorValue metric_at(const FlowFamily& f, const SpacetimePoint& p) {
    f.require_admissible(p);
    TensorValue t;
    t.comp = f.metric(p.x, p.tau);
    t.declared_symmetric = true;
    return t;
}

/// dg/dtau - 2 Ric(g), Ricci computed through the full FD pipeline.
inline TensorValue flow_residual(const FlowFamily& f, const SpacetimePoint& p) {
    f.require_admissible(p, 0.0, 0.0);
    MetricField mf = spatial_field(f, p.tau, false);
    const TensorValue ric = ricci(mf, p.x);
    return make_symmetric(Mat(f.metric_dtau(p.x, p.tau) - 2.0 * ric.comp), 1e-4,
                          "flow_residual");
}

/// R_tau + Lap R + 2 |Ric|^2 with the Laplacian and Ricci evaluated through
/// the machinery (the catalogue only supplies R, R_tau pointwise).
inline double scalar_evolution_residual(const FlowFamily& f, const SpacetimePoint& p) {
    f.require_admissible(p);
    MetricField mf = spatial_field(f, p.tau, false);
    auto scal = f.scalar;
    const double tau = p.tau;
    ScalarField R;
    R.f = [scal, tau](const Vec& y) { return scal(y, tau); };
    const double lap = laplacian(mf, R, p.x);
    const Mat inv = sym_inverse(mf.g(p.x), mf.max_condition).inverse;
    const Mat ric = ricci(mf, p.x).comp;
    const double ric2 = (inv * ric * inv * ric).trace();
    return f.scalar_dtau(p.x, p.tau) + lap + 2.0 * ric2;
}

/// Contracted second Bianchi identity: div Ric - (1/2) dR as a covector.
/// The Ricci endomorphism field is the catalogue's, the covariant divergence
/// is assembled from machine Christoffels and FD.
inline Vec bianchi_residual(const FlowFamily& f, const SpacetimePoint& p) {
    f.require_admissible(p);
    const int n = f.dim();
    MetricField mf = spatial_field(f, p.tau, false);
    auto metric = f.metric;
    auto ricci_an = f.ricci;
    const double tau = p.tau;
    auto endo = [metric, ricci_an, tau](const Vec& y) {
        const Mat g = metric(y, tau);
        return Mat(sym_inverse(g).inverse * ricci_an(y, tau));
    };
    const Tensor3 G = christoffel(mf, p.x);
    const Mat T = endo(p.x);
    std::vector<Mat> dT(n);
    for (int i = 0; i < n; ++i) dT[i] = matrix_d1(endo, p.x, i, mf.fd, &mf.domain);
    Vec res(n);
    for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            s += dT[i](i, j);
            for (int k = 0; k < n; ++k) {
                s += G(i, i, k) * T(k, j) - G(k, i, j) * T(i, k);
            }
        }
        res[j] = s - 0.5 * f.scalar_dx(p.x, p.tau)[j];
    }
    return res;
}

}  // namespace rfl
