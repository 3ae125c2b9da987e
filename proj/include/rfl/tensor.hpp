/// @file tensor.hpp
/// Coordinate tensor calculus on top of the FD engine: Christoffel symbols,
/// Ricci and Riemann curvature, Hessian / gradient / Laplacian of scalars.
/// Metric and scalar fields may carry analytic derivatives; whatever is
/// missing falls back to fourth-order FD with Richardson extrapolation.
#pragma once

#include "rfl/common.hpp"
#include "rfl/fd.hpp"

#include <array>
#include <cmath>

namespace rfl {

// ---------------------------------------------------------------------------
// Value types.
// ---------------------------------------------------------------------------

/// Two-index tensor value with a symmetry tag.  Producers that declare
/// symmetry record the raw asymmetry they saw before symmetrizing, so the
/// declared invariant |T_ab - T_ba| <= 1e-12 holds on the stored components.
struct TensorValue {
    Mat comp;
    bool declared_symmetric = false;
    double raw_asymmetry = 0.0;

    double sup() const { return sup_abs(comp); }

    void check_symmetry(double tol = 1e-12) const {
        if (!declared_symmetric) return;
        const double a = sup_abs(Mat(comp - comp.transpose()));
        if (a > tol) {
            throw InternalError("TensorValue: declared symmetric but |T-T^t| = " +
                                format_double(a));
        }
    }
};

/// Symmetrizes `a`, recording the raw asymmetry; refuses asymmetry beyond
/// `raw_tol` (this catches broken derivative inputs rather than hiding them).
inline TensorValue make_symmetric(const Mat& a, double raw_tol, const char* who) {
    TensorValue t;
    t.raw_asymmetry = sup_abs(Mat(a - a.transpose()));
    if (t.raw_asymmetry > raw_tol) {
        throw InternalError(std::string(who) + ": raw asymmetry " +
                            format_double(t.raw_asymmetry) + " exceeds " +
                            format_double(raw_tol));
    }
    t.comp = 0.5 * (a + a.transpose());
    t.declared_symmetric = true;
    return t;
}

/// Connection coefficients GAMMA^a_{bc}; slot 0 is the upper index.
struct Tensor3 {
    int d = 0;
    std::vector<double> v;

    Tensor3() = default;
    explicit Tensor3(int dim) : d(dim), v(static_cast<size_t>(dim) * dim * dim, 0.0) {}

    double& operator()(int a, int b, int c) { return v[(static_cast<size_t>(a) * d + b) * d + c]; }
    double operator()(int a, int b, int c) const { return v[(static_cast<size_t>(a) * d + b) * d + c]; }

    void scale(double s) {
        for (double& x : v) x *= s;
    }
    void axpy(double s, const Tensor3& o) {
        for (size_t i = 0; i < v.size(); ++i) v[i] += s * o.v[i];
    }
    double sup() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
};

/// Curvature R^a_{bcd} (slot 0 upper) or fully lowered R_abcd.
struct Tensor4 {
    int d = 0;
    std::vector<double> v;

    Tensor4() = default;
    explicit Tensor4(int dim)
        : d(dim), v(static_cast<size_t>(dim) * dim * dim * dim, 0.0) {}

    double& operator()(int a, int b, int c, int e) {
        return v[((static_cast<size_t>(a) * d + b) * d + c) * d + e];
    }
    double operator()(int a, int b, int c, int e) const {
        return v[((static_cast<size_t>(a) * d + b) * d + c) * d + e];
    }
    double sup() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }
};

// ---------------------------------------------------------------------------
// Fields.
// ---------------------------------------------------------------------------

/// Riemannian metric on an open box.  `g` is mandatory; `dg` and `d2g`
/// (analytic first and second coordinate derivatives) are optional and, when
/// present, replace the FD fallback exactly.
struct MetricField {
    int dim = 0;
    Box domain;
    std::function<Mat(const Vec&)> g;
    std::function<Mat(const Vec&, int)> dg;        // dg(x, k)    = d_k g
    std::function<Mat(const Vec&, int, int)> d2g;  // d2g(x, k, l) = d_k d_l g
    FdOptions fd;
    double max_condition = 1e12;
};

/// Scalar function with optional analytic gradient / coordinate Hessian.
struct ScalarField {
    std::function<double(const Vec&)> f;
    std::function<Vec(const Vec&)> grad;
    std::function<Mat(const Vec&)> hess;
};

using Connection = std::function<Tensor3(const Vec&)>;

// ---------------------------------------------------------------------------
// Matrix- and connection-valued FD (one Richardson level, like fd.hpp).
// ---------------------------------------------------------------------------

namespace detail {

template <class Field, class Value>
Value stencil_d1(const Field& F, const Vec& x, int dir, double h) {
    Vec e = Vec::Zero(x.size());
    e[dir] = 1.0;
    Value acc = F(x + 2.0 * h * e);
    acc.scale(-1.0);
    acc.axpy(8.0, F(x + h * e));
    acc.axpy(-8.0, F(x - h * e));
    acc.axpy(1.0, F(x - 2.0 * h * e));
    acc.scale(1.0 / (12.0 * h));
    return acc;
}

// Adapter so Eigen matrices fit the scale/axpy protocol above.
struct MatBox {
    Mat m;
    void scale(double s) { m *= s; }
    void axpy(double s, const MatBox& o) { m += s * o.m; }
};

}  // namespace detail

/// d_dir of a matrix-valued field, Richardson-extrapolated.
inline Mat matrix_d1(const std::function<Mat(const Vec&)>& F, const Vec& x,
                     int dir, const FdOptions& opts, const Box* dom = nullptr) {
    const double h = fd_step(x, dir, opts);
    if (dom) dom->require(x, 2.0 * h, "matrix_d1");
    auto wrapped = [&](const Vec& y) { return detail::MatBox{F(y)}; };
    detail::MatBox coarse = detail::stencil_d1<decltype(wrapped), detail::MatBox>(wrapped, x, dir, h);
    detail::MatBox fine = detail::stencil_d1<decltype(wrapped), detail::MatBox>(wrapped, x, dir, 0.5 * h);
    return (16.0 * fine.m - coarse.m) / 15.0;
}

/// d_dir of a connection-valued field, Richardson-extrapolated.
inline Tensor3 connection_d1(const Connection& G, const Vec& x, int dir,
                             const FdOptions& opts) {
    const double h = fd_step(x, dir, opts);
    Tensor3 coarse = detail::stencil_d1<Connection, Tensor3>(G, x, dir, h);
    Tensor3 fine = detail::stencil_d1<Connection, Tensor3>(G, x, dir, 0.5 * h);
    fine.scale(16.0 / 15.0);
    fine.axpy(-1.0 / 15.0, coarse);
    return fine;
}

// ---------------------------------------------------------------------------
// Metric derivatives and Christoffel symbols.
// ---------------------------------------------------------------------------

/// All first coordinate derivatives of the metric, analytic when available.
inline std::vector<Mat> metric_dx(const MetricField& m, const Vec& x) {
    std::vector<Mat> out(m.dim);
    for (int k = 0; k < m.dim; ++k) {
        if (m.dg) {
            out[k] = m.dg(x, k);
        } else {
            out[k] = matrix_d1(m.g, x, k, m.fd, &m.domain);
        }
    }
    return out;
}

/// GAMMA^a_{bc} = 1/2 g^{ad} (d_b g_{cd} + d_c g_{bd} - d_d g_{bc}).
inline Tensor3 christoffel(const MetricField& m, const Vec& x) {
    m.domain.require(x, 0.0, "christoffel");
    const Mat g = m.g(x);
    const Mat inv = sym_inverse(g, m.max_condition).inverse;
    const std::vector<Mat> dg = metric_dx(m, x);
    Tensor3 G(m.dim);
    for (int a = 0; a < m.dim; ++a) {
        for (int b = 0; b < m.dim; ++b) {
            for (int c = b; c < m.dim; ++c) {
                double s = 0.0;
                for (int d = 0; d < m.dim; ++d) {
                    s += inv(a, d) * (dg[b](c, d) + dg[c](b, d) - dg[d](b, c));
                }
                G(a, b, c) = 0.5 * s;
                G(a, c, b) = G(a, b, c);
            }
        }
    }
    return G;
}

/// d_e GAMMA^a_{bc} for all e.  Uses analytic d2g when available, otherwise
/// differentiates the Christoffel field itself.
inline std::vector<Tensor3> christoffel_dx(const MetricField& m, const Vec& x) {
    std::vector<Tensor3> out(m.dim, Tensor3(m.dim));
    if (m.dg && m.d2g) {
        const Mat inv = sym_inverse(m.g(x), m.max_condition).inverse;
        const std::vector<Mat> dg = metric_dx(m, x);
        for (int e = 0; e < m.dim; ++e) {
            const Mat dinv = -inv * dg[e] * inv;
            std::vector<Mat> d2(m.dim);
            for (int k = 0; k < m.dim; ++k) d2[k] = m.d2g(x, e, k);
            for (int a = 0; a < m.dim; ++a) {
                for (int b = 0; b < m.dim; ++b) {
                    for (int c = 0; c < m.dim; ++c) {
                        double s = 0.0;
                        for (int d = 0; d < m.dim; ++d) {
                            s += dinv(a, d) * (dg[b](c, d) + dg[c](b, d) - dg[d](b, c)) +
                                 inv(a, d) * (d2[b](c, d) + d2[c](b, d) - d2[d](b, c));
                        }
                        out[e](a, b, c) = 0.5 * s;
                    }
                }
            }
        }
        return out;
    }
    Connection G = [&m](const Vec& y) { return christoffel(m, y); };
    for (int e = 0; e < m.dim; ++e) {
        m.domain.require(x, 2.0 * fd_step(x, e, m.fd), "christoffel_dx");
        out[e] = connection_d1(G, x, e, m.fd);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Curvature.
// ---------------------------------------------------------------------------

/// Ricci tensor assembled from a connection field:
///   R_ab = d_c G^c_{ab} - d_b G^c_{ac} + G^c_{ab} G^d_{cd} - G^d_{ac} G^c_{bd}.
inline TensorValue ricci_from_connection(const Connection& Gf, int dim, const Vec& x,
                                         const FdOptions& opts,
                                         double raw_tol = 1e-6) {
    const Tensor3 G = Gf(x);
    std::vector<Tensor3> dG(dim);
    for (int e = 0; e < dim; ++e) dG[e] = connection_d1(Gf, x, e, opts);
    Mat r = Mat::Zero(dim, dim);
    for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < dim; ++b) {
            double s = 0.0;
            for (int c = 0; c < dim; ++c) {
                s += dG[c](c, a, b) - dG[b](c, a, c);
                for (int d = 0; d < dim; ++d) {
                    s += G(c, a, b) * G(d, c, d) - G(d, a, c) * G(c, b, d);
                }
            }
            r(a, b) = s;
        }
    }
    return make_symmetric(r, raw_tol, "ricci_from_connection");
}

/// Same contraction but with precomputed connection derivatives.
inline TensorValue ricci_from_parts(const Tensor3& G, const std::vector<Tensor3>& dG,
                                    double raw_tol = 1e-6) {
    const int dim = G.d;
    Mat r = Mat::Zero(dim, dim);
    for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < dim; ++b) {
            double s = 0.0;
            for (int c = 0; c < dim; ++c) {
                s += dG[c](c, a, b) - dG[b](c, a, c);
                for (int d = 0; d < dim; ++d) {
                    s += G(c, a, b) * G(d, c, d) - G(d, a, c) * G(c, b, d);
                }
            }
            r(a, b) = s;
        }
    }
    return make_symmetric(r, raw_tol, "ricci_from_parts");
}

inline TensorValue ricci(const MetricField& m, const Vec& x) {
    const Tensor3 G = christoffel(m, x);
    const std::vector<Tensor3> dG = christoffel_dx(m, x);
    return ricci_from_parts(G, dG);
}

/// Riemann tensor R^a_{bcd} from precomputed connection data:
///   R^a_{bcd} = d_c G^a_{bd} - d_d G^a_{bc} + G^a_{ce} G^e_{bd} - G^a_{de} G^e_{bc}.
inline Tensor4 riemann_from_parts(const Tensor3& G, const std::vector<Tensor3>& dG) {
    const int dim = G.d;
    Tensor4 R(dim);
    for (int a = 0; a < dim; ++a) {
        for (int b = 0; b < dim; ++b) {
            for (int c = 0; c < dim; ++c) {
                for (int d = 0; d < dim; ++d) {
                    double s = dG[c](a, b, d) - dG[d](a, b, c);
                    for (int e = 0; e < dim; ++e) {
                        s += G(a, c, e) * G(e, b, d) - G(a, d, e) * G(e, b, c);
                    }
                    R(a, b, c, d) = s;
                }
            }
        }
    }
    return R;
}

inline Tensor4 riemann_from_connection(const Connection& Gf, int dim, const Vec& x,
                                       const FdOptions& opts) {
    const Tensor3 G = Gf(x);
    std::vector<Tensor3> dG(dim);
    for (int e = 0; e < dim; ++e) dG[e] = connection_d1(Gf, x, e, opts);
    return riemann_from_parts(G, dG);
}

inline Tensor4 riemann(const MetricField& m, const Vec& x) {
    return riemann_from_parts(christoffel(m, x), christoffel_dx(m, x));
}

/// Lowers the first index: R_abcd = g_ae R^e_{bcd}.
inline Tensor4 lower_first(const Tensor4& R, const Mat& g) {
    Tensor4 L(R.d);
    for (int a = 0; a < R.d; ++a) {
        for (int b = 0; b < R.d; ++b) {
            for (int c = 0; c < R.d; ++c) {
                for (int d = 0; d < R.d; ++d) {
                    double s = 0.0;
                    for (int e = 0; e < R.d; ++e) s += g(a, e) * R(e, b, c, d);
                    L(a, b, c, d) = s;
                }
            }
        }
    }
    return L;
}

// ---------------------------------------------------------------------------
// Scalar calculus.
// ---------------------------------------------------------------------------

inline Vec scalar_dx(const ScalarField& f, const Vec& x, const FdOptions& opts,
                     const Box* dom) {
    if (f.grad) return f.grad(x);
    Vec g(x.size());
    for (int k = 0; k < x.size(); ++k) {
        g[k] = fd_partial(f.f, x, k, opts, dom).value;
    }
    return g;
}

inline Mat scalar_dxdx(const ScalarField& f, const Vec& x, const FdOptions& opts,
                       const Box* dom) {
    if (f.hess) return f.hess(x);
    const int n = static_cast<int>(x.size());
    Mat h(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            h(a, b) = fd_mixed(f.f, x, a, b, opts, dom).value;
            h(b, a) = h(a, b);
        }
    }
    return h;
}

/// Covariant Hessian: (Hess f)_ab = d_a d_b f - (d_c f) GAMMA^c_{ab}.
inline TensorValue hessian(const MetricField& m, const ScalarField& f, const Vec& x) {
    const Mat dd = scalar_dxdx(f, x, m.fd, &m.domain);
    const Vec df = scalar_dx(f, x, m.fd, &m.domain);
    const Tensor3 G = christoffel(m, x);
    Mat h(m.dim, m.dim);
    for (int a = 0; a < m.dim; ++a) {
        for (int b = 0; b < m.dim; ++b) {
            double s = dd(a, b);
            for (int c = 0; c < m.dim; ++c) s -= df[c] * G(c, a, b);
            h(a, b) = s;
        }
    }
    return make_symmetric(h, 1e-6, "hessian");
}

/// Raised gradient: (grad f)^a = g^{ab} d_b f.
inline Vec gradient(const MetricField& m, const ScalarField& f, const Vec& x) {
    const Mat inv = sym_inverse(m.g(x), m.max_condition).inverse;
    return inv * scalar_dx(f, x, m.fd, &m.domain);
}

/// Laplace-Beltrami: trace of the covariant Hessian against g^{-1}.
inline double laplacian(const MetricField& m, const ScalarField& f, const Vec& x) {
    const Mat inv = sym_inverse(m.g(x), m.max_condition).inverse;
    const TensorValue h = hessian(m, f, x);
    return (inv * h.comp).trace();
}

inline double scalar_curvature(const MetricField& m, const Vec& x) {
    const Mat inv = sym_inverse(m.g(x), m.max_condition).inverse;
    return (inv * ricci(m, x).comp).trace();
}

}  // namespace rfl
