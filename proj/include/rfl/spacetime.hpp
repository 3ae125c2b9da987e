/// @file spacetime.hpp
/// Space-time soliton metrics built over a flow family: the shrinking metric
/// (spatial block g/tau, time component N/(2 tau^3) + R/tau - n/(2 tau^2))
/// and the steady metric (spatial block g, time component N + R).
/// Provides closed-form connection coefficients, their first-order Ricci and
/// Hessian approximations, soliton residuals, the slice mean curvature, the
/// exact gradient identity and the rescaling flow in s.
#pragma once

#include "rfl/common.hpp"
#include "rfl/flows.hpp"
#include "rfl/slopes.hpp"
#include "rfl/tensor.hpp"

#include <cmath>

namespace rfl {

enum class SolitonKind { shrinking, steady };

/// Which pipeline produces curvature of the space-time metric: FD applied to
/// the closed-form connection, or FD all the way from the raw components.
enum class Pipeline { closed_form, numeric };

struct SpacetimeMetric {
    FlowFamily flow;
    double N = 1e3;
    SolitonKind kind = SolitonKind::shrinking;

    int dim() const { return flow.dim() + 1; }

    /// Smallest N that keeps the time component positive at p.
    double min_admissible_n(const SpacetimePoint& p) const {
        const double R = flow.scalar(p.x, p.tau);
        if (kind == SolitonKind::shrinking) {
            return flow.dim() * p.tau - 2.0 * p.tau * p.tau * R;
        }
        return -R;
    }

    double g00(const SpacetimePoint& p) const {
        flow.require_admissible(p);
        const double R = flow.scalar(p.x, p.tau);
        double v;
        if (kind == SolitonKind::shrinking) {
            const double tau = p.tau;
            v = N / (2.0 * tau * tau * tau) + R / tau -
                flow.dim() / (2.0 * tau * tau);
        } else {
            v = N + R;
        }
        if (!(v > 0.0)) {
            throw PositivityError(
                "spacetime metric: time component " + format_double(v) +
                    " not positive at tau = " + format_double(p.tau) +
                    "; need N > " + format_double(min_admissible_n(p)),
                min_admissible_n(p));
        }
        return v;
    }

    /// Full (n+1)x(n+1) component matrix in coordinates y = (tau, x).
    Mat components(const SpacetimePoint& p) const {
        const int n = flow.dim();
        Mat m = Mat::Zero(n + 1, n + 1);
        m(0, 0) = g00(p);
        const Mat g = flow.metric(p.x, p.tau);
        if (kind == SolitonKind::shrinking) {
            m.bottomRightCorner(n, n) = g / p.tau;
        } else {
            m.bottomRightCorner(n, n) = g;
        }
        return m;
    }

    Box spacetime_box() const {
        const int n = flow.dim();
        Box b;
        b.lo = Vec(n + 1);
        b.hi = Vec(n + 1);
        b.lo[0] = flow.tau_min;
        b.hi[0] = flow.tau_max;
        b.lo.tail(n) = flow.chart.box.lo;
        b.hi.tail(n) = flow.chart.box.hi;
        return b;
    }

    SpacetimePoint split(const Vec& y) const {
        SpacetimePoint p;
        p.tau = y[0];
        p.x = y.tail(flow.dim());
        return p;
    }

    Vec join(const SpacetimePoint& p) const {
        Vec y(dim());
        y[0] = p.tau;
        y.tail(flow.dim()) = p.x;
        return y;
    }

    /// The raw component field over y = (tau, x); intentionally carries no
    /// analytic derivatives so curvature built from it is FD end to end.
    MetricField metric_field() const {
        MetricField m;
        m.dim = dim();
        m.domain = spacetime_box();
        SpacetimeMetric self = *this;
        m.g = [self](const Vec& y) { return self.components(self.split(y)); };
        return m;
    }

    /// Soliton potential: N/(2 tau) (shrinking) or -N tau (steady), with
    /// exact derivatives in the space-time coordinates.
    ScalarField potential() const {
        ScalarField f;
        const double n_aux = N;
        const int d = dim();
        if (kind == SolitonKind::shrinking) {
            f.f = [n_aux](const Vec& y) { return n_aux / (2.0 * y[0]); };
            f.grad = [n_aux, d](const Vec& y) {
                Vec g = Vec::Zero(d);
                g[0] = -n_aux / (2.0 * y[0] * y[0]);
                return g;
            };
            f.hess = [n_aux, d](const Vec& y) {
                Mat h = Mat::Zero(d, d);
                h(0, 0) = n_aux / (y[0] * y[0] * y[0]);
                return h;
            };
        } else {
            f.f = [n_aux](const Vec& y) { return -n_aux * y[0]; };
            f.grad = [n_aux, d](const Vec&) {
                Vec g = Vec::Zero(d);
                g[0] = -n_aux;
                return g;
            };
            f.hess = [d](const Vec&) { return Mat(Mat::Zero(d, d)); };
        }
        return f;
    }
};

// ---------------------------------------------------------------------------
// Closed-form connection.
// ---------------------------------------------------------------------------

/// All connection coefficients of the space-time metric in closed form,
/// assembled from the flow catalogue's exact data.  Index 0 is tau.
inline Tensor3 spacetime_christoffel(const SpacetimeMetric& sm,
                                     const SpacetimePoint& p) {
    const int n = sm.flow.dim();
    const double tau = p.tau;
    const Mat g = sm.flow.metric(p.x, tau);
    const Mat ginv = sym_inverse(g).inverse;
    const Mat ric = sm.flow.ricci(p.x, tau);
    const Mat ricmix = ginv * ric;
    const double R = sm.flow.scalar(p.x, tau);
    const Vec dR = sm.flow.scalar_dx(p.x, tau);
    const double Rt = sm.flow.scalar_dtau(p.x, tau);
    const Vec dRup = ginv * dR;
    const double a00 = sm.g00(p);

    MetricField slice = spatial_field(sm.flow, tau, true);
    const Tensor3 Gs = christoffel(slice, p.x);

    Tensor3 G(n + 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) G(i + 1, j + 1, k + 1) = Gs(i, j, k);
        }
    }
    if (sm.kind == SolitonKind::shrinking) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double v = ricmix(i, j) - ((i == j) ? 1.0 / (2.0 * tau) : 0.0);
                G(i + 1, j + 1, 0) = v;
                G(i + 1, 0, j + 1) = v;
            }
            G(i + 1, 0, 0) = -0.5 * dRup[i];
        }
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                G(0, j + 1, k + 1) =
                    (g(j, k) / (2.0 * tau * tau) - ric(j, k) / tau) / a00;
            }
            const double v = dR[j] / (2.0 * tau * a00);
            G(0, j + 1, 0) = v;
            G(0, 0, j + 1) = v;
        }
        G(0, 0, 0) = 0.5 / a00 *
                     (-1.5 * sm.N / (tau * tau * tau * tau) - R / (tau * tau) +
                      Rt / tau + sm.flow.dim() / (tau * tau * tau));
    } else {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                G(i + 1, j + 1, 0) = ricmix(i, j);
                G(i + 1, 0, j + 1) = ricmix(i, j);
            }
            G(i + 1, 0, 0) = -0.5 * dRup[i];
        }
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                G(0, j + 1, k + 1) = -ric(j, k) / a00;
            }
            const double v = dR[j] / (2.0 * a00);
            G(0, j + 1, 0) = v;
            G(0, 0, j + 1) = v;
        }
        G(0, 0, 0) = Rt / (2.0 * a00);
    }
    return G;
}

/// Sup-norm gap between the closed-form connection and the one computed by
/// naive FD on the raw component field.
inline double christoffel_crosscheck(const SpacetimeMetric& sm,
                                     const SpacetimePoint& p) {
    const Tensor3 closed = spacetime_christoffel(sm, p);
    MetricField mf = sm.metric_field();
    Tensor3 numeric = christoffel(mf, sm.join(p));
    numeric.axpy(-1.0, closed);
    return numeric.sup();
}

// ---------------------------------------------------------------------------
// First-order Ricci / Hessian approximations and numeric counterparts.
// ---------------------------------------------------------------------------

struct RicciHessian {
    Mat ricci;
    Mat hessian;
};

/// Leading-order closed expressions for Ricci(space-time metric) and the
/// covariant Hessian of the potential; each entry is correct up to O(1/N).
/// Their sum minus half the metric (shrinking) or their plain sum (steady)
/// cancels exactly.
inline RicciHessian ricci_hessian_approx(const SpacetimeMetric& sm,
                                         const SpacetimePoint& p) {
    const int n = sm.flow.dim();
    const double tau = p.tau;
    const Mat g = sm.flow.metric(p.x, tau);
    const Mat ric = sm.flow.ricci(p.x, tau);
    const double R = sm.flow.scalar(p.x, tau);
    const Vec dR = sm.flow.scalar_dx(p.x, tau);
    const double Rt = sm.flow.scalar_dtau(p.x, tau);

    RicciHessian rh;
    rh.ricci = Mat::Zero(n + 1, n + 1);
    rh.hessian = Mat::Zero(n + 1, n + 1);
    rh.ricci.bottomRightCorner(n, n) = ric;
    for (int i = 0; i < n; ++i) {
        rh.ricci(0, i + 1) = rh.ricci(i + 1, 0) = -0.5 * dR[i];
        rh.hessian(0, i + 1) = rh.hessian(i + 1, 0) = 0.5 * dR[i];
    }
    if (sm.kind == SolitonKind::shrinking) {
        rh.ricci(0, 0) = -0.5 * Rt - R / (2.0 * tau);
        rh.hessian.bottomRightCorner(n, n) = g / (2.0 * tau) - ric;
        rh.hessian(0, 0) = sm.N / (4.0 * tau * tau * tau) + R / tau -
                           n / (4.0 * tau * tau) + 0.5 * Rt;
    } else {
        rh.ricci(0, 0) = -0.5 * Rt;
        rh.hessian.bottomRightCorner(n, n) = -ric;
        rh.hessian(0, 0) = 0.5 * Rt;
    }
    return rh;
}

/// Ricci and potential Hessian of the space-time metric via the requested
/// pipeline.  closed_form: FD only of the closed connection field.
/// numeric: FD of the raw components throughout.
inline RicciHessian ricci_hessian_numeric(const SpacetimeMetric& sm,
                                          const SpacetimePoint& p,
                                          Pipeline pipe) {
    const int d = sm.dim();
    const Vec y = sm.join(p);
    const ScalarField pot = sm.potential();
    FdOptions fd;
    Tensor3 Gp;
    TensorValue ric;
    if (pipe == Pipeline::closed_form) {
        SpacetimeMetric self = sm;
        Connection Gf = [self](const Vec& yy) {
            return spacetime_christoffel(self, self.split(yy));
        };
        Gp = Gf(y);
        ric = ricci_from_connection(Gf, d, y, fd);
    } else {
        MetricField mf = sm.metric_field();
        Gp = christoffel(mf, y);
        ric = ricci(mf, y);
    }
    const Vec df = pot.grad(y);
    const Mat ddf = pot.hess(y);
    Mat hess(d, d);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            double s = ddf(a, b);
            for (int c = 0; c < d; ++c) s -= df[c] * Gp(c, a, b);
            hess(a, b) = s;
        }
    }
    RicciHessian rh;
    rh.ricci = ric.comp;
    rh.hessian = 0.5 * (hess + hess.transpose());
    return rh;
}

/// Soliton residual: Ric + Hess(potential) - metric/2 (shrinking) or
/// Ric + Hess(potential) (steady); expected O(1/N) in sup norm.
inline Mat soliton_residual(const SpacetimeMetric& sm, const SpacetimePoint& p,
                            Pipeline pipe) {
    const RicciHessian rh = ricci_hessian_numeric(sm, p, pipe);
    Mat res = rh.ricci + rh.hessian;
    if (sm.kind == SolitonKind::shrinking) res -= 0.5 * sm.components(p);
    return res;
}

/// Sup gap between the numeric Ricci/Hessian pair and the first-order
/// closed expressions; expected O(1/N).
inline double approx_vs_numeric_gap(const SpacetimeMetric& sm,
                                    const SpacetimePoint& p, Pipeline pipe) {
    const RicciHessian num = ricci_hessian_numeric(sm, p, pipe);
    const RicciHessian app = ricci_hessian_approx(sm, p);
    return std::max(sup_abs(Mat(num.ricci - app.ricci)),
                    sup_abs(Mat(num.hessian - app.hessian)));
}

// ---------------------------------------------------------------------------
// N sweeps.
// ---------------------------------------------------------------------------

template <class PointOp>
ResidualReport n_sweep(const FlowFamily& flow, SolitonKind kind,
                       const std::vector<SpacetimePoint>& pts,
                       const std::vector<double>& n_values, PointOp&& op) {
    std::vector<double> sups;
    sups.reserve(n_values.size());
    for (double N : n_values) {
        SpacetimeMetric sm{flow, N, kind};
        double worst = 0.0;
        std::vector<double> vals = parallel_map(pts, [&](const SpacetimePoint& p) {
            return op(sm, p);
        });
        for (double v : vals) worst = std::max(worst, v);
        sups.push_back(worst);
    }
    return sweep_report(n_values, sups);
}

inline ResidualReport soliton_residual_sweep(const FlowFamily& flow, SolitonKind kind,
                                             const std::vector<SpacetimePoint>& pts,
                                             const std::vector<double>& n_values,
                                             Pipeline pipe) {
    return n_sweep(flow, kind, pts, n_values,
                   [pipe](const SpacetimeMetric& sm, const SpacetimePoint& p) {
                       return sup_abs(soliton_residual(sm, p, pipe));
                   });
}

inline ResidualReport approx_gap_sweep(const FlowFamily& flow, SolitonKind kind,
                                       const std::vector<SpacetimePoint>& pts,
                                       const std::vector<double>& n_values,
                                       Pipeline pipe) {
    return n_sweep(flow, kind, pts, n_values,
                   [pipe](const SpacetimeMetric& sm, const SpacetimePoint& p) {
                       return approx_vs_numeric_gap(sm, p, pipe);
                   });
}

// ---------------------------------------------------------------------------
// Slice mean curvature and the exact gradient identity.
// ---------------------------------------------------------------------------

/// Mean curvature of the constant-tau slice inside the shrinking space-time:
/// H = g00^{-1/2} (R - n/(2 tau)).
inline double mean_curvature_slice(const SpacetimeMetric& sm,
                                   const SpacetimePoint& p) {
    if (sm.kind != SolitonKind::shrinking) {
        throw ConfigError("mean_curvature_slice: defined for the shrinking metric");
    }
    const double R = sm.flow.scalar(p.x, p.tau);
    return (R - sm.flow.dim() / (2.0 * p.tau)) / std::sqrt(sm.g00(p));
}

/// Residual of the identity -grad(N/(2 tau)) = tau d/dtau + H vector, where
/// the mean-curvature vector is -H g00^{-1/2} d/dtau.  Holds exactly for
/// every N, not just asymptotically.
inline Vec gradient_identity_residual(const SpacetimeMetric& sm,
                                      const SpacetimePoint& p) {
    if (sm.kind != SolitonKind::shrinking) {
        throw ConfigError("gradient_identity_residual: shrinking metric only");
    }
    const int d = sm.dim();
    const Mat comp = sm.components(p);
    const Mat inv = sym_inverse(comp).inverse;
    const Vec df = sm.potential().grad(sm.join(p));
    const Vec grad_up = inv * df;

    const double H = mean_curvature_slice(sm, p);
    Vec rhs = Vec::Zero(d);
    rhs[0] = p.tau - H / std::sqrt(sm.g00(p));
    return Vec(-grad_up - rhs);
}

// ---------------------------------------------------------------------------
// Rescaling flow in s.
// ---------------------------------------------------------------------------

struct PsiOptions {
    double base_step = 1e-3;
    double target_error = 1e-9;
    int max_halvings = 6;
};

struct PsiResult {
    double tau_s = 0.0;
    double error = 0.0;  // difference between the last two step sizes
    int steps = 0;
};

/// Integrates dtau/ds = N / (2 s tau^2 g00(x_ref, tau)) from s = 1 to
/// s_target with RK4; the step is halved until two successive resolutions
/// agree to the target.  x_ref is the chart center.
inline PsiResult psi_flow(const SpacetimeMetric& sm, double tau0, double s_target,
                          const PsiOptions& opts = {}) {
    if (sm.kind != SolitonKind::shrinking) {
        throw ConfigError("psi_flow: shrinking metric only");
    }
    const Vec x_ref = sm.flow.chart.box.center();
    auto rhs = [&sm, &x_ref](double s, double tau) {
        SpacetimePoint p{tau, x_ref};
        return sm.N / (2.0 * s * tau * tau * sm.g00(p));
    };
    auto integrate = [&](double h) {
        const double span = s_target - 1.0;
        const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(span) / h)));
        const double hh = span / steps;
        double s = 1.0, tau = tau0;
        for (int i = 0; i < steps; ++i) {
            const double k1 = rhs(s, tau);
            const double k2 = rhs(s + 0.5 * hh, tau + 0.5 * hh * k1);
            const double k3 = rhs(s + 0.5 * hh, tau + 0.5 * hh * k2);
            const double k4 = rhs(s + hh, tau + hh * k3);
            tau += hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            s += hh;
        }
        return std::pair<double, int>(tau, steps);
    };
    double h = opts.base_step;
    auto [tau_prev, steps_prev] = integrate(h);
    PsiResult r;
    for (int k = 0; k < opts.max_halvings; ++k) {
        h *= 0.5;
        auto [tau_fine, steps_fine] = integrate(h);
        r.tau_s = tau_fine;
        r.error = std::abs(tau_fine - tau_prev);
        r.steps = steps_fine;
        if (r.error <= opts.target_error) return r;
        tau_prev = tau_fine;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Scaled Riemann convergence.
// ---------------------------------------------------------------------------

/// tau times the fully lowered Riemann tensor of the shrinking space-time
/// metric, from the closed-form connection.
inline Tensor4 riemann_scaled(const SpacetimeMetric& sm, const SpacetimePoint& p) {
    SpacetimeMetric self = sm;
    Connection Gf = [self](const Vec& yy) {
        return spacetime_christoffel(self, self.split(yy));
    };
    const Vec y = sm.join(p);
    FdOptions fd;
    Tensor4 up = riemann_from_connection(Gf, sm.dim(), y, fd);
    Tensor4 low = lower_first(up, sm.components(p));
    for (double& v : low.v) v *= p.tau;
    return low;
}

struct CauchyReport {
    std::vector<double> n_values;   // smaller N of each consecutive pair
    std::vector<double> diffs;      // sup |T(N_k) - T(N_{k+1})|
    SlopeFit fit;
    double worst_antisymmetry = 0.0;  // symmetry defects at the largest N
    double worst_pair_exchange = 0.0;
};

/// Componentwise Cauchy convergence of tau * Rm as N grows, plus the
/// algebraic symmetries of the lowered tensor at the largest N.
inline CauchyReport riemann_scaled_convergence(const FlowFamily& flow,
                                               const std::vector<SpacetimePoint>& pts,
                                               const std::vector<double>& n_values) {
    if (n_values.size() < 4) {
        throw ConfigError("riemann_scaled_convergence: need at least 4 N values");
    }
    CauchyReport rep;
    std::vector<std::vector<Tensor4>> per_n;
    for (double N : n_values) {
        SpacetimeMetric sm{flow, N, SolitonKind::shrinking};
        per_n.push_back(parallel_map(
            pts, [&](const SpacetimePoint& p) { return riemann_scaled(sm, p); }));
    }
    for (size_t k = 0; k + 1 < n_values.size(); ++k) {
        double worst = 0.0;
        for (size_t i = 0; i < pts.size(); ++i) {
            Tensor4 d = per_n[k][i];
            for (size_t j = 0; j < d.v.size(); ++j) d.v[j] -= per_n[k + 1][i].v[j];
            worst = std::max(worst, d.sup());
        }
        rep.n_values.push_back(n_values[k]);
        rep.diffs.push_back(worst);
    }
    rep.fit = fit_slope(rep.n_values, rep.diffs);
    // Symmetry defects are measured at the smallest N: lowering the first
    // index multiplies differencing noise by g00 ~ N, so the largest N would
    // report amplified round-off rather than a structural defect.
    const auto& last = per_n.front();
    const int d = last[0].d;
    for (const Tensor4& t : last) {
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b)
                for (int c = 0; c < d; ++c)
                    for (int e = 0; e < d; ++e) {
                        rep.worst_antisymmetry = std::max(
                            {rep.worst_antisymmetry,
                             std::abs(t(a, b, c, e) + t(b, a, c, e)),
                             std::abs(t(a, b, c, e) + t(a, b, e, c))});
                        rep.worst_pair_exchange =
                            std::max(rep.worst_pair_exchange,
                                     std::abs(t(a, b, c, e) - t(c, e, a, b)));
                    }
    }
    return rep;
}

}  // namespace rfl
