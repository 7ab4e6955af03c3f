#include "wavefront/waves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <utility>

#include "wavefront/dispersion.hpp"
#include "wavefront/numerics.hpp"

namespace wavefront {

TailFit fit_tail(const Grid1D& grid, const std::vector<double>& field,
                 double x_a, double x_b) {
    std::vector<double> xs, ys;
    double vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
    for (int j = 0; j < grid.n; ++j) {
        const double x = grid.node(j);
        if (x < x_a || x > x_b) continue;
        if (!(field[j] > 0.0))
            throw NonPositiveField("fit_tail: non-positive value at x = " +
                                   std::to_string(x));
        xs.push_back(x);
        ys.push_back(std::log(field[j]));
        vmin = std::min(vmin, field[j]);
        vmax = std::max(vmax, field[j]);
    }
    if (xs.size() < 2)
        throw InsufficientData("fit_tail: fewer than 2 nodes in window");
    const LineFit line = fit_line(xs, ys);
    TailFit out;
    out.lambda = line.slope;
    out.amplitude = std::exp(line.intercept);
    out.r_squared = line.r_squared;
    out.window_lo = xs.front();
    out.window_hi = xs.back();
    out.decades = std::log10(vmax / vmin);
    out.n_points = static_cast<int>(xs.size());
    return out;
}

double WaveProfile::eval(double z) const {
    if (z < grid.x_min) {
        // continue the fitted exponential decay, anchored at the edge value
        const double lam = tail.r_squared > 0.0 ? tail.lambda : 1.0;
        return values.front() * std::exp(lam * (z - grid.x_min));
    }
    if (z > grid.x_max) return values.back();
    return interp_cubic(values, grid.x_min, grid.dx, z);
}

double WaveProfile::slope(double z) const {
    return (eval(z + grid.dx) - eval(z - grid.dx)) / (2.0 * grid.dx);
}

namespace {

/// Leftmost upward crossing of `level`, or NaN when there is none.
double leftmost_crossing(const Grid1D& grid, const std::vector<double>& u,
                         double level) {
    if (u[0] >= level) return std::numeric_limits<double>::quiet_NaN();
    for (int j = 0; j + 1 < grid.n; ++j) {
        if (u[j] < level && u[j + 1] >= level) {
            const double w = (level - u[j]) / (u[j + 1] - u[j]);
            return grid.node(j) + w * grid.dx;
        }
    }
    return std::numeric_limits<double>::quiet_NaN();
}

/// Nodes the delayed argument of node j reads from, matching the
/// integrator's sampling rule: integral shifts clamp to the left edge
/// value, fractional ones interpolate linearly with edge clamping.
struct DelayTap {
    int i0 = 0;
    int i1 = -1; // second node, or -1 when a single node is read
    double w0 = 1.0;
    double w1 = 0.0;
};

DelayTap delay_tap(const Grid1D& grid, int j, double shift) {
    DelayTap t;
    if (shift == 0.0) {
        t.i0 = j;
        return t;
    }
    const double cells = shift / grid.dx;
    if (std::abs(cells - std::lround(cells)) < 1e-9) {
        const int k = j - static_cast<int>(std::lround(cells));
        t.i0 = k <= 0 ? 0 : k;
        return t;
    }
    const double s = (grid.node(j) - shift - grid.x_min) / grid.dx;
    if (s <= 0.0) return t;
    if (s >= grid.n - 1) {
        t.i0 = grid.n - 1;
        return t;
    }
    t.i0 = static_cast<int>(s);
    t.i1 = t.i0 + 1;
    t.w1 = s - t.i0;
    t.w0 = 1.0 - t.w1;
    return t;
}

double tap_value(const std::vector<double>& v, const DelayTap& t) {
    return t.i1 < 0 ? v[t.i0] : t.w0 * v[t.i0] + t.w1 * v[t.i1];
}

/// Discrete defect of the traveling-profile equation on the same stencil
/// the integrator uses, so its exact fixed point scores ~ 0.
double profile_defect(const Grid1D& grid, const std::vector<double>& v,
                      double c, double h, const BirthFunction& g,
                      bool upwind, int j) {
    const double dx = grid.dx;
    const double lap = (v[j - 1] - 2.0 * v[j] + v[j + 1]) / (dx * dx);
    double adv;
    if (upwind)
        adv = c > 0.0 ? c * (v[j] - v[j - 1]) / dx
                      : c * (v[j + 1] - v[j]) / dx;
    else
        adv = c * (v[j + 1] - v[j - 1]) / (2.0 * dx);
    return lap - adv - v[j] + g(tap_value(v, delay_tap(grid, j, c * h)));
}

/// Response of one interior row to a pure exponential e^{x z}: the row's
/// stencil and delayed tap evaluated symbolically.  Its roots are the
/// decay rates the discrete equations actually support, which differ from
/// the continuum ones at O(dx^2).
class StencilSymbol {
  public:
    StencilSymbol(const Grid1D& grid, double c, double h, bool upwind,
                  int j_bulk) {
        const double dx = grid.dx;
        a_m_ = 1.0 / (dx * dx) +
               (upwind ? (c > 0.0 ? c / dx : 0.0) : c / (2.0 * dx));
        a_0_ = -2.0 / (dx * dx) - 1.0 + (upwind ? -std::abs(c) / dx : 0.0);
        a_p_ = 1.0 / (dx * dx) +
               (upwind ? (c > 0.0 ? 0.0 : -c / dx) : -c / (2.0 * dx));
        dx_ = dx;
        const DelayTap t = delay_tap(grid, j_bulk, c * h);
        d0_ = j_bulk - t.i0;
        w0_ = t.w0;
        d1_ = t.i1 >= 0 ? j_bulk - t.i1 : 0;
        w1_ = t.i1 >= 0 ? t.w1 : 0.0;
    }

    double operator()(double x, double gp_state) const {
        double s = a_m_ * std::exp(-x * dx_) + a_0_ + a_p_ * std::exp(x * dx_);
        s += gp_state * w0_ * std::exp(-x * d0_ * dx_);
        if (w1_ != 0.0) s += gp_state * w1_ * std::exp(-x * d1_ * dx_);
        return s;
    }

    /// Newton root near `guess`; NaN when the iteration leaves (lo, hi).
    double root(double guess, double gp_state, double lo, double hi) const {
        double x = guess;
        for (int it = 0; it < 80; ++it) {
            const double f = (*this)(x, gp_state);
            const double d =
                ((*this)(x + 1e-7, gp_state) - (*this)(x - 1e-7, gp_state)) /
                2e-7;
            if (d == 0.0) break;
            const double step = f / d;
            x -= step;
            if (!(x > lo && x < hi))
                return std::numeric_limits<double>::quiet_NaN();
            if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(x))) return x;
        }
        return std::numeric_limits<double>::quiet_NaN();
    }

    /// Minimizer over [lo, hi]; the section is convex in x.
    double argmin(double gp_state, double lo, double hi) const {
        const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = lo, b = hi;
        double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
        double f1 = (*this)(x1, gp_state), f2 = (*this)(x2, gp_state);
        for (int it = 0; it < 200 && b - a > 1e-13 * (1.0 + b); ++it) {
            if (f1 <= f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = (*this)(x1, gp_state);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = (*this)(x2, gp_state);
            }
        }
        return 0.5 * (a + b);
    }

    /// Bisection on [lo, hi]; requires a sign change between the ends.
    double bisect(double gp_state, double lo, double hi) const {
        double flo = (*this)(lo, gp_state);
        if (flo == 0.0) return lo;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            const double fm = (*this)(mid, gp_state);
            if (fm == 0.0 || hi - lo < 1e-15 * (1.0 + hi)) return mid;
            if ((fm > 0.0) == (flo > 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }

  private:
    double a_m_ = 0.0, a_0_ = 0.0, a_p_ = 0.0, dx_ = 0.0;
    int d0_ = 0, d1_ = 0;
    double w0_ = 1.0, w1_ = 0.0;
};

/// Solves the discrete steady profile equations on the sub-window where
/// the field is numerically alive, with the phase fixed by construction.
///
/// The window starts where the seed reaches 1e-10 kappa; below it the
/// returned tail is the exact discrete exponential, which satisfies the
/// linearized interior rows to round-off.  The first stretch of window
/// rows (up to 1e-8 kappa) states that decay explicitly, one row per
/// node; this pins the tail branch and rate at a scale where doubles
/// still resolve them, which a single boundary row cannot do.  The last
/// row ties the right edge to the discrete plateau decay rate so that
/// every translate of the profile satisfies it, or holds the edge at
/// kappa when the plateau approach has no real rate.  Steps are damped
/// least-squares corrections in a tail-weighted metric (the weight undoes
/// the convective amplification ahead of the interface), assembled as
/// banded normal equations; between passes the crossing is re-pinned by
/// translation.  Returns the final interior defect; v is updated in
/// place.
double polish_profile(const Grid1D& grid, std::vector<double>& v, double c,
                      double h, const BirthFunction& g, bool upwind,
                      double lambda_seed, int j_pin, double pin_value,
                      double defect_bar, int max_iter) {
    const int n = grid.n;
    const double dx = grid.dx;
    const double kappa = g.kappa;
    const double shift = c * h;

    const StencilSymbol sym(grid, c, h, upwind, j_pin);
    // The symbol section is convex with a positive value at 0, so its
    // minimizer splits the bracket.  A negative minimum gives two tail
    // rates and the slower one carries the front; a nonnegative minimum
    // (speed at the discrete critical point) leaves one double rate, and
    // the recursion rows below switch to the second-order form that admits
    // the linearly growing factor.
    const double x_star = sym.argmin(g.gp0, 1e-6, 40.0);
    const bool tail_double = sym(x_star, g.gp0) >= 0.0;
    const double lam = tail_double ? x_star : sym.bisect(g.gp0, 1e-6, x_star);
    const double ratio_l = std::exp(-lam * dx);
    const double mu = sym.root(-0.5 * lambda_seed, g.deriv(kappa), -40.0,
                               -1e-12);
    const bool plateau_row = !std::isnan(mu);
    const double ratio_r = plateau_row ? std::exp(mu * dx) : 0.0;

    int j0 = 0, jz_abs = 0;
    while (j0 < n && v[j0] < 1e-10 * kappa) ++j0;
    jz_abs = j0;
    while (jz_abs < n && v[jz_abs] < 1e-8 * kappa) ++jz_abs;
    const int m = n - j0;
    const int nz = std::max(1, jz_abs - j0);
    const int p = j_pin - j0;
    if (m < 16 || p < nz + 4 || p > m - 4)
        throw DomainError(
            "compute_profile: domain leaves no room between the deep tail "
            "and the pinned interface");

    const double z_pin = grid.node(j_pin);
    std::vector<double> wg(m);
    for (int i = 0; i < m; ++i)
        wg[i] = std::exp(
            std::max(lam * std::min(grid.node(j0 + i) - z_pin, 0.0), -700.0));

    // Value of full-grid node k seen from the window: nodes below the
    // window lie on the exact exponential hanging off the window edge.
    auto tail_factor = [&](int k) { return std::pow(ratio_l, j0 - k); };
    auto value_at = [&](const std::vector<double>& w, int k) {
        return k >= j0 ? w[k - j0] : w[0] * tail_factor(k);
    };

    auto residual = [&](const std::vector<double>& w, std::vector<double>& r) {
        for (int i = 0; i < nz; ++i)
            r[i] = tail_double ? w[i] - 2.0 * ratio_l * w[i + 1] +
                                     ratio_l * ratio_l * w[i + 2]
                               : w[i] - ratio_l * w[i + 1];
        for (int i = nz; i + 1 < m; ++i) {
            const int j = j0 + i;
            const double lap =
                (w[i - 1] - 2.0 * w[i] + w[i + 1]) / (dx * dx);
            double adv;
            if (upwind)
                adv = c > 0.0 ? c * (w[i] - w[i - 1]) / dx
                              : c * (w[i + 1] - w[i]) / dx;
            else
                adv = c * (w[i + 1] - w[i - 1]) / (2.0 * dx);
            const DelayTap t = delay_tap(grid, j, shift);
            double del = t.w0 * value_at(w, t.i0);
            if (t.i1 >= 0) del += t.w1 * value_at(w, t.i1);
            r[i] = lap - adv - w[i] + g(del);
        }
        r[m - 1] = plateau_row
                       ? (kappa - w[m - 1]) - ratio_r * (kappa - w[m - 2])
                       : w[m - 1] - kappa;
    };
    auto norm_w = [&](const std::vector<double>& r) {
        double b = 0.0;
        for (int i = 0; i < m; ++i) b = std::max(b, std::abs(r[i]) / wg[i]);
        return b;
    };
    // Absolute interior defect over the dynamic rows: the figure of merit
    // the caller reports.
    auto defect_max = [&](const std::vector<double>& w) {
        std::vector<double> r(m);
        residual(w, r);
        double b = 0.0;
        for (int i = nz; i + 1 < m; ++i) b = std::max(b, std::abs(r[i]));
        return b;
    };

    const double a_m =
        1.0 / (dx * dx) + (upwind ? (c > 0.0 ? c / dx : 0.0) : c / (2.0 * dx));
    const double a_0 =
        -2.0 / (dx * dx) - 1.0 + (upwind ? -std::abs(c) / dx : 0.0);
    const double a_p = 1.0 / (dx * dx) +
                       (upwind ? (c > 0.0 ? 0.0 : -c / dx) : -c / (2.0 * dx));
    const int band =
        std::max(2, static_cast<int>(std::ceil(shift / dx + 1e-12)) + 2);

    std::vector<double> w(v.begin() + j0, v.end());
    std::vector<double> r(m), rt(m), rhs(m), delta(m), wtry(m);
    std::vector<int> cols(8);
    std::vector<double> vals(8);

    auto repin = [&](std::vector<double>& u) {
        int k = -1;
        for (int i = 0; i + 1 < m; ++i)
            if (u[i] < pin_value && u[i + 1] >= pin_value) {
                k = i;
                break;
            }
        if (k < 0)
            throw NoConvergence(
                "compute_profile: interface lost during the polish");
        const double zc = grid.node(j0 + k) +
                          dx * (pin_value - u[k]) / (u[k + 1] - u[k]);
        const double a = zc - z_pin;
        const double s = a / dx;
        const int k0 = static_cast<int>(std::floor(s));
        const double f = s - k0;
        std::vector<double> un(m);
        for (int i = 0; i < m; ++i) {
            const int ia = std::clamp(i + k0, 0, m - 1);
            const int ib = std::clamp(i + k0 + 1, 0, m - 1);
            un[i] = (1.0 - f) * u[ia] + f * u[ib];
        }
        for (int i = nz - 1; i >= 0; --i) un[i] = ratio_l * un[i + 1];
        u.swap(un);
        return a;
    };

    double best_defect = std::numeric_limits<double>::infinity();
    for (int cycle = 0; cycle < 6; ++cycle) {
        double lm = 1e-6;
        residual(w, r);
        double rn = norm_w(r);
        for (int it = 0; it < max_iter; ++it) {
            // Banded normal equations of the row-weighted Jacobian.
            BandedLU N(m, band, band);
            std::fill(rhs.begin(), rhs.end(), 0.0);
            for (int i = 0; i < m; ++i) {
                int nc = 0;
                auto put = [&](int col, double val) {
                    for (int q = 0; q < nc; ++q)
                        if (cols[q] == col) {
                            vals[q] += val;
                            return;
                        }
                    cols[nc] = col;
                    vals[nc++] = val;
                };
                if (i < nz) {
                    put(i, 1.0);
                    if (tail_double) {
                        put(i + 1, -2.0 * ratio_l);
                        put(i + 2, ratio_l * ratio_l);
                    } else {
                        put(i + 1, -ratio_l);
                    }
                } else if (i + 1 < m) {
                    put(i - 1, a_m);
                    put(i, a_0);
                    put(i + 1, a_p);
                    const int j = j0 + i;
                    const DelayTap t = delay_tap(grid, j, shift);
                    double del = t.w0 * value_at(w, t.i0);
                    if (t.i1 >= 0) del += t.w1 * value_at(w, t.i1);
                    const double gp = g.deriv(del);
                    if (t.i0 >= j0)
                        put(t.i0 - j0, gp * t.w0);
                    else
                        put(0, gp * t.w0 * tail_factor(t.i0));
                    if (t.i1 >= 0) {
                        if (t.i1 >= j0)
                            put(t.i1 - j0, gp * t.w1);
                        else
                            put(0, gp * t.w1 * tail_factor(t.i1));
                    }
                } else if (plateau_row) {
                    put(m - 1, -1.0);
                    put(m - 2, ratio_r);
                } else {
                    put(m - 1, 1.0);
                }
                const double ri = r[i] / (wg[i] * wg[i]);
                for (int qa = 0; qa < nc; ++qa) {
                    rhs[cols[qa]] -= vals[qa] * ri;
                    for (int qb = 0; qb < nc; ++qb)
                        N.at(cols[qa], cols[qb]) +=
                            vals[qa] * vals[qb] / (wg[i] * wg[i]);
                }
            }
            std::vector<double> diag(m);
            for (int i = 0; i < m; ++i) diag[i] = N.at(i, i);

            bool accepted = false;
            for (int trial = 0; trial < 12; ++trial) {
                BandedLU M = N;
                for (int i = 0; i < m; ++i) M.at(i, i) += lm * diag[i];
                delta = rhs;
                try {
                    M.factor();
                    M.solve(delta);
                } catch (const NumericalFailure&) {
                    lm *= 10.0;
                    continue;
                }
                for (int i = 0; i < m; ++i) wtry[i] = w[i] + delta[i];
                residual(wtry, rt);
                const double rn_try = norm_w(rt);
                if (rn_try < rn) {
                    w.swap(wtry);
                    r.swap(rt);
                    rn = rn_try;
                    lm = std::max(lm / 3.0, 1e-12);
                    accepted = true;
                    break;
                }
                lm *= 10.0;
            }
            if (std::getenv("WAVEFRONT_POLISH_DEBUG"))
                std::fprintf(stderr,
                             "polish cyc=%d it=%d rnorm=%.3g lm=%.3g acc=%d\n",
                             cycle, it, rn, lm, int(accepted));
            if (!accepted) break; // at this phase's least-squares floor
        }
        const double moved = repin(w);
        best_defect = defect_max(w);
        if (std::getenv("WAVEFRONT_POLISH_DEBUG"))
            std::fprintf(stderr, "polish cyc=%d shift=%.3g defect=%.3g\n",
                         cycle, moved, best_defect);
        if (std::abs(moved) < 1e-8 && best_defect <= defect_bar) break;
    }
    if (best_defect > defect_bar)
        throw NoConvergence(
            "compute_profile: steady-state defect " +
            std::to_string(best_defect) + " exceeds " +
            std::to_string(defect_bar) + " after the polish");

    for (int i = 0; i < m; ++i) v[j0 + i] = w[i];
    for (int j = j0 - 1; j >= 0; --j) v[j] = ratio_l * v[j + 1];
    return best_defect;
}

} // namespace

WaveProfile compute_profile(double c, const BirthFunction& g, double h,
                            const Grid1D& grid_in, const ProfileOptions& opt) {
    if (!(c > 0.0)) throw DomainError("compute_profile: need c > 0");
    if (h < 0.0) throw DomainError("compute_profile: need h >= 0");
    const double kappa = g.kappa;

    const Grid1D grid =
        (opt.snap_shift && h > 0.0)
            ? Grid1D::with_snapped_shift(grid_in.x_min, grid_in.x_max,
                                         grid_in.dx, c * h)
            : grid_in;

    // Seed with the tail decay the wave itself carries; when the speed is
    // subcritical there is no such decay and any ramp will do, because the
    // drift detector is about to reject the speed anyway.
    double lambda_seed = 1.0;
    bool near_critical = false;
    try {
        const CharRoots cr = char_roots(c, h, g.gp0);
        lambda_seed = cr.lambda1;
        near_critical = cr.lambda2 - cr.lambda1 < 0.2 * cr.lambda1;
    } catch (const NoRealRoots&) {
    }

    // A just-critical interface drifts like 3/(2 lambda t) long after any
    // genuine speed mismatch would have shown as constant drift, so the
    // relaxation must run until that universal decay falls below the
    // drift tolerance.
    const double relax_time =
        near_critical
            ? std::max(opt.relax_time,
                       3.6 / (lambda_seed * opt.drift_tol))
            : opt.relax_time;

    SolverConfig cfg;
    cfg.frame = Frame::comoving;
    cfg.c = c;
    cfg.dt = opt.dt;
    cfg.bc = BoundaryCondition::left_exponential_right_dirichlet(kappa);
    cfg.blowup_threshold = 1e6 * std::max(1.0, kappa);

    HistoryBuffer state(grid, h, opt.dt);
    state.fill(ic_exponential_tail(kappa, lambda_seed, c, kappa));
    SolverConfig run_cfg = cfg;
    run_cfg.dt = state.dt();
    Integrator integ(grid, run_cfg, g);

    const double pin_level = opt.pin_level_frac * kappa;
    const long steps_per_check =
        std::max(1L, std::lround(opt.check_interval / run_cfg.dt));
    const double check_dt = steps_per_check * run_cfg.dt;
    const long checks =
        std::max(1L, std::lround(opt.relax_time / check_dt));

    double last_drift = std::numeric_limits<double>::infinity();
    for (long k = 0; k < checks; ++k) {
        for (long s = 0; s < steps_per_check; ++s) integ.step(state);

        const double zc = leftmost_crossing(grid, state.current(), pin_level);
        if (std::isnan(zc))
            throw SpeedMismatch(
                "compute_profile: interface left the domain; requested speed "
                "is not the wave speed for this tail");
        if (zc != 0.0) state.translate(zc, 0.0, kappa);
        last_drift = zc / check_dt;

        // A steadily translating interface pins to the same shape, so the
        // drift itself has to settle, not just the pinned field.
        if ((k + 1) * check_dt > 0.6 * opt.relax_time &&
            std::abs(last_drift) > opt.drift_tol)
            throw SpeedMismatch(
                "compute_profile: sustained pin drift " +
                std::to_string(last_drift) + " per unit time");
    }

    // Relaxation settles the shape and vouches for the speed, but a
    // Dirichlet edge clipping an unstable state feeds a slowly growing
    // deficit, so the run cannot be stretched until the sup-difference
    // reaches round-off.  Finish with a Newton solve of the discrete
    // steady state instead; the relaxed field is well inside its basin.
    const bool upwind = integ.diagnostics().upwind_active;
    const int j_pin = std::clamp(
        static_cast<int>(std::lround(-grid.x_min / grid.dx)), 2, grid.n - 3);
    std::vector<double> v = state.current();

    // The truncating left edge starves the deep tail during relaxation
    // (the deficit it feeds in grows toward the wall), so values far below
    // the interface come out orders of magnitude low.  Splice the analytic
    // decay below a handoff well above that depletion so the polish starts
    // from a tail of the right shape.
    {
        int j_hand = 0;
        while (j_hand < grid.n && v[j_hand] < 1e-5 * kappa) ++j_hand;
        if (j_hand < grid.n)
            for (int j = j_hand - 1; j >= 0; --j)
                v[j] = v[j_hand] *
                       std::exp(lambda_seed * grid.dx * (j - j_hand));
    }

    try {
        polish_profile(grid, v, c, h, g, upwind, lambda_seed, j_pin,
                       pin_level, 5e-7 * std::max(1.0, kappa), 40);
    } catch (const NumericalFailure& e) {
        throw NoConvergence(std::string("compute_profile: ") + e.what());
    }

    WaveProfile out;
    out.grid = grid;
    out.values = std::move(v);
    out.c = c;
    out.h = h;
    out.kappa = kappa;
    out.pin_level = pin_level;
    out.drift_rate = last_drift;

    for (int j = 1; j + 1 < grid.n; ++j)
        out.ep_residual =
            std::max(out.ep_residual,
                     std::abs(profile_defect(grid, out.values, c, h, g,
                                             upwind, j)));

    out.monotone = true;
    double vmax = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < grid.n; ++j) {
        if (j > 0 && out.values[j] < out.values[j - 1] - 1e-9 * kappa)
            out.monotone = false;
        vmax = std::max(vmax, out.values[j]);
    }
    out.overshoot = std::max(0.0, vmax - kappa);

    // Tail regression over the fixed relative-value window.
    double x_a = grid.x_min, x_b = grid.x_min;
    for (int j = 0; j < grid.n; ++j) {
        if (out.values[j] < 1e-8 * kappa) x_a = grid.node(j);
        if (out.values[j] < 1e-3 * kappa) x_b = grid.node(j);
    }
    if (x_b > x_a) {
        try {
            out.tail = fit_tail(grid, out.values, x_a, x_b);
        } catch (const Error&) {
            out.tail = TailFit{}; // r_squared = 0 marks it unusable
        }
    }
    return out;
}

std::pair<WaveProfile, double> normalize_profile(const WaveProfile& profile,
                                                 double lambda1) {
    const TailFit& tf = profile.tail;
    if (tf.n_points < 3 || tf.decades < 3.0 || tf.r_squared < 0.999)
        throw TailFitUnreliable(
            "normalize_profile: tail window spans " +
            std::to_string(tf.decades) + " decades with r^2 " +
            std::to_string(tf.r_squared));
    if (!(lambda1 > 0.0))
        throw DomainError("normalize_profile: need lambda1 > 0");
    const double shift = -std::log(tf.amplitude) / lambda1;
    WaveProfile out = profile;
    for (int j = 0; j < out.grid.n; ++j)
        out.values[j] = profile.eval(out.grid.node(j) + shift);
    double x_a = out.grid.x_min, x_b = out.grid.x_min;
    for (int j = 0; j < out.grid.n; ++j) {
        if (out.values[j] < 1e-8 * out.kappa) x_a = out.grid.node(j);
        if (out.values[j] < 1e-3 * out.kappa) x_b = out.grid.node(j);
    }
    out.tail = fit_tail(out.grid, out.values, x_a, x_b);
    return {out, shift};
}

FrontTrack track_front(const Trajectory& traj, double level) {
    FrontTrack out;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double pos = leftmost_crossing(traj.grid, traj.fields[i], level);
        if (std::isnan(pos)) {
            ++out.skipped;
            continue;
        }
        out.times.push_back(traj.times[i]);
        out.positions.push_back(pos);
    }
    const std::size_t n = out.times.size();
    out.c_running.assign(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        const std::size_t k = i >= 5 ? i - 5 : 0;
        out.c_running[i] = -(out.positions[i] - out.positions[k]) /
                           (out.times[i] - out.times[k]);
    }
    if (n < 10)
        throw InsufficientData("track_front: fewer than 10 tracked samples");
    const std::size_t start = n / 2;
    std::vector<double> ts(out.times.begin() + start, out.times.end());
    std::vector<double> ps(out.positions.begin() + start, out.positions.end());
    const LineFit fit = fit_line(ts, ps);
    out.c_est = -fit.slope;
    double ss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double r = ps[i] - (fit.slope * ts[i] + fit.intercept);
        ss += r * r;
    }
    out.fit_residual = std::sqrt(ss / ts.size());
    return out;
}

std::pair<double, double> weighted_norm(const Grid1D& grid,
                                        const std::vector<double>& field,
                                        double lambda, double origin_shift,
                                        double z_lo, double z_hi) {
    double best = -1.0, where = grid.x_min;
    for (int j = 0; j < grid.n; ++j) {
        const double z = grid.node(j);
        if (z < z_lo || z > z_hi) continue;
        const double w =
            std::abs(field[j]) / eta_weight(lambda, z - origin_shift);
        if (w > best) {
            best = w;
            where = z;
        }
    }
    if (best < 0.0)
        throw InsufficientData("weighted_norm: empty window");
    return {best, where};
}

double chen_guo_norm(const Grid1D& grid, const std::vector<double>& u,
                     const WaveProfile& profile, double shift, double z_lo,
                     double z_hi, int* excluded) {
    double best = 0.0;
    int skipped = 0;
    for (int j = 0; j < grid.n; ++j) {
        const double z = grid.node(j);
        if (z < z_lo || z > z_hi) continue;
        const double phi = profile.eval(z + shift);
        if (!(std::abs(phi) >= 1e-300)) {
            ++skipped;
            continue;
        }
        best = std::max(best, std::abs(u[j] / phi - 1.0));
    }
    if (excluded) *excluded = skipped;
    return best;
}

double align_shift(const Grid1D& grid, const std::vector<double>& u,
                   const WaveProfile& profile, double lambda, double lo,
                   double hi, double z_lo, double z_hi) {
    auto objective = [&](double a) {
        double best = 0.0;
        for (int j = 0; j < grid.n; ++j) {
            const double z = grid.node(j);
            if (z < z_lo || z > z_hi) continue;
            const double d = std::abs(u[j] - profile.eval(z + a)) /
                             eta_weight(lambda, z);
            best = std::max(best, d);
        }
        return best;
    };
    return golden_min(objective, lo, hi, 1e-6);
}

RateFit convergence_rate(const NormSeries& series, double transient_frac) {
    if (series.times.size() != series.values.size())
        throw DomainError("convergence_rate: ragged series");
    if (series.times.empty())
        throw InsufficientData("convergence_rate: empty series");
    const double t0 = series.times.front();
    const double cut = t0 + transient_frac * (series.times.back() - t0);
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        if (series.times[i] < cut) continue;
        if (!(series.values[i] > 0.0))
            throw NonPositiveValues(
                "convergence_rate: non-positive norm at t = " +
                std::to_string(series.times[i]));
        ts.push_back(series.times[i]);
        ys.push_back(-std::log(series.values[i]));
    }
    if (ts.size() < 10)
        throw InsufficientData("convergence_rate: fewer than 10 samples "
                               "after the transient cut");
    const LineFit fit = fit_line(ts, ys);
    RateFit out;
    out.gamma = fit.slope;
    out.r_squared = fit.r_squared;
    out.n_used = fit.n;
    return out;
}

TailInvarianceReport tail_invariance_check(const Trajectory& traj,
                                           double lambda_j, double c,
                                           double value_lo, double value_hi) {
    TailInvarianceReport rep;
    rep.target = lambda_j * c;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const auto& u = traj.fields[i];
        double x_a = traj.grid.x_min, x_b = traj.grid.x_min;
        bool seen = false;
        for (int j = 0; j < traj.grid.n; ++j) {
            if (u[j] >= value_lo && u[j] <= value_hi) {
                if (!seen) x_a = traj.grid.node(j);
                x_b = traj.grid.node(j);
                seen = true;
            } else if (seen && u[j] > value_hi) {
                break;
            }
        }
        if (!seen || x_b - x_a < 4.0 * traj.grid.dx) continue;
        TailFit fit;
        try {
            fit = fit_tail(traj.grid, u, x_a, x_b);
        } catch (const Error&) {
            continue;
        }
        rep.times.push_back(traj.times[i]);
        rep.log_amplitudes.push_back(std::log(fit.amplitude));
    }
    rep.sufficient = rep.times.size() >= 2;
    if (rep.sufficient) {
        const LineFit fit = fit_line(rep.times, rep.log_amplitudes);
        rep.slope = fit.slope;
        rep.rel_error = std::abs(rep.slope - rep.target) /
                        std::max(1e-300, std::abs(rep.target));
    }
    return rep;
}

} // namespace wavefront
