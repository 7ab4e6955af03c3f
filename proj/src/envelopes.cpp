#include "wavefront/envelopes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <utility>

#include "wavefront/dispersion.hpp"
#include "wavefront/numerics.hpp"

namespace wavefront {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// One family of the contraction inequalities on the sampled box
/// [kappa - delta, kappa] x [0, q_max] x [0, gamma_cap]:
///   side < 0:  g(u) - g(u - q e^{gamma h}) <=  q (1 - 2 gamma)
///   side > 0:  g(u) - g(u + q e^{gamma h}) >= -q (1 - 2 gamma)
/// with the q = 0 edge in slope form e^{gamma h} g'(u) <= 1 - 2 gamma.
bool family_holds(const BirthFunction& g, double h, double delta,
                  double gamma_cap, double q_max, int n, int side) {
    if (n < 2 || delta <= 0.0 || gamma_cap < 0.0 || q_max < 0.0) return false;
    const double slack = 1e-12;
    for (int iu = 0; iu < n; ++iu) {
        const double u = g.kappa - delta + delta * iu / (n - 1);
        for (int ig = 0; ig < n; ++ig) {
            const double gam = gamma_cap * ig / (n - 1);
            const double rhs = 1.0 - 2.0 * gam;
            if (rhs <= 0.0) return false;
            const double ehg = std::exp(gam * h);
            if (ehg * g.deriv(u) > rhs + slack) return false;
            for (int iq = 1; iq < n; ++iq) {
                const double qv = q_max * iq / (n - 1);
                if (qv == 0.0) continue;
                if (side < 0) {
                    if (g(u) - g(u - qv * ehg) > qv * rhs + slack) return false;
                } else {
                    if (g(u) - g(u + qv * ehg) < -qv * rhs - slack) return false;
                }
            }
        }
    }
    return true;
}

} // namespace

bool check_contraction_boxes(const BirthFunction& g, double h, double delta,
                             double gamma_cap, double q_minus, double q_plus,
                             int samples_per_axis) {
    return family_holds(g, h, delta, gamma_cap, q_minus, samples_per_axis, -1) &&
           family_holds(g, h, delta, gamma_cap, q_plus, samples_per_axis, +1);
}

KappaParams estimate_kappa_params(const BirthFunction& g, double h,
                                  const WaveProfile& profile,
                                  std::vector<double> gamma_grid,
                                  std::vector<double> q_grid) {
    const double kappa = g.kappa;
    if (kappa <= 0.0) throw DomainError("estimate_kappa_params: kappa <= 0");
    if (gamma_grid.empty())
        gamma_grid = {0.15, 0.12, 0.10, 0.08, 0.06, 0.05, 0.04, 0.03, 0.02, 0.01};
    if (q_grid.empty())
        for (double f : {0.01, 0.02, 0.03, 0.05, 0.075, 0.1,
                         0.15, 0.2, 0.25, 0.3, 0.35, 0.4})
            q_grid.push_back(f * kappa);
    std::sort(gamma_grid.begin(), gamma_grid.end(), std::greater<>());
    std::sort(q_grid.begin(), q_grid.end());
    while (!q_grid.empty() && q_grid.back() >= 0.999 * kappa) q_grid.pop_back();
    if (q_grid.empty() || q_grid.front() <= 0.0)
        throw DomainError("estimate_kappa_params: q grid must hold values in (0, kappa)");

    const int n_search = 48;
    const int n_final = 100;

    double found_gamma = -1.0, found_delta = 0.0, found_qm = 0.0, found_qp = 0.0;
    for (double gam : gamma_grid) {
        if (gam <= 0.0 || gam >= 0.5) continue;
        for (int k = 20; k >= 1 && found_gamma < 0.0; --k) {
            const double del = 0.025 * k * kappa;
            const double q0 = q_grid.front();
            if (!family_holds(g, h, del, gam, q0, n_search, -1)) continue;
            if (!family_holds(g, h, del, gam, q0, n_search, +1)) continue;
            double qm = q0, qp = q0;
            for (auto it = q_grid.rbegin(); it != q_grid.rend(); ++it)
                if (family_holds(g, h, del, gam, *it, n_search, -1)) {
                    qm = *it;
                    break;
                }
            for (auto it = q_grid.rbegin(); it != q_grid.rend(); ++it)
                if (family_holds(g, h, del, gam, *it, n_search, +1)) {
                    qp = *it;
                    break;
                }
            found_gamma = gam;
            found_delta = del;
            found_qm = qm;
            found_qp = qp;
        }
        if (found_gamma > 0.0) break;
    }
    if (found_gamma < 0.0)
        throw NoAdmissibleParams(
            "no sampled box near kappa satisfies the contraction inequalities "
            "for g=" + g.name + ", h=" + fmt(h));

    KappaParams kp;
    kp.gamma_star = 0.9 * found_gamma;
    kp.delta_star = 0.9 * found_delta;
    kp.q_star_minus = 0.9 * found_qm;
    kp.q_star_plus = 0.9 * found_qp;
    bool verified = false;
    for (int attempt = 0; attempt < 3 && !verified; ++attempt) {
        verified = check_contraction_boxes(g, h, kp.delta_star, kp.gamma_star,
                                           kp.q_star_minus, kp.q_star_plus,
                                           n_final);
        if (!verified) {
            kp.gamma_star *= 0.9;
            kp.delta_star *= 0.9;
            kp.q_star_minus *= 0.9;
            kp.q_star_plus *= 0.9;
        }
    }
    if (!verified)
        throw NumericalFailure(
            "estimate_kappa_params: shrunk parameters keep failing the "
            "fine-grained verification");

    const double level = kappa - 0.5 * kp.delta_star;
    const Grid1D& gr = profile.grid;
    int jcross = -1;
    for (int j = 1; j < gr.n; ++j)
        if (profile.values[j] >= level && profile.values[j - 1] < level) {
            jcross = j;
            break;
        }
    if (jcross < 0)
        throw NumericalFailure(
            "estimate_kappa_params: profile never reaches kappa - delta*/2; "
            "extend the grid to the right");
    const double y = bisect(
        [&](double zz) { return profile.eval(zz) - level; },
        gr.node(jcross - 1), gr.node(jcross));
    kp.b = y + profile.c * h;
    return kp;
}

// ---------------------------------------------------------------------------
// envelope maps

namespace {

double decay_weight(const Envelope& e, double z) {
    return e.weight == EnvelopeWeight::eta ? eta_weight(e.lambda, z - e.b)
                                           : std::exp(e.lambda * z);
}

} // namespace

double Envelope::eps_plus(double t) const {
    if (kind != EnvelopeKind::shift) return 0.0;
    const double a = alpha * q / gamma;
    return a * (std::exp(gamma * profile.h) - std::exp(-gamma * t));
}

double Envelope::eps_minus(double t) const {
    if (kind != EnvelopeKind::shift) return 0.0;
    return -(alpha * q / gamma) * std::exp(-gamma * t);
}

double Envelope::upper(double t, double z) const {
    const double amp = q * std::exp(-gamma * t);
    if (kind == EnvelopeKind::decay)
        return profile.eval(z) + amp * decay_weight(*this, z);
    return profile.eval(z + eps_plus(t)) + amp * eta_weight(lambda, z);
}

double Envelope::lower(double t, double z) const {
    const double amp = q * std::exp(-gamma * t);
    if (kind == EnvelopeKind::decay)
        return profile.eval(z) - amp * decay_weight(*this, z);
    return profile.eval(z - eps_minus(t)) - amp * eta_weight(lambda, z);
}

double Envelope::upper_dt(double t, double z) const {
    const double amp = q * std::exp(-gamma * t);
    if (kind == EnvelopeKind::decay) return -gamma * amp * decay_weight(*this, z);
    return alpha * amp * profile.slope(z + eps_plus(t)) -
           gamma * amp * eta_weight(lambda, z);
}

double Envelope::lower_dt(double t, double z) const {
    const double amp = q * std::exp(-gamma * t);
    if (kind == EnvelopeKind::decay) return gamma * amp * decay_weight(*this, z);
    return -alpha * amp * profile.slope(z - eps_minus(t)) +
           gamma * amp * eta_weight(lambda, z);
}

double Envelope::corner_jump(double t) const {
    if (!has_corner) return 0.0;
    return q * lambda * std::exp(-gamma * t);
}

double Envelope::squeeze_upper(double t, double z) const { return upper(t, z); }

double Envelope::squeeze_lower(double t, double z) const {
    if (kind == EnvelopeKind::shift) return lower(t, z - sigma);
    return lower(t, z);
}

// ---------------------------------------------------------------------------
// builders

Envelope build_decay_envelope(const WaveProfile& profile,
                              const BirthFunction& g, double lambda,
                              double gamma, const KappaParams& kp, double q,
                              EnvelopeWeight weight, bool enforce_budgets) {
    if (q < 0.0) throw DomainError("build_decay_envelope: q < 0");
    if (gamma < 0.0) throw DomainError("build_decay_envelope: gamma < 0");
    if (lambda <= 0.0) throw DomainError("build_decay_envelope: lambda <= 0");
    if (enforce_budgets) {
        const CharRoots roots = char_roots(profile.c, profile.h, g.gp0);
        if (lambda < roots.lambda1 - 1e-9 || lambda >= roots.lambda2)
            throw ParameterOutOfBudget(
                "decay weight exponent lambda=" + fmt(lambda) +
                " lies outside [lambda1, lambda2) = [" + fmt(roots.lambda1) +
                ", " + fmt(roots.lambda2) + ")");
        const double gm = gamma_max(profile.c, lambda, profile.h, g.gp0);
        if (gamma > gm + 1e-12)
            throw ParameterOutOfBudget("decay rate gamma=" + fmt(gamma) +
                                       " exceeds gamma_max=" + fmt(gm));
        const double q_cap = std::min(kp.q_star_minus, kp.q_star_plus);
        if (weight == EnvelopeWeight::eta && q > q_cap + 1e-15)
            throw ParameterOutOfBudget("amplitude q=" + fmt(q) +
                                       " exceeds the kappa budget " +
                                       fmt(q_cap));
    }
    Envelope env;
    env.kind = EnvelopeKind::decay;
    env.weight = weight;
    env.profile = profile;
    env.q = q;
    env.gamma = gamma;
    env.lambda = lambda;
    env.b = kp.b;
    env.corner_z = kp.b;
    env.has_corner = weight == EnvelopeWeight::eta && q > 0.0;
    return env;
}

Envelope build_shift_envelope(const WaveProfile& profile,
                              const BirthFunction& g, const KappaParams& kp,
                              double q, double gamma_cap) {
    if (q <= 0.0) throw DomainError("build_shift_envelope: q must be positive");
    const double q_cap = std::min(kp.q_star_minus, kp.q_star_plus);
    if (q > q_cap + 1e-15)
        throw ParameterOutOfBudget("amplitude q=" + fmt(q) +
                                   " exceeds the kappa budget " + fmt(q_cap));
    const CharRoots roots = char_roots(profile.c, profile.h, g.gp0);
    if (roots.near_critical)
        throw DomainError(
            "build_shift_envelope: the speed must be strictly above critical");
    const double l1 = roots.lambda1;

    const Grid1D& gr = profile.grid;
    double d = kInf;
    for (int j = 1; j + 1 < gr.n; ++j) {
        const double z = gr.node(j);
        if (z > kp.b) break;
        if (profile.values[j] < 1e-8 * profile.kappa) continue;
        const double slope =
            (profile.values[j + 1] - profile.values[j - 1]) / (2.0 * gr.dx);
        d = std::min(d, slope / eta_weight(l1, z));
    }
    if (!std::isfinite(d) || d <= 0.0)
        throw DegenerateProfile(
            "build_shift_envelope: min phi'/eta_1 on z <= b is not positive");

    const double h = profile.h;
    const double tail_cap = (g.gp0 - 1.0) * std::exp(-l1 * profile.c * h) *
                            std::min(1.0, 1.0 / l1);
    const double gamma = 0.99 * std::min({kp.gamma_star, tail_cap, gamma_cap});
    if (gamma <= 0.0)
        throw DomainError("build_shift_envelope: no positive decay rate fits "
                          "under the budgets");

    Envelope env;
    env.kind = EnvelopeKind::shift;
    env.weight = EnvelopeWeight::eta;
    env.profile = profile;
    env.q = q;
    env.gamma = gamma;
    env.lambda = l1;
    env.b = kp.b;
    env.d = d;
    env.alpha = std::exp(gamma * h) * g.lg / d;
    env.sigma = (env.alpha * q / gamma) * std::exp(gamma * h);
    env.corner_z = 0.0;
    env.has_corner = true;
    return env;
}

// ---------------------------------------------------------------------------
// certification

namespace {

struct D12 {
    double d1 = 0.0;
    double d2 = 0.0;
};

/// Fourth-order first and second derivatives of f at z.  The stencil never
/// straddles the corner: centered when there is room, one-sided toward the
/// smooth side otherwise.
template <class F>
D12 stencil_d12(const F& f, double z, double dx, bool has_corner,
                double corner) {
    int side = 0;
    if (has_corner) {
        const double off = z - corner;
        if (std::abs(off) <= 2.0 * dx - 1e-12) side = off < 0.0 ? -1 : +1;
    }
    D12 r;
    if (side == 0) {
        const double fm2 = f(z - 2 * dx), fm1 = f(z - dx), f0 = f(z);
        const double fp1 = f(z + dx), fp2 = f(z + 2 * dx);
        r.d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * dx);
        r.d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * dx * dx);
    } else {
        const double s = side > 0 ? dx : -dx;
        const double f0 = f(z), f1 = f(z + s), f2 = f(z + 2 * s);
        const double f3 = f(z + 3 * s), f4 = f(z + 4 * s), f5 = f(z + 5 * s);
        r.d1 = side *
               (-25 * f0 + 48 * f1 - 36 * f2 + 16 * f3 - 3 * f4) / (12 * dx);
        r.d2 = (45 * f0 - 154 * f1 + 214 * f2 - 156 * f3 + 61 * f4 - 10 * f5) /
               (12 * dx * dx);
    }
    return r;
}

/// Operator residual of one envelope map at (t, z); for the decay kind the
/// residual of the bare grid profile on the identical stencil is removed,
/// so only the envelope term and the nonlinear difference remain.
double map_residual(const Envelope& env, const BirthFunction& g, double c,
                    double h, double t, double z, int side) {
    const double dx = env.profile.grid.dx;
    auto w = [&](double zz) {
        return side > 0 ? env.upper(t, zz) : env.lower(t, zz);
    };
    const D12 dw = stencil_d12(w, z, dx, env.has_corner, env.corner_z);
    const double wt = side > 0 ? env.upper_dt(t, z) : env.lower_dt(t, z);
    const double wdel =
        side > 0 ? env.upper(t - h, z - c * h) : env.lower(t - h, z - c * h);
    double resid = wt - dw.d2 + c * dw.d1 + w(z) - g(wdel);
    if (env.kind == EnvelopeKind::decay) {
        auto p = [&](double zz) { return env.profile.eval(zz); };
        const D12 dp = stencil_d12(p, z, dx, env.has_corner, env.corner_z);
        resid -= -dp.d2 + c * dp.d1 + p(z) - g(p(z - c * h));
    }
    return resid;
}

} // namespace

ResidualCertificate certify(const Envelope& env, const BirthFunction& g,
                            double c, double h,
                            const std::vector<double>& t_samples,
                            const std::vector<double>& z_samples, double tol) {
    ResidualCertificate cert;
    cert.tol = tol > 0.0 ? tol : 1e-8 * (1.0 + env.profile.kappa);
    cert.min_margin_upper = kInf;
    cert.min_margin_lower = kInf;
    const double dx = env.profile.grid.dx;

    for (double t : t_samples) {
        for (double z : z_samples) {
            if (env.has_corner && std::abs(z - env.corner_z) < dx * 0.999)
                continue;
            const double ru = map_residual(env, g, c, h, t, z, +1);
            const double rl = map_residual(env, g, c, h, t, z, -1);
            cert.samples.push_back({t, z, ru, +1});
            cert.samples.push_back({t, z, rl, -1});
            if (ru < cert.min_margin_upper) {
                cert.min_margin_upper = ru;
                cert.worst_t_upper = t;
                cert.worst_z_upper = z;
            }
            if (-rl < cert.min_margin_lower) {
                cert.min_margin_lower = -rl;
                cert.worst_t_lower = t;
                cert.worst_z_lower = z;
            }
        }
        if (env.has_corner) {
            cert.corner_times.push_back(t);
            cert.corner_jumps.push_back(env.corner_jump(t));
        }
    }
    cert.corner_strict = true;
    for (double j : cert.corner_jumps)
        if (!(j > 0.0)) cert.corner_strict = false;
    cert.pass = cert.min_margin_upper >= -cert.tol &&
                cert.min_margin_lower >= -cert.tol && cert.corner_strict;
    return cert;
}

SqueezeReport squeeze_check(const Trajectory& traj, const Envelope& env) {
    SqueezeReport rep;
    rep.allowance = 1e-3 * env.q;
    rep.max_upper_violation = -kInf;
    rep.max_lower_violation = -kInf;
    const double tiny = 1e-9 * (1.0 + env.profile.kappa);

    const HistoryBuffer& hist = traj.initial_history;
    const auto slices = hist.ordered_slices();
    const int m = hist.depth();
    const double dts = hist.dt();
    for (std::size_t k = 0; k < slices.size(); ++k) {
        const double s = (static_cast<double>(k) - m) * dts;
        for (int j = 0; j < traj.grid.n; ++j) {
            const double z = traj.grid.node(j);
            const double u = slices[k][j];
            if (u > env.squeeze_upper(s, z) + tiny ||
                u < env.squeeze_lower(s, z) - tiny)
                throw InitialDataOutsideEnvelope(
                    "initial history leaves the envelope at s=" + fmt(s) +
                    ", z=" + fmt(z) + " (u=" + fmt(u) + ")");
        }
    }

    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const auto& u = traj.fields[i];
        for (int j = 0; j < traj.grid.n; ++j) {
            const double z = traj.grid.node(j);
            const double up = u[j] - env.squeeze_upper(t, z);
            const double lo = env.squeeze_lower(t, z) - u[j];
            if (up > rep.max_upper_violation) {
                rep.max_upper_violation = up;
                rep.t_worst_upper = t;
                rep.z_worst_upper = z;
            }
            if (lo > rep.max_lower_violation) {
                rep.max_lower_violation = lo;
                rep.t_worst_lower = t;
                rep.z_worst_lower = z;
            }
        }
    }
    rep.pass = rep.max_upper_violation <= rep.allowance &&
               rep.max_lower_violation <= rep.allowance;
    return rep;
}

// ---------------------------------------------------------------------------
// plateau construction and monotone evolution

PlateauField build_plateau_field(const WaveProfile& profile, double delta,
                                 double q, double lambda, double cap) {
    if (q < 0.0 || lambda <= 0.0)
        throw DomainError("build_plateau_field: need q >= 0 and lambda > 0");
    if (cap <= profile.kappa)
        throw DomainError("build_plateau_field: cap must exceed kappa");
    const Grid1D& gr = profile.grid;
    const long cells = std::lround(delta / gr.dx);
    PlateauField pf;
    pf.delta = static_cast<double>(cells) * gr.dx;
    pf.values.resize(gr.n);
    pf.baseline.resize(gr.n);
    pf.corner_z = std::numeric_limits<double>::quiet_NaN();
    for (int j = 0; j < gr.n; ++j) {
        const long src = std::clamp<long>(j + cells, 0, gr.n - 1);
        const double base = profile.values[static_cast<std::size_t>(src)];
        double v = base + q * std::exp(lambda * gr.node(j));
        pf.baseline[j] = base;
        if (v >= cap) {
            if (!std::isfinite(pf.corner_z)) pf.corner_z = gr.node(j) - 0.5 * gr.dx;
            v = cap;
        }
        pf.values[j] = v;
    }
    return pf;
}

namespace {

D12 array_stencil(const std::vector<double>& v, int j, const Grid1D& gr,
                  bool has_corner, double corner) {
    auto f = [&](double zz) {
        const int i = static_cast<int>(std::lround((zz - gr.x_min) / gr.dx));
        return v[static_cast<std::size_t>(std::clamp(i, 0, gr.n - 1))];
    };
    return stencil_d12(f, gr.node(j), gr.dx, has_corner, corner);
}

} // namespace

MonotoneReport monotone_evolution_check(
    const Grid1D& grid, const std::vector<double>& field, double corner_z,
    EnvelopeSide side, const BirthFunction& g, double c, double h,
    double t_end, double dt, const std::vector<double>* baseline,
    double monotone_tol) {
    if (static_cast<int>(field.size()) != grid.n)
        throw DomainError("monotone_evolution_check: field/grid size mismatch");
    if (baseline && baseline->size() != field.size())
        throw DomainError("monotone_evolution_check: baseline size mismatch");
    MonotoneReport rep;
    rep.tol = 1e-8 * (1.0 + g.kappa);
    rep.static_min_margin = kInf;
    const bool has_corner = std::isfinite(corner_z);
    const double sgn = side == EnvelopeSide::upper ? 1.0 : -1.0;

    for (int j = 5; j + 5 < grid.n; ++j) {
        const double z = grid.node(j);
        if (has_corner && std::abs(z - corner_z) < grid.dx * 0.999) continue;
        const D12 dw = array_stencil(field, j, grid, has_corner, corner_z);
        const double wdel = interp_cubic(field, grid.x_min, grid.dx, z - c * h);
        double resid = -dw.d2 + c * dw.d1 + field[j] - g(wdel);
        if (baseline) {
            const D12 db = array_stencil(*baseline, j, grid, has_corner, corner_z);
            const double bdel =
                interp_cubic(*baseline, grid.x_min, grid.dx, z - c * h);
            resid -= -db.d2 + c * db.d1 + (*baseline)[j] - g(bdel);
        }
        rep.static_min_margin = std::min(rep.static_min_margin, sgn * resid);
    }

    if (has_corner) {
        int jr = static_cast<int>(std::ceil((corner_z - grid.x_min) / grid.dx));
        jr = std::clamp(jr, 6, grid.n - 7);
        auto f = [&](double zz) {
            const int i = static_cast<int>(std::lround((zz - grid.x_min) / grid.dx));
            return field[static_cast<std::size_t>(std::clamp(i, 0, grid.n - 1))];
        };
        const D12 dl = stencil_d12(f, grid.node(jr - 1), grid.dx, true,
                                   grid.node(jr - 1) + 0.5 * grid.dx);
        const D12 dr = stencil_d12(f, grid.node(jr), grid.dx, true,
                                   grid.node(jr) - 0.5 * grid.dx);
        rep.corner_jump = sgn * (dl.d1 - dr.d1);
    }

    rep.certified = rep.static_min_margin >= -rep.tol &&
                    (!has_corner || rep.corner_jump > 0.0);
    if (!rep.certified)
        throw CertificationFailed(
            "static field fails the one-sided residual check: min margin " +
            fmt(rep.static_min_margin) + ", corner jump " +
            fmt(rep.corner_jump));

    SolverConfig cfg;
    cfg.frame = Frame::comoving;
    cfg.c = c;
    cfg.dt = dt;
    cfg.t_end = t_end;
    cfg.bc = BoundaryCondition::dirichlet(field.front(), field.back());
    cfg.snapshot_every =
        std::max(1, static_cast<int>(std::lround(0.25 / dt)));
    HistoryBuffer state(grid, h, dt);
    state.fill([&](double, double x) {
        return interp_linear(field, grid.x_min, grid.dx, x);
    });
    const Trajectory traj = simulate(std::move(state), cfg, g);

    double worst = 0.0;
    for (std::size_t i = 1; i < traj.fields.size(); ++i)
        for (int j = 0; j < grid.n; ++j) {
            const double move = sgn * (traj.fields[i][j] - traj.fields[i - 1][j]);
            worst = std::max(worst, move);
        }
    rep.max_wrong_way = worst;
    rep.pass = rep.certified && rep.max_wrong_way <= monotone_tol;
    return rep;
}

double stability_radius(double epsilon, double gamma, double alpha,
                        double lambda1, const KappaParams& kp,
                        const WaveProfile& profile) {
    if (epsilon <= 0.0 || gamma <= 0.0 || alpha <= 0.0 || lambda1 <= 0.0)
        throw DomainError("stability_radius: all rates must be positive");
    const double aeh = alpha * std::exp(gamma * profile.h);
    const double q_cap = std::min(kp.q_star_minus, kp.q_star_plus);
    const double sigma0 = std::min(gamma, q_cap * std::exp(-lambda1 * aeh));
    const double big_c = std::max(aeh / gamma, std::exp(lambda1 * aeh));

    double sup = 0.0;
    const Grid1D& gr = profile.grid;
    for (int j = 1; j + 1 < gr.n; ++j) {
        if (profile.values[j] < 1e-10 * profile.kappa) continue;
        const double slope =
            (profile.values[j + 1] - profile.values[j - 1]) / (2.0 * gr.dx);
        sup = std::max(sup, slope / eta_weight(lambda1, gr.node(j)));
    }
    const double denom =
        big_c * (1.0 + std::exp(lambda1 * big_c * sigma0) * sup);
    if (!(denom > 0.0) || !std::isfinite(denom))
        throw NumericalFailure("stability_radius: degenerate constants");
    return std::min(sigma0, epsilon / denom);
}

} // namespace wavefront
