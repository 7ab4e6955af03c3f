#include "wavefront/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "wavefront/dispersion.hpp"
#include "wavefront/envelopes.hpp"
#include "wavefront/solver.hpp"
#include "wavefront/waves.hpp"

namespace wavefront {

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty() || dir.back() == '/') return dir + name;
    return dir + "/" + name;
}

double resolve_gp0(const Config& cfg, const BirthFunction& g) {
    const double v = cfg.get_double("experiment", "gp0");
    return v > 0.0 ? v : g.gp0;
}

Grid1D grid_from_config(const Config& cfg, double snap_to_shift) {
    const double x_min = cfg.get_double("numerics", "x_min");
    const double x_max = cfg.get_double("numerics", "x_max");
    const double dx = cfg.get_double("numerics", "dx");
    if (!(x_max > x_min))
        throw ConfigError("numerics: x_max must exceed x_min", 0,
                          "numerics.x_max");
    if (snap_to_shift > 0.0 && cfg.get_bool("numerics", "snap_shift"))
        return Grid1D::with_snapped_shift(x_min, x_max, dx, snap_to_shift);
    return Grid1D::with_spacing(x_min, x_max, dx);
}

/// Lab-frame grid sized so a front moving leftward at c_ref for t_end
/// units stays clear of the boundary; explicit x_min wins.
Grid1D lab_grid(const Config& cfg, double c_ref) {
    double x_min = cfg.get_double("numerics", "x_min");
    const double t_end = cfg.get_double("numerics", "t_end");
    if (!cfg.has("numerics", "x_min")) {
        const double need = c_ref * t_end + 50.0;
        x_min = -std::ceil(need / 10.0) * 10.0;
    }
    double x_max = cfg.get_double("numerics", "x_max");
    if (!cfg.has("numerics", "x_max")) x_max = 50.0;
    return Grid1D::with_spacing(x_min, x_max,
                                cfg.get_double("numerics", "dx"));
}

BoundaryCondition bc_from_config(const Config& cfg, Frame frame,
                                 double kappa) {
    const std::string kind = cfg.get_string("numerics", "boundary");
    const double left = cfg.get_double("numerics", "bc_left");
    double right = cfg.get_double("numerics", "bc_right");
    if (right < 0.0) right = kappa;
    if (kind == "auto" || kind == "exponential")
        return frame == Frame::lab
                   ? BoundaryCondition::left_exponential_right_neumann()
                   : BoundaryCondition::left_exponential_right_dirichlet(
                         right);
    if (kind == "dirichlet") return BoundaryCondition::dirichlet(left, right);
    if (kind == "mixed")
        return BoundaryCondition::left_dirichlet_right_neumann(left);
    if (kind == "neumann") return BoundaryCondition::neumann();
    throw ConfigError("numerics.boundary must be auto | exponential | "
                      "dirichlet | mixed | neumann, got '" +
                          kind + "'",
                      0, "numerics.boundary");
}

AdvectionScheme advection_from_config(const Config& cfg) {
    const std::string s = cfg.get_string("numerics", "advection");
    if (s == "auto") return AdvectionScheme::automatic;
    if (s == "centered") return AdvectionScheme::centered;
    if (s == "upwind") return AdvectionScheme::upwind;
    throw ConfigError("numerics.advection must be auto | centered | upwind",
                      0, "numerics.advection");
}

SolverConfig solver_from_config(const Config& cfg, const BirthFunction& g,
                                Frame frame, double c, double total_steps_hint
                                /*unused*/ = 0.0) {
    (void)total_steps_hint;
    SolverConfig sc;
    sc.frame = frame;
    sc.c = c;
    sc.dt = cfg.get_double("numerics", "dt");
    sc.t_end = cfg.get_double("numerics", "t_end");
    sc.bc = bc_from_config(cfg, frame, g.kappa);
    sc.advection = advection_from_config(cfg);
    sc.blowup_threshold =
        cfg.get_double("numerics", "blowup_factor") * std::max(1.0, g.kappa);
    long every = cfg.get_int("output", "snapshot_every");
    if (every <= 0) {
        const long steps = std::max(1L, std::lround(sc.t_end / sc.dt));
        every = std::max(1L, steps / 100);
    }
    sc.snapshot_every = static_cast<int>(every);
    return sc;
}

ProfileOptions profile_options(const Config& cfg) {
    ProfileOptions opt;
    opt.dt = std::min(cfg.get_double("numerics", "dt"), 5e-3);
    opt.relax_time = cfg.get_double("experiment", "relax_time");
    opt.pin_level_frac = cfg.get_double("experiment", "pin_level_frac");
    opt.converge_tol = cfg.get_double("tolerances", "converge");
    opt.drift_tol = cfg.get_double("tolerances", "drift");
    opt.snap_shift = cfg.get_bool("numerics", "snap_shift");
    return opt;
}

void dump_snapshots(const Trajectory& traj, const std::string& path,
                    int digits, ExperimentReport& rep) {
    CsvWriter csv(path, {"t", "x", "u"}, digits);
    for (std::size_t s = 0; s < traj.times.size(); ++s)
        for (int j = 0; j < traj.grid.n; ++j)
            csv.row({csv.num(traj.times[s]), csv.num(traj.grid.node(j)),
                     csv.num(traj.fields[s][j])});
    rep.outputs.push_back(path);
}

void dump_front_track(const FrontTrack& ft, const std::string& path,
                      int digits, ExperimentReport& rep) {
    CsvWriter csv(path, {"t", "position", "c_est_running"}, digits);
    for (std::size_t i = 0; i < ft.times.size(); ++i)
        csv.row({csv.num(ft.times[i]), csv.num(ft.positions[i]),
                 csv.num(ft.c_running[i])});
    rep.outputs.push_back(path);
}

void dump_norms(const NormSeries& ns, const std::string& path, int digits,
                ExperimentReport& rep) {
    CsvWriter csv(path, {"t", "norm_kind", "lambda", "value"}, digits);
    for (std::size_t i = 0; i < ns.times.size(); ++i)
        csv.row({csv.num(ns.times[i]), ns.kind, csv.num(ns.lambda),
                 csv.num(ns.values[i])});
    rep.outputs.push_back(path);
}

void dump_profile(const WaveProfile& p, const std::string& path, int digits,
                  ExperimentReport& rep) {
    CsvWriter csv(path, {"z", "phi"}, digits);
    for (int j = 0; j < p.grid.n; ++j)
        csv.row({csv.num(p.grid.node(j)), csv.num(p.values[j])});
    rep.outputs.push_back(path);
}

/// Decay series is monotone after the transient cut, up to a relative
/// wiggle allowance.
bool series_monotone(const NormSeries& ns, double transient_frac) {
    const std::size_t cut =
        static_cast<std::size_t>(transient_frac * ns.values.size());
    for (std::size_t i = cut; i + 1 < ns.values.size(); ++i)
        if (ns.values[i + 1] > ns.values[i] * (1.0 + 1e-6)) return false;
    return !ns.values.empty();
}

/// Weighted-norm observation window: stay clear of the boundaries and of
/// the region where the weight, divided by the profile's own size, would
/// amplify the relative numerical remnant (about 1e-7 of the field) above
/// a thousandth of the initial perturbation norm.
std::pair<double, double> norm_window(const WaveProfile& prof, double lambda,
                                      double b, double q) {
    const Grid1D& grid = prof.grid;
    double z_lo = grid.x_min + 5.0;
    if (lambda > 0.0 && q > 0.0) {
        const double budget = 1e-3 * q;
        for (int j = grid.n - 1; j >= 0; --j) {
            const double z = grid.node(j);
            const double w = std::min(std::exp(lambda * (z - b)), 1.0);
            if (1e-7 * prof.values[j] / w > budget) {
                z_lo = std::max(z_lo, z + grid.dx);
                break;
            }
        }
    }
    return {z_lo, grid.x_max - 5.0};
}

/// Rate fits and monotonicity assertions stop once the series has fallen
/// three decades: below that the weighted remnant of the numerics is being
/// measured, not the perturbation.
std::size_t resolvable_prefix(const NormSeries& ns) {
    if (ns.values.empty()) return 0;
    const double cut = 1e-3 * ns.values.front();
    for (std::size_t i = 0; i < ns.values.size(); ++i)
        if (ns.values[i] <= cut) return i + 1;
    return ns.values.size();
}

NormSeries truncate_series(const NormSeries& ns, std::size_t n) {
    NormSeries out;
    out.kind = ns.kind;
    out.lambda = ns.lambda;
    out.times.assign(ns.times.begin(), ns.times.begin() + n);
    out.values.assign(ns.values.begin(), ns.values.begin() + n);
    return out;
}

WaveProfile profile_for(const Config& cfg, const BirthFunction& g, double c) {
    const double h = cfg.get_double("model", "h");
    const Grid1D grid = grid_from_config(cfg, c * h);
    return compute_profile(c, g, h, grid, profile_options(cfg));
}

struct PerturbedRun {
    Trajectory traj;
    NormSeries series;
};

/// Comoving run from the profile plus bump(z), constant in history time,
/// recording the lambda-weighted distance to the profile at snapshot
/// cadence.
PerturbedRun perturbed_run(const Config& cfg, const BirthFunction& g,
                           const WaveProfile& prof, double lambda,
                           double origin,
                           const std::function<double(double)>& bump,
                           std::pair<double, double> window) {
    const double h = cfg.get_double("model", "h");
    SolverConfig sc = solver_from_config(cfg, g, Frame::comoving, prof.c);
    HistoryBuffer state(prof.grid, h, sc.dt);
    const WaveProfile* pp = &prof;
    state.fill([pp, &bump](double, double z) {
        return pp->eval(z) + bump(z);
    });
    sc.dt = state.dt();

    PerturbedRun out;
    out.series.kind = "eta";
    out.series.lambda = lambda;
    const std::vector<double>* phi = &prof.values;
    NormSeries* series = &out.series;
    const Grid1D* gp = &prof.grid;
    Observer obs = [series, phi, gp, lambda, origin, window](
                       double t, const Grid1D&,
                       const std::vector<double>& u) {
        std::vector<double> diff(u.size());
        for (std::size_t j = 0; j < u.size(); ++j)
            diff[j] = u[j] - (*phi)[j];
        const auto [value, where] = weighted_norm(
            *gp, diff, lambda, origin, window.first, window.second);
        (void)where;
        series->times.push_back(t);
        series->values.push_back(value);
    };
    out.traj = simulate(std::move(state), sc, g, {obs});
    return out;
}

void run_roots(const Config& cfg, const std::string& dir,
               ExperimentReport& rep) {
    const BirthFunction g = birth_from_config(cfg);
    const double gp0 = resolve_gp0(cfg, g);
    const double h = cfg.get_double("model", "h");
    const double c = cfg.get_double("experiment", "c");
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));
    const CriticalSpeed cs = critical_speed(h, gp0);
    rep.metric("c_sharp", cs.c_sharp);
    rep.metric("lambda_sharp", cs.lambda_sharp);

    CsvWriter csv(join_path(dir, "roots.csv"),
                  {"c", "h", "gp0", "lambda1", "lambda2", "chi_res1",
                   "chi_res2", "near_critical"},
                  digits);
    rep.outputs.push_back(csv.path());
    try {
        const CharRoots r = char_roots(c, h, gp0);
        csv.row({csv.num(c), csv.num(h), csv.num(gp0), csv.num(r.lambda1),
                 csv.num(r.lambda2), csv.num(r.res1), csv.num(r.res2),
                 r.near_critical ? "1" : "0"});
        rep.metric("lambda1", r.lambda1);
        rep.metric("lambda2", r.lambda2);
        rep.check("real-roots", true);
    } catch (const NoRealRoots&) {
        csv.row({csv.num(c), csv.num(h), csv.num(gp0), "nan", "nan", "nan",
                 "nan", "0"});
        rep.metric("lambda1", "nan");
        rep.metric("lambda2", "nan");
        rep.check("real-roots", false);
    }
}

void run_critical_speed(const Config& cfg, const std::string& dir,
                        ExperimentReport& rep) {
    const BirthFunction g = birth_from_config(cfg);
    const double gp0 = resolve_gp0(cfg, g);
    const double h = cfg.get_double("model", "h");
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));
    const CriticalSpeed cs = critical_speed(h, gp0);
    rep.metric("c_sharp", cs.c_sharp);
    rep.metric("lambda_sharp", cs.lambda_sharp);
    CsvWriter csv(join_path(dir, "critical.csv"),
                  {"h", "gp0", "c_sharp", "lambda_sharp"}, digits);
    csv.row({csv.num(h), csv.num(gp0), csv.num(cs.c_sharp),
             csv.num(cs.lambda_sharp)});
    rep.outputs.push_back(csv.path());
    rep.check("computed", true);
}

void run_select_speed(const Config& cfg, const std::string& dir,
                      ExperimentReport& rep) {
    const BirthFunction g = birth_from_config(cfg);
    const double gp0 = resolve_gp0(cfg, g);
    const double h = cfg.get_double("model", "h");
    const double lambda = cfg.get_double("experiment", "lambda");
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));
    const CriticalSpeed cs = critical_speed(h, gp0);
    const SpeedSelection sel = select_speed(lambda, h, gp0, cs.c_sharp);
    const char* regime =
        sel.regime == SpeedRegime::selected ? "selected" : "saturated";
    rep.metric("mu", sel.mu);
    rep.metric("c_selected", sel.c_selected);
    rep.metric("lambda_star", sel.lambda_star);
    rep.metric("regime", regime);
    CsvWriter csv(join_path(dir, "select.csv"),
                  {"lambda", "h", "gp0", "mu", "c_selected", "lambda_star",
                   "regime"},
                  digits);
    csv.row({csv.num(lambda), csv.num(h), csv.num(gp0), csv.num(sel.mu),
             csv.num(sel.c_selected), csv.num(sel.lambda_star), regime});
    rep.outputs.push_back(csv.path());
    rep.check("computed", true);
}

HistoryField ic_from_config(const Config& cfg, const BirthFunction& g,
                            double c_ic) {
    const std::string ic = cfg.get_string("experiment", "ic");
    double level = cfg.get_double("experiment", "ic_level");
    if (level < 0.0) level = g.kappa;
    double cap = cfg.get_double("experiment", "ic_cap");
    if (cap < 0.0) cap = 0.9 * g.kappa;
    if (ic == "exponential-tail")
        return ic_exponential_tail(cfg.get_double("experiment", "amplitude"),
                                   cfg.get_double("experiment", "lambda"),
                                   c_ic, cap);
    if (ic == "heaviside")
        return ic_heaviside(level, cfg.get_double("experiment", "x0"));
    if (ic == "constant") return ic_constant(level);
    throw ConfigError("experiment.ic must be exponential-tail | heaviside | "
                      "constant, got '" +
                          ic + "'",
                      0, "experiment.ic");
}

void run_simulate(const Config& cfg, const std::string& dir,
                  ExperimentReport& rep) {
    const BirthFunction g = birth_from_config(cfg);
    const double h = cfg.get_double("model", "h");
    const double c = cfg.get_double("experiment", "c");
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));
    const Frame frame = cfg.get_string("numerics", "frame") == "comoving"
                            ? Frame::comoving
                            : Frame::lab;
    const Grid1D grid = frame == Frame::comoving
                            ? grid_from_config(cfg, c * h)
                            : grid_from_config(cfg, 0.0);
    SolverConfig sc = solver_from_config(cfg, g, frame, c);
    HistoryBuffer state(grid, h, sc.dt);
    state.fill(ic_from_config(cfg, g, c));
    sc.dt = state.dt();

    const Trajectory traj = simulate(std::move(state), sc, g);
    rep.metric("snapshots", static_cast<double>(traj.times.size()));
    rep.metric("final_min", traj.stats.back().min);
    rep.metric("final_max", traj.stats.back().max);

    if (cfg.get_bool("output", "snapshots"))
        dump_snapshots(traj, join_path(dir, "snapshots.csv"), digits, rep);
    const double level =
        cfg.get_double("experiment", "pin_level_frac") * g.kappa;
    try {
        const FrontTrack ft = track_front(traj, level);
        dump_front_track(ft, join_path(dir, "front_track.csv"), digits, rep);
        rep.metric("c_est", ft.c_est);
        rep.metric("front_skipped", static_cast<double>(ft.skipped));
    } catch (const Error&) {
        rep.metric("c_est", "nan");
    }
    rep.check("finite", true);
}

void run_profile(const Config& cfg, const std::string& dir,
                 ExperimentReport& rep) {
    const BirthFunction g = birth_from_config(cfg);
    const double h = cfg.get_double("model", "h");
    const double c = cfg.get_double("experiment", "c");
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));
    const WaveProfile prof = profile_for(cfg, g, c);
    dump_profile(prof, join_path(dir, "profile.csv"), digits, rep);

    rep.metric("ep_residual", prof.ep_residual);
    rep.metric("drift_rate", prof.drift_rate);
    rep.metric("tail_lambda", prof.tail.lambda);
    rep.metric("tail_amplitude", prof.tail.amplitude);
    rep.metric("tail_r_squared", prof.tail.r_squared);
    rep.metric("tail_decades", prof.tail.decades);
    rep.metric("monotone", prof.monotone ? "true" : "false");
    rep.metric("overshoot", prof.overshoot);

    rep.check("profile-defect",
              prof.ep_residual <=
                  cfg.get_double("tolerances", "ep_residual_frac") * g.kappa);
    rep.check("tail-fit", prof.tail.r_squared >=
                              cfg.get_double("tolerances", "rsq_min"));
    try {
        const CharRoots r = char_roots(c, h, g.gp0);
        rep.metric("lambda1", r.lambda1);
        if (!r.near_critical)
            rep.check("tail-rate",
                      std::abs(prof.tail.lambda - r.lambda1) <=
                          cfg.get_double("tolerances", "tail_rel") *
                              r.lambda1);
    } catch (const NoRealRoots&) {
    }
    if (g.monotone) rep.check("monotone", prof.monotone);
}

void run_speed_selection(const Config& cfg, const std::string& dir,
                         ExperimentReport& rep) {
    const BirthFunction g = birth_from_config(cfg);
    const double h = cfg.get_double("model", "h");
    const double gp0 = resolve_gp0(cfg, g);
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));
    const CriticalSpeed cs = critical_speed(h, gp0);
    const std::string ic = cfg.get_string("experiment", "ic");

    double c_pred = cs.c_sharp;
    std::string regime = "saturated";
    if (ic == "exponential-tail") {
        const SpeedSelection sel = select_speed(
            cfg.get_double("experiment", "lambda"), h, gp0, cs.c_sharp);
        c_pred = sel.c_selected;
        regime =
            sel.regime == SpeedRegime::selected ? "selected" : "saturated";
        rep.metric("mu", sel.mu);
        rep.metric("lambda_star", sel.lambda_star);
    }
    rep.metric("regime", regime);
    rep.metric("c_pred", c_pred);
    const std::string expect = cfg.get_string("experiment", "expect");
    if (expect != "auto") rep.check("regime", expect == regime);

    const Grid1D grid = lab_grid(cfg, c_pred);
    SolverConfig sc = solver_from_config(cfg, g, Frame::lab, 0.0);
    HistoryBuffer state(grid, h, sc.dt);
    state.fill(ic_from_config(cfg, g, c_pred));
    sc.dt = state.dt();
    const Trajectory traj = simulate(std::move(state), sc, g);

    const double level =
        cfg.get_double("experiment", "pin_level_frac") * g.kappa;
    const FrontTrack ft = track_front(traj, level);
    dump_front_track(ft, join_path(dir, "front_track.csv"), digits, rep);
    if (cfg.get_bool("output", "snapshots"))
        dump_snapshots(traj, join_path(dir, "snapshots.csv"), digits, rep);

    const double rel = std::abs(ft.c_est - c_pred) / c_pred;
    rep.metric("c_est", ft.c_est);
    rep.metric("rel_err", rel);
    rep.metric("front_skipped", static_cast<double>(ft.skipped));
    rep.check("front-samples",
              ft.times.size() - static_cast<std::size_t>(ft.skipped) >= 10);
    rep.check("speed", rel <= cfg.get_double("tolerances", "speed_rel"));
}

void run_stability_rate(const Config& cfg, const std::string& dir,
                        ExperimentReport& rep) {
    const BirthFunction g = birth_from_config(cfg);
    const double h = cfg.get_double("model", "h");
    const double c = cfg.get_double("experiment", "c");
    const double q = cfg.get_double("experiment", "q");
    const double lambda = cfg.get_double("experiment", "lambda");
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));

    const WaveProfile prof = profile_for(cfg, g, c);
    dump_profile(prof, join_path(dir, "profile.csv"), digits, rep);
    const KappaParams kp = estimate_kappa_params(g, h, prof);
    const double b = kp.b;
    rep.metric("b", b);
    rep.metric("gamma_budget", gamma_max(c, lambda, h, g.gp0));

    const auto window = norm_window(prof, lambda, b, q);
    const PerturbedRun run = perturbed_run(
        cfg, g, prof, lambda, b,
        [q, lambda, b](double z) {
            return q * std::min(std::exp(lambda * (z - b)), 1.0);
        },
        window);
    dump_norms(run.series, join_path(dir, "norms.csv"), digits, rep);

    const double transient = cfg.get_double("tolerances", "transient_frac");
    const NormSeries fitted =
        truncate_series(run.series, resolvable_prefix(run.series));
    const RateFit rate = convergence_rate(fitted, transient);
    rep.metric("gamma_est", rate.gamma);
    rep.metric("rate_r_squared", rate.r_squared);
    rep.metric("norm_initial", run.series.values.front());
    rep.metric("norm_final", fitted.values.back());
    rep.metric("window_lo", window.first);
    rep.metric("samples_fitted", static_cast<double>(rate.n_used));

    rep.check("rate-positive",
              rate.gamma > cfg.get_double("tolerances", "rate_min"));
    rep.check("series-monotone", series_monotone(fitted, transient));
}

void run_nicholson_case(const Config& cfg, const std::string& dir,
                        ExperimentReport& rep) {
    const double ratio = cfg.get_double("model", "p_over_delta");
    const BirthFunction g = make_nicholson(ratio);
    const double h = cfg.get_double("model", "h");
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));
    const CriticalSpeed cs = critical_speed(h, g.gp0);
    const double c = cfg.has("experiment", "c")
                         ? cfg.get_double("experiment", "c")
                         : 1.2 * cs.c_sharp;
    rep.metric("p_over_delta", ratio);
    rep.metric("kappa", g.kappa);
    rep.metric("c_sharp", cs.c_sharp);
    rep.metric("c", c);

    // Slope bound on the invariant interval [g(g(u_m)), g(u_m)], u_m the
    // hump location; for the monotone range the interval degenerates and
    // the bound is checked near kappa instead.
    const double um = g.unimodal ? g.unimodal->x_m : g.kappa;
    const double hi = g(um);
    const double lo = g(hi);
    double slope_max = 0.0;
    for (int i = 0; i <= 500; ++i) {
        const double u = lo + (hi - lo) * i / 500.0;
        slope_max = std::max(slope_max, std::abs(g.deriv(u)));
    }
    rep.metric("interval_lo", lo);
    rep.metric("interval_hi", hi);
    rep.metric("slope_max", slope_max);
    rep.check("slope-bound", slope_max < 1.0);

    Config sub = cfg;
    sub.set("model", "birth", "nicholson");
    const WaveProfile prof = profile_for(sub, g, c);
    dump_profile(prof, join_path(dir, "profile.csv"), digits, rep);
    rep.metric("overshoot", prof.overshoot);
    rep.metric("monotone", prof.monotone ? "true" : "false");

    // Perturbation weight strictly inside (lambda1, lambda2): at the
    // endpoints the decay budget vanishes and no rate can be resolved.
    const CharRoots roots = char_roots(c, h, g.gp0);
    const double lambda = 0.5 * (roots.lambda1 + roots.lambda2);
    const KappaParams kp = estimate_kappa_params(g, h, prof);
    const double q = cfg.has("experiment", "q")
                         ? cfg.get_double("experiment", "q")
                         : 0.8 * std::min(kp.q_star_minus, kp.q_star_plus);
    rep.metric("lambda_weight", lambda);
    rep.metric("gamma_budget", gamma_max(c, lambda, h, g.gp0));
    rep.metric("q", q);
    const auto window = norm_window(prof, lambda, kp.b, q);
    const PerturbedRun run = perturbed_run(
        sub, g, prof, lambda, kp.b,
        [q, lambda, b = kp.b](double z) {
            return q * std::min(std::exp(lambda * (z - b)), 1.0);
        },
        window);
    dump_norms(run.series, join_path(dir, "norms.csv"), digits, rep);
    const NormSeries fitted =
        truncate_series(run.series, resolvable_prefix(run.series));
    const RateFit rate = convergence_rate(
        fitted, cfg.get_double("tolerances", "transient_frac"));
    rep.metric("gamma_est", rate.gamma);
    rep.check("rate-positive", rate.gamma > 0.0);
}

void dump_certificate(const ResidualCertificate& cert,
                      const std::string& kind, const std::string& path,
                      int digits, ExperimentReport& rep) {
    CsvWriter csv(path, {"kind", "t", "z", "residual", "side"}, digits);
    for (const ResidualSample& s : cert.samples)
        csv.row({kind, csv.num(s.t), csv.num(s.z), csv.num(s.residual),
                 s.side > 0 ? "upper" : "lower"});
    csv.row({"summary", csv.num(cert.worst_t_upper),
             csv.num(cert.worst_z_upper), csv.num(cert.min_margin_upper),
             "upper"});
    csv.row({"summary", csv.num(cert.worst_t_lower),
             csv.num(cert.worst_z_lower), csv.num(cert.min_margin_lower),
             "lower"});
    for (std::size_t i = 0; i < cert.corner_times.size(); ++i)
        csv.row({"corner", csv.num(cert.corner_times[i]), csv.num(0.0),
                 csv.num(cert.corner_jumps[i]), "jump"});
    rep.outputs.push_back(path);
}

void run_verify_envelope(const Config& cfg, const std::string& dir,
                         ExperimentReport& rep) {
    const BirthFunction g = birth_from_config(cfg);
    const double h = cfg.get_double("model", "h");
    const double c = cfg.get_double("experiment", "c");
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));
    const std::string kind = cfg.get_string("experiment", "envelope");

    const WaveProfile prof = profile_for(cfg, g, c);
    dump_profile(prof, join_path(dir, "profile.csv"), digits, rep);
    const KappaParams kp = estimate_kappa_params(g, h, prof);
    double q = cfg.get_double("experiment", "q");
    if (!cfg.has("experiment", "q"))
        q = 0.8 * std::min(kp.q_star_minus, kp.q_star_plus);
    rep.metric("q", q);
    rep.metric("delta_star", kp.delta_star);
    rep.metric("gamma_star", kp.gamma_star);
    rep.metric("q_star_minus", kp.q_star_minus);
    rep.metric("q_star_plus", kp.q_star_plus);
    rep.metric("b", kp.b);

    Envelope env;
    if (kind == "decay") {
        const CharRoots roots = char_roots(c, h, g.gp0);
        double lambda = cfg.get_double("experiment", "lambda");
        if (!cfg.has("experiment", "lambda"))
            lambda = 0.5 * (roots.lambda1 + roots.lambda2);
        double gamma = cfg.get_double("experiment", "gamma");
        if (gamma < 0.0) gamma = 0.5 * gamma_max(c, lambda, h, g.gp0);
        const EnvelopeWeight weight =
            cfg.get_string("experiment", "weight") == "xi"
                ? EnvelopeWeight::xi
                : EnvelopeWeight::eta;
        env = build_decay_envelope(prof, g, lambda, gamma, kp, q, weight);
    } else if (kind == "shift") {
        double cap = cfg.get_double("experiment", "gamma");
        if (cap < 0.0) cap = 0.5;
        env = build_shift_envelope(prof, g, kp, q, cap);
    } else {
        throw ConfigError("experiment.envelope must be decay | shift, got '" +
                              kind + "'",
                          0, "experiment.envelope");
    }
    rep.metric("gamma", env.gamma);
    rep.metric("lambda", env.lambda);
    if (kind == "shift") {
        rep.metric("alpha", env.alpha);
        rep.metric("d", env.d);
        rep.metric("sigma", env.sigma);
    }

    std::vector<double> t_samples = {0.0, 1.0, 2.0, 4.0, 8.0};
    if (h > 0.0) t_samples.insert(t_samples.begin() + 1, h);
    std::vector<double> z_samples;
    const int stride = std::max(1, prof.grid.n / 800);
    for (int j = 2; j < prof.grid.n - 2; j += stride)
        z_samples.push_back(prof.grid.node(j));
    const double tol =
        cfg.get_double("tolerances", "residual_frac") * (1.0 + g.kappa);
    const ResidualCertificate cert =
        certify(env, g, c, h, t_samples, z_samples, tol);
    dump_certificate(cert, kind, join_path(dir, "certificate.csv"), digits,
                     rep);
    rep.metric("min_margin_upper", cert.min_margin_upper);
    rep.metric("min_margin_lower", cert.min_margin_lower);
    rep.check("certify", cert.pass);
    rep.check("corner-strict", cert.corner_strict);

    // Trajectory started strictly inside the envelope must stay squeezed.
    const double lambda = env.lambda;
    const double b = env.b;
    const auto bump = [q, lambda, b](double z) {
        const double w =
            std::min({std::exp(lambda * (z - b)), std::exp(lambda * z), 1.0});
        return 0.4 * q * w;
    };
    const double h_model = h;
    SolverConfig sc = solver_from_config(cfg, g, Frame::comoving, c);
    sc.t_end = std::min(sc.t_end, 8.0);
    HistoryBuffer state(prof.grid, h_model, sc.dt);
    const WaveProfile* pp = &prof;
    state.fill([pp, &bump](double, double z) { return pp->eval(z) + bump(z); });
    sc.dt = state.dt();
    const Trajectory traj = simulate(std::move(state), sc, g);
    const SqueezeReport sq = squeeze_check(traj, env);
    rep.metric("squeeze_upper_violation", sq.max_upper_violation);
    rep.metric("squeeze_lower_violation", sq.max_lower_violation);
    rep.check("squeeze", sq.pass);
}

void run_tail_invariance(const Config& cfg, const std::string& dir,
                         ExperimentReport& rep) {
    const BirthFunction g = birth_from_config(cfg);
    const double h = cfg.get_double("model", "h");
    const double c = cfg.get_double("experiment", "c");
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));
    double lambda = cfg.get_double("experiment", "lambda");
    if (!cfg.has("experiment", "lambda"))
        lambda = char_roots(c, h, g.gp0).lambda1;
    rep.metric("lambda", lambda);
    rep.metric("target", lambda * c);

    const Grid1D grid = lab_grid(cfg, c);
    SolverConfig sc = solver_from_config(cfg, g, Frame::lab, 0.0);
    HistoryBuffer state(grid, h, sc.dt);
    double cap = cfg.get_double("experiment", "ic_cap");
    if (cap < 0.0) cap = 0.9 * g.kappa;
    state.fill(ic_exponential_tail(cfg.get_double("experiment", "amplitude"),
                                   lambda, c, cap));
    sc.dt = state.dt();
    const Trajectory traj = simulate(std::move(state), sc, g);

    const TailInvarianceReport rptail = tail_invariance_check(
        traj, lambda, c, 1e-8 * g.kappa, 1e-3 * g.kappa);
    CsvWriter csv(join_path(dir, "tail.csv"), {"t", "log_amplitude"}, digits);
    for (std::size_t i = 0; i < rptail.times.size(); ++i)
        csv.row({csv.num(rptail.times[i]), csv.num(rptail.log_amplitudes[i])});
    rep.outputs.push_back(csv.path());

    rep.metric("slope", rptail.slope);
    rep.metric("rel_error", rptail.rel_error);
    rep.check("sufficient", rptail.sufficient);
    rep.check("tail-slope",
              rptail.sufficient &&
                  rptail.rel_error <= cfg.get_double("tolerances", "tail_rel"));
}

} // namespace

BirthFunction birth_from_config(const Config& cfg) {
    const std::string kind = cfg.get_string("model", "birth");
    if (kind == "beverton-holt")
        return make_beverton_holt(cfg.get_double("model", "r"),
                                  cfg.get_double("model", "kappa"));
    if (kind == "nicholson")
        return make_nicholson(cfg.get_double("model", "p_over_delta"));
    if (kind == "pushed")
        return make_pushed_candidate(cfg.get_double("model", "r"),
                                     cfg.get_double("model", "s"),
                                     cfg.get_double("model", "kappa"));
    throw ConfigError("model.birth must be beverton-holt | nicholson | "
                      "pushed, got '" +
                          kind + "'",
                      0, "model.birth");
}

ExperimentReport run_experiment(const Config& cfg) {
    const std::string kind = cfg.get_string("experiment", "kind");
    const std::string dir = ensure_dir(cfg.get_string("output", "dir"));
    ExperimentReport rep;
    rep.kind = kind;
    if (kind == "roots")
        run_roots(cfg, dir, rep);
    else if (kind == "critical-speed")
        run_critical_speed(cfg, dir, rep);
    else if (kind == "select-speed")
        run_select_speed(cfg, dir, rep);
    else if (kind == "simulate")
        run_simulate(cfg, dir, rep);
    else if (kind == "profile")
        run_profile(cfg, dir, rep);
    else if (kind == "speed-selection")
        run_speed_selection(cfg, dir, rep);
    else if (kind == "stability-rate")
        run_stability_rate(cfg, dir, rep);
    else if (kind == "nicholson-case")
        run_nicholson_case(cfg, dir, rep);
    else if (kind == "verify-envelope")
        run_verify_envelope(cfg, dir, rep);
    else if (kind == "tail-invariance")
        run_tail_invariance(cfg, dir, rep);
    else
        throw ConfigError("unknown experiment kind '" + kind + "'", 0,
                          "experiment.kind");
    return rep;
}

namespace {

struct SweepAxis {
    std::string section;
    std::string key;
    std::vector<std::string> values;
};

std::vector<SweepAxis> parse_vary(const std::string& spec) {
    std::vector<SweepAxis> axes;
    std::istringstream in(spec);
    std::string part;
    while (std::getline(in, part, ';')) {
        const auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t");
            const auto b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string()
                                          : s.substr(a, b - a + 1);
        };
        part = trim(part);
        if (part.empty()) continue;
        const std::size_t eq = part.find('=');
        if (eq == std::string::npos)
            throw ConfigError("sweep.vary entry needs section.key = values: '" +
                                  part + "'",
                              0, "sweep.vary");
        const std::string addr = trim(part.substr(0, eq));
        const std::size_t dot = addr.find('.');
        if (dot == std::string::npos)
            throw ConfigError("sweep.vary key must be section.key: '" + addr +
                                  "'",
                              0, "sweep.vary");
        SweepAxis axis;
        axis.section = addr.substr(0, dot);
        axis.key = addr.substr(dot + 1);
        const std::string values = trim(part.substr(eq + 1));
        if (values.find(':') != std::string::npos) {
            double a = 0.0, step = 0.0, bend = 0.0;
            char c1 = 0, c2 = 0;
            std::istringstream vs(values);
            if (!(vs >> a >> c1 >> step >> c2 >> bend) || c1 != ':' ||
                c2 != ':' || step == 0.0)
                throw ConfigError("sweep.vary range must be a:step:b: '" +
                                      values + "'",
                                  0, "sweep.vary");
            for (double v = a;
                 (step > 0.0 ? v <= bend + 1e-9 * std::abs(step)
                             : v >= bend - 1e-9 * std::abs(step));
                 v += step)
                axis.values.push_back(format_num(v));
        } else {
            std::istringstream vs(values);
            std::string item;
            while (std::getline(vs, item, ','))
                if (!trim(item).empty()) axis.values.push_back(trim(item));
        }
        if (axis.values.empty())
            throw ConfigError("sweep.vary entry has no values: '" + part + "'",
                              0, "sweep.vary");
        axes.push_back(std::move(axis));
    }
    if (axes.empty())
        throw ConfigError("sweep requires a non-empty sweep.vary", 0,
                          "sweep.vary");
    return axes;
}

} // namespace

ExperimentReport run_sweep(const Config& cfg) {
    const std::vector<SweepAxis> axes =
        parse_vary(cfg.get_string("sweep", "vary"));
    const std::string dir = ensure_dir(cfg.get_string("output", "dir"));
    const int digits = static_cast<int>(cfg.get_int("output", "precision"));

    std::size_t total = 1;
    for (const SweepAxis& a : axes) total *= a.values.size();

    struct PointResult {
        ExperimentReport rep;
        std::string error;
        bool ok = false;
    };
    std::vector<PointResult> results(total);

    const auto point_values = [&](std::size_t idx) {
        std::vector<std::string> vals(axes.size());
        for (std::size_t a = axes.size(); a-- > 0;) {
            vals[a] = axes[a].values[idx % axes[a].values.size()];
            idx /= axes[a].values.size();
        }
        return vals;
    };

    const auto run_point = [&](std::size_t idx) {
        const std::vector<std::string> vals = point_values(idx);
        Config point = cfg;
        for (std::size_t a = 0; a < axes.size(); ++a)
            point.set(axes[a].section, axes[a].key, vals[a]);
        char sub[32];
        std::snprintf(sub, sizeof sub, "point_%04zu", idx);
        point.set("output", "dir", join_path(dir, sub));
        PointResult& slot = results[idx];
        try {
            slot.rep = run_experiment(point);
            write_report_files(slot.rep, point);
            slot.ok = true;
        } catch (const Error& e) {
            slot.error = e.what();
        }
    };

    const long workers =
        std::max(1L, std::min<long>(cfg.get_int("sweep", "workers"),
                                    static_cast<long>(total)));
    if (workers == 1) {
        for (std::size_t i = 0; i < total; ++i) run_point(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (long w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < total;
                     i = next.fetch_add(1))
                    run_point(i);
            });
        for (std::thread& t : pool) t.join();
    }

    // Header: varied keys, status, then the metric names of the first
    // successful point; points lacking a metric leave the cell empty.
    std::vector<std::string> metric_names;
    for (const PointResult& r : results)
        if (r.ok) {
            for (const auto& m : r.rep.metrics)
                metric_names.push_back(m.first);
            break;
        }
    std::vector<std::string> header;
    for (const SweepAxis& a : axes) header.push_back(a.section + "." + a.key);
    header.push_back("status");
    header.insert(header.end(), metric_names.begin(), metric_names.end());
    header.push_back("note");

    ExperimentReport rep;
    rep.kind = "sweep";
    CsvWriter csv(join_path(dir, "sweep.csv"), header, digits);
    bool all_ok = true;
    for (std::size_t i = 0; i < total; ++i) {
        const PointResult& r = results[i];
        std::vector<std::string> row = point_values(i);
        const bool pass = r.ok && r.rep.passed();
        all_ok = all_ok && pass;
        row.push_back(r.ok ? (pass ? "PASS" : "FAIL") : "ERROR");
        for (const std::string& name : metric_names) {
            std::string cell;
            if (r.ok)
                for (const auto& m : r.rep.metrics)
                    if (m.first == name) {
                        cell = m.second;
                        break;
                    }
            row.push_back(cell);
        }
        std::string note = r.error;
        for (char& ch : note)
            if (ch == ',' || ch == '\n') ch = ';';
        row.push_back(note);
        csv.row(row);
    }
    rep.outputs.push_back(csv.path());
    rep.metric("points", static_cast<double>(total));
    rep.check("all-points", all_ok);
    return rep;
}

std::string render_report(const ExperimentReport& rep) {
    std::ostringstream out;
    out << "experiment: " << rep.kind << "\n";
    out << "status: " << (rep.passed() ? "PASS" : "FAIL") << "\n";
    for (const auto& c : rep.checks)
        out << "check " << c.first << ": " << (c.second ? "PASS" : "FAIL")
            << "\n";
    for (const auto& m : rep.metrics)
        out << "metric " << m.first << " = " << m.second << "\n";
    for (const std::string& o : rep.outputs) out << "output " << o << "\n";
    return out.str();
}

void write_report_files(const ExperimentReport& rep, const Config& cfg) {
    const std::string dir = ensure_dir(cfg.get_string("output", "dir"));
    {
        std::ofstream out(join_path(dir, "report.txt"), std::ios::trunc);
        out << render_report(rep);
    }
    {
        std::ofstream out(join_path(dir, "run_meta.txt"), std::ios::trunc);
        out << "# effective configuration\n";
        cfg.echo(out);
    }
}

} // namespace wavefront
