#ifndef WAVEFRONT_ENVELOPES_HPP
#define WAVEFRONT_ENVELOPES_HPP

#include <vector>

#include "wavefront/model.hpp"
#include "wavefront/solver.hpp"
#include "wavefront/waves.hpp"

namespace wavefront {

/// Contraction box around kappa: on [kappa - delta_star, kappa] the birth
/// function moves points toward kappa fast enough that an envelope of
/// amplitude q and decay exponent gamma_star stays one-sided.
struct KappaParams {
    double delta_star = 0.0;   // width of the sampled u-interval
    double gamma_star = 0.0;   // decay-exponent budget for the boxes
    double q_star_minus = 0.0; // lower-envelope amplitude budget (< kappa)
    double q_star_plus = 0.0;  // upper-envelope amplitude budget
    double b = 0.0;            // abscissa with phi(b - c h) = kappa - delta*/2
};

/// Sampled verification of the two one-sided contraction inequalities
///   g(u) - g(u - q e^{gamma h}) <=  q (1 - 2 gamma)   (lower family)
///   g(u) - g(u + q e^{gamma h}) >= -q (1 - 2 gamma)   (upper family)
/// over [kappa - delta, kappa] x [0, q_minus/q_plus] x [0, gamma_cap],
/// samples_per_axis points per axis; the q = 0 edge uses the slope form
/// e^{gamma h} g'(u) <= 1 - 2 gamma.
bool check_contraction_boxes(const BirthFunction& g, double h, double delta,
                             double gamma_cap, double q_minus, double q_plus,
                             int samples_per_axis = 100);

/// Largest sampled (gamma_star, delta_star) with binary-searched amplitude
/// budgets for which both families hold; all four values are shrunk to 90%
/// of the found boundary and re-verified.  Throws NoAdmissibleParams when
/// not even the smallest sampled box passes (e.g. g'(kappa) >= 1).
KappaParams estimate_kappa_params(const BirthFunction& g, double h,
                                  const WaveProfile& profile,
                                  std::vector<double> gamma_grid = {},
                                  std::vector<double> q_grid = {});

enum class EnvelopeKind {
    decay, // phi(z) +- q e^{-gamma t} W(z - b): amplitude decay only
    shift, // phi(z +- eps(t)) +- q e^{-gamma t} eta_1(z): decay plus drift
};

enum class EnvelopeWeight {
    eta, // min{e^{lambda s}, 1}, bounded; q capped by the kappa budgets
    xi,  // e^{lambda s}, unbounded; any q > 0 admissible
};

enum class EnvelopeSide { upper, lower };

/// A super-/sub-solution pair around a computed profile.  upper/lower are
/// the bounding maps; for the shift kind the lower map must be composed
/// with a rightward translation by sigma before it brackets initial data
/// centered on the profile, which squeeze_lower does.
struct Envelope {
    EnvelopeKind kind = EnvelopeKind::decay;
    EnvelopeWeight weight = EnvelopeWeight::eta;
    WaveProfile profile;
    double q = 0.0;
    double gamma = 0.0;
    double lambda = 0.0; // weight exponent; equals lambda_1(c) for shift
    double b = 0.0;
    double alpha = 0.0;  // shift kind: e^{gamma h} L_g / d
    double d = 0.0;      // shift kind: min of phi'/eta_1 on z <= b
    double sigma = 0.0;  // shift kind: (alpha q / gamma) e^{gamma h}
    double corner_z = 0.0;
    bool has_corner = false;

    double eps_plus(double t) const;
    double eps_minus(double t) const;

    double upper(double t, double z) const;
    double lower(double t, double z) const;
    /// Analytic time derivatives of the maps above.
    double upper_dt(double t, double z) const;
    double lower_dt(double t, double z) const;

    /// Derivative drop of the upper map across the corner, q lambda
    /// e^{-gamma t}; the lower map rises by the same amount.
    double corner_jump(double t) const;

    /// Maps used for trapping trajectories; they differ from upper/lower
    /// only for the shift kind, whose lower map is translated by sigma.
    double squeeze_upper(double t, double z) const;
    double squeeze_lower(double t, double z) const;
};

/// Envelope phi +- q e^{-gamma t} W with W = eta_lambda(z - b) or
/// e^{lambda z}.  Budgets: lambda in [lambda_1(c), lambda_2(c)), gamma <=
/// gamma_max(c, lambda), and for the eta weight q <= min(q*, q_*); pass
/// enforce_budgets = false to build a deliberately inadmissible envelope
/// for negative testing.
Envelope build_decay_envelope(const WaveProfile& profile,
                              const BirthFunction& g, double lambda,
                              double gamma, const KappaParams& kp, double q,
                              EnvelopeWeight weight = EnvelopeWeight::eta,
                              bool enforce_budgets = true);

/// Envelope phi(z +- eps(t)) +- q e^{-gamma t} eta_1(z) for c > c_#; gamma
/// is the largest value under min{gamma_star, (g'(0)-1) e^{-lambda_1 c h}
/// min{1, 1/lambda_1}, gamma_cap}.  Throws DegenerateProfile when the
/// profile slope ratio d is not positive.
Envelope build_shift_envelope(const WaveProfile& profile,
                              const BirthFunction& g, const KappaParams& kp,
                              double q, double gamma_cap = 0.5);

struct ResidualSample {
    double t = 0.0;
    double z = 0.0;
    double residual = 0.0; // operator residual, sign per side
    int side = +1;         // +1 upper map, -1 lower map
};

/// Residual certificate of the one-sided operator conditions: upper-map
/// residuals must stay >= -tol, lower-map residuals <= tol, and the corner
/// derivative jump must be strictly positive at every time sample.
struct ResidualCertificate {
    std::vector<ResidualSample> samples;
    double min_margin_upper = 0.0;  // min over samples of +residual
    double min_margin_lower = 0.0;  // min over samples of -residual
    double worst_z_upper = 0.0, worst_t_upper = 0.0;
    double worst_z_lower = 0.0, worst_t_lower = 0.0;
    std::vector<double> corner_times;
    std::vector<double> corner_jumps;
    bool corner_strict = true;
    double tol = 0.0;
    bool pass = false;
};

/// Evaluates the operator w_t - w_zz + c w_z + w - g(w(t-h, z-ch)) on both
/// envelope maps: time derivatives from the formulas, z-derivatives by
/// fourth-order differences (one-sided next to the corner, which itself is
/// skipped within one grid spacing).  For the decay kind the residual of
/// the bare profile on the same stencils is subtracted, so the reported
/// values measure the envelope against the grid profile it decorates.
/// tol <= 0 selects the default 1e-8 (1 + kappa).
ResidualCertificate certify(const Envelope& env, const BirthFunction& g,
                            double c, double h,
                            const std::vector<double>& t_samples,
                            const std::vector<double>& z_samples,
                            double tol = 0.0);

struct SqueezeReport {
    double max_upper_violation = 0.0;
    double max_lower_violation = 0.0;
    double t_worst_upper = 0.0, z_worst_upper = 0.0;
    double t_worst_lower = 0.0, z_worst_lower = 0.0;
    double allowance = 0.0; // 1e-3 q
    bool pass = false;
};

/// Checks that every snapshot of a co-moving trajectory stays between
/// squeeze_lower and squeeze_upper, after verifying that the initial
/// history does (else InitialDataOutsideEnvelope).
SqueezeReport squeeze_check(const Trajectory& traj, const Envelope& env);

/// min{cap, phi(z + delta) + q e^{lambda z}} sampled on the profile grid;
/// delta is snapped to whole cells so the translate reuses node values.
struct PlateauField {
    std::vector<double> values;
    std::vector<double> baseline; // the translated profile alone
    double corner_z = 0.0;        // abscissa where the cap takes over
    double delta = 0.0;           // snapped translation actually used
};

PlateauField build_plateau_field(const WaveProfile& profile, double delta,
                                 double q, double lambda, double cap);

struct MonotoneReport {
    double static_min_margin = 0.0; // signed residual of the static field
    double corner_jump = 0.0;       // one-sided derivative drop at corner_z
    bool certified = false;
    double max_wrong_way = 0.0;     // worst move against the required order
    double tol = 0.0;
    bool pass = false;
};

/// Certifies a static field as a super-/sub-solution (one-sided operator
/// residual on the grid, optionally measured against a baseline field with
/// known residual) and then simulates from it, asserting the snapshots are
/// pointwise nonincreasing (upper) or nondecreasing (lower) within
/// monotone_tol.  Throws CertificationFailed when the static check fails.
MonotoneReport monotone_evolution_check(
    const Grid1D& grid, const std::vector<double>& field, double corner_z,
    EnvelopeSide side, const BirthFunction& g, double c, double h,
    double t_end, double dt, const std::vector<double>* baseline = nullptr,
    double monotone_tol = 1e-10);

/// Perturbation radius that keeps the lambda_1-weighted distance below
/// epsilon for all time:
///   varsigma_0   = min{gamma, min(q_*, q*) exp(-lambda_1 alpha e^{gamma h})}
///   varsigma(eps) = min{varsigma_0,
///                       eps / (C (1 + e^{lambda_1 C varsigma_0} sup phi'/eta_1))}
/// with C = max{alpha e^{gamma h}/gamma, exp(lambda_1 alpha e^{gamma h})}.
double stability_radius(double epsilon, double gamma, double alpha,
                        double lambda1, const KappaParams& kp,
                        const WaveProfile& profile);

} // namespace wavefront

#endif
