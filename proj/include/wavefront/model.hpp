#ifndef WAVEFRONT_MODEL_HPP
#define WAVEFRONT_MODEL_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wavefront/errors.hpp"

namespace wavefront {

/// Holder-type bound |g(u) - g'(0) u| <= coeff * u^{1+theta} near zero,
/// valid on [0, delta0].
struct HolderBound {
    double coeff = 0.0;
    double theta = 1.0;
    double delta0 = 0.0;
};

/// For hump-shaped nonlinearities: location of the single maximum.
struct UnimodalInfo {
    double x_m = 0.0;
};

/// A birth nonlinearity g together with the constants every other module
/// keeps asking for.  Calling it at u < 0 returns the linear extension
/// g'(0) * u so comparison fields may dip below zero without special cases.
struct BirthFunction {
    std::string name;
    std::function<double(double)> eval_raw;   // g on u >= 0
    std::function<double(double)> deriv_raw;  // g' on u >= 0; empty -> finite differences
    double gp0 = 0.0;      // g'(0)
    double lg = 0.0;       // global Lipschitz constant on [0, 2 kappa]
    double kappa = 0.0;    // positive fixed point
    double gp_kappa = 0.0; // g'(kappa)
    bool monotone = false; // strictly increasing on [0, kappa]
    std::optional<UnimodalInfo> unimodal;
    std::optional<HolderBound> holder;

    double operator()(double u) const {
        return u < 0.0 ? gp0 * u : eval_raw(u);
    }

    /// Derivative with the same linear extension below zero.  Uses the
    /// closed form when one was registered, otherwise a central difference.
    double deriv(double u) const;
};

struct ModelParams {
    BirthFunction g;
    double h = 0.0; // normalized delay, >= 0
};

/// g(u) = q u e^{-u} with q = p/delta > 1.  kappa = ln q; monotone iff
/// q <= e, hump at u = 1 otherwise.
BirthFunction make_nicholson(double p_over_delta);

/// g(u) = r u / (1 + (r-1) u / kappa), r > 1: strictly increasing and
/// concave with g'(0) = r.
BirthFunction make_beverton_holt(double r, double kappa);

/// g(u) = u (r + s u) / (1 + (r + s kappa - 1) u / kappa).  For s > 0 the
/// slope initially steepens, which is the standard way to leave the
/// purely linearly-determined regime.  Checked for monotonicity and the
/// fixed-point layout at construction.
BirthFunction make_pushed_candidate(double r, double s, double kappa);

/// Sampled verification of the standing hypotheses on g over [0, 2 kappa].
struct HypothesisReport {
    bool fixed_point_zero = false;   // g(0) = 0
    bool fixed_point_kappa = false;  // g(kappa) = kappa
    bool gp0_above_one = false;      // g'(0) > 1
    bool gp_kappa_below_one = false; // g'(kappa) < 1
    bool positive_between = false;   // g > 0 on (0, kappa]
    bool no_interior_fixed_point = false;
    bool lipschitz_finite = false;
    bool strictly_increasing = false; // diagnostic, not part of the hypotheses
    double fp0_residual = 0.0;
    double fpk_residual = 0.0;
    double lipschitz_estimate = 0.0;
    double max_slope_location = 0.0;

    /// The hypothesis clauses only; monotonicity is reported separately.
    bool pass() const {
        return fixed_point_zero && fixed_point_kappa && gp0_above_one &&
               gp_kappa_below_one && positive_between &&
               no_interior_fixed_point && lipschitz_finite;
    }
};

HypothesisReport verify_hypothesis_H(const BirthFunction& g, int grid_n = 2000);

/// What a simulated initial history looks like from the standing
/// assumptions' point of view: bounded, nonnegative, separated from zero
/// on the right.  Separation is the minimum over the rightmost decile.
struct InitialConditionReport {
    double sup_norm = 0.0;
    bool nonnegative = false;
    double right_separation = 0.0;
    bool separated = false;
};

InitialConditionReport check_initial_condition(
    const std::vector<std::vector<double>>& history_slices,
    double separation_floor = 0.0);

} // namespace wavefront

#endif
