#ifndef WAVEFRONT_DISPERSION_HPP
#define WAVEFRONT_DISPERSION_HPP

#include <functional>
#include <utility>

#include "wavefront/errors.hpp"

namespace wavefront {

/// chi0(lambda) = lambda^2 - c lambda - 1 + gp0 exp(-lambda c h):
/// the growth rate of the mode e^{lambda z} in the frame moving at speed c,
/// linearized around the invaded zero state.
double char_function(double lambda, double c, double h, double gp0);

/// The two positive real roots of chi0 at a supercritical speed.  When the
/// minimum of chi0 sits within the critical grace band the roots coincide
/// and near_critical is set; downstream users widen their tolerances then.
struct CharRoots {
    double c = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double res1 = 0.0; // chi0 at lambda1
    double res2 = 0.0; // chi0 at lambda2
    bool near_critical = false;
};

CharRoots char_roots(double c, double h, double gp0);

/// Smallest speed at which chi0 still has a real root, together with the
/// double root lambda_sharp it merges at.
struct CriticalSpeed {
    double c_sharp = 0.0;
    double lambda_sharp = 0.0;
};

CriticalSpeed critical_speed(double h, double gp0);

/// Unique positive root mu of  lambda^2 - mu - 1 + gp0 e^{-mu h} = 0:
/// the temporal growth rate carried by an initial tail of decay lambda.
double select_mu(double lambda, double h, double gp0);

enum class SpeedRegime {
    selected,  // the tail is flat enough to set the speed: c = mu / lambda
    saturated, // steeper tails all travel at the wave's own speed c_star
};

struct SpeedSelection {
    double lambda = 0.0;
    double mu = 0.0;
    double c_selected = 0.0;
    double lambda_star = 0.0; // lambda1(c_star): the regime boundary
    SpeedRegime regime = SpeedRegime::selected;
};

/// Propagation speed of fronts whose initial data decay like e^{lambda x}.
/// c_star is the speed of the wave the solution is compared against; pass
/// critical_speed(...).c_sharp unless a faster (pushed) wave is the target.
SpeedSelection select_speed(double lambda, double h, double gp0, double c_star);

/// Largest gamma >= 0 with
///   -gamma + c lambda - lambda^2 + 1 - gp0 e^{gamma h} e^{-lambda c h} >= 0:
/// the exponential budget available to a decaying comparison envelope with
/// weight decay lambda.  Zero exactly at lambda1 and lambda2.
double gamma_max(double c, double lambda, double h, double gp0);

/// Interval of admissible front shifts for history-dependent tail data:
/// a = (1/lambda) log of min/max over s in [-h, 0] of A(s) e^{-mu s}.
std::pair<double, double> shift_bounds(const std::function<double(double)>& A,
                                       double lambda, double mu, double h,
                                       int samples = 2001);

} // namespace wavefront

#endif
