#ifndef WAVEFRONT_WAVES_HPP
#define WAVEFRONT_WAVES_HPP

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "wavefront/model.hpp"
#include "wavefront/solver.hpp"

namespace wavefront {

/// Log-linear regression of a decaying tail: field ~ amplitude e^{lambda x}.
struct TailFit {
    double lambda = 0.0;
    double amplitude = 0.0;
    double r_squared = 0.0;
    double window_lo = 0.0; // x-range actually used
    double window_hi = 0.0;
    double decades = 0.0;   // log10(max/min) of the fitted values
    int n_points = 0;
};

/// OLS fit of ln(field) against x over [x_a, x_b].  Every node in the
/// window must be strictly positive.
TailFit fit_tail(const Grid1D& grid, const std::vector<double>& field,
                 double x_a, double x_b);

/// A relaxed traveling-wave profile, pinned so that the half-level sits at
/// z = 0.  Produced by compute_profile; consumed by everything downstream.
struct WaveProfile {
    Grid1D grid;
    std::vector<double> values;
    double c = 0.0;
    double h = 0.0;
    double kappa = 0.0;
    double pin_level = 0.0;
    TailFit tail;
    double ep_residual = 0.0; // sup |discrete profile-equation defect|
    double drift_rate = 0.0;  // residual pin drift per unit time at the end
    bool monotone = true;
    double overshoot = 0.0;   // max(values) - kappa, > 0 for humped g

    /// Interpolated evaluation: cubic inside the grid, exponential
    /// continuation on the left tail, constant on the right.
    double eval(double z) const;

    /// Centered-difference slope at arbitrary z (grid spacing stencil).
    double slope(double z) const;
};

struct ProfileOptions {
    double dt = 5e-3;
    double relax_time = 24.0;      // dynamical warm-up before the polish
    double pin_level_frac = 0.5;   // pin at kappa/2 by default
    double converge_tol = 1e-10;   // sup-norm budget for the final update
    double check_interval = 1.0;   // time between pin/drift checks
    double drift_tol = 0.05;       // sustained pin drift -> SpeedMismatch
    bool snap_shift = true;        // adjust dx so c h / dx is an integer
};

/// Relax the co-moving evolution onto the traveling profile for speed c.
/// Throws SpeedMismatch when the interface keeps translating (c is not a
/// wave speed for this tail) and NoConvergence when the budget runs out.
WaveProfile compute_profile(double c, const BirthFunction& g, double h,
                            const Grid1D& grid, const ProfileOptions& opt = {});

/// Translate the profile so its fitted tail amplitude becomes 1; returns
/// the normalized profile and the shift that was applied.
std::pair<WaveProfile, double> normalize_profile(const WaveProfile& profile,
                                                 double lambda1);

/// Level-crossing front positions over a trajectory.
struct FrontTrack {
    std::vector<double> times;
    std::vector<double> positions;
    std::vector<double> c_running; // -d(position)/dt over a trailing window
    double c_est = 0.0;            // leftward propagation speed
    double fit_residual = 0.0;     // rms of the linear fit
    int skipped = 0;               // snapshots without a crossing
};

/// position(t) = leftmost crossing of `level`; c_est is minus the least
/// squares slope over the trailing half of the samples.
FrontTrack track_front(const Trajectory& traj, double level);

/// sup_j |field_j| / eta_lambda(z_j - origin_shift) and its location,
/// restricted to nodes with z in [z_lo, z_hi] (the window keeps pinned
/// boundary nodes from flooring the norm).
std::pair<double, double> weighted_norm(
    const Grid1D& grid, const std::vector<double>& field, double lambda,
    double origin_shift = 0.0,
    double z_lo = -std::numeric_limits<double>::infinity(),
    double z_hi = std::numeric_limits<double>::infinity());

/// sup |u/phi(.+shift) - 1| over nodes with z in [z_lo, z_hi], skipping
/// nodes where the profile is below the division guard; *excluded counts
/// the skipped nodes if given.
double chen_guo_norm(const Grid1D& grid, const std::vector<double>& u,
                     const WaveProfile& profile, double shift,
                     double z_lo, double z_hi, int* excluded = nullptr);

/// Golden-section minimizer of a -> |u - phi(.+a)|_lambda over [lo, hi],
/// with the norm evaluated on [z_lo, z_hi].
double align_shift(const Grid1D& grid, const std::vector<double>& u,
                   const WaveProfile& profile, double lambda, double lo,
                   double hi, double z_lo, double z_hi);

/// A time series of norms produced by an observer during a run.
struct NormSeries {
    std::string kind;
    double lambda = 0.0;
    std::vector<double> times;
    std::vector<double> values;
};

/// Fitted exponential decay rate of a norm series: slope of -ln(value)
/// against t after dropping the leading transient fraction.
struct RateFit {
    double gamma = 0.0;
    double r_squared = 0.0;
    int n_used = 0;
};

RateFit convergence_rate(const NormSeries& series, double transient_frac = 0.3);

/// Growth rate of the left-tail amplitude across a lab-frame trajectory,
/// compared against the invariance prediction lambda_j * c.
struct TailInvarianceReport {
    std::vector<double> times;
    std::vector<double> log_amplitudes;
    double slope = 0.0;
    double target = 0.0;
    double rel_error = 0.0;
    bool sufficient = false; // at least 2 usable snapshots
};

TailInvarianceReport tail_invariance_check(const Trajectory& traj,
                                           double lambda_j, double c,
                                           double value_lo, double value_hi);

} // namespace wavefront

#endif
