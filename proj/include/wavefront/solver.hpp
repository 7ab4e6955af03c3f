#ifndef WAVEFRONT_SOLVER_HPP
#define WAVEFRONT_SOLVER_HPP

#include <functional>
#include <string>
#include <vector>

#include "wavefront/errors.hpp"
#include "wavefront/model.hpp"

namespace wavefront {

/// Uniform 1-d grid, nodes x_min + i * dx for i = 0 .. n-1.
struct Grid1D {
    double x_min = 0.0;
    double x_max = 0.0;
    int n = 0;
    double dx = 0.0;

    static Grid1D uniform(double x_min, double x_max, int n);

    /// Grid whose spacing is as close to dx_target as possible while
    /// keeping (x_max - x_min) / dx integral.
    static Grid1D with_spacing(double x_min, double x_max, double dx_target);

    /// Same, but additionally snaps dx so that shift/dx is an integer;
    /// used so a delayed co-moving shift lands exactly on nodes.
    static Grid1D with_snapped_shift(double x_min, double x_max,
                                     double dx_target, double shift);

    double node(int i) const { return x_min + i * dx; }
    int size() const { return n; }
};

enum class Frame { lab, comoving };

enum class AdvectionScheme {
    automatic, // centered unless the cell Peclet number exceeds 1
    centered,
    upwind,
};

struct BoundaryCondition {
    /// exponential (left end only): u_0 = r u_1 with the ratio r captured
    /// from the initial field, so a discrete-exponential tail passes
    /// through the wall unchanged instead of being starved by a pinned
    /// zero.  An empty wall region captures r = 0 and degenerates to a
    /// homogeneous Dirichlet end.
    enum class Kind { dirichlet, neumann, exponential };
    Kind left_kind = Kind::dirichlet;
    Kind right_kind = Kind::neumann;
    double left_value = 0.0;  // ignored for neumann (zero flux)
    double right_value = 0.0;

    static BoundaryCondition dirichlet(double left, double right);
    static BoundaryCondition left_dirichlet_right_neumann(double left);
    static BoundaryCondition neumann();
    static BoundaryCondition left_exponential_right_dirichlet(double right);
    static BoundaryCondition left_exponential_right_neumann();
};

struct SolverConfig {
    Frame frame = Frame::lab;
    double c = 0.0;  // frame speed; only used when frame == comoving
    double dt = 1e-2;
    double t_end = 0.0;
    BoundaryCondition bc;
    int snapshot_every = 1;          // in steps
    double blowup_threshold = 0.0;   // 0 -> 1e6 * max(1, kappa) at run time
    AdvectionScheme advection = AdvectionScheme::automatic;
};

/// Rolling window of the last m+1 fields with m * dt = h exactly, so the
/// delayed slice is always a stored field and never a temporal interpolant.
class HistoryBuffer {
  public:
    HistoryBuffer() = default;
    HistoryBuffer(Grid1D grid, double h, double dt_target);

    /// Field at the current time.
    const std::vector<double>& current() const { return ring_[head_]; }
    std::vector<double>& current() { return ring_[head_]; }

    /// Field exactly j steps back (j <= m).
    const std::vector<double>& steps_back(int j) const;

    /// Field at the delay horizon t - h.
    const std::vector<double>& delayed() const { return steps_back(m_); }

    /// Advance: the new field becomes current, the oldest slice drops out
    /// and its storage is handed back to the caller for reuse.
    std::vector<double> push(std::vector<double> field);

    /// Fill all slices from w0(s, x), s in [-h, 0].
    void fill(const std::function<double(double, double)>& w0);

    const Grid1D& grid() const { return grid_; }
    double dt() const { return dt_; }
    int depth() const { return m_; }
    double h() const { return m_ * dt_; }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    /// Oldest-to-newest copies of all slices (s = -h .. 0).
    std::vector<std::vector<double>> ordered_slices() const;

    /// Replace all slices with translated copies: new(x) = old(x + shift),
    /// linearly interpolated, edge values extended by the supplied pads.
    void translate(double shift, double left_pad, double right_pad);

  private:
    Grid1D grid_;
    double dt_ = 0.0;
    int m_ = 0;
    int head_ = 0;
    double time_ = 0.0;
    std::vector<std::vector<double>> ring_;
};

/// Ready-made history builders.
using HistoryField = std::function<double(double, double)>;

/// w0(s, x) = min{ A e^{lambda (x + c s)}, cap }.
HistoryField ic_exponential_tail(double A, double lambda, double c, double cap);

/// w0(s, x) = level for x >= x0, else 0.
HistoryField ic_heaviside(double level, double x0);

/// w0(s, x) = v.
HistoryField ic_constant(double v);

/// w0(s, x) = base(x) + bump(x), constant in s.
HistoryField ic_profile_plus(std::function<double(double)> base,
                             std::function<double(double)> bump);

/// Monotonicity / stability structure of the discrete step.
struct SchemeDiagnostics {
    double peclet = 0.0;          // |c| dx / 2
    bool upwind_active = false;
    bool implicit_m_matrix = false;
    bool explicit_nonnegative = false;
    bool delay_term_stable = false; // dt * L_g <= 1
    bool monotone = false;          // all of the above
};

SchemeDiagnostics diagnose_scheme(const Grid1D& grid, const SolverConfig& cfg,
                                  double lipschitz);

/// One IMEX Crank-Nicolson step: trapezoidal in the linear transport part,
/// explicit in the delayed reaction read straight from the history ring.
class Integrator {
  public:
    Integrator(const Grid1D& grid, const SolverConfig& cfg,
               const BirthFunction& g);

    void step(HistoryBuffer& state);

    const SchemeDiagnostics& diagnostics() const { return scheme_; }
    double blowup_threshold() const { return blowup_; }

  private:
    Grid1D grid_;
    SolverConfig cfg_;
    const BirthFunction* g_;
    SchemeDiagnostics scheme_;
    double blowup_ = 0.0;
    double shift_ = 0.0;   // c h, co-moving delayed-argument offset
    int shift_cells_ = -1; // exact cell count when c h / dx is integral
    bool shift_ready_ = false;
    double left_ratio_ = 0.0; // captured u_0 / u_1 for the exponential end
    bool ratio_ready_ = false;
    // Implicit matrix bands and their Thomas prefactorization.
    std::vector<double> sub_, diag_, sup_, denom_, cprime_;
    // Explicit-side stencil.
    std::vector<double> esub_, ediag_, esup_;
    std::vector<double> rhs_, scratch_;

    void build_operators();
    void prefactor();
    double delayed_value(const std::vector<double>& slice, int j) const;
};

struct SnapshotStats {
    double min = 0.0;
    double max = 0.0;
    bool finite = true;
};

struct Trajectory {
    Grid1D grid;
    std::vector<double> times;
    std::vector<std::vector<double>> fields;
    std::vector<SnapshotStats> stats;
    HistoryBuffer initial_history;
    HistoryBuffer final_state;
};

using Observer =
    std::function<void(double, const Grid1D&, const std::vector<double>&)>;

/// March to cfg.t_end (rounded to whole steps), recording snapshots and
/// invoking observers at the snapshot cadence.  Throws BlowUp or
/// NumericalFailure as soon as the field misbehaves.
Trajectory simulate(HistoryBuffer state, const SolverConfig& cfg,
                    const BirthFunction& g,
                    const std::vector<Observer>& observers = {});

} // namespace wavefront

#endif
