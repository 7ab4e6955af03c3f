#include "wavefront/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wavefront/numerics.hpp"

namespace wavefront {

Grid1D Grid1D::uniform(double x_min, double x_max, int n) {
    if (!(x_max > x_min)) throw DomainError("Grid1D: need x_max > x_min");
    if (n < 3) throw DomainError("Grid1D: need at least 3 nodes");
    Grid1D g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n = n;
    g.dx = (x_max - x_min) / (n - 1);
    return g;
}

Grid1D Grid1D::with_spacing(double x_min, double x_max, double dx_target) {
    if (!(dx_target > 0.0)) throw DomainError("Grid1D: need dx > 0");
    const double span = x_max - x_min;
    const long cells = std::max(2L, std::lround(span / dx_target));
    return uniform(x_min, x_max, static_cast<int>(cells) + 1);
}

Grid1D Grid1D::with_snapped_shift(double x_min, double x_max,
                                  double dx_target, double shift) {
    if (shift <= 0.0) return with_spacing(x_min, x_max, dx_target);
    if (!(dx_target > 0.0)) throw DomainError("Grid1D: need dx > 0");
    const long per_shift = std::max(1L, std::lround(shift / dx_target));
    const double dx = shift / per_shift;
    const long cells = std::max(2L, std::lround((x_max - x_min) / dx));
    Grid1D g;
    g.x_min = x_min;
    g.n = static_cast<int>(cells) + 1;
    g.dx = dx;
    g.x_max = x_min + cells * dx;
    return g;
}

BoundaryCondition BoundaryCondition::dirichlet(double left, double right) {
    BoundaryCondition bc;
    bc.left_kind = Kind::dirichlet;
    bc.right_kind = Kind::dirichlet;
    bc.left_value = left;
    bc.right_value = right;
    return bc;
}

BoundaryCondition BoundaryCondition::left_dirichlet_right_neumann(double left) {
    BoundaryCondition bc;
    bc.left_kind = Kind::dirichlet;
    bc.right_kind = Kind::neumann;
    bc.left_value = left;
    return bc;
}

BoundaryCondition BoundaryCondition::neumann() {
    BoundaryCondition bc;
    bc.left_kind = Kind::neumann;
    bc.right_kind = Kind::neumann;
    return bc;
}

BoundaryCondition BoundaryCondition::left_exponential_right_dirichlet(
    double right) {
    BoundaryCondition bc;
    bc.left_kind = Kind::exponential;
    bc.right_kind = Kind::dirichlet;
    bc.right_value = right;
    return bc;
}

BoundaryCondition BoundaryCondition::left_exponential_right_neumann() {
    BoundaryCondition bc;
    bc.left_kind = Kind::exponential;
    bc.right_kind = Kind::neumann;
    return bc;
}

HistoryBuffer::HistoryBuffer(Grid1D grid, double h, double dt_target)
    : grid_(grid) {
    if (h < 0.0) throw DomainError("HistoryBuffer: need h >= 0");
    if (!(dt_target > 0.0)) throw DomainError("HistoryBuffer: need dt > 0");
    if (h == 0.0) {
        m_ = 0;
        dt_ = dt_target;
    } else {
        m_ = static_cast<int>(std::max(1L, std::lround(h / dt_target)));
        dt_ = h / m_; // m * dt = h exactly, no temporal interpolation ever
    }
    ring_.assign(m_ + 1, std::vector<double>(grid_.n, 0.0));
    head_ = m_;
}

const std::vector<double>& HistoryBuffer::steps_back(int j) const {
    if (j < 0 || j > m_) throw DomainError("HistoryBuffer: slice out of range");
    const int k = (head_ - j + (m_ + 1)) % (m_ + 1);
    return ring_[k];
}

std::vector<double> HistoryBuffer::push(std::vector<double> field) {
    if (static_cast<int>(field.size()) != grid_.n)
        throw DomainError("HistoryBuffer: field size mismatch");
    head_ = (head_ + 1) % (m_ + 1);
    std::swap(ring_[head_], field);
    time_ += dt_;
    return field;
}

void HistoryBuffer::fill(const std::function<double(double, double)>& w0) {
    for (int k = 0; k <= m_; ++k) {
        const double s = (k - m_) * dt_;
        for (int j = 0; j < grid_.n; ++j)
            ring_[k][j] = w0(s, grid_.node(j));
    }
    head_ = m_;
    time_ = 0.0;
}

std::vector<std::vector<double>> HistoryBuffer::ordered_slices() const {
    std::vector<std::vector<double>> out;
    out.reserve(m_ + 1);
    for (int j = m_; j >= 0; --j) out.push_back(steps_back(j));
    return out;
}

void HistoryBuffer::translate(double shift, double left_pad, double right_pad) {
    std::vector<double> tmp(grid_.n);
    for (auto& slice : ring_) {
        for (int j = 0; j < grid_.n; ++j) {
            const double s = (grid_.node(j) + shift - grid_.x_min) / grid_.dx;
            if (s <= 0.0)
                tmp[j] = left_pad;
            else if (s >= grid_.n - 1)
                tmp[j] = right_pad;
            else
                tmp[j] = interp_linear(slice, grid_.x_min, grid_.dx,
                                       grid_.node(j) + shift);
        }
        slice = tmp;
    }
}

HistoryField ic_exponential_tail(double A, double lambda, double c, double cap) {
    if (!(A > 0.0)) throw DomainError("ic_exponential_tail: need A > 0");
    if (!(lambda > 0.0))
        throw DomainError("ic_exponential_tail: need lambda > 0");
    if (!(cap > 0.0)) throw DomainError("ic_exponential_tail: need cap > 0");
    return [=](double s, double x) {
        return std::min(A * std::exp(lambda * (x + c * s)), cap);
    };
}

HistoryField ic_heaviside(double level, double x0) {
    return [=](double, double x) { return x >= x0 ? level : 0.0; };
}

HistoryField ic_constant(double v) {
    return [=](double, double) { return v; };
}

HistoryField ic_profile_plus(std::function<double(double)> base,
                             std::function<double(double)> bump) {
    return [base = std::move(base), bump = std::move(bump)](double, double x) {
        return base(x) + bump(x);
    };
}

namespace {

bool pick_upwind(const SolverConfig& cfg, double peclet) {
    switch (cfg.advection) {
        case AdvectionScheme::centered: return false;
        case AdvectionScheme::upwind: return true;
        case AdvectionScheme::automatic: return peclet > 1.0;
    }
    return false;
}

} // namespace

SchemeDiagnostics diagnose_scheme(const Grid1D& grid, const SolverConfig& cfg,
                                  double lipschitz) {
    const double c = cfg.frame == Frame::comoving ? cfg.c : 0.0;
    SchemeDiagnostics d;
    d.peclet = std::abs(c) * grid.dx / 2.0;
    d.upwind_active = c != 0.0 && pick_upwind(cfg, d.peclet);
    const double dx2 = grid.dx * grid.dx;
    double ldiag = 2.0 / dx2 + 1.0;
    bool offdiag_ok = true;
    if (d.upwind_active)
        ldiag += std::abs(c) / grid.dx;
    else if (c != 0.0)
        offdiag_ok = d.peclet <= 1.0;
    d.implicit_m_matrix = offdiag_ok;
    d.explicit_nonnegative = offdiag_ok && cfg.dt * ldiag <= 2.0;
    d.delay_term_stable = cfg.dt * lipschitz <= 1.0;
    d.monotone =
        d.implicit_m_matrix && d.explicit_nonnegative && d.delay_term_stable;
    return d;
}

Integrator::Integrator(const Grid1D& grid, const SolverConfig& cfg,
                       const BirthFunction& g)
    : grid_(grid), cfg_(cfg), g_(&g) {
    if (!(cfg.dt > 0.0)) throw DomainError("Integrator: need dt > 0");
    if (cfg.snapshot_every < 1)
        throw DomainError("Integrator: need snapshot_every >= 1");
    blowup_ = cfg.blowup_threshold > 0.0 ? cfg.blowup_threshold
                                         : 1e6 * std::max(1.0, g.kappa);
    build_operators();
}

void Integrator::build_operators() {
    const int n = grid_.n;
    const double dx = grid_.dx;
    const double dx2 = dx * dx;
    const double dt = cfg_.dt;
    const double c = cfg_.frame == Frame::comoving ? cfg_.c : 0.0;

    scheme_ = diagnose_scheme(grid_, cfg_, g_->lg);
    const bool upwind = scheme_.upwind_active;

    // Band stencil of L = D_xx [- c D_x] - I.
    std::vector<double> lsub(n, 0.0), ldia(n, 0.0), lsup(n, 0.0);
    for (int j = 0; j < n; ++j) {
        lsub[j] = 1.0 / dx2;
        ldia[j] = -2.0 / dx2 - 1.0;
        lsup[j] = 1.0 / dx2;
        if (c != 0.0) {
            if (upwind) {
                if (c > 0.0) { // transport to the right: draw from the left
                    lsub[j] += c / dx;
                    ldia[j] -= c / dx;
                } else {
                    lsup[j] -= c / dx;
                    ldia[j] += c / dx;
                }
            } else {
                lsub[j] += c / (2.0 * dx);
                lsup[j] -= c / (2.0 * dx);
            }
        }
    }
    // Zero-flux ends fold the ghost node back inside (u_{-1} = u_1).
    if (cfg_.bc.left_kind == BoundaryCondition::Kind::neumann) {
        lsup[0] += lsub[0];
        lsub[0] = 0.0;
    }
    if (cfg_.bc.right_kind == BoundaryCondition::Kind::neumann) {
        lsub[n - 1] += lsup[n - 1];
        lsup[n - 1] = 0.0;
    }

    sub_.assign(n, 0.0);
    diag_.assign(n, 0.0);
    sup_.assign(n, 0.0);
    esub_.assign(n, 0.0);
    ediag_.assign(n, 0.0);
    esup_.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
        sub_[j] = -0.5 * dt * lsub[j];
        diag_[j] = 1.0 - 0.5 * dt * ldia[j];
        sup_[j] = -0.5 * dt * lsup[j];
        esub_[j] = 0.5 * dt * lsub[j];
        ediag_[j] = 1.0 + 0.5 * dt * ldia[j];
        esup_[j] = 0.5 * dt * lsup[j];
    }
    if (cfg_.bc.left_kind != BoundaryCondition::Kind::neumann) {
        // Dirichlet now; the exponential end patches sup_[0] to the
        // captured ratio on the first step and refactorizes.
        sub_[0] = 0.0;
        diag_[0] = 1.0;
        sup_[0] = 0.0;
    }
    if (cfg_.bc.right_kind == BoundaryCondition::Kind::dirichlet) {
        sub_[n - 1] = 0.0;
        diag_[n - 1] = 1.0;
        sup_[n - 1] = 0.0;
    }

    prefactor();
    rhs_.assign(n, 0.0);
    scratch_.assign(n, 0.0);
}

// Thomas prefactorization of the constant implicit matrix.
void Integrator::prefactor() {
    const int n = grid_.n;
    denom_.assign(n, 0.0);
    cprime_.assign(n, 0.0);
    denom_[0] = diag_[0];
    cprime_[0] = sup_[0] / denom_[0];
    for (int j = 1; j < n; ++j) {
        denom_[j] = diag_[j] - sub_[j] * cprime_[j - 1];
        if (j < n - 1) cprime_[j] = sup_[j] / denom_[j];
    }
}

double Integrator::delayed_value(const std::vector<double>& slice, int j) const {
    if (shift_ == 0.0) return slice[j];
    if (shift_cells_ >= 0) {
        const int k = j - shift_cells_;
        return k <= 0 ? slice.front() : slice[k];
    }
    return interp_linear(slice, grid_.x_min, grid_.dx, grid_.node(j) - shift_);
}

void Integrator::step(HistoryBuffer& state) {
    if (state.grid().n != grid_.n || state.grid().dx != grid_.dx)
        throw DomainError("Integrator: history grid does not match");
    if (std::abs(state.dt() - cfg_.dt) > 1e-12 * cfg_.dt)
        throw DomainError("Integrator: history dt does not match config");

    if (!shift_ready_) {
        shift_ = cfg_.frame == Frame::comoving ? cfg_.c * state.h() : 0.0;
        const double cells = shift_ / grid_.dx;
        shift_cells_ = cells >= 0.0 &&
                               std::abs(cells - std::lround(cells)) < 1e-9
                           ? static_cast<int>(std::lround(cells))
                           : -1;
        shift_ready_ = true;
    }
    if (cfg_.bc.left_kind == BoundaryCondition::Kind::exponential &&
        !ratio_ready_) {
        const std::vector<double>& f = state.current();
        double r = 0.0;
        if (f[1] != 0.0) r = std::clamp(f[0] / f[1], 0.0, 1.0);
        left_ratio_ = r;
        sup_[0] = -r;
        prefactor();
        ratio_ready_ = true;
    }

    const std::vector<double>& now = state.current();
    const std::vector<double>& old = state.delayed();
    const int n = grid_.n;
    const double dt = cfg_.dt;
    const BirthFunction& g = *g_;

    switch (cfg_.bc.left_kind) {
    case BoundaryCondition::Kind::dirichlet:
        rhs_[0] = cfg_.bc.left_value;
        break;
    case BoundaryCondition::Kind::exponential:
        rhs_[0] = 0.0; // constraint row u_0 - r u_1 = 0
        break;
    case BoundaryCondition::Kind::neumann:
        rhs_[0] = ediag_[0] * now[0] + esup_[0] * now[1] +
                  dt * g(delayed_value(old, 0));
        break;
    }
    for (int j = 1; j < n - 1; ++j) {
        rhs_[j] = esub_[j] * now[j - 1] + ediag_[j] * now[j] +
                  esup_[j] * now[j + 1] + dt * g(delayed_value(old, j));
    }
    rhs_[n - 1] = cfg_.bc.right_kind == BoundaryCondition::Kind::dirichlet
                      ? cfg_.bc.right_value
                      : esub_[n - 1] * now[n - 2] + ediag_[n - 1] * now[n - 1] +
                            dt * g(delayed_value(old, n - 1));

    // Thomas solve: forward elimination, then back substitution.
    scratch_[0] = rhs_[0] / denom_[0];
    for (int j = 1; j < n; ++j)
        scratch_[j] = (rhs_[j] - sub_[j] * scratch_[j - 1]) / denom_[j];
    for (int j = n - 2; j >= 0; --j)
        scratch_[j] -= cprime_[j] * scratch_[j + 1];

    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
        if (std::isnan(scratch_[j]) || std::isinf(scratch_[j]))
            throw NumericalFailure("step: non-finite value at t = " +
                                   std::to_string(state.time() + dt));
        worst = std::max(worst, std::abs(scratch_[j]));
    }
    if (worst > blowup_)
        throw BlowUp("step: field magnitude " + std::to_string(worst) +
                     " above blow-up threshold");

    scratch_ = state.push(std::move(scratch_));
}

Trajectory simulate(HistoryBuffer state, const SolverConfig& cfg,
                    const BirthFunction& g,
                    const std::vector<Observer>& observers) {
    SolverConfig run_cfg = cfg;
    run_cfg.dt = state.dt(); // the buffer's dt divides h exactly; trust it
    Integrator integ(state.grid(), run_cfg, g);

    Trajectory traj;
    traj.grid = state.grid();
    traj.initial_history = state;

    const long steps =
        cfg.t_end <= 0.0 ? 0 : std::lround(cfg.t_end / run_cfg.dt);

    auto record = [&](const HistoryBuffer& s) {
        const auto& f = s.current();
        SnapshotStats st;
        st.min = *std::min_element(f.begin(), f.end());
        st.max = *std::max_element(f.begin(), f.end());
        st.finite = std::isfinite(st.min) && std::isfinite(st.max);
        traj.times.push_back(s.time());
        traj.fields.push_back(f);
        traj.stats.push_back(st);
        for (const auto& obs : observers) obs(s.time(), s.grid(), f);
    };

    record(state);
    for (long k = 1; k <= steps; ++k) {
        integ.step(state);
        if (k % cfg.snapshot_every == 0 || k == steps) record(state);
    }
    traj.final_state = std::move(state);
    return traj;
}

} // namespace wavefront
