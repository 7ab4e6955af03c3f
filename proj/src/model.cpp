#include "wavefront/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wavefront {

namespace {

/// Sampled Lipschitz constant of g on [0, 2 kappa], padded by 1e-9
/// relative so that strict inequalities on the true constant survive
/// the sampling.
double sampled_lipschitz(const std::function<double(double)>& g, double kappa,
                         int n = 4096) {
    double worst = 0.0;
    const double hi = 2.0 * kappa;
    double prev_u = 0.0, prev_g = g(0.0);
    for (int i = 1; i <= n; ++i) {
        const double u = hi * i / n;
        const double gu = g(u);
        worst = std::max(worst, std::abs(gu - prev_g) / (u - prev_u));
        prev_u = u;
        prev_g = gu;
    }
    return worst * (1.0 + 1e-9);
}

} // namespace

double BirthFunction::deriv(double u) const {
    if (u < 0.0) return gp0;
    if (deriv_raw) return deriv_raw(u);
    const double step = 1e-6 * std::max(1.0, std::abs(u));
    const double up = eval_raw(u + step);
    const double lo = u - step;
    const double um = lo < 0.0 ? gp0 * lo : eval_raw(lo);
    return (up - um) / (2.0 * step);
}

BirthFunction make_nicholson(double p_over_delta) {
    if (!(p_over_delta > 1.0))
        throw DomainError("make_nicholson: need p/delta > 1");
    const double q = p_over_delta;
    BirthFunction g;
    g.name = "nicholson";
    g.eval_raw = [q](double u) { return q * u * std::exp(-u); };
    g.deriv_raw = [q](double u) { return q * std::exp(-u) * (1.0 - u); };
    g.gp0 = q;
    g.kappa = std::log(q);
    g.gp_kappa = 1.0 - std::log(q);
    g.monotone = q <= std::exp(1.0);
    if (!g.monotone) g.unimodal = UnimodalInfo{1.0};
    // |g'(u)| = q e^{-u} |1-u| peaks at u = 0, so the slope at zero is the
    // global Lipschitz constant.
    g.lg = q;
    // |g(u) - q u| = q u (1 - e^{-u}) <= q u^2 on [0, 1].
    g.holder = HolderBound{q, 1.0, 1.0};
    return g;
}

BirthFunction make_beverton_holt(double r, double kappa) {
    if (!(r > 1.0)) throw DomainError("make_beverton_holt: need r > 1");
    if (!(kappa > 0.0)) throw DomainError("make_beverton_holt: need kappa > 0");
    const double beta = (r - 1.0) / kappa;
    BirthFunction g;
    g.name = "beverton-holt";
    g.eval_raw = [r, beta](double u) { return r * u / (1.0 + beta * u); };
    g.deriv_raw = [r, beta](double u) {
        const double d = 1.0 + beta * u;
        return r / (d * d);
    };
    g.gp0 = r;
    g.lg = r; // concave increasing: the slope at zero is the largest
    g.kappa = kappa;
    g.gp_kappa = 1.0 / r;
    g.monotone = true;
    // r u / (1 + b u) = r u - r b u^2 / (1 + b u), so coeff r b works on all u >= 0.
    g.holder = HolderBound{r * beta, 1.0, kappa};
    return g;
}

BirthFunction make_pushed_candidate(double r, double s, double kappa) {
    if (!(r > 1.0)) throw DomainError("make_pushed_candidate: need r > 1");
    if (!(kappa > 0.0))
        throw DomainError("make_pushed_candidate: need kappa > 0");
    if (s < 0.0) throw DomainError("make_pushed_candidate: need s >= 0");
    const double beta = (r + s * kappa - 1.0) / kappa;
    if (!(beta > 0.0))
        throw DomainError("make_pushed_candidate: denominator slope must be positive");
    auto eval = [r, s, beta](double u) {
        return u * (r + s * u) / (1.0 + beta * u);
    };
    auto deriv = [r, s, beta](double u) {
        const double d = 1.0 + beta * u;
        return ((r + 2.0 * s * u) * d - beta * u * (r + s * u)) / (d * d);
    };
    // Sampled sanity: strictly increasing on [0, 2 kappa] and no interior
    // fixed point in (0, kappa).
    const int n = 4096;
    for (int i = 0; i < n; ++i) {
        const double u = 2.0 * kappa * i / n;
        if (deriv(u) <= 0.0)
            throw DomainError(
                "make_pushed_candidate: g is not increasing near u = " +
                std::to_string(u));
        if (u > 0.0 && u < kappa) {
            const double gu = eval(u);
            if (gu <= u)
                throw DomainError(
                    "make_pushed_candidate: interior fixed point near u = " +
                    std::to_string(u));
        }
    }
    BirthFunction g;
    g.name = "pushed-candidate";
    g.eval_raw = eval;
    g.deriv_raw = deriv;
    g.gp0 = r;
    g.kappa = kappa;
    g.gp_kappa = deriv(kappa);
    g.monotone = true;
    g.lg = sampled_lipschitz(g.eval_raw, kappa);
    return g;
}

HypothesisReport verify_hypothesis_H(const BirthFunction& g, int grid_n) {
    if (grid_n < 16) throw DomainError("verify_hypothesis_H: grid too small");
    HypothesisReport rep;
    const double kappa = g.kappa;
    if (!(kappa > 0.0))
        throw DomainError("verify_hypothesis_H: kappa must be positive");

    rep.fp0_residual = std::abs(g(0.0));
    rep.fixed_point_zero = rep.fp0_residual <= 1e-12;
    rep.fpk_residual = std::abs(g(kappa) - kappa);
    rep.fixed_point_kappa = rep.fpk_residual <= 1e-9 * (1.0 + kappa);
    rep.gp0_above_one = g.deriv(0.0) > 1.0;
    rep.gp_kappa_below_one = g.deriv(kappa) < 1.0;

    rep.positive_between = true;
    rep.no_interior_fixed_point = true;
    rep.strictly_increasing = true;
    double worst_slope = 0.0;
    double prev_u = 0.0, prev_g = g(0.0);
    for (int i = 1; i <= grid_n; ++i) {
        const double u = 2.0 * kappa * i / grid_n;
        const double gu = g(u);
        const double slope = (gu - prev_g) / (u - prev_u);
        if (std::abs(slope) > worst_slope) {
            worst_slope = std::abs(slope);
            rep.max_slope_location = 0.5 * (u + prev_u);
        }
        if (slope <= 0.0 && u <= kappa) rep.strictly_increasing = false;
        if (u <= kappa && gu <= 0.0 && u > 0.0) rep.positive_between = false;
        // interior fixed points show up as sign changes of g(u) - u
        if (prev_u > 1e-9 && u < kappa * (1.0 - 1e-9)) {
            if ((prev_g - prev_u) * (gu - u) < 0.0)
                rep.no_interior_fixed_point = false;
        }
        prev_u = u;
        prev_g = gu;
    }
    rep.lipschitz_estimate = worst_slope * (1.0 + 1e-9);
    rep.lipschitz_finite = std::isfinite(rep.lipschitz_estimate);
    return rep;
}

InitialConditionReport check_initial_condition(
    const std::vector<std::vector<double>>& history_slices,
    double separation_floor) {
    if (history_slices.empty() || history_slices.front().empty())
        throw DomainError("check_initial_condition: empty history");
    InitialConditionReport rep;
    rep.nonnegative = true;
    rep.right_separation = std::numeric_limits<double>::infinity();
    for (const auto& slice : history_slices) {
        const std::size_t n = slice.size();
        const std::size_t tail_start = n - std::max<std::size_t>(1, n / 10);
        for (std::size_t j = 0; j < n; ++j) {
            rep.sup_norm = std::max(rep.sup_norm, std::abs(slice[j]));
            if (slice[j] < 0.0) rep.nonnegative = false;
            if (j >= tail_start)
                rep.right_separation = std::min(rep.right_separation, slice[j]);
        }
    }
    rep.separated = rep.right_separation > separation_floor;
    return rep;
}

} // namespace wavefront
