#include "wavefront/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wavefront/numerics.hpp"

namespace wavefront {

namespace {

void require_supercritical_inputs(double h, double gp0) {
    if (!(gp0 > 1.0)) throw DomainError("dispersion: need gp0 > 1");
    if (h < 0.0) throw DomainError("dispersion: need h >= 0");
}

/// chi0 is strictly convex in lambda (second derivative
/// 2 + gp0 (c h)^2 e^{-lambda c h} > 0), so its derivative has a single
/// zero: locate the minimizer by bisecting the derivative.
double chi_minimizer(double c, double h, double gp0) {
    auto dchi = [=](double lam) {
        return 2.0 * lam - c - gp0 * c * h * std::exp(-lam * c * h);
    };
    double hi = std::max(1.0, c);
    while (dchi(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e12)
            throw NoMinimumInBracket("char_roots: derivative never turns positive");
    }
    if (dchi(0.0) >= 0.0) return 0.0;
    return bisect(dchi, 0.0, hi, 1e-15);
}

} // namespace

double char_function(double lambda, double c, double h, double gp0) {
    return lambda * lambda - c * lambda - 1.0 + gp0 * std::exp(-lambda * c * h);
}

CharRoots char_roots(double c, double h, double gp0) {
    require_supercritical_inputs(h, gp0);
    if (!(c > 0.0)) throw DomainError("char_roots: need c > 0");

    auto chi = [=](double lam) { return char_function(lam, c, h, gp0); };
    const double lam_min = chi_minimizer(c, h, gp0);
    const double chi_min = chi(lam_min);

    CharRoots out;
    out.c = c;

    // Positive minimum means c < c_sharp; a narrow grace band absorbs
    // callers sitting on the critical speed to rounding accuracy.
    const double grace = 1e-9 * (1.0 + gp0) * std::max(1.0, lam_min);
    if (chi_min > 0.0) {
        if (chi_min > grace)
            throw NoRealRoots("char_roots: chi0 has positive minimum (c below critical)");
        out.lambda1 = out.lambda2 = lam_min;
        out.res1 = out.res2 = chi_min;
        out.near_critical = true;
        return out;
    }

    // chi0(0) = gp0 - 1 > 0 brackets the left root against the minimizer.
    out.lambda1 = chi_min == 0.0 ? lam_min : bisect(chi, 0.0, lam_min, 1e-15);
    double hi = std::max(2.0 * lam_min, lam_min + 1.0);
    while (chi(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e12) throw NoMinimumInBracket("char_roots: no right bracket");
    }
    out.lambda2 = chi_min == 0.0 ? lam_min : bisect(chi, lam_min, hi, 1e-15);
    out.res1 = chi(out.lambda1);
    out.res2 = chi(out.lambda2);
    out.near_critical = (out.lambda2 - out.lambda1) < 1e-6;
    return out;
}

CriticalSpeed critical_speed(double h, double gp0) {
    require_supercritical_inputs(h, gp0);
    // The minimum value of chi0 over lambda decreases strictly in c; at
    // c = 0 it is gp0 - 1 > 0.  Bisect it to zero.
    auto min_chi = [=](double c) {
        const double lam = chi_minimizer(c, h, gp0);
        return char_function(lam, c, h, gp0);
    };
    double hi = 2.0 * std::sqrt(gp0 - 1.0) + 1.0;
    while (min_chi(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e12) throw NoMinimumInBracket("critical_speed: no bracket");
    }
    CriticalSpeed out;
    out.c_sharp = bisect(min_chi, 1e-12, hi, 1e-14);
    out.lambda_sharp = chi_minimizer(out.c_sharp, h, gp0);
    return out;
}

double select_mu(double lambda, double h, double gp0) {
    require_supercritical_inputs(h, gp0);
    if (!(lambda > 0.0)) throw DomainError("select_mu: need lambda > 0");
    // F(mu) = lambda^2 - mu - 1 + gp0 e^{-mu h} is strictly decreasing
    // with F(0) = lambda^2 + gp0 - 1 > 0, so the positive root is unique.
    auto F = [=](double mu) {
        return lambda * lambda - mu - 1.0 + gp0 * std::exp(-mu * h);
    };
    double hi = lambda * lambda + gp0; // F(hi) <= lambda^2 - hi - 1 + gp0 < 0
    double mu = bisect(F, 0.0, hi, 1e-16, 300);
    // Polish with one Newton step; the residual gate below is the contract.
    const double dF = -1.0 - gp0 * h * std::exp(-mu * h);
    mu -= F(mu) / dF;
    if (std::abs(F(mu)) > 1e-13 * (1.0 + gp0))
        throw NumericalFailure("select_mu: residual above tolerance");
    return mu;
}

SpeedSelection select_speed(double lambda, double h, double gp0, double c_star) {
    require_supercritical_inputs(h, gp0);
    if (!(lambda > 0.0)) throw DomainError("select_speed: need lambda > 0");
    SpeedSelection out;
    out.lambda = lambda;
    out.lambda_star = char_roots(c_star, h, gp0).lambda1;
    if (lambda < out.lambda_star) {
        out.mu = select_mu(lambda, h, gp0);
        out.c_selected = out.mu / lambda;
        out.regime = SpeedRegime::selected;
    } else {
        out.c_selected = c_star;
        out.mu = lambda * c_star;
        out.regime = SpeedRegime::saturated;
    }
    return out;
}

double gamma_max(double c, double lambda, double h, double gp0) {
    require_supercritical_inputs(h, gp0);
    const CharRoots roots = char_roots(c, h, gp0);
    const double slack = 1e-9 * (1.0 + lambda);
    if (lambda < roots.lambda1 - slack || lambda > roots.lambda2 + slack)
        throw DomainError("gamma_max: lambda outside [lambda1, lambda2]");
    auto expr = [=](double gamma) {
        return -gamma + c * lambda - lambda * lambda + 1.0 -
               gp0 * std::exp(gamma * h) * std::exp(-lambda * c * h);
    };
    const double at_zero = expr(0.0); // equals -chi0(lambda) >= 0 inside
    if (at_zero <= 0.0) return 0.0;
    if (h == 0.0) return at_zero; // expr(gamma) = -chi0(lambda) - gamma exactly
    // expr decreases strictly in gamma and expr(at_zero) <= 0.
    return bisect(expr, 0.0, at_zero, 1e-14);
}

std::pair<double, double> shift_bounds(const std::function<double(double)>& A,
                                       double lambda, double mu, double h,
                                       int samples) {
    if (!(lambda > 0.0)) throw DomainError("shift_bounds: need lambda > 0");
    if (h < 0.0) throw DomainError("shift_bounds: need h >= 0");
    if (samples < 1) throw DomainError("shift_bounds: need samples >= 1");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const int n = h == 0.0 ? 1 : samples;
    for (int i = 0; i < n; ++i) {
        const double s = n == 1 ? 0.0 : -h + h * i / (n - 1);
        const double v = A(s) * std::exp(-mu * s);
        if (!(v > 0.0))
            throw DomainError("shift_bounds: history amplitude must be positive");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {std::log(lo) / lambda, std::log(hi) / lambda};
}

} // namespace wavefront
