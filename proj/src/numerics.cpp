#include "wavefront/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace wavefront {

double bisect(const std::function<double(double)>& f, double lo, double hi,
              double rel_tol, int max_iter) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw NoMinimumInBracket("bisect: no sign change on bracket");
    for (int it = 0; it < max_iter; ++it) {
        double mid = 0.5 * (lo + hi);
        if (hi - lo <= rel_tol * (1.0 + std::abs(mid))) return mid;
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double golden_min(const std::function<double(double)>& f, double lo,
                  double hi, double abs_tol) {
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > abs_tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineFit out;
    out.n = static_cast<int>(x.size());
    if (x.size() != y.size() || x.size() < 2)
        throw InsufficientData("fit_line: need at least 2 paired samples");
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / x.size();
    const double my = sy / y.size();
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0)
        throw InsufficientData("fit_line: abscissae are all identical");
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    if (syy == 0.0) {
        out.r_squared = 1.0; // exactly constant data: a flat line fits it
    } else {
        double ss_res = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - (out.slope * x[i] + out.intercept);
            ss_res += r * r;
        }
        out.r_squared = 1.0 - ss_res / syy;
    }
    return out;
}

double interp_linear(const std::vector<double>& values, double x0, double dx,
                     double x) {
    const int n = static_cast<int>(values.size());
    const double s = (x - x0) / dx;
    if (s <= 0.0) return values.front();
    if (s >= n - 1) return values.back();
    const int j = static_cast<int>(s);
    const double w = s - j;
    return (1.0 - w) * values[j] + w * values[j + 1];
}

double interp_cubic(const std::vector<double>& values, double x0, double dx,
                    double x) {
    const int n = static_cast<int>(values.size());
    const double s = (x - x0) / dx;
    if (s <= 0.0) return values.front();
    if (s >= n - 1) return values.back();
    const int j = static_cast<int>(s);
    if (j < 1 || j > n - 3) return interp_linear(values, x0, dx, x);
    // 4-point Lagrange stencil on nodes j-1 .. j+2, local coordinate u.
    const double u = s - j;
    const double um1 = u + 1.0, up1 = u - 1.0, up2 = u - 2.0;
    const double c0 = -u * up1 * up2 / 6.0;
    const double c1 = um1 * up1 * up2 / 2.0;
    const double c2 = -um1 * u * up2 / 2.0;
    const double c3 = um1 * u * up1 / 6.0;
    return c0 * values[j - 1] + c1 * values[j] + c2 * values[j + 1] +
           c3 * values[j + 2];
}

BandedLU::BandedLU(int n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1),
      ab_(static_cast<std::size_t>(n) * (2 * kl + ku + 1), 0.0),
      pivot_(static_cast<std::size_t>(n), 0) {
    if (n < 1 || kl < 0 || ku < 0)
        throw DomainError("BandedLU: invalid dimensions");
}

void BandedLU::factor() {
    for (int k = 0; k < n_; ++k) {
        const int i_hi = std::min(n_ - 1, k + kl_);
        int p = k;
        double amax = std::abs(at(k, k));
        for (int i = k + 1; i <= i_hi; ++i) {
            const double a = std::abs(at(i, k));
            if (a > amax) {
                amax = a;
                p = i;
            }
        }
        if (amax == 0.0)
            throw NumericalFailure("BandedLU: zero pivot at column " +
                                   std::to_string(k));
        pivot_[k] = p;
        const int j_hi = std::min(n_ - 1, k + kl_ + ku_);
        if (p != k)
            for (int j = k; j <= j_hi; ++j) std::swap(at(k, j), at(p, j));
        const double piv = at(k, k);
        for (int i = k + 1; i <= i_hi; ++i) {
            const double l = at(i, k) / piv;
            at(i, k) = l;
            if (l != 0.0)
                for (int j = k + 1; j <= j_hi; ++j) at(i, j) -= l * at(k, j);
        }
    }
    factored_ = true;
}

void BandedLU::solve(std::vector<double>& b) const {
    if (!factored_) throw NumericalFailure("BandedLU: solve before factor");
    if (static_cast<int>(b.size()) != n_)
        throw DomainError("BandedLU: right-hand side has wrong length");
    auto entry = [this](int i, int j) { return ab_[idx(i, j)]; };
    for (int k = 0; k < n_; ++k) {
        if (pivot_[k] != k) std::swap(b[k], b[pivot_[k]]);
        const int i_hi = std::min(n_ - 1, k + kl_);
        for (int i = k + 1; i <= i_hi; ++i) b[i] -= entry(i, k) * b[k];
    }
    for (int k = n_ - 1; k >= 0; --k) {
        const int j_hi = std::min(n_ - 1, k + kl_ + ku_);
        double s = b[k];
        for (int j = k + 1; j <= j_hi; ++j) s -= entry(k, j) * b[j];
        b[k] = s / entry(k, k);
    }
}

double CounterRng::uniform(std::uint64_t counter) const {
    // splitmix64 applied to the (seed, counter) pair; statelessness keeps
    // sweeps reproducible no matter how work is distributed.
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ull * (counter + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
}

} // namespace wavefront
