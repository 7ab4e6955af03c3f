#ifndef WAVEFRONT_NUMERICS_HPP
#define WAVEFRONT_NUMERICS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "wavefront/errors.hpp"

namespace wavefront {

/// Bisection on [lo, hi] for a function with f(lo) and f(hi) of opposite
/// sign.  Runs until the bracket is below rel_tol * (1 + |x|) wide.
double bisect(const std::function<double(double)>& f, double lo, double hi,
              double rel_tol = 1e-14, int max_iter = 200);

/// Golden-section minimization of a unimodal function on [lo, hi] to the
/// requested absolute tolerance in the argument.
double golden_min(const std::function<double(double)>& f, double lo,
                  double hi, double abs_tol = 1e-6);

/// Ordinary least squares fit y = slope * x + intercept.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
    int n = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Piecewise-linear interpolation of (nodes equally spaced from x0 with
/// step dx).  Arguments outside the grid clamp to the edge values.
double interp_linear(const std::vector<double>& values, double x0, double dx,
                     double x);

/// Four-point Lagrange interpolation on the same layout; degrades to
/// linear near the edges and clamps outside.
double interp_cubic(const std::vector<double>& values, double x0, double dx,
                    double x);

/// Banded linear solver with partial pivoting, LAPACK band layout: kl
/// subdiagonals, ku superdiagonals, plus kl extra rows of fill for the
/// pivoted factorization.  Assemble with at(), then factor() once and
/// solve() any number of right-hand sides.
class BandedLU {
  public:
    BandedLU(int n, int kl, int ku);

    /// Entry (i, j); only |i - j| within the band is addressable.
    double& at(int i, int j) { return ab_[idx(i, j)]; }

    /// In-place LU factorization; throws NumericalFailure on a zero pivot.
    void factor();

    /// Overwrites b with the solution of A x = b.  Requires factor().
    void solve(std::vector<double>& b) const;

    int size() const { return n_; }

  private:
    std::size_t idx(int i, int j) const {
        return static_cast<std::size_t>(j) * width_ + (kl_ + ku_ + i - j);
    }

    int n_ = 0, kl_ = 0, ku_ = 0, width_ = 0;
    bool factored_ = false;
    std::vector<double> ab_;
    std::vector<int> pivot_;
};

/// Deterministic counter-based generator: every draw is a pure function of
/// (seed, counter), so parallel or re-ordered use cannot change results.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    /// Uniform double in [0, 1) for the given draw index.
    double uniform(std::uint64_t counter) const;

    /// Uniform double in [a, b) for the given draw index.
    double uniform(std::uint64_t counter, double a, double b) const {
        return a + (b - a) * uniform(counter);
    }

    std::uint64_t seed() const { return seed_; }

  private:
    std::uint64_t seed_;
};

/// min{ e^{lambda t}, 1 }: the bounded exponential weight.
inline double eta_weight(double lambda, double t) {
    return t < 0.0 ? std::exp(lambda * t) : 1.0;
}

/// Derivative of eta_weight in t away from the kink at t = 0.
inline double eta_weight_d1(double lambda, double t) {
    return t < 0.0 ? lambda * std::exp(lambda * t) : 0.0;
}

inline double eta_weight_d2(double lambda, double t) {
    return t < 0.0 ? lambda * lambda * std::exp(lambda * t) : 0.0;
}

} // namespace wavefront

#endif
