#pragma once

// Special functions behind the Beta-posterior computations: log-beta,
// the regularized incomplete beta function and its inverse, Beta moments,
// digamma and trigamma. Everything here is pure and reentrant.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "minimaxcdf/errors.hpp"

namespace minimaxcdf {

// A probability carried together with its complement. Whichever of the two
// is small is stored to full relative precision, so evaluations near 1 do
// not lose digits to cancellation in 1 - p.
struct Prob {
    double p = 0.0;
    double q = 1.0;

    static constexpr Prob from_p(double p) noexcept { return {p, 1.0 - p}; }
    static constexpr Prob from_q(double q) noexcept { return {1.0 - q, q}; }
    constexpr Prob complement() const noexcept { return {q, p}; }
};

// T_i ~ Beta(i+1, n-i+1): the posterior of p after observing B = i from Bin(n, p)
// under a uniform prior.
class BetaIndex {
public:
    BetaIndex(int i, int n) : i_(i), n_(n) {
        if (n < 1) throw DomainError("BetaIndex: n must be >= 1, got " + std::to_string(n));
        if (i < 0 || i > n)
            throw DomainError("BetaIndex: need 0 <= i <= n, got i=" + std::to_string(i) +
                              " n=" + std::to_string(n));
    }

    int i() const noexcept { return i_; }
    int n() const noexcept { return n_; }
    double alpha() const noexcept { return i_ + 1.0; }
    double beta() const noexcept { return n_ - i_ + 1.0; }
    BetaIndex reflected() const { return BetaIndex(n_ - i_, n_); }

private:
    int i_;
    int n_;
};

namespace detail {

inline constexpr double kLnSqrt2Pi = 0.918938533204672741780329736406;

// Remainder of Stirling's series, lgamma(x) - [(x - 1/2) log x - x + log sqrt(2 pi)].
inline double lgamma_correction(double x) {
    const double r = 1.0 / x;
    const double r2 = r * r;
    return r * (1.0 / 12 +
                r2 * (-1.0 / 360 +
                      r2 * (1.0 / 1260 +
                            r2 * (-1.0 / 1680 +
                                  r2 * (1.0 / 1188 + r2 * (-691.0 / 360360 + r2 * (1.0 / 156)))))));
}

// Continued fraction for I_x(a, b), modified Lentz. x should lie below the
// mean-ish switch point (a+1)/(a+b+2) for fast convergence.
inline double inc_beta_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 20000; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

inline void check_shape(double a, double b, const char* who) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw DomainError(std::string(who) + ": shape parameters must be positive and finite");
}

} // namespace detail

// ln B(a, b). Uses Stirling differences once an argument reaches 10 so the
// large-argument cancellation in lgamma(a) + lgamma(b) - lgamma(a+b) is avoided.
inline double log_beta(double a, double b) {
    detail::check_shape(a, b, "log_beta");
    const double p = std::min(a, b);
    const double q = std::max(a, b);
    if (p >= 10.0) {
        const double corr = detail::lgamma_correction(p) + detail::lgamma_correction(q) -
                            detail::lgamma_correction(p + q);
        return -0.5 * std::log(q) + detail::kLnSqrt2Pi + corr + (p - 0.5) * std::log(p / (p + q)) +
               q * std::log1p(-p / (p + q));
    }
    if (q >= 10.0) {
        const double corr = detail::lgamma_correction(q) - detail::lgamma_correction(p + q);
        return std::log(std::tgamma(p)) + corr + p - p * std::log(p + q) +
               (q - 0.5) * std::log1p(-p / (p + q));
    }
    if (p < 1e-300) return -std::log(p);
    return std::log(std::tgamma(p) * (std::tgamma(q) / std::tgamma(p + q)));
}

// Beta(a, b) density at x, with the complement supplied for precision near 1.
inline double beta_pdf(Prob x, double a, double b) {
    detail::check_shape(a, b, "beta_pdf");
    if (x.p <= 0.0 || x.q <= 0.0) {
        const bool at_zero = x.p <= 0.0;
        const double shape = at_zero ? a : b;
        if (shape < 1.0) return std::numeric_limits<double>::infinity();
        if (shape > 1.0) return 0.0;
        return std::exp(-log_beta(a, b));
    }
    return std::exp((a - 1.0) * std::log(x.p) + (b - 1.0) * std::log(x.q) - log_beta(a, b));
}

// I_x(a, b) together with its complement 1 - I_x(a, b) = I_{1-x}(b, a).
inline Prob reg_inc_beta(Prob x, double a, double b) {
    detail::check_shape(a, b, "reg_inc_beta");
    if (!(x.p >= 0.0 && x.p <= 1.0) || !(x.q >= 0.0 && x.q <= 1.0))
        throw DomainError("reg_inc_beta: x outside [0, 1]");
    if (x.p == 0.0) return {0.0, 1.0};
    if (x.q == 0.0) return {1.0, 0.0};
    const double log_front = a * std::log(x.p) + b * std::log(x.q) - log_beta(a, b);
    const double front = std::exp(log_front);
    if (x.p < (a + 1.0) / (a + b + 2.0)) {
        const double v = front * detail::inc_beta_fraction(a, b, x.p) / a;
        return {v, 1.0 - v};
    }
    const double w = front * detail::inc_beta_fraction(b, a, x.q) / b;
    return {1.0 - w, w};
}

inline double reg_inc_beta(double x, double a, double b) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("reg_inc_beta: x outside [0, 1]");
    return reg_inc_beta(Prob::from_p(x), a, b).p;
}

namespace detail {

// Solves I_x(a, b) = target for target <= 1/2 by bisection on a shrinking
// bracket, taking Newton steps whenever they land strictly inside it.
inline Prob inv_inc_beta_lower(double target, double a, double b) {
    const double lnb = log_beta(a, b);
    double lo = 0.0;
    double hi = 1.0;
    // Small-x expansion I_x ~ x^a / (a B(a,b)) gives a good start in the tail.
    double x = std::exp((std::log(target) + std::log(a) + lnb) / a);
    if (!(x > 0.0 && x < 1.0)) x = a / (a + b);
    for (int iter = 0; iter < 200; ++iter) {
        const Prob xp = Prob::from_p(x);
        const double f = reg_inc_beta(xp, a, b).p - target;
        if (f == 0.0) return xp;
        if (f < 0.0) lo = x; else hi = x;
        const double dens =
            std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lnb);
        double next = x - f / dens;
        if (!(next > lo && next < hi) || !std::isfinite(next)) {
            next = (lo > 0.0 && hi / lo > 4.0) ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
            if (lo == 0.0) next = 0.5 * hi;
        }
        if (std::fabs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * x ||
            hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            return Prob::from_p(next);
        }
        x = next;
    }
    return Prob::from_p(x);
}

} // namespace detail

// Inverse of the regularized incomplete beta function in its first argument.
// The result carries 1 - x at full precision when x is close to 1.
inline Prob inv_reg_inc_beta(Prob target, double a, double b) {
    detail::check_shape(a, b, "inv_reg_inc_beta");
    if (!(target.p >= 0.0 && target.p <= 1.0))
        throw DomainError("inv_reg_inc_beta: probability outside [0, 1]");
    if (target.p == 0.0) return {0.0, 1.0};
    if (target.q == 0.0) return {1.0, 0.0};
    if (target.p <= 0.5) return detail::inv_inc_beta_lower(target.p, a, b);
    return detail::inv_inc_beta_lower(target.q, b, a).complement();
}

inline double inv_reg_inc_beta(double p, double a, double b) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("inv_reg_inc_beta: probability outside [0, 1]");
    return inv_reg_inc_beta(Prob::from_p(p), a, b).p;
}

// log Gamma(x + m) - log Gamma(x) without cancellation between large terms.
inline double log_gamma_ratio(double x, double m) {
    if (!(x > 0.0) || !(x + m > 0.0)) throw DomainError("log_gamma_ratio: arguments must be positive");
    if (m == 0.0) return 0.0;
    if (x >= 10.0 && x + m >= 10.0) {
        return (x - 0.5) * std::log1p(m / x) + m * std::log(x + m) - m + detail::lgamma_correction(x + m) -
               detail::lgamma_correction(x);
    }
    return std::lgamma(x + m) - std::lgamma(x);
}

// E[T^m] for T ~ Beta(a, b) = Gamma(a+m) Gamma(a+b) / (Gamma(a) Gamma(a+b+m)), in log space.
inline double beta_moment(double a, double b, double m) {
    detail::check_shape(a, b, "beta_moment");
    if (!(a + m > 0.0))
        throw DivergentMoment("beta_moment: E[T^m] diverges for m <= -alpha");
    if (m == 0.0) return 1.0;
    return std::exp(log_gamma_ratio(a, m) - log_gamma_ratio(a + b, m));
}

// E[T_i^m] with T_i ~ Beta(i+1, n-i+1).
inline double beta_moment(const BetaIndex& idx, double m) {
    return beta_moment(idx.alpha(), idx.beta(), m);
}

// E[(1 - T_i)^m].
inline double beta_reflected_moment(const BetaIndex& idx, double m) {
    return beta_moment(idx.beta(), idx.alpha(), m);
}

inline double digamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("digamma: argument must be positive");
    double shift = 0.0;
    while (x < 10.0) {
        shift -= 1.0 / x;
        x += 1.0;
    }
    const double r2 = 1.0 / (x * x);
    const double series =
        r2 * (1.0 / 12 -
              r2 * (1.0 / 120 -
                    r2 * (1.0 / 252 -
                          r2 * (1.0 / 240 -
                                r2 * (1.0 / 132 - r2 * (691.0 / 32760 - r2 * (1.0 / 12)))))));
    return shift + std::log(x) - 0.5 / x - series;
}

inline double trigamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("trigamma: argument must be positive");
    double shift = 0.0;
    while (x < 10.0) {
        shift += 1.0 / (x * x);
        x += 1.0;
    }
    const double r = 1.0 / x;
    const double r2 = r * r;
    const double series =
        r + 0.5 * r2 +
        r * r2 *
            (1.0 / 6 -
             r2 * (1.0 / 30 -
                   r2 * (1.0 / 42 - r2 * (1.0 / 30 - r2 * (5.0 / 66 - r2 * (691.0 / 2730 - r2 * (7.0 / 6)))))));
    return shift + series;
}

// log C(n, i).
inline double log_binomial(int n, int i) {
    return -std::log(n + 1.0) - log_beta(i + 1.0, n - i + 1.0);
}

} // namespace minimaxcdf
