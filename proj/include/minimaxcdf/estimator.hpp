#pragma once

// Best invariant weights. Every invariant estimator of F is a step function
// at the order statistics, sum_i u_i 1(Y_i <= t < Y_{i+1}); the optimal level
// u_i minimizes, separately for each i, the Bayes posterior loss under
// T_i ~ Beta(i+1, n-i+1) (with the prior reweighted by H when present).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "minimaxcdf/errors.hpp"
#include "minimaxcdf/model.hpp"
#include "minimaxcdf/nomination.hpp"
#include "minimaxcdf/quadrature.hpp"
#include "minimaxcdf/special.hpp"

namespace minimaxcdf {

// Step levels u_0..u_n, nondecreasing, in [0, 1].
struct WeightVector {
    int n = 0;
    std::vector<double> u;

    WeightVector() = default;
    WeightVector(int n_, std::vector<double> u_) : n(n_), u(std::move(u_)) { validate(); }

    void validate() const {
        if (n < 1) throw DomainError("weight vector needs n >= 1");
        if (u.size() != static_cast<std::size_t>(n) + 1)
            throw DomainError("weight vector needs n + 1 = " + std::to_string(n + 1) + " entries, got " +
                              std::to_string(u.size()));
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!(u[i] >= 0.0 && u[i] <= 1.0))
                throw DomainError("weight u_" + std::to_string(i) + " outside [0, 1]");
            if (i > 0 && u[i] < u[i - 1]) throw NonMonotoneResult(i, "weights decrease");
        }
    }

    // 0 < u_0 and u_n < 1, as for every unconstrained best invariant solution.
    bool interior() const { return u.front() > 0.0 && u.back() < 1.0; }
    double operator[](std::size_t i) const { return u[i]; }
    std::size_t size() const { return u.size(); }
};

// ---------------------------------------------------------------- per-step objective

struct SolveOptions {
    double tol = 1e-10;        // target accuracy of the returned weight
    double quad_tol = 1e-13;   // absolute tolerance of each objective integral
    int grid_points = 1001;    // coarse scan over [0, 1]
    bool force_generic = false;  // bypass closed forms in best_invariant
};

// G_i(u) = integral over (0, 1) of rho(tau(u) - tau(t)) H(t) C(n,i) t^i (1-t)^(n-i) dt.
// The step weight w_i is left out; it scales G_i without moving its minimizer.
class StepObjective {
public:
    StepObjective(BetaIndex idx, const LossSpec& loss, const Transform& tau, double quad_tol = 1e-13)
        : idx_(idx), loss_(loss), tau_(tau) {
        opts_.abs_tol = quad_tol;
        opts_.rel_tol = 1e-12;
    }

    const BetaIndex& index() const noexcept { return idx_; }

    // Posterior kernel (unnormalized), including H.
    double kernel(Prob t) const {
        const double k = binomial_kernel(idx_, t);
        if (k == 0.0) return 0.0;
        return k * loss_.H(t, tau_);
    }

    // u for which tau(u) is finite and, on a log scale, positive.
    bool feasible(double u) const {
        if (!(u >= 0.0 && u <= 1.0)) return false;
        if (tau_.open_domain() && (u >= 1.0 || (u <= 0.0 && tau_.kind() == TransformKind::log_odds))) return false;
        if (loss_.rho.log_scale()) {
            if (u <= 0.0) return false;
            const double v = tau_.eval(u);
            return v > 0.0 && std::isfinite(v);
        }
        return true;
    }

    double value(double u) const {
        const double tu = tau_.eval(u);
        auto f = [&](Prob t) {
            const double k = kernel(t);
            if (k == 0.0) return 0.0;
            return loss_.rho(loss_.rho.discrepancy(tu, tau_.eval(t))) * k;
        };
        const Prob mid = Prob::from_p(u);
        const auto a = integrate_unit(f, Prob{0.0, 1.0}, mid, opts_);
        const auto b = integrate_unit(f, mid, Prob{1.0, 0.0}, opts_);
        return a.value + b.value;
    }

    // G_i(u), or +inf where the integral diverges.
    double value_or_inf(double u) const {
        try {
            return value(u);
        } catch (const DivergentIntegral&) {
            return std::numeric_limits<double>::infinity();
        }
    }

    // Integral of rho'(discrepancy) times the kernel. It has the sign of dG/du,
    // so the minimizer is its root.
    double slope(double u) const {
        if (loss_.rho.kind() == RhoKind::lp && loss_.rho.param() < 1.0) return singular_slope(u);
        const double tu = tau_.eval(u);
        auto f = [&](Prob t) {
            const double k = kernel(t);
            if (k == 0.0) return 0.0;
            return loss_.rho.derivative(loss_.rho.discrepancy(tu, tau_.eval(t))) * k;
        };
        const Prob mid = Prob::from_p(u);
        const auto a = integrate_unit(f, Prob{0.0, 1.0}, mid, opts_);
        const auto b = integrate_unit(f, mid, Prob{1.0, 0.0}, opts_);
        return a.value + b.value;
    }

    // Discretized objective on a grid of candidate weights. The nodes come from
    // an adaptive integration of the kernel, so they sit where the posterior mass is.
    std::vector<double> scan(const std::vector<double>& grid) const {
        std::vector<QuadratureNode> nodes;
        auto proxy = [&](Prob t) {
            const double k = kernel(t);
            if (k == 0.0) return 0.0;
            const double a = std::atan(tau_.eval(t));
            return k * (1.0 + a * a);
        };
        QuadratureOptions o = opts_;
        o.abs_tol = std::max(opts_.abs_tol, 1e-11);
        try {
            integrate_unit(proxy, Prob{0.0, 1.0}, Prob{1.0, 0.0}, o, &nodes);
        } catch (const DivergentIntegral&) {
            throw ImproperPosterior(static_cast<std::size_t>(idx_.i()),
                                    "posterior kernel H(t) t^i (1-t)^(n-i) is not integrable");
        }
        std::vector<double> tau_t(nodes.size());
        std::vector<double> w(nodes.size());
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            tau_t[j] = tau_.eval(nodes[j].t);
            w[j] = nodes[j].weight * kernel(nodes[j].t);
        }
        std::vector<double> out(grid.size());
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double tu = tau_.eval(grid[g]);
            double s = 0.0;
            for (std::size_t j = 0; j < nodes.size(); ++j) {
                if (w[j] == 0.0) continue;
                if (loss_.rho.log_scale() && !(tau_t[j] > 0.0)) continue;
                s += w[j] * loss_.rho(loss_.rho.discrepancy(tu, tau_t[j]));
            }
            out[g] = std::isnan(s) ? std::numeric_limits<double>::infinity() : s;
        }
        return out;
    }

private:
    // rho'(z) ~ |z|^(p-1) blows up at t = u. Near u the offset is written as
    // d s^(1/p), which cancels the singularity, and tau(u) - tau(t) is taken
    // from the derivative once the offset is too small to difference.
    double singular_slope(double u) const {
        const double tu = tau_.eval(u);
        const double m = 1.0 / loss_.rho.param();
        const Prob pu = Prob::from_p(u);
        auto far = [&](Prob t) {
            const double k = kernel(t);
            if (k == 0.0) return 0.0;
            return loss_.rho.derivative(tu - tau_.eval(t)) * k;
        };
        auto near = [&](double d, double side) {
            return [&, d, side](double s) {
                if (s <= 0.0) return 0.0;
                const double off = d * std::pow(s, m);
                const Prob t{pu.p + side * off, pu.q - side * off};
                const double k = kernel(t);
                if (k == 0.0) return 0.0;
                double z = 0.0;
                if (off > 1e-5) {
                    z = tu - tau_.eval(t);
                } else {
                    const Prob mid{pu.p + 0.5 * side * off, pu.q - 0.5 * side * off};
                    z = -side * off * tau_.derivative(mid);
                }
                return loss_.rho.derivative(z) * k * d * m * std::pow(s, m - 1.0);
            };
        };
        double total = 0.0;
        const double d_lo = std::min(pu.p, 0.05);
        const double d_hi = std::min(pu.q, 0.05);
        if (d_lo > 0.0) {
            const Prob edge{pu.p - d_lo, pu.q + d_lo};
            total += integrate_unit(far, Prob{0.0, 1.0}, edge, opts_).value;
            total += integrate_unit(near(d_lo, -1.0), 0.0, 1.0, opts_).value;
        }
        if (d_hi > 0.0) {
            const Prob edge{pu.p + d_hi, pu.q - d_hi};
            total += integrate_unit(near(d_hi, 1.0), 0.0, 1.0, opts_).value;
            total += integrate_unit(far, edge, Prob{1.0, 0.0}, opts_).value;
        }
        return total;
    }

    BetaIndex idx_;
    const LossSpec& loss_;
    const Transform& tau_;
    QuadratureOptions opts_;
};

namespace detail {

inline double golden_section(const StepObjective& obj, double lo, double hi, double width, double& best_value) {
    constexpr double r = 0.6180339887498949;
    double c = hi - r * (hi - lo);
    double d = lo + r * (hi - lo);
    double fc = obj.value_or_inf(c);
    double fd = obj.value_or_inf(d);
    while (hi - lo > width) {
        if (fc <= fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = obj.value_or_inf(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = obj.value_or_inf(d);
        }
    }
    if (fc <= fd) {
        best_value = fc;
        return c;
    }
    best_value = fd;
    return d;
}

// Root of the slope in [lo, hi] by the Illinois variant of regula falsi.
inline std::optional<double> slope_root(const StepObjective& obj, double lo, double hi, double tol) {
    double flo = 0.0;
    double fhi = 0.0;
    try {
        flo = obj.slope(lo);
        fhi = obj.slope(hi);
    } catch (const DivergentIntegral&) {
        return std::nullopt;
    }
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (!(flo < 0.0 && fhi > 0.0)) return std::nullopt;
    int side = 0;
    for (int iter = 0; iter < 200 && hi - lo > tol; ++iter) {
        double x = (lo * fhi - hi * flo) / (fhi - flo);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        double fx = 0.0;
        try {
            fx = obj.slope(x);
        } catch (const DivergentIntegral&) {
            return std::nullopt;
        }
        if (fx == 0.0) return x;
        if (fx < 0.0) {
            lo = x;
            flo = fx;
            if (side == -1) fhi *= 0.5;
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if (side == 1) flo *= 0.5;
            side = 1;
        }
        // Bisection keeps the bracket shrinking when regula falsi stalls.
        if (iter % 3 == 2) {
            const double m = 0.5 * (lo + hi);
            double fm = 0.0;
            try {
                fm = obj.slope(m);
            } catch (const DivergentIntegral&) {
                return std::nullopt;
            }
            if (fm == 0.0) return m;
            if (fm < 0.0) {
                lo = m;
                flo = fm;
            } else {
                hi = m;
                fhi = fm;
            }
            side = 0;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

// Minimizes the per-step objective G_i over u in [0, 1]: a coarse scan of the
// discretized objective picks a bracket, golden section refines it with the
// accurately integrated objective, and a root of the slope polishes the result.
inline double solve_weight(const BetaIndex& idx, const LossSpec& loss, const Transform& tau,
                           const SolveOptions& opts = {}) {
    const StepObjective obj(idx, loss, tau, opts.quad_tol);
    const int N = std::max(opts.grid_points, 11);
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(N));
    for (int j = 0; j < N; ++j) {
        const double u = static_cast<double>(j) / (N - 1);
        if (obj.feasible(u)) grid.push_back(u);
    }
    const std::vector<double> scanned = obj.scan(grid);
    const auto best_it = std::min_element(scanned.begin(), scanned.end());
    const auto worst_it = std::max_element(scanned.begin(), scanned.end());
    if (std::isfinite(*worst_it) && *worst_it - *best_it <= 1e-14 * std::max(1.0, std::fabs(*best_it)))
        return 0.5 * (grid.front() + grid.back());

    const std::size_t j_best = static_cast<std::size_t>(best_it - scanned.begin());
    const double step = 1.0 / (N - 1);
    const double domain_lo = 0.0;
    const double domain_hi = 1.0;

    // Rule out an objective that is infinite for every u before refining.
    if (!std::isfinite(obj.value_or_inf(grid[j_best]))) {
        bool any_finite = false;
        for (double u : {0.1, 0.5, 0.9})
            if (obj.feasible(u) && std::isfinite(obj.value_or_inf(u))) any_finite = true;
        if (!any_finite)
            throw DivergentObjective(static_cast<std::size_t>(idx.i()),
                                     "per-step objective is infinite for every weight");
    }

    // Usually the slope changes sign across the neighbouring grid points and
    // a root search converges in a few dozen integrals.
    for (std::size_t reach : {std::size_t{1}, std::size_t{3}}) {
        const double plo = j_best >= reach ? grid[j_best - reach] : grid.front();
        const double phi = j_best + reach < grid.size() ? grid[j_best + reach] : grid.back();
        if (!(phi > plo)) break;
        double slo = 0.0;
        double shi = 0.0;
        try {
            slo = obj.slope(plo);
            shi = obj.slope(phi);
        } catch (const DivergentIntegral&) {
            break;
        }
        if (!(slo < 0.0 && shi > 0.0)) continue;
        const auto root = detail::slope_root(obj, plo, phi, opts.tol);
        if (!root) break;
        const double g_root = obj.value_or_inf(*root);
        const double g_edge = std::min(obj.value_or_inf(plo), obj.value_or_inf(phi));
        if (std::isfinite(g_root) && g_root <= g_edge + 1e-13 * std::max(1.0, std::fabs(g_edge)))
            return std::clamp(*root, 0.0, 1.0);
        break;
    }

    double lo = j_best >= 3 ? grid[j_best - 3] : domain_lo;
    double hi = j_best + 3 < grid.size() ? grid[j_best + 3] : domain_hi;
    double u_best = grid[j_best];
    double g_best = std::numeric_limits<double>::infinity();
    for (int attempt = 0; attempt < 6; ++attempt) {
        u_best = detail::golden_section(obj, lo, hi, 1e-8, g_best);
        const double margin = 4e-8;
        const bool at_lo = u_best - lo < margin && lo > domain_lo;
        const bool at_hi = hi - u_best < margin && hi < domain_hi;
        if (!at_lo && !at_hi) break;
        const double width = hi - lo;
        if (at_lo) {
            hi = lo + 0.5 * width;
            lo = std::max(domain_lo, lo - 3.0 * step);
        } else {
            lo = hi - 0.5 * width;
            hi = std::min(domain_hi, hi + 3.0 * step);
        }
    }
    if (!std::isfinite(g_best))
        throw DivergentObjective(static_cast<std::size_t>(idx.i()), "per-step objective is infinite near its minimum");

    // Near the minimum G is flat to within quadrature noise, so golden section
    // alone pins u only to about 1e-6; the slope changes sign sharply there.
    for (double delta = 1e-6; delta <= 1e-3; delta *= 4.0) {
        const double plo = std::max(domain_lo, u_best - delta);
        const double phi = std::min(domain_hi, u_best + delta);
        if (!(phi > plo) || !obj.feasible(plo) || !obj.feasible(phi)) break;
        double slo = 0.0;
        double shi = 0.0;
        try {
            slo = obj.slope(plo);
            shi = obj.slope(phi);
        } catch (const DivergentIntegral&) {
            break;
        }
        if (slo > 0.0 || shi < 0.0) continue;
        if (const auto root = detail::slope_root(obj, plo, phi, opts.tol)) {
            const double g_root = obj.value_or_inf(*root);
            if (g_root <= g_best + 1e-13 * std::max(1.0, std::fabs(g_best))) u_best = *root;
        }
        break;
    }
    return std::clamp(u_best, 0.0, 1.0);
}

// ---------------------------------------------------------------- closed forms

struct SelTauWeights {
    std::vector<double> tau_scale;  // E[tau(T_i)]
    std::vector<double> f_scale;    // tau^{-1}(E[tau(T_i)])
};

namespace detail {

inline double quad_mean(const BetaIndex& idx, const std::function<double(Prob)>& g, double tol = 1e-13) {
    return quad_beta_weighted(g, idx, tol).value * (idx.n() + 1);
}

// E[tau(T_i)].
inline double expected_tau(const BetaIndex& idx, const Transform& tau) {
    const int i = idx.i();
    const int n = idx.n();
    switch (tau.kind()) {
    case TransformKind::identity: return (i + 1.0) / (n + 2.0);
    case TransformKind::power: return beta_moment(idx, tau.param());
    case TransformKind::minima: return 1.0 - beta_reflected_moment(idx, 1.0 / tau.param());
    case TransformKind::odds:
        if (i == n) throw DivergentMoment("E[T/(1-T)] diverges at i = n");
        return (i + 1.0) / (n - i);
    case TransformKind::log_odds: return digamma(i + 1.0) - digamma(n - i + 1.0);
    case TransformKind::median_nom:
        return quad_mean(idx, [&](Prob t) { return tau.eval(t); });
    }
    return 0.0;
}

// For squared error with weight H the per-step solution on the tau scale is
// integral(tau h) / integral(h) with h = H * kernel. Returns nullopt when no
// closed form applies.
inline std::optional<double> weighted_tau_ratio_closed(const BetaIndex& idx, const WeightFn& H, const Transform& tau) {
    const double a = idx.alpha();
    const double b = idx.beta();
    auto ratio = [](double la, double lb) { return std::exp(la - lb); };
    auto log_m = [&](double m) {  // log E[T^m] up to the common normalizer
        if (!(a + m > 0.0)) throw DivergentMoment("weighted kernel moment diverges");
        return log_gamma_ratio(a, m) - log_gamma_ratio(a + b, m);
    };
    auto log_rm = [&](double m) {  // log E[(1-T)^m]
        if (!(b + m > 0.0)) throw DivergentMoment("weighted kernel moment diverges");
        return log_gamma_ratio(b, m) - log_gamma_ratio(a + b, m);
    };
    double c = 0.0;  // H proportional to z^(c-1)
    bool reflected = false;
    if (H.kind() == WeightKind::pow) {
        c = H.param();
    } else if (H.kind() == WeightKind::tau_prime) {
        if (tau.kind() == TransformKind::identity) c = 1.0;
        else if (tau.kind() == TransformKind::power) c = tau.param();
        else if (tau.kind() == TransformKind::minima) {
            c = 1.0 / tau.param();
            reflected = true;
        } else return std::nullopt;
    } else {
        return std::nullopt;
    }
    if (!reflected) {
        if (tau.kind() == TransformKind::identity) return ratio(log_m(c), log_m(c - 1.0));
        if (tau.kind() == TransformKind::power) return ratio(log_m(tau.param() + c - 1.0), log_m(c - 1.0));
        return std::nullopt;
    }
    // tau = 1 - (1-z)^(1/k) with H proportional to (1-z)^(1/k - 1).
    const double s = 1.0 / tau.param();
    return 1.0 - ratio(log_rm(2.0 * s - 1.0), log_rm(c - 1.0));
}

} // namespace detail

// Squared-error weights: E[tau(T_i)] for estimating tau(F), and tau^{-1} of it for F.
inline SelTauWeights sel_tau_weights(int n, const Transform& tau) {
    SelTauWeights out;
    for (int i = 0; i <= n; ++i) {
        const BetaIndex idx(i, n);
        const double m = detail::expected_tau(idx, tau);
        out.tau_scale.push_back(m);
        out.f_scale.push_back(tau.inverse(m));
    }
    return out;
}

// Per-step solution when the prior on p is reweighted by H (a weighted loss).
// For H(z) = 1/(z(1-z)) the end steps have no proper posterior; the limits
// u_0 = 0 and u_n = 1 of i/n are used there.
inline double weighted_solve(const BetaIndex& idx, const LossSpec& loss, const Transform& tau,
                             const SolveOptions& opts = {}) {
    const int i = idx.i();
    const int n = idx.n();
    if (loss.H.kind() == WeightKind::ef && (i == 0 || i == n)) return i == 0 ? 0.0 : 1.0;
    if (loss.rho.kind() != RhoKind::squared) return solve_weight(idx, loss, tau, opts);

    if (loss.H.kind() == WeightKind::ef && (tau.kind() == TransformKind::identity ||
                                            (tau.kind() == TransformKind::power && tau.param() == 1.0)))
        return static_cast<double>(i) / n;
    try {
        if (const auto r = detail::weighted_tau_ratio_closed(idx, loss.H, tau)) return tau.inverse(*r);
        const StepObjective obj(idx, loss, tau, opts.quad_tol);
        auto h = [&](Prob t) { return obj.kernel(t); };
        auto th = [&](Prob t) {
            const double k = obj.kernel(t);
            return k == 0.0 ? 0.0 : tau.eval(t) * k;
        };
        QuadratureOptions q;
        q.abs_tol = opts.quad_tol;
        q.rel_tol = 1e-13;
        double den = 0.0;
        try {
            den = integrate_unit(h, Prob{0.0, 1.0}, Prob{1.0, 0.0}, q).value;
        } catch (const DivergentIntegral&) {
            throw ImproperPosterior(static_cast<std::size_t>(i), "posterior kernel is not integrable");
        }
        const double num = integrate_unit(th, Prob{0.0, 1.0}, Prob{1.0, 0.0}, q).value;
        return tau.inverse(num / den);
    } catch (const DivergentMoment& e) {
        throw DivergentObjective(static_cast<std::size_t>(i), e.what());
    } catch (const DivergentIntegral& e) {
        throw DivergentObjective(static_cast<std::size_t>(i), e.what());
    }
}

namespace detail {

inline double closed_or_generic(const BetaIndex& idx, const LossSpec& loss, const Transform& tau,
                                const SolveOptions& opts) {
    const RhoKind rk = loss.rho.kind();
    const WeightKind hk = loss.H.kind();
    if (!opts.force_generic) {
        if (rk == RhoKind::squared && hk == WeightKind::none) {
            try {
                return tau.inverse(expected_tau(idx, tau));
            } catch (const DivergentMoment& e) {
                throw DivergentObjective(static_cast<std::size_t>(idx.i()), e.what());
            }
        }
        if (rk == RhoKind::squared || hk == WeightKind::ef) return weighted_solve(idx, loss, tau, opts);
        if (rk == RhoKind::absolute && hk == WeightKind::none &&
            (tau.kind() == TransformKind::identity || tau.kind() == TransformKind::power ||
             tau.kind() == TransformKind::minima || tau.kind() == TransformKind::odds ||
             tau.kind() == TransformKind::log_odds || tau.kind() == TransformKind::median_nom)) {
            // Absolute error on any increasing tau: the posterior median of T_i,
            // provided the objective is finite.
            const StepObjective obj(idx, loss, tau, opts.quad_tol);
            const double med = inv_reg_inc_beta(Prob{0.5, 0.5}, idx.alpha(), idx.beta()).p;
            if (!std::isfinite(obj.value_or_inf(med)))
                throw DivergentObjective(static_cast<std::size_t>(idx.i()), "per-step objective is infinite");
            return med;
        }
    }
    if (hk == WeightKind::ef) return weighted_solve(idx, loss, tau, opts);
    return solve_weight(idx, loss, tau, opts);
}

} // namespace detail

// Best invariant weights (F scale) for the loss and transform. Closed forms are
// used where they exist; other steps go through the generic per-step solver.
// When several steps have an infinite objective, the highest such index is reported.
inline WeightVector best_invariant(int n, const LossSpec& loss, const Transform& tau, const SolveOptions& opts = {}) {
    if (n < 1) throw DomainError("best_invariant needs n >= 1");
    loss.validate(n);
    std::vector<double> u(static_cast<std::size_t>(n) + 1);
    std::vector<std::size_t> divergent;
    std::string first_message;
    for (int i = 0; i <= n; ++i) {
        try {
            u[static_cast<std::size_t>(i)] = detail::closed_or_generic(BetaIndex(i, n), loss, tau, opts);
        } catch (const DivergentObjective& e) {
            if (divergent.empty()) first_message = e.what();
            divergent.push_back(static_cast<std::size_t>(i));
        }
    }
    if (!divergent.empty()) {
        std::ostringstream os;
        os << "no best invariant estimator for loss " << loss.rho.name() << " and transform " << tau.name()
           << ": objective infinite at i =";
        for (std::size_t j : divergent) os << ' ' << j;
        throw DivergentObjective(divergent.back(), os.str());
    }
    return WeightVector(n, std::move(u));
}

// Estimating tau(F) directly: the weights of best_invariant mapped through tau.
inline std::vector<double> to_tau_scale(const WeightVector& v, const Transform& tau) {
    std::vector<double> out;
    out.reserve(v.u.size());
    for (double x : v.u) out.push_back(tau.eval(x));
    return out;
}

inline WeightVector from_tau_scale(int n, const std::vector<double>& y, const Transform& tau) {
    std::vector<double> out;
    out.reserve(y.size());
    for (double x : y) out.push_back(tau.inverse(x));
    return WeightVector(n, std::move(out));
}

// ---------------------------------------------------------------- nomination weights

// Weights for tau(F) = F^(1/k) from maxima of sets of size k under loss L1
// (integrating against dF): E[T_i^(1/k)] = prod_{j=i}^{n} (j+1)/(j+1+1/k).
inline WeightVector maxima_l1_weights(int n, int k) {
    if (k < 1) throw DomainError("maxima weights need k >= 1");
    std::vector<double> u(static_cast<std::size_t>(n) + 1);
    double log_prod = 0.0;
    const double s = 1.0 / k;
    for (int j = n; j >= 0; --j) {
        log_prod += -std::log1p(s / (j + 1.0));
        u[static_cast<std::size_t>(j)] = std::exp(log_prod);
    }
    return WeightVector(n, std::move(u));
}

// Least squares weights under loss L2 (integrating against d tau(F)):
// prod_{j=i}^{n} (j + 1/k) / (j + 2/k), accumulated in log space.
inline WeightVector maxima_lse_weights(int n, int k) {
    if (k < 1) throw DomainError("maxima weights need k >= 1");
    std::vector<double> u(static_cast<std::size_t>(n) + 1);
    double log_prod = 0.0;
    const double s = 1.0 / k;
    for (int j = n; j >= 0; --j) {
        log_prod += -std::log1p(s / (j + s));
        u[static_cast<std::size_t>(j)] = std::exp(log_prod);
    }
    return WeightVector(n, std::move(u));
}

// Minima of sets of size k, tau(F) = 1 - (1 - F)^(1/k): the L1 and L2 weights.
inline std::pair<WeightVector, WeightVector> minima_weights(int n, int k) {
    if (k < 1) throw DomainError("minima weights need k >= 1");
    const double s = 1.0 / k;
    std::vector<double> u1;
    std::vector<double> u2;
    for (int i = 0; i <= n; ++i) {
        const BetaIndex idx(i, n);
        u1.push_back(1.0 - beta_reflected_moment(idx, s));
        const double lr = (log_gamma_ratio(idx.beta(), 2.0 * s - 1.0) - log_gamma_ratio(n + 2.0, 2.0 * s - 1.0)) -
                          (log_gamma_ratio(idx.beta(), s - 1.0) - log_gamma_ratio(n + 2.0, s - 1.0));
        u2.push_back(-std::expm1(lr));
    }
    return {WeightVector(n, std::move(u1)), WeightVector(n, std::move(u2))};
}

enum class NominationLoss { L1, L2 };

// Median nomination with odd set size k, tau = Psi^{-1}:
// L1: E[Psi^{-1}(T_i)];  L2: E[Psi^{-1}(T_i) / Psi'(Psi^{-1}(T_i))] / E[1 / Psi'(Psi^{-1}(T_i))].
inline WeightVector median_nom_weights(int n, int k, NominationLoss variant, double tol = 1e-13) {
    const Transform tau = Transform::median_nom(k);
    const double a = 0.5 * (k + 1.0);
    std::vector<double> u;
    for (int i = 0; i <= n; ++i) {
        const BetaIndex idx(i, n);
        if (variant == NominationLoss::L1) {
            u.push_back(quad_beta_weighted([&](Prob t) { return tau.eval(t); }, idx, tol).value * (n + 1));
            continue;
        }
        auto num = [&](Prob t) {
            const Prob x = inv_reg_inc_beta(t, a, a);
            return x.p / beta_pdf(x, a, a);
        };
        auto den = [&](Prob t) { return 1.0 / beta_pdf(inv_reg_inc_beta(t, a, a), a, a); };
        const double nv = quad_beta_weighted(num, idx, tol).value;
        const double dv = quad_beta_weighted(den, idx, tol).value;
        u.push_back(nv / dv);
    }
    return WeightVector(n, std::move(u));
}

// Maximum likelihood weights tau(i/n) for the scheme's transform.
inline WeightVector mle_nomination_weights(int n, const NominationScheme& scheme) {
    const Transform tau = scheme_transform(scheme);
    std::vector<double> u;
    for (int i = 0; i <= n; ++i) u.push_back(i == n ? 1.0 : tau.eval(Prob{static_cast<double>(i) / n,
                                                                            static_cast<double>(n - i) / n}));
    return WeightVector(n, std::move(u));
}

// ---------------------------------------------------------------- constrained and balanced

// Forces u_0 = 0 and u_n = 1 so the step function is a genuine cdf.
inline WeightVector constrained_weights(const WeightVector& v) {
    std::vector<double> u = v.u;
    u.front() = 0.0;
    u.back() = 1.0;
    return WeightVector(v.n, std::move(u));
}

// u_i = w_i u_{0,i} + (1 - w_i) u*_i.
inline WeightVector balanced_combine(const BalancedSpec& spec, const WeightVector& d0_star) {
    spec.validate();
    if (spec.w.size() != d0_star.u.size()) throw DomainError("balanced_combine: length mismatch");
    std::vector<double> u(spec.w.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        u[i] = spec.w[i] * spec.target_weights[i] + (1.0 - spec.w[i]) * d0_star.u[i];
    for (std::size_t i = 1; i < u.size(); ++i)
        if (u[i] < u[i - 1]) throw NonMonotoneResult(i, "balanced weights decrease");
    return WeightVector(d0_star.n, std::move(u));
}

struct GenuinenessReport {
    bool ok = true;
    std::vector<std::size_t> failures;  // i with min(u_{i+1}, u*_{i+1}) < max(u_i, u*_i)

    explicit operator bool() const noexcept { return ok; }
};

// Sufficient condition for every convex combination of the two step functions
// to be nondecreasing: min(u_{i+1}, u*_{i+1}) >= max(u_i, u*_i) for all i.
inline GenuinenessReport genuineness_check(const std::vector<double>& target, const std::vector<double>& invariant) {
    if (target.size() != invariant.size()) throw DomainError("genuineness_check: length mismatch");
    GenuinenessReport r;
    for (std::size_t i = 0; i + 1 < target.size(); ++i) {
        if (std::min(target[i + 1], invariant[i + 1]) < std::max(target[i], invariant[i])) {
            r.ok = false;
            r.failures.push_back(i);
        }
    }
    return r;
}

inline GenuinenessReport genuineness_check(const WeightVector& target, const WeightVector& invariant) {
    return genuineness_check(target.u, invariant.u);
}

// The maxima-nomination balanced recipe: target d0 = MLE, w = 1/2 below the
// largest observation and 1 at or above it, d0* = least squares weights.
inline WeightVector case_study_weights(int n, int k) {
    const WeightVector mle = mle_nomination_weights(n, NominationScheme{NominationKind::maxima, k, n});
    const WeightVector lse = maxima_lse_weights(n, k);
    BalancedSpec spec;
    spec.target_weights = mle.u;
    spec.w.assign(static_cast<std::size_t>(n) + 1, 0.5);
    spec.w.back() = 1.0;
    return balanced_combine(spec, lse);
}

// ---------------------------------------------------------------- step estimator

struct StepEstimator {
    std::vector<double> knots;   // y_1 < ... < y_n
    std::vector<double> values;  // u_0..u_n
    std::optional<double> tail;  // replaces u_n for t >= y_n when set
    std::optional<double> lower; // support endpoint a: value 0 for t < a

    int n() const noexcept { return static_cast<int>(knots.size()); }

    void validate() const {
        if (values.size() != knots.size() + 1) throw DomainError("step estimator needs n + 1 values for n knots");
        for (std::size_t i = 1; i < knots.size(); ++i)
            if (!(knots[i] > knots[i - 1])) throw DomainError("step estimator knots must be strictly increasing");
        if (tail && !(*tail >= 0.0 && *tail <= 1.0)) throw DomainError("tail value outside [0, 1]");
        if (lower && !knots.empty() && *lower > knots.front()) throw DomainError("lower endpoint above first knot");
    }
};

// Right-continuous evaluation: u_i on [y_i, y_{i+1}).
inline double evaluate(const StepEstimator& e, double t) {
    if (e.lower && t < *e.lower) return 0.0;
    const std::size_t i = static_cast<std::size_t>(std::upper_bound(e.knots.begin(), e.knots.end(), t) - e.knots.begin());
    if (i == e.knots.size() && e.tail) return *e.tail;
    return e.values[i];
}

// Smallest t with estimated cdf >= p. Returns -inf when the level below the
// first knot already reaches p (or the lower endpoint when set), +inf when no
// level does.
inline double quantile(const StepEstimator& e, double p) {
    if (e.lower && p <= 0.0) return *e.lower;
    if (e.values.front() >= p) return e.lower ? *e.lower : -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < e.values.size(); ++i) {
        const double v = (i == e.knots.size() && e.tail) ? *e.tail : e.values[i];
        if (v >= p) return e.knots[i - 1];
    }
    return std::numeric_limits<double>::infinity();
}

struct FitDiagnostics {
    std::size_t ties_resolved = 0;
    std::vector<std::string> warnings;
};

// Sorts the data into knots and attaches the weights. Tied values are
// separated by a deterministic jitter of 1e-9 times the data range, applied in
// stable rank order.
inline StepEstimator fit(std::vector<double> data, const WeightVector& v, std::optional<double> tail = std::nullopt,
                         FitDiagnostics* diag = nullptr) {
    if (data.empty()) throw DomainError("fit: no data");
    for (double x : data)
        if (!std::isfinite(x)) throw DomainError("fit: data must be finite");
    if (v.n != static_cast<int>(data.size()))
        throw DomainError("fit: weights are for n = " + std::to_string(v.n) + " but data has " +
                          std::to_string(data.size()) + " values");
    std::stable_sort(data.begin(), data.end());
    const double range = data.back() - data.front();
    const double eps = 1e-9 * (range > 0.0 ? range : std::max(1.0, std::fabs(data.front())));
    std::size_t ties = 0;
    for (std::size_t i = 1; i < data.size();) {
        if (data[i] > data[i - 1]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        const double base = data[i - 1];
        while (j < data.size() && data[j] == base) {
            data[j] = base + static_cast<double>(j - i + 1) * eps;
            ++ties;
            ++j;
        }
        i = j;
    }
    if (ties > 0) {
        std::stable_sort(data.begin(), data.end());
        for (std::size_t i = 1; i < data.size(); ++i)
            if (!(data[i] > data[i - 1])) throw DomainError("fit: ties could not be separated");
        if (diag) {
            diag->ties_resolved = ties;
            diag->warnings.push_back("ties detected: " + std::to_string(ties) + " value(s) jittered by " +
                                     std::to_string(eps));
        }
    }
    StepEstimator e{std::move(data), v.u, tail, std::nullopt};
    e.validate();
    return e;
}

} // namespace minimaxcdf
