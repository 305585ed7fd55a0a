#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "minimaxcdf/errors.hpp"
#include "minimaxcdf/estimator.hpp"
#include "minimaxcdf/model.hpp"
#include "minimaxcdf/nomination.hpp"
#include "minimaxcdf/quadrature.hpp"
#include "minimaxcdf/rng.hpp"
#include "minimaxcdf/sampling.hpp"
#include "minimaxcdf/special.hpp"

namespace minimaxcdf {

struct RiskReport {
    double value = 0.0;
    std::optional<double> std_error;               // Monte Carlo only
    std::optional<std::vector<double>> per_step;   // quadrature only
    bool divergent = false;
    std::optional<std::size_t> divergent_step;     // first offending i
    std::vector<std::size_t> divergent_steps;
};

// ---------------------------------------------------------------- quadrature risks

// sum_i w_i integral rho(tau(u_i) - tau(t)) H(t) C(n,i) t^i (1-t)^(n-i) dt, the
// same for every continuous F.
inline RiskReport invariant_risk(const WeightVector& v, const LossSpec& loss, const Transform& tau,
                                 double tol = 1e-13) {
    v.validate();
    loss.validate(v.n);
    RiskReport r;
    std::vector<double> per_step(v.size(), 0.0);
    for (int i = 0; i <= v.n; ++i) {
        const auto si = static_cast<std::size_t>(i);
        const double u = v[si];
        bool diverges = !std::isfinite(tau.eval(u));
        if (!diverges) {
            try {
                per_step[si] = loss.step_weight(i) * StepObjective(BetaIndex(i, v.n), loss, tau, tol).value(u);
                diverges = !std::isfinite(per_step[si]);
            } catch (const DivergentIntegral&) {
                diverges = true;
            }
        }
        if (diverges) {
            per_step[si] = std::numeric_limits<double>::infinity();
            r.divergent_steps.push_back(si);
        }
    }
    if (!r.divergent_steps.empty()) {
        r.divergent = true;
        r.divergent_step = r.divergent_steps.front();
        r.value = std::numeric_limits<double>::infinity();
    } else {
        double s = 0.0;
        for (double x : per_step) s += x;
        r.value = s;
    }
    r.per_step = std::move(per_step);
    return r;
}

namespace detail {

// Var tau(T_i).
inline double tau_variance(const BetaIndex& idx, const Transform& tau) {
    const int i = idx.i();
    const int n = idx.n();
    switch (tau.kind()) {
    case TransformKind::identity: {
        const double a = idx.alpha();
        const double b = idx.beta();
        return a * b / ((a + b) * (a + b) * (a + b + 1.0));
    }
    case TransformKind::power: {
        const double m1 = beta_moment(idx, tau.param());
        return beta_moment(idx, 2.0 * tau.param()) - m1 * m1;
    }
    case TransformKind::minima: {
        const double s = 1.0 / tau.param();
        const double m1 = beta_reflected_moment(idx, s);
        return beta_reflected_moment(idx, 2.0 * s) - m1 * m1;
    }
    case TransformKind::odds: {
        // T / (1 - T) is beta prime(a, b); its variance needs b > 2.
        if (n - i + 1 <= 2) throw DivergentMoment("Var[T/(1-T)] diverges for i >= n - 1");
        const double a = idx.alpha();
        const double b = idx.beta();
        return a * (a + b - 1.0) / ((b - 2.0) * (b - 1.0) * (b - 1.0));
    }
    case TransformKind::log_odds: return trigamma(i + 1.0) + trigamma(n - i + 1.0);
    case TransformKind::median_nom: {
        const double m = expected_tau(idx, tau);
        return quad_mean(idx, [&](Prob t) {
            const double d = tau.eval(t) - m;
            return d * d;
        });
    }
    }
    return 0.0;
}

} // namespace detail

// Risk of the squared-error best invariant estimator: (1/(n+1)) sum_i Var tau(T_i).
inline double sel_invariant_risk(const Transform& tau, int n) {
    if (n < 1) throw DomainError("sel_invariant_risk needs n >= 1");
    double s = 0.0;
    for (int i = 0; i <= n; ++i) s += detail::tau_variance(BetaIndex(i, n), tau);
    return s / (n + 1);
}

// integral (x - tau(t))^2 C(n,i) t^i (1-t)^(n-i) dt for a tau-scale level x.
inline double squared_step_risk(const BetaIndex& idx, double x, const Transform& tau, double tol = 1e-14) {
    auto f = [&](Prob t) {
        const double d = x - tau.eval(t);
        return d * d;
    };
    return quad_beta_weighted(f, idx, tol).value;
}

// R_0 of a step estimator of tau(F) with tau-scale levels d_0..d_n.
inline double squared_tau_risk(const std::vector<double>& d, const Transform& tau) {
    if (d.size() < 2) throw DomainError("squared_tau_risk needs n + 1 >= 2 levels");
    const int n = static_cast<int>(d.size()) - 1;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) s += squared_step_risk(BetaIndex(i, n), d[static_cast<std::size_t>(i)], tau);
    return s;
}

// Balanced risk of invariant d (tau-scale levels) for invariant target d0 and
// step weights w: sum_i w_i (d_i - d0_i)^2 / (n+1) + (1 - w_i) R_0 step term.
inline double balanced_invariant_risk(const BalancedSpec& spec, const std::vector<double>& d, const Transform& tau) {
    spec.validate();
    if (d.size() != spec.w.size()) throw DomainError("balanced_invariant_risk: length mismatch");
    const int n = static_cast<int>(d.size()) - 1;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const auto si = static_cast<std::size_t>(i);
        const double w = spec.w[si];
        const double diff = d[si] - spec.target_weights[si];
        s += w * diff * diff / (n + 1);
        if (w < 1.0) s += (1.0 - w) * squared_step_risk(BetaIndex(i, n), d[si], tau);
    }
    return s;
}

// Minimizes the per-step balanced objective q(x) = w (x - d0)^2 / (n+1) + (1 - w) R_0,i(x)
// directly: q is quadratic in x, so three integrated values fix its vertex.
inline double balanced_step_minimizer(const BalancedSpec& spec, const Transform& tau, int i) {
    spec.validate();
    const int n = static_cast<int>(spec.w.size()) - 1;
    const auto si = static_cast<std::size_t>(i);
    const BetaIndex idx(i, n);
    const double w = spec.w.at(si);
    const double d0 = spec.target_weights.at(si);
    auto q = [&](double x) {
        double v = w * (x - d0) * (x - d0) / (n + 1);
        if (w < 1.0) v += (1.0 - w) * squared_step_risk(idx, x, tau);
        return v;
    };
    const double q0 = q(0.0);
    const double qh = q(0.5);
    const double q1 = q(1.0);
    const double a = 2.0 * (q0 + q1 - 2.0 * qh);
    const double b = q1 - q0 - a;
    return -b / (2.0 * a);
}

struct DominanceIdentity {
    double gap = 0.0;       // R_w(alpha d0 + (1-alpha) d0*) - R_w(alpha d0 + (1-alpha) d1)
    double identity = 0.0;  // (1-alpha)^2 (R_0(d0*) - R_0(d1))
};

// Both sides of the dominance identity for constant weight alpha, with
// invariant d0, d0*, d1 given as tau-scale levels.
inline DominanceIdentity dominance_gap_quadrature(double alpha, const std::vector<double>& d0,
                                                  const std::vector<double>& d0_star, const std::vector<double>& d1,
                                                  const Transform& tau) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("dominance gap needs alpha in (0, 1)");
    if (d0.size() != d0_star.size() || d0.size() != d1.size()) throw DomainError("dominance gap: length mismatch");
    BalancedSpec spec{d0, std::vector<double>(d0.size(), alpha)};
    auto mix = [&](const std::vector<double>& d) {
        std::vector<double> out(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) out[i] = alpha * d0[i] + (1.0 - alpha) * d[i];
        return out;
    };
    DominanceIdentity r;
    r.gap = balanced_invariant_risk(spec, mix(d0_star), tau) - balanced_invariant_risk(spec, mix(d1), tau);
    r.identity = (1.0 - alpha) * (1.0 - alpha) * (squared_tau_risk(d0_star, tau) - squared_tau_risk(d1, tau));
    return r;
}

// ---------------------------------------------------------------- Monte Carlo

// Decision that reproduces F exactly; its loss is zero on every draw.
struct MatchTruth {};
using Decision = std::variant<StepEstimator, MatchTruth>;
using Rule = std::function<Decision(const std::vector<double>&)>;

inline Rule invariant_rule(const WeightVector& v, std::optional<double> tail = std::nullopt) {
    return [v, tail](const std::vector<double>& data) { return Decision{fit(data, v, tail)}; };
}

inline Rule truth_rule() {
    return [](const std::vector<double>&) { return Decision{MatchTruth{}}; };
}

struct McOptions {
    std::int64_t reps = 100000;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    double quad_tol = 1e-12;
};

namespace detail {

inline double pairwise_sum(std::span<const double> x) {
    if (x.size() <= 8) {
        double s = 0.0;
        for (double v : x) s += v;
        return s;
    }
    const std::size_t h = x.size() / 2;
    return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& x) {
    const double n = static_cast<double>(x.size());
    MeanSe r;
    r.mean = pairwise_sum(x) / n;
    if (x.size() < 2) return r;
    std::vector<double> d2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) d2[i] = (x[i] - r.mean) * (x[i] - r.mean);
    r.se = std::sqrt(pairwise_sum(d2) / (n - 1.0) / n);
    return r;
}

// Evaluates body(r, out) for every replicate r; each output slot depends only
// on r, so the result does not depend on the number of threads.
template <class Body>
void run_replicates(std::int64_t reps, unsigned threads, Body&& body) {
    if (reps < 1) throw DomainError("Monte Carlo needs reps >= 1");
    const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
    if (t == 1) {
        for (std::int64_t r = 0; r < reps; ++r) body(r);
        return;
    }
    std::vector<std::exception_ptr> errors(t);
    std::vector<std::thread> pool;
    pool.reserve(t);
    for (unsigned k = 0; k < t; ++k) {
        pool.emplace_back([&, k] {
            const std::int64_t lo = reps * k / t;
            const std::int64_t hi = reps * (k + 1) / t;
            try {
                for (std::int64_t r = lo; r < hi; ++r) body(r);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Pieces of the real line on which a step estimator is constant, mapped to
// the probability scale through F: [s[j], s[j+1]) carries level[j] and the
// invariant step index step[j].
struct ProbSegments {
    std::vector<Prob> s;
    std::vector<double> level;
    std::vector<int> step;
};

inline ProbSegments prob_segments(const StepEstimator& e, const Sampler& F) {
    ProbSegments out;
    out.s.push_back(Prob{0.0, 1.0});
    if (e.lower) {
        out.s.push_back(F.cdf(*e.lower));
        out.level.push_back(0.0);
        out.step.push_back(0);
    }
    for (std::size_t i = 0; i < e.knots.size(); ++i) {
        out.s.push_back(F.cdf(e.knots[i]));
        out.level.push_back(e.values[i]);
        out.step.push_back(static_cast<int>(i));
    }
    out.s.push_back(Prob{1.0, 0.0});
    out.level.push_back(e.tail ? *e.tail : e.values.back());
    out.step.push_back(static_cast<int>(e.knots.size()));
    return out;
}

// integral over s in [a, b] of f(s), split at the point c where the
// discrepancy changes sign.
template <class Fn>
double split_segment_integral(Fn&& f, Prob a, Prob b, double c, const QuadratureOptions& o) {
    if (!(b.p > a.p)) return 0.0;
    if (c > a.p && c < b.p) {
        const Prob m = Prob::from_p(c);
        return integrate_unit(f, a, m, o).value + integrate_unit(f, m, b, o).value;
    }
    return integrate_unit(f, a, b, o).value;
}

// Integrated loss of a cdf estimate against F: sum over pieces of
// integral rho(tau(u) - tau(s)) H(s) ds on the probability scale.
inline double integrated_loss(const StepEstimator& e, const Sampler& F, const LossSpec& loss, const Transform& tau,
                              const QuadratureOptions& o) {
    const ProbSegments seg = prob_segments(e, F);
    double total = 0.0;
    for (std::size_t j = 0; j < seg.level.size(); ++j) {
        const Prob a = seg.s[j];
        const Prob b = seg.s[j + 1];
        if (!(b.p > a.p)) continue;
        const double u = seg.level[j];
        const double tu = tau.eval(u);
        if (!std::isfinite(tu)) throw DivergentIntegral("tau of the estimate is infinite on a set of positive mass");
        auto f = [&](Prob s) {
            const double h = loss.H(s, tau);
            if (h == 0.0) return 0.0;
            return loss.rho(loss.rho.discrepancy(tu, tau.eval(s))) * h;
        };
        const double w = loss.step_weights.empty() ? 1.0 : loss.step_weight(seg.step[j]);
        total += w * split_segment_integral(f, a, b, u, o);
    }
    return total;
}

inline std::vector<double> draw_sample(const NominationScheme& scheme, const Sampler& F, std::uint64_t seed,
                                       std::int64_t r) {
    CounterRng rng = CounterRng::substream(seed, static_cast<std::uint64_t>(r));
    return generate(scheme, F, rng);
}

} // namespace detail

// Monte Carlo risk of a rule. Each replicate draws n observations (nominated
// ones when a scheme is given; the loss is then taken against the nominated
// cdf) and integrates the loss exactly on the probability scale.
inline RiskReport mc_risk(const Rule& rule, const Sampler& F, int n, const LossSpec& loss, const Transform& tau,
                          const McOptions& opts = {}, std::optional<NominationScheme> scheme = std::nullopt) {
    NominationScheme sch = scheme.value_or(NominationScheme{NominationKind::maxima, 1, n});
    sch.n = n;
    sch.validate();
    loss.validate(n);
    const Transform undo = scheme_transform(sch);
    const Sampler G = sch.k == 1 ? F
                                 : Sampler::custom(
                                       F.name() + "/" + sch.name(),
                                       [F, undo](double u) { return F.quantile(undo.eval(u)); },
                                       [F, sch](double x) { return nominated_cdf(sch, F.cdf(x)); });
    QuadratureOptions o;
    o.abs_tol = opts.quad_tol;
    std::vector<double> values(static_cast<std::size_t>(opts.reps));
    detail::run_replicates(opts.reps, opts.threads, [&](std::int64_t r) {
        const std::vector<double> data = detail::draw_sample(sch, F, opts.seed, r);
        const Decision d = rule(data);
        double v = 0.0;
        if (const auto* e = std::get_if<StepEstimator>(&d)) v = detail::integrated_loss(*e, G, loss, tau, o);
        values[static_cast<std::size_t>(r)] = v;
    });
    const auto ms = detail::mean_se(values);
    RiskReport rep;
    rep.value = ms.mean;
    rep.std_error = ms.se;
    return rep;
}

// ---------------------------------------------------------------- balanced loss by Monte Carlo

struct BalancedDecomposition {
    double r_h1 = 0.0;
    double r_h2 = 0.0;
    double total = 0.0;
    double se_h1 = 0.0;
    double se_h2 = 0.0;
    double se_total = 0.0;
    double max_residual = 0.0;  // max over draws of |total - (H1 part + H2 part)|
};

// For invariant d0 (spec.target_weights, tau scale), step weights w and
// offset g, evaluates on each draw the balanced loss of d0 + (1 - w) g and the
// two weighted squared losses of d0 and d0 + g, all on common nodes.
inline BalancedDecomposition balanced_risk_decompose(const BalancedSpec& spec, const std::vector<double>& g,
                                                     const Transform& tau, const Sampler& F,
                                                     const McOptions& opts = {}) {
    spec.validate();
    if (g.size() != spec.w.size()) throw DomainError("balanced_risk_decompose: offset length mismatch");
    const int n = static_cast<int>(g.size()) - 1;
    const NominationScheme iid{NominationKind::maxima, 1, n};
    QuadratureOptions o;
    o.abs_tol = opts.quad_tol;
    const auto reps = static_cast<std::size_t>(opts.reps);
    std::vector<double> h1(reps), h2(reps), tot(reps), resid(reps);
    detail::run_replicates(opts.reps, opts.threads, [&](std::int64_t r) {
        std::vector<double> y = detail::draw_sample(iid, F, opts.seed, r);
        std::sort(y.begin(), y.end());
        std::vector<Prob> s{Prob{0.0, 1.0}};
        for (double x : y) s.push_back(F.cdf(x));
        s.push_back(Prob{1.0, 0.0});
        double a_sum = 0.0;
        double b_sum = 0.0;
        double t_sum = 0.0;
        double res = 0.0;
        std::vector<QuadratureNode> nodes;
        for (int i = 0; i <= n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            if (!(s[si + 1].p > s[si].p)) continue;
            const double w = spec.w[si];
            const double d0 = spec.target_weights[si];
            const double d = d0 + (1.0 - w) * g[si];
            auto total_f = [&](Prob t) {
                const double th = tau.eval(t);
                return w * (d - d0) * (d - d0) + (1.0 - w) * (d - th) * (d - th);
            };
            nodes.clear();
            integrate_unit(total_f, s[si], s[si + 1], o, &nodes);
            double ta = 0.0;
            double tb = 0.0;
            double tt = 0.0;
            for (const auto& nd : nodes) {
                const double th = tau.eval(nd.t);
                ta += nd.weight * w * (1.0 - w) * (d0 - th) * (d0 - th);
                tb += nd.weight * (1.0 - w) * (1.0 - w) * (d0 + g[si] - th) * (d0 + g[si] - th);
                tt += nd.weight * total_f(nd.t);
            }
            a_sum += ta;
            b_sum += tb;
            t_sum += tt;
            res = std::max(res, std::fabs(tt - ta - tb));
        }
        h1[static_cast<std::size_t>(r)] = a_sum;
        h2[static_cast<std::size_t>(r)] = b_sum;
        tot[static_cast<std::size_t>(r)] = t_sum;
        resid[static_cast<std::size_t>(r)] = std::max(res, std::fabs(t_sum - a_sum - b_sum));
    });
    BalancedDecomposition out;
    const auto m1 = detail::mean_se(h1);
    const auto m2 = detail::mean_se(h2);
    const auto mt = detail::mean_se(tot);
    out.r_h1 = m1.mean;
    out.se_h1 = m1.se;
    out.r_h2 = m2.mean;
    out.se_h2 = m2.se;
    out.total = mt.mean;
    out.se_total = mt.se;
    out.max_residual = *std::max_element(resid.begin(), resid.end());
    return out;
}

struct DominanceGap {
    double gap = 0.0;
    double gap_se = 0.0;
    double identity = 0.0;     // (1-alpha)^2 (R_0(d0*) - R_0(d1)) on the same draws
    double identity_se = 0.0;
    double max_residual = 0.0;
};

// Monte Carlo version with common random numbers. Decisions are read as
// tau-scale step functions; d0 and d1 may be arbitrary rules.
inline DominanceGap dominance_gap(double alpha, const Rule& d0, const WeightVector& d0_star, const Rule& d1,
                                  const Sampler& F, const Transform& tau, const McOptions& opts = {}) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("dominance gap needs alpha in (0, 1)");
    const int n = d0_star.n;
    const NominationScheme iid{NominationKind::maxima, 1, n};
    QuadratureOptions o;
    o.abs_tol = opts.quad_tol;
    const auto reps = static_cast<std::size_t>(opts.reps);
    std::vector<double> gaps(reps), ids(reps), resid(reps);
    detail::run_replicates(opts.reps, opts.threads, [&](std::int64_t r) {
        const std::vector<double> data = detail::draw_sample(iid, F, opts.seed, r);
        const Decision a = d0(data);
        const Decision b = Decision{fit(data, d0_star)};
        const Decision c = d1(data);
        std::vector<double> cuts;
        for (const Decision* dec : {&a, &b, &c}) {
            if (const auto* e = std::get_if<StepEstimator>(dec)) {
                cuts.insert(cuts.end(), e->knots.begin(), e->knots.end());
                if (e->lower) cuts.push_back(*e->lower);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        // Level of a decision on the piece starting at x, or nullopt for the truth.
        auto level = [](const Decision& dec, double x) -> std::optional<double> {
            if (const auto* e = std::get_if<StepEstimator>(&dec)) return evaluate(*e, x);
            return std::nullopt;
        };
        double gap = 0.0;
        double id = 0.0;
        double res = 0.0;
        std::vector<QuadratureNode> nodes;
        for (std::size_t j = 0; j <= cuts.size(); ++j) {
            const Prob lo = j == 0 ? Prob{0.0, 1.0} : F.cdf(cuts[j - 1]);
            const Prob hi = j == cuts.size() ? Prob{1.0, 0.0} : F.cdf(cuts[j]);
            if (!(hi.p > lo.p)) continue;
            const double x = j == 0 ? -std::numeric_limits<double>::infinity() : cuts[j - 1];
            const auto la = level(a, x);
            const auto lb = level(b, x);
            const auto lc = level(c, x);
            auto lv = [](const std::optional<double>& l, double th) { return l ? *l : th; };
            auto balanced = [&](double dd, double t0, double th) {
                return alpha * (dd - t0) * (dd - t0) + (1.0 - alpha) * (dd - th) * (dd - th);
            };
            auto gap_f = [&](Prob t) {
                const double th = tau.eval(t);
                const double t0 = lv(la, th);
                return balanced(alpha * t0 + (1.0 - alpha) * lv(lb, th), t0, th) -
                       balanced(alpha * t0 + (1.0 - alpha) * lv(lc, th), t0, th);
            };
            nodes.clear();
            auto shape = [&](Prob t) { return 1.0 + std::fabs(gap_f(t)); };
            integrate_unit(shape, lo, hi, o, &nodes);
            double pg = 0.0;
            double pi = 0.0;
            for (const auto& nd : nodes) {
                const double th = tau.eval(nd.t);
                const double eb = lv(lb, th) - th;
                const double ec = lv(lc, th) - th;
                const double gv = gap_f(nd.t);
                const double iv = (1.0 - alpha) * (1.0 - alpha) * (eb * eb - ec * ec);
                pg += nd.weight * gv;
                pi += nd.weight * iv;
            }
            gap += pg;
            id += pi;
            res = std::max(res, std::fabs(pg - pi));
        }
        gaps[static_cast<std::size_t>(r)] = gap;
        ids[static_cast<std::size_t>(r)] = id;
        resid[static_cast<std::size_t>(r)] = std::max(res, std::fabs(gap - id));
    });
    DominanceGap out;
    const auto mg = detail::mean_se(gaps);
    const auto mi = detail::mean_se(ids);
    out.gap = mg.mean;
    out.gap_se = mg.se;
    out.identity = mi.mean;
    out.identity_se = mi.se;
    out.max_residual = *std::max_element(resid.begin(), resid.end());
    return out;
}

// ---------------------------------------------------------------- constant risk

struct DistributionFreeReport {
    bool pass = true;
    std::vector<std::string> samplers;
    std::vector<RiskReport> risks;
    std::optional<double> reference;  // quadrature value when known
    std::vector<std::string> failures;
};

// Runs the same rule under every sampler with common random numbers and checks
// that the risks agree pairwise (and with the reference) within 3 combined
// standard errors.
inline DistributionFreeReport distribution_free_check(const Rule& rule, int n, const LossSpec& loss,
                                                      const Transform& tau, const std::vector<Sampler>& samplers,
                                                      const McOptions& opts = {},
                                                      std::optional<double> reference = std::nullopt) {
    if (samplers.size() < 2) throw DomainError("distribution_free_check needs at least two samplers");
    DistributionFreeReport rep;
    rep.reference = reference;
    for (const auto& F : samplers) {
        rep.samplers.push_back(F.name());
        rep.risks.push_back(mc_risk(rule, F, n, loss, tau, opts));
    }
    auto fmt = [](double x) {
        std::ostringstream os;
        os.precision(6);
        os << x;
        return os.str();
    };
    for (std::size_t a = 0; a < samplers.size(); ++a) {
        for (std::size_t b = a + 1; b < samplers.size(); ++b) {
            const double d = std::fabs(rep.risks[a].value - rep.risks[b].value);
            const double se = std::hypot(*rep.risks[a].std_error, *rep.risks[b].std_error);
            if (d > 3.0 * se) {
                rep.pass = false;
                rep.failures.push_back(rep.samplers[a] + " vs " + rep.samplers[b] + ": difference " + fmt(d) +
                                       " exceeds 3 SE = " + fmt(3.0 * se));
            }
        }
        if (reference) {
            const double d = std::fabs(rep.risks[a].value - *reference);
            if (d > 3.0 * *rep.risks[a].std_error) {
                rep.pass = false;
                rep.failures.push_back(rep.samplers[a] + " vs quadrature: difference " + fmt(d) + " exceeds 3 SE = " +
                                       fmt(3.0 * *rep.risks[a].std_error));
            }
        }
    }
    return rep;
}

inline DistributionFreeReport distribution_free_check(const WeightVector& v, const LossSpec& loss,
                                                      const Transform& tau, const std::vector<Sampler>& samplers,
                                                      const McOptions& opts = {}) {
    const RiskReport q = invariant_risk(v, loss, tau);
    if (q.divergent) throw DivergentObjective(*q.divergent_step, "risk of the weights is infinite");
    return distribution_free_check(invariant_rule(v), v.n, loss, tau, samplers, opts, q.value);
}

} // namespace minimaxcdf
