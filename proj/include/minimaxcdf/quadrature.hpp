#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature on sub-intervals of [0, 1].
//
// Each piece of the integration range starts from a mesh whose endpoint panels
// shrink geometrically toward both ends; panels are then bisected (dyadically)
// in order of decreasing error estimate. Pieces lying in the upper half of
// [0, 1] are integrated in the complement coordinate q = 1 - t, so integrable
// singularities at t = 1 are resolved as finely as those at t = 0.
//
// Divergence is detected from the sequence of partial sums over the panels
// adjacent to an endpoint: growth by more than 2x across three successive
// endpoint refinements (power-type blow-up), or shell contributions that stop
// decaying (logarithmic blow-up).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <queue>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "minimaxcdf/errors.hpp"
#include "minimaxcdf/special.hpp"

namespace minimaxcdf {

struct QuadratureResult {
    double value = 0.0;
    double abs_error_estimate = 0.0;
    bool converged = false;
    std::size_t evaluations = 0;
};

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    std::size_t max_panels = 20000;
    // Number of geometric levels laid down toward each end of a piece before
    // adaptive refinement starts. 0 gives a single starting panel.
    int grading_levels = 3;
};

// A quadrature node in probability coordinates and its weight, as produced by
// the final mesh of an integration. Used to build discretized measures.
struct QuadratureNode {
    Prob t;
    double weight;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
    double x0;
    double x1;
    bool complement;  // x is q = 1 - t rather than t

    Prob at(double x) const noexcept { return complement ? Prob::from_q(x) : Prob::from_p(x); }
};

struct Panel {
    double a;
    double b;
    double value;
    double error;
    int piece;
    int chain;  // endpoint chain this panel terminates, -1 if interior
};

struct PanelOrder {
    bool operator()(const Panel& l, const Panel& r) const noexcept { return l.error < r.error; }
};

struct EndpointChain {
    bool at_left;
    double shells = 0.0;
    std::vector<double> regions;
    std::vector<double> shell_values;
};

template <class F>
double call_integrand(F& f, Prob t) {
    if constexpr (std::is_invocable_r_v<double, F&, Prob>) {
        return f(t);
    } else {
        return f(t.p);
    }
}

template <class F>
std::pair<double, double> kronrod15(F& f, const Piece& piece, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = call_integrand(f, piece.at(center));
    double kronrod = kKronrodWeights[7] * fc;
    double gauss = kGaussWeights[3] * fc;
    for (std::size_t k = 0; k < 7; ++k) {
        const double dx = half * kKronrodNodes[k];
        const double sum = call_integrand(f, piece.at(center - dx)) + call_integrand(f, piece.at(center + dx));
        kronrod += kKronrodWeights[k] * sum;
        if (k % 2 == 1) gauss += kGaussWeights[k / 2] * sum;
    }
    kronrod *= half;
    gauss *= half;
    if (std::isnan(kronrod)) throw DomainError("quadrature: integrand returned NaN");
    if (!std::isfinite(kronrod)) throw DivergentIntegral("quadrature: integrand is not finite");
    return {kronrod, std::fabs(kronrod - gauss)};
}

inline bool power_blowup(const std::vector<double>& r, double floor) {
    const std::size_t m = r.size();
    if (m < 5) return false;
    const double last = r[m - 1];
    if (!(last > floor)) return false;
    for (std::size_t j = m - 3; j < m; ++j)
        if (!(r[j] > r[j - 1])) return false;
    return r[m - 1] > 2.0 * r[m - 4] && r[m - 2] > 2.0 * r[m - 5];
}

inline bool shells_stalled(const std::vector<double>& s, std::size_t window, double floor) {
    if (s.size() < window + 1) return false;
    const std::size_t m = s.size();
    if (!(s[m - 1] > floor)) return false;
    for (std::size_t j = m - window; j < m; ++j)
        if (!(s[j] >= 0.98 * s[j - 1])) return false;
    return true;
}

// Splits [lo, hi] at t = 1/2 and maps the upper part to complement coordinates.
inline std::vector<Piece> split_pieces(Prob lo, Prob hi) {
    std::vector<Piece> pieces;
    if (lo.p < 0.5) {
        const double end = std::min(hi.p, 0.5);
        if (end > lo.p) pieces.push_back({lo.p, end, false});
    }
    if (hi.p > 0.5) {
        const double q_lo = hi.q;
        const double q_hi = std::min(lo.q, 0.5);
        if (q_hi > q_lo) pieces.push_back({q_lo, q_hi, true});
    }
    return pieces;
}

} // namespace detail

// Integrates f over [lo, hi] in probability coordinates. f may take either a
// double t or a Prob (t together with 1 - t).
template <class F>
QuadratureResult integrate_unit(F&& f, Prob lo, Prob hi, const QuadratureOptions& opts = {},
                                std::vector<QuadratureNode>* nodes = nullptr) {
    using namespace detail;
    if (!(lo.p >= 0.0 && hi.p <= 1.0 && lo.p <= hi.p))
        throw DomainError("integrate_unit: need 0 <= lo <= hi <= 1");

    QuadratureResult result;
    const std::vector<Piece> pieces = split_pieces(lo, hi);
    if (pieces.empty()) {
        result.converged = true;
        return result;
    }

    std::vector<EndpointChain> chains;
    std::priority_queue<Panel, std::vector<Panel>, PanelOrder> heap;
    std::vector<Panel> finished;
    double total_value = 0.0;
    double total_error = 0.0;

    auto evaluate = [&](int piece, double a, double b, int chain) {
        auto [v, e] = kronrod15(f, pieces[piece], a, b);
        result.evaluations += 15;
        total_value += v;
        total_error += e;
        return Panel{a, b, v, e, piece, chain};
    };

    for (int pi = 0; pi < static_cast<int>(pieces.size()); ++pi) {
        const Piece& pc = pieces[pi];
        const double len = pc.x1 - pc.x0;
        // x0 is always an end of the requested range; x1 may be the internal split at t = 1/2.
        const bool left_singular = true;
        const bool right_singular = !(pc.x1 == 0.5 && pieces.size() > 1);
        std::vector<double> cuts{pc.x0};
        for (int j = opts.grading_levels + 1; j >= 2; --j) cuts.push_back(pc.x0 + len * std::ldexp(1.0, -j));
        if (opts.grading_levels > 0) cuts.push_back(pc.x0 + 0.5 * len);
        for (int j = 2; j <= opts.grading_levels + 1; ++j) cuts.push_back(pc.x1 - len * std::ldexp(1.0, -j));
        cuts.push_back(pc.x1);
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        const std::size_t npanels = cuts.size() - 1;
        for (std::size_t k = 0; k < npanels; ++k) {
            int chain = -1;
            if (npanels == 1) {
                // A single panel touches both ends; track the left one only.
                if (left_singular || right_singular) {
                    chains.push_back({left_singular, 0.0, {}, {}});
                    chain = static_cast<int>(chains.size()) - 1;
                }
            } else if (k == 0 && left_singular) {
                chains.push_back({true, 0.0, {}, {}});
                chain = static_cast<int>(chains.size()) - 1;
            } else if (k + 1 == npanels && right_singular) {
                chains.push_back({false, 0.0, {}, {}});
                chain = static_cast<int>(chains.size()) - 1;
            }
            Panel p = evaluate(pi, cuts[k], cuts[k + 1], chain);
            if (chain >= 0) chains[chain].regions.push_back(std::fabs(p.value));
            heap.push(p);
        }
    }

    auto tolerance = [&] { return std::max(opts.abs_tol, opts.rel_tol * std::fabs(total_value)); };
    auto stalled_chain = [&](std::size_t window) {
        for (const auto& c : chains)
            if (shells_stalled(c.shell_values, window, 1e-3 * opts.abs_tol)) return true;
        return false;
    };

    std::size_t panel_count = heap.size();
    bool budget_exhausted = false;
    while (!heap.empty() && total_error > tolerance()) {
        if (panel_count >= opts.max_panels) {
            budget_exhausted = true;
            break;
        }
        Panel p = heap.top();
        heap.pop();
        const double mid = 0.5 * (p.a + p.b);
        if (!(mid > p.a && mid < p.b) || p.b - p.a < 1e-300) {
            finished.push_back(p);
            continue;
        }
        total_value -= p.value;
        total_error -= p.error;
        int left_chain = -1;
        int right_chain = -1;
        if (p.chain >= 0) {
            if (chains[p.chain].at_left) left_chain = p.chain; else right_chain = p.chain;
        }
        Panel l = evaluate(p.piece, p.a, mid, left_chain);
        Panel r = evaluate(p.piece, mid, p.b, right_chain);
        heap.push(l);
        heap.push(r);
        ++panel_count;

        if (p.chain >= 0) {
            EndpointChain& c = chains[p.chain];
            const Panel& end_panel = c.at_left ? l : r;
            const Panel& shell = c.at_left ? r : l;
            c.shells += std::fabs(shell.value);
            c.shell_values.push_back(std::fabs(shell.value));
            c.regions.push_back(c.shells + std::fabs(end_panel.value));
            if (power_blowup(c.regions, opts.abs_tol))
                throw DivergentIntegral("quadrature: endpoint partial sums grow without bound");
            if (c.shell_values.size() >= 40 && shells_stalled(c.shell_values, 12, 1e-3 * opts.abs_tol))
                throw DivergentIntegral("quadrature: endpoint contributions do not decay");
        }
    }

    const bool exhausted = budget_exhausted || heap.empty();
    if (exhausted && total_error > tolerance() && stalled_chain(6))
        throw DivergentIntegral("quadrature: endpoint contributions do not decay");

    // Fresh summation of the final mesh.
    std::vector<Panel> mesh = std::move(finished);
    while (!heap.empty()) {
        mesh.push_back(heap.top());
        heap.pop();
    }
    std::sort(mesh.begin(), mesh.end(), [](const Panel& x, const Panel& y) { return std::fabs(x.value) < std::fabs(y.value); });
    double value = 0.0;
    double error = 0.0;
    for (const Panel& p : mesh) {
        value += p.value;
        error += p.error;
    }
    result.value = value;
    result.abs_error_estimate = error;
    result.converged = error <= std::max(opts.abs_tol, opts.rel_tol * std::fabs(value));

    if (nodes != nullptr) {
        nodes->clear();
        nodes->reserve(mesh.size() * 15);
        for (const Panel& p : mesh) {
            const Piece& pc = pieces[p.piece];
            const double center = 0.5 * (p.a + p.b);
            const double half = 0.5 * (p.b - p.a);
            nodes->push_back({pc.at(center), half * kKronrodWeights[7]});
            for (std::size_t k = 0; k < 7; ++k) {
                const double dx = half * kKronrodNodes[k];
                nodes->push_back({pc.at(center - dx), half * kKronrodWeights[k]});
                nodes->push_back({pc.at(center + dx), half * kKronrodWeights[k]});
            }
        }
    }
    return result;
}

template <class F>
QuadratureResult integrate_unit(F&& f, double lo, double hi, const QuadratureOptions& opts = {}) {
    return integrate_unit(std::forward<F>(f), Prob::from_p(lo), Prob::from_p(hi), opts);
}

// C(n, i) t^i (1 - t)^(n - i), evaluated in log space.
inline double binomial_kernel(const BetaIndex& idx, Prob t) {
    const int i = idx.i();
    const int n = idx.n();
    if (t.p <= 0.0) return i == 0 ? 1.0 : 0.0;
    if (t.q <= 0.0) return i == n ? 1.0 : 0.0;
    return std::exp(log_binomial(n, i) + i * std::log(t.p) + (n - i) * std::log(t.q));
}

// Integral over (0, 1) of g(t) C(n, i) t^i (1 - t)^(n - i); equals E[g(T_i)] / (n + 1).
// Throws DivergentIntegral when the integral is detected to be infinite.
template <class G>
QuadratureResult quad_beta_weighted(G&& g, const BetaIndex& idx, double tol) {
    if (!(tol > 0.0)) throw DomainError("quad_beta_weighted: tolerance must be positive");
    auto integrand = [&](Prob t) { return detail::call_integrand(g, t) * binomial_kernel(idx, t); };
    QuadratureOptions opts;
    opts.abs_tol = tol;
    return integrate_unit(integrand, Prob{0.0, 1.0}, Prob{1.0, 0.0}, opts);
}

} // namespace minimaxcdf
