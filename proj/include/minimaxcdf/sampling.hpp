#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "minimaxcdf/errors.hpp"
#include "minimaxcdf/estimator.hpp"
#include "minimaxcdf/model.hpp"
#include "minimaxcdf/nomination.hpp"
#include "minimaxcdf/rng.hpp"
#include "minimaxcdf/special.hpp"

namespace minimaxcdf {

enum class SamplerFamily { uniform01, normal, exponential, custom };

// A continuous distribution given by its quantile function and cdf. The seed
// is not part of the sampler; every draw takes its stream from the caller.
class Sampler {
public:
    using QuantileFn = std::function<double(double)>;
    using CdfFn = std::function<Prob(double)>;

    static Sampler uniform01() { return Sampler(SamplerFamily::uniform01, 0.0, 1.0, "uniform"); }

    static Sampler normal(double mu = 0.0, double sigma = 1.0) {
        if (!(sigma > 0.0) || !std::isfinite(mu)) throw DomainError("normal sampler needs finite mu and sigma > 0");
        return Sampler(SamplerFamily::normal, mu, sigma, "normal");
    }

    static Sampler exponential(double lambda = 1.0) {
        if (!(lambda > 0.0)) throw DomainError("exponential sampler needs lambda > 0");
        return Sampler(SamplerFamily::exponential, lambda, 0.0, "exponential");
    }

    // quantile must be increasing on (0, 1) and cdf its inverse.
    static Sampler custom(std::string name, QuantileFn quantile, CdfFn cdf) {
        Sampler s(SamplerFamily::custom, 0.0, 0.0, std::move(name));
        s.quantile_ = std::move(quantile);
        s.cdf_ = std::move(cdf);
        return s;
    }

    SamplerFamily family() const noexcept { return family_; }
    const std::string& name() const noexcept { return name_; }

    double quantile(double u) const {
        if (!(u > 0.0 && u < 1.0)) throw DomainError("sampler quantile needs u in (0, 1)");
        switch (family_) {
        case SamplerFamily::uniform01: return u;
        case SamplerFamily::normal: {
            const boost::math::normal_distribution<double> d(a_, b_);
            if (u > 0.5) return boost::math::quantile(boost::math::complement(d, 1.0 - u));
            return boost::math::quantile(d, u);
        }
        case SamplerFamily::exponential: return -std::log1p(-u) / a_;
        case SamplerFamily::custom: return quantile_(u);
        }
        return u;
    }

    Prob cdf(double x) const {
        switch (family_) {
        case SamplerFamily::uniform01:
            if (x <= 0.0) return Prob{0.0, 1.0};
            if (x >= 1.0) return Prob{1.0, 0.0};
            return Prob::from_p(x);
        case SamplerFamily::normal: {
            const double z = (x - a_) / (b_ * std::sqrt(2.0));
            return Prob{0.5 * std::erfc(-z), 0.5 * std::erfc(z)};
        }
        case SamplerFamily::exponential:
            if (x <= 0.0) return Prob{0.0, 1.0};
            return Prob{-std::expm1(-a_ * x), std::exp(-a_ * x)};
        case SamplerFamily::custom: return cdf_(x);
        }
        return Prob::from_p(x);
    }

private:
    Sampler(SamplerFamily f, double a, double b, std::string name) : family_(f), a_(a), b_(b), name_(std::move(name)) {}

    SamplerFamily family_;
    double a_;
    double b_;
    std::string name_;
    QuantileFn quantile_;
    CdfFn cdf_;
};

// "uniform", "normal", "normal:mu,sigma", "exponential", "exponential:lambda".
inline Sampler parse_sampler(const std::string& text) {
    const auto [head, arg] = detail::split_spec(text);
    if (head == "uniform" || head == "uniform01") {
        if (!arg.empty()) throw DomainError("uniform sampler takes no parameters");
        return Sampler::uniform01();
    }
    if (head == "normal") {
        if (arg.empty()) return Sampler::normal();
        const auto comma = arg.find(',');
        if (comma == std::string::npos) throw DomainError("normal sampler expects normal:mu,sigma");
        return Sampler::normal(detail::parse_number(arg.substr(0, comma), "normal"),
                               detail::parse_number(arg.substr(comma + 1), "normal"));
    }
    if (head == "exponential" || head == "exp") {
        if (arg.empty()) return Sampler::exponential();
        return Sampler::exponential(detail::parse_number(arg, "exponential"));
    }
    throw DomainError("unknown sampler '" + text + "'");
}

// One nominated observation from k uniforms: the selected uniform order
// statistic is pushed through the quantile function once.
inline double draw_nominated(const NominationScheme& scheme, const Sampler& F, CounterRng& rng,
                             std::vector<double>& scratch) {
    scratch.resize(static_cast<std::size_t>(scheme.k));
    for (double& x : scratch) x = rng.uniform();
    double u = 0.0;
    switch (scheme.kind) {
    case NominationKind::maxima: u = *std::max_element(scratch.begin(), scratch.end()); break;
    case NominationKind::minima: u = *std::min_element(scratch.begin(), scratch.end()); break;
    case NominationKind::median: {
        const auto mid = scratch.begin() + scheme.k / 2;
        std::nth_element(scratch.begin(), mid, scratch.end());
        u = *mid;
        break;
    }
    }
    return F.quantile(u);
}

inline std::vector<double> generate(const NominationScheme& scheme, const Sampler& F, CounterRng& rng) {
    scheme.validate();
    std::vector<double> out(static_cast<std::size_t>(scheme.n));
    std::vector<double> scratch;
    for (double& y : out) y = draw_nominated(scheme, F, rng, scratch);
    return out;
}

inline std::vector<double> generate(const NominationScheme& scheme, const Sampler& F, std::uint64_t seed) {
    CounterRng rng(seed);
    return generate(scheme, F, rng);
}

// Cdf of a nominated observation, carried with its complement.
inline Prob nominated_cdf(const NominationScheme& s, const Prob& base) {
    switch (s.kind) {
    case NominationKind::maxima: {
        const double p = std::pow(base.p, s.k);
        return Prob{p, base.p < 0.5 ? 1.0 - p : -std::expm1(s.k * std::log1p(-base.q))};
    }
    case NominationKind::minima: {
        const double q = std::pow(base.q, s.k);
        return Prob{base.q < 0.5 ? 1.0 - q : -std::expm1(s.k * std::log1p(-base.p)), q};
    }
    case NominationKind::median: {
        const double a = 0.5 * (s.k + 1.0);
        return reg_inc_beta(base, a, a);
    }
    }
    return base;
}

// tau(F_nom(t)) on a grid, with tau undoing the scheme; it reproduces F.
inline std::vector<std::pair<double, double>> true_tau_curve(const NominationScheme& scheme, const Sampler& F,
                                                             const std::vector<double>& grid) {
    scheme.validate();
    const Transform tau = scheme_transform(scheme);
    std::vector<std::pair<double, double>> out;
    out.reserve(grid.size());
    for (double t : grid) {
        const Prob nom = nominated_cdf(scheme, F.cdf(t));
        double v = 0.0;
        if (nom.p <= 0.0) v = 0.0;
        else if (nom.q <= 0.0) v = 1.0;
        else v = tau.eval(nom);
        out.emplace_back(t, v);
    }
    return out;
}

// F_n: levels i/n with tail 1.
inline StepEstimator empirical_cdf(const std::vector<double>& data, FitDiagnostics* diag = nullptr) {
    const int n = static_cast<int>(data.size());
    if (n < 1) throw DomainError("empirical_cdf: no data");
    std::vector<double> u(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) u[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
    return fit(data, WeightVector(n, std::move(u)), 1.0, diag);
}

// One-sample Kolmogorov-Smirnov distance sup |F_n - G|.
inline double ks_statistic(std::vector<double> data, const std::function<double(double)>& cdf) {
    if (data.empty()) throw DomainError("ks_statistic: no data");
    std::sort(data.begin(), data.end());
    const double n = static_cast<double>(data.size());
    double d = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double g = cdf(data[i]);
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - g, g - static_cast<double>(i) / n});
    }
    return d;
}

// Asymptotic critical value of the KS distance at level alpha.
inline double ks_critical_value(std::size_t n, double alpha) {
    return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(static_cast<double>(n));
}

} // namespace minimaxcdf
