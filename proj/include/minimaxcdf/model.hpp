#pragma once

// Loss vocabulary: bowl-shaped rho, monotone transforms tau, positive weights H
// on (0, 1), and the invariant step weights of a weighted integrated loss.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "minimaxcdf/errors.hpp"
#include "minimaxcdf/special.hpp"

namespace minimaxcdf {

// ---------------------------------------------------------------- rho

enum class RhoKind { squared, absolute, lp, linex, entropy_ratio, custom };

class Rho {
public:
    using Fn = std::function<double(double)>;

    static Rho squared() { return Rho(RhoKind::squared, 2.0, "squared"); }
    static Rho absolute() { return Rho(RhoKind::absolute, 1.0, "absolute"); }
    static Rho lp(double p) {
        if (!(p > 0.0) || !std::isfinite(p)) throw DomainError("lp loss needs p > 0");
        return Rho(RhoKind::lp, p, "lp:" + format_param(p));
    }
    static Rho linex(double a) {
        if (a == 0.0 || !std::isfinite(a)) throw DomainError("linex loss needs a != 0");
        return Rho(RhoKind::linex, a, "linex:" + format_param(a));
    }
    // rho(z) = exp(-z) + z - 1 applied to z = log d - log tau(F): the ratio loss
    // 1/r + log r - 1 in r = d / tau(F).
    static Rho entropy_ratio() { return Rho(RhoKind::entropy_ratio, 0.0, "entropy"); }

    // A user-supplied bowl-shaped loss. The shape is checked on a sign grid.
    static Rho custom(std::string name, Fn value, Fn derivative) {
        Rho r(RhoKind::custom, 0.0, std::move(name));
        r.value_ = std::move(value);
        r.deriv_ = std::move(derivative);
        r.check_bowl();
        return r;
    }

    RhoKind kind() const noexcept { return kind_; }
    double param() const noexcept { return param_; }
    const std::string& name() const noexcept { return name_; }

    // Discrepancies are differences of logs rather than of values.
    bool log_scale() const noexcept { return kind_ == RhoKind::entropy_ratio; }
    // Convex in z, so the per-step objective is unimodal in tau(u).
    bool convex() const noexcept {
        switch (kind_) {
        case RhoKind::squared:
        case RhoKind::absolute:
        case RhoKind::linex:
        case RhoKind::entropy_ratio: return true;
        case RhoKind::lp: return param_ >= 1.0;
        case RhoKind::custom: return false;
        }
        return false;
    }

    double operator()(double z) const {
        switch (kind_) {
        case RhoKind::squared: return z * z;
        case RhoKind::absolute: return std::fabs(z);
        case RhoKind::lp: return std::pow(std::fabs(z), param_);
        case RhoKind::linex: return std::expm1(param_ * z) - param_ * z;
        case RhoKind::entropy_ratio: return std::expm1(-z) + z;
        case RhoKind::custom: return value_(z);
        }
        return 0.0;
    }

    // Almost-everywhere derivative; 0 at z = 0 for the non-differentiable cases.
    double derivative(double z) const {
        switch (kind_) {
        case RhoKind::squared: return 2.0 * z;
        case RhoKind::absolute: return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
        case RhoKind::lp:
            if (z == 0.0) return 0.0;
            return (z > 0.0 ? 1.0 : -1.0) * param_ * std::pow(std::fabs(z), param_ - 1.0);
        case RhoKind::linex: return param_ * std::expm1(param_ * z);
        case RhoKind::entropy_ratio: return -std::expm1(-z);
        case RhoKind::custom: return deriv_(z);
        }
        return 0.0;
    }

    // The argument rho is applied to when the decision has transform value
    // tau_u and the truth tau_t.
    double discrepancy(double tau_u, double tau_t) const {
        if (!log_scale()) return tau_u - tau_t;
        if (!(tau_u > 0.0) || !(tau_t > 0.0))
            throw DomainError("entropy loss needs positive decision and target values");
        return std::log(tau_u) - std::log(tau_t);
    }

private:
    Rho(RhoKind kind, double param, std::string name) : kind_(kind), param_(param), name_(std::move(name)) {}

    static std::string format_param(double x) {
        std::string s = std::to_string(x);
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    }

    void check_bowl() const {
        if (!value_ || !deriv_) throw DomainError("custom loss needs value and derivative");
        if (std::fabs(value_(0.0)) > 1e-14) throw DomainError("custom loss must vanish at 0");
        double prev = value_(0.0);
        for (int j = 1; j <= 200; ++j) {
            const double z = 0.05 * j;
            const double v = value_(z);
            if (!(v > prev)) throw DomainError("custom loss is not strictly increasing on z > 0");
            prev = v;
        }
        prev = value_(0.0);
        for (int j = 1; j <= 200; ++j) {
            const double z = -0.05 * j;
            const double v = value_(z);
            if (!(v > prev)) throw DomainError("custom loss is not strictly decreasing on z < 0");
            prev = v;
        }
    }

    RhoKind kind_;
    double param_;
    std::string name_;
    Fn value_;
    Fn deriv_;
};

// ---------------------------------------------------------------- tau

enum class TransformKind { identity, power, minima, odds, log_odds, median_nom };

class Transform {
public:
    static Transform identity() { return Transform(TransformKind::identity, 1.0, "identity"); }
    static Transform power(double m) {
        if (!(m > 0.0) || !std::isfinite(m)) throw DomainError("power transform needs m > 0");
        return Transform(TransformKind::power, m, "power:" + fmt(m));
    }
    // tau(z) = z^(1/k): undoes maxima nomination with sets of size k.
    static Transform maxima(int k) {
        if (k < 1) throw DomainError("maxima transform needs k >= 1");
        Transform t = power(1.0 / k);
        t.name_ = "maxima:" + std::to_string(k);
        return t;
    }
    // tau(z) = 1 - (1 - z)^(1/k).
    static Transform minima(int k) {
        if (k < 1) throw DomainError("minima transform needs k >= 1");
        return Transform(TransformKind::minima, k, "minima:" + std::to_string(k));
    }
    static Transform odds() { return Transform(TransformKind::odds, 0.0, "odds"); }
    static Transform log_odds() { return Transform(TransformKind::log_odds, 0.0, "log_odds"); }
    // tau = Psi^{-1}, Psi the Beta((k+1)/2, (k+1)/2) cdf: undoes median nomination.
    static Transform median_nom(int k) {
        if (k < 1 || k % 2 == 0) throw DomainError("median_nom transform needs odd k >= 1");
        return Transform(TransformKind::median_nom, k, "median_nom:" + std::to_string(k));
    }

    TransformKind kind() const noexcept { return kind_; }
    double param() const noexcept { return param_; }
    const std::string& name() const noexcept { return name_; }

    // Defined only on the open interval (0, 1).
    bool open_domain() const noexcept { return kind_ == TransformKind::odds || kind_ == TransformKind::log_odds; }
    // tau(z) + tau(1 - z) is constant.
    bool symmetric() const noexcept {
        return kind_ == TransformKind::identity || kind_ == TransformKind::median_nom ||
               kind_ == TransformKind::log_odds || (kind_ == TransformKind::power && param_ == 1.0);
    }

    std::optional<double> holder_exponent() const {
        switch (kind_) {
        case TransformKind::identity: return 1.0;
        case TransformKind::power: return std::min(param_, 1.0);
        case TransformKind::minima: return std::min(1.0 / param_, 1.0);
        case TransformKind::median_nom: return 2.0 / (param_ + 1.0);
        case TransformKind::odds:
        case TransformKind::log_odds: return std::nullopt;
        }
        return std::nullopt;
    }

    double eval(Prob z) const {
        check_arg(z);
        switch (kind_) {
        case TransformKind::identity: return z.p;
        case TransformKind::power: return param_ == 1.0 ? z.p : std::pow(z.p, param_);
        case TransformKind::minima: {
            if (z.q <= 0.0) return 1.0;
            const double log_q = z.p < 0.5 ? std::log1p(-z.p) : std::log(z.q);
            return -std::expm1(log_q / param_);
        }
        case TransformKind::odds: return z.p / z.q;
        case TransformKind::log_odds: return std::log(z.p) - std::log(z.q);
        case TransformKind::median_nom: {
            if (param_ == 1.0) return z.p;
            const double a = 0.5 * (param_ + 1.0);
            return inv_reg_inc_beta(z, a, a).p;
        }
        }
        return 0.0;
    }
    double eval(double z) const { return eval(Prob::from_p(z)); }

    double inverse(double y) const {
        switch (kind_) {
        case TransformKind::identity:
            check_unit(y);
            return y;
        case TransformKind::power:
            check_unit(y);
            return std::pow(y, 1.0 / param_);
        case TransformKind::minima:
            check_unit(y);
            return -std::expm1(param_ * std::log1p(-y));
        case TransformKind::odds:
            if (!(y >= 0.0) || !std::isfinite(y)) throw DomainError("odds inverse needs y in [0, inf)");
            return y / (1.0 + y);
        case TransformKind::log_odds:
            if (std::isnan(y)) throw DomainError("log_odds inverse of NaN");
            return 1.0 / (1.0 + std::exp(-y));
        case TransformKind::median_nom: {
            check_unit(y);
            const double a = 0.5 * (param_ + 1.0);
            return reg_inc_beta(y, a, a);
        }
        }
        return 0.0;
    }

    // d tau / dz. May be infinite at the ends of [0, 1].
    double derivative(Prob z) const {
        check_arg(z);
        switch (kind_) {
        case TransformKind::identity: return 1.0;
        case TransformKind::power:
            if (param_ == 1.0) return 1.0;
            return param_ * std::pow(z.p, param_ - 1.0);
        case TransformKind::minima: return std::pow(z.q, 1.0 / param_ - 1.0) / param_;
        case TransformKind::odds: return 1.0 / (z.q * z.q);
        case TransformKind::log_odds: return 1.0 / (z.p * z.q);
        case TransformKind::median_nom: {
            if (param_ == 1.0) return 1.0;
            const double a = 0.5 * (param_ + 1.0);
            return 1.0 / beta_pdf(inv_reg_inc_beta(z, a, a), a, a);
        }
        }
        return 0.0;
    }

private:
    Transform(TransformKind kind, double param, std::string name)
        : kind_(kind), param_(param), name_(std::move(name)) {}

    static std::string fmt(double x) {
        std::string s = std::to_string(x);
        while (!s.empty() && s.back() == '0') s.pop_back();
        if (!s.empty() && s.back() == '.') s.pop_back();
        return s;
    }

    static void check_unit(double y) {
        if (!(y >= 0.0 && y <= 1.0)) throw DomainError("transform inverse: value outside [0, 1]");
    }

    void check_arg(Prob z) const {
        if (!(z.p >= 0.0 && z.p <= 1.0) || !(z.q >= 0.0 && z.q <= 1.0))
            throw DomainError(name_ + ": argument outside [0, 1]");
        if (open_domain() && (z.p <= 0.0 || z.q <= 0.0) && !(kind_ == TransformKind::odds && z.p <= 0.0))
            throw DomainError(name_ + ": argument must lie in the open interval (0, 1)");
    }

    TransformKind kind_;
    double param_;
    std::string name_;
};

// ---------------------------------------------------------------- Psi

// Psi(z) = sum_{j=(k+1)/2}^{k} C(k, j) z^j (1 - z)^(k - j), summed directly.
inline double psi_eval(int k, double z) {
    if (k < 1 || k % 2 == 0) throw DomainError("psi_eval: k must be odd and >= 1");
    if (!(z >= 0.0 && z <= 1.0)) throw DomainError("psi_eval: z outside [0, 1]");
    if (z == 0.0) return 0.0;
    if (z == 1.0) return 1.0;
    const double lz = std::log(z);
    const double lq = std::log1p(-z);
    double sum = 0.0;
    for (int j = k; j >= (k + 1) / 2; --j)
        sum += std::exp(log_binomial(k, j) + j * lz + (k - j) * lq);
    return std::min(sum, 1.0);
}

// Psi'(z), the Beta((k+1)/2, (k+1)/2) density.
inline double psi_density(int k, double z) {
    const double a = 0.5 * (k + 1.0);
    return beta_pdf(Prob::from_p(z), a, a);
}

// ---------------------------------------------------------------- H

enum class WeightKind { none, pow, ef, tau_prime, custom };

// Positive weight H on (0, 1) multiplying dF in the integrated loss.
class WeightFn {
public:
    using Fn = std::function<double(Prob)>;

    WeightFn() = default;

    static WeightFn none() { return WeightFn(); }
    // H(z) = c z^(c - 1).
    static WeightFn pow(double c) {
        if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("pow weight needs c > 0");
        WeightFn w;
        w.kind_ = WeightKind::pow;
        w.param_ = c;
        return w;
    }
    // H(z) = 1 / (z (1 - z)); the weight under which F_n is best invariant.
    static WeightFn ef() {
        WeightFn w;
        w.kind_ = WeightKind::ef;
        return w;
    }
    // H = tau', i.e. the loss integrates against d tau(F).
    static WeightFn tau_prime() {
        WeightFn w;
        w.kind_ = WeightKind::tau_prime;
        return w;
    }
    static WeightFn custom(std::string name, Fn fn) {
        WeightFn w;
        w.kind_ = WeightKind::custom;
        w.fn_ = std::move(fn);
        w.name_ = std::move(name);
        return w;
    }

    WeightKind kind() const noexcept { return kind_; }
    double param() const noexcept { return param_; }
    bool present() const noexcept { return kind_ != WeightKind::none; }

    std::string name() const {
        switch (kind_) {
        case WeightKind::none: return "none";
        case WeightKind::pow: {
            std::string s = std::to_string(param_);
            while (!s.empty() && s.back() == '0') s.pop_back();
            if (!s.empty() && s.back() == '.') s.pop_back();
            return "pow:" + s;
        }
        case WeightKind::ef: return "ef";
        case WeightKind::tau_prime: return "tau_prime";
        case WeightKind::custom: return name_;
        }
        return "";
    }

    double operator()(Prob z, const Transform& tau) const {
        switch (kind_) {
        case WeightKind::none: return 1.0;
        case WeightKind::pow: return param_ == 1.0 ? 1.0 : param_ * std::pow(z.p, param_ - 1.0);
        case WeightKind::ef: return 1.0 / (z.p * z.q);
        case WeightKind::tau_prime: return tau.derivative(z);
        case WeightKind::custom: return fn_(z);
        }
        return 1.0;
    }

private:
    WeightKind kind_ = WeightKind::none;
    double param_ = 0.0;
    std::string name_;
    Fn fn_;
};

// ---------------------------------------------------------------- specs

struct LossSpec {
    Rho rho = Rho::squared();
    WeightFn H;
    // Invariant per-step weights w_0..w_n, each in (0, 1]; empty means all 1.
    std::vector<double> step_weights;

    double step_weight(int i) const {
        if (step_weights.empty()) return 1.0;
        return step_weights.at(static_cast<std::size_t>(i));
    }

    void validate(int n) const {
        if (step_weights.empty()) return;
        if (step_weights.size() != static_cast<std::size_t>(n) + 1)
            throw DomainError("step weights need n + 1 entries");
        for (double w : step_weights)
            if (!(w > 0.0 && w <= 1.0)) throw DomainError("step weights must lie in (0, 1]");
    }
};

inline double rho_eval(const LossSpec& spec, double z) { return spec.rho(z); }
inline double rho_deriv(const LossSpec& spec, double z) { return spec.rho.derivative(z); }
inline double tau_eval(const Transform& t, double z) { return t.eval(z); }
inline double tau_inverse(const Transform& t, double y) { return t.inverse(y); }

// Target weights u_0..u_n defining d0 and balanced weights w_0..w_n.
struct BalancedSpec {
    std::vector<double> target_weights;
    std::vector<double> w;

    void validate() const {
        if (target_weights.size() != w.size() || w.size() < 2)
            throw DomainError("balanced spec: target and w need the same length n + 1 >= 2");
        for (double x : w)
            if (!(x >= 0.0 && x <= 1.0)) throw DomainError("balanced spec: w entries must lie in [0, 1]");
        for (double x : target_weights)
            if (!(x >= 0.0 && x <= 1.0)) throw DomainError("balanced spec: target weights must lie in [0, 1]");
    }
};

// ---------------------------------------------------------------- parsing

namespace detail {

inline std::pair<std::string, std::string> split_spec(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) return {text, ""};
    return {text.substr(0, colon), text.substr(colon + 1)};
}

inline double parse_number(const std::string& text, const std::string& context) {
    if (text.empty()) throw DomainError(context + ": missing parameter");
    // Accept simple fractions such as 1/5.
    const auto slash = text.find('/');
    try {
        std::size_t used = 0;
        if (slash != std::string::npos) {
            const double num = std::stod(text.substr(0, slash), &used);
            if (used != slash) throw DomainError(context + ": bad number '" + text + "'");
            const std::string den_text = text.substr(slash + 1);
            const double den = std::stod(den_text, &used);
            if (used != den_text.size()) throw DomainError(context + ": bad number '" + text + "'");
            return num / den;
        }
        const double v = std::stod(text, &used);
        if (used != text.size()) throw DomainError(context + ": bad number '" + text + "'");
        return v;
    } catch (const std::invalid_argument&) {
        throw DomainError(context + ": bad number '" + text + "'");
    } catch (const std::out_of_range&) {
        throw DomainError(context + ": number out of range '" + text + "'");
    }
}

inline int parse_int(const std::string& text, const std::string& context) {
    const double v = parse_number(text, context);
    if (v != std::floor(v) || std::fabs(v) > 1e9) throw DomainError(context + ": expected an integer");
    return static_cast<int>(v);
}

} // namespace detail

inline Rho parse_rho(const std::string& text) {
    const auto [head, arg] = detail::split_spec(text);
    if (head == "squared") return Rho::squared();
    if (head == "absolute") return Rho::absolute();
    if (head == "lp") return Rho::lp(detail::parse_number(arg, "lp"));
    if (head == "linex") return Rho::linex(detail::parse_number(arg, "linex"));
    if (head == "entropy" || head == "entropy_ratio") return Rho::entropy_ratio();
    throw DomainError("unknown loss '" + text + "'");
}

inline Transform parse_transform(const std::string& text) {
    const auto [head, arg] = detail::split_spec(text);
    if (head == "identity") return Transform::identity();
    if (head == "power") return Transform::power(detail::parse_number(arg, "power"));
    if (head == "maxima") return Transform::maxima(detail::parse_int(arg, "maxima"));
    if (head == "minima") return Transform::minima(detail::parse_int(arg, "minima"));
    if (head == "odds") return Transform::odds();
    if (head == "log_odds") return Transform::log_odds();
    if (head == "median_nom" || head == "median") return Transform::median_nom(detail::parse_int(arg, "median_nom"));
    throw DomainError("unknown transform '" + text + "'");
}

inline WeightFn parse_weight(const std::string& text) {
    const auto [head, arg] = detail::split_spec(text);
    if (head == "none" || head == "1") return WeightFn::none();
    if (head == "pow") return WeightFn::pow(detail::parse_number(arg, "pow"));
    if (head == "ef") return WeightFn::ef();
    if (head == "tau_prime") return WeightFn::tau_prime();
    throw DomainError("unknown weight '" + text + "'");
}

} // namespace minimaxcdf
