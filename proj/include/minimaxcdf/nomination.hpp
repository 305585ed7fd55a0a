#pragma once

#include <string>

#include "minimaxcdf/errors.hpp"
#include "minimaxcdf/model.hpp"

namespace minimaxcdf {

enum class NominationKind { maxima, minima, median };

// n observations, each the max, min or median of an independent set of k draws.
struct NominationScheme {
    NominationKind kind = NominationKind::maxima;
    int k = 1;
    int n = 2;

    void validate() const {
        if (k < 1) throw DomainError("nomination scheme needs k >= 1");
        if (kind == NominationKind::median && k % 2 == 0) throw DomainError("median nomination needs odd k");
        if (n < 1) throw DomainError("nomination scheme needs n >= 1");
    }

    std::string name() const {
        switch (kind) {
        case NominationKind::maxima: return "maxima:" + std::to_string(k);
        case NominationKind::minima: return "minima:" + std::to_string(k);
        case NominationKind::median: return "median:" + std::to_string(k);
        }
        return "";
    }
};

// The transform that maps the cdf of the nominated observations back to the
// base cdf: z^(1/k), 1 - (1 - z)^(1/k), or Psi^{-1}.
inline Transform scheme_transform(const NominationScheme& s) {
    s.validate();
    switch (s.kind) {
    case NominationKind::maxima: return Transform::maxima(s.k);
    case NominationKind::minima: return Transform::minima(s.k);
    case NominationKind::median: return Transform::median_nom(s.k);
    }
    return Transform::identity();
}

// Nominated-observation cdf as a function of the base cdf value.
inline double nominated_cdf(const NominationScheme& s, double base) {
    s.validate();
    switch (s.kind) {
    case NominationKind::maxima: return std::pow(base, s.k);
    case NominationKind::minima: return -std::expm1(s.k * std::log1p(-base));
    case NominationKind::median: return psi_eval(s.k, base);
    }
    return base;
}

// Parses "maxima:5", "minima:3", "median:5".
inline NominationScheme parse_scheme(const std::string& text, int n) {
    const auto [head, arg] = detail::split_spec(text);
    NominationScheme s;
    s.n = n;
    s.k = arg.empty() ? 1 : detail::parse_int(arg, head);
    if (head == "maxima" || head == "max") s.kind = NominationKind::maxima;
    else if (head == "minima" || head == "min") s.kind = NominationKind::minima;
    else if (head == "median") s.kind = NominationKind::median;
    else throw DomainError("unknown nomination scheme '" + text + "'");
    s.validate();
    return s;
}

} // namespace minimaxcdf
