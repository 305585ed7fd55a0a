#pragma once

#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "minimaxcdf/errors.hpp"
#include "minimaxcdf/estimator.hpp"
#include "minimaxcdf/risk.hpp"

namespace minimaxcdf {

using json = nlohmann::json;

// Shortest decimal that reads back to the same double.
inline std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// Fixed-point with the given number of decimals.
inline std::string format_fixed(double x, int decimals) {
    if (!std::isfinite(x)) return format_double(x);
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

namespace detail {

inline json optional_number(const std::optional<double>& x) {
    if (!x || !std::isfinite(*x)) return nullptr;
    return *x;
}

inline std::vector<double> number_array(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw IoError(std::string("JSON: missing array '") + key + "'");
    std::vector<double> out;
    for (const auto& x : j.at(key)) {
        if (!x.is_number()) throw IoError(std::string("JSON: non-numeric entry in '") + key + "'");
        out.push_back(x.get<double>());
    }
    return out;
}

inline std::optional<double> optional_key(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number()) throw IoError(std::string("JSON: '") + key + "' must be a number or null");
    return j.at(key).get<double>();
}

} // namespace detail

// {"n", "knots", "values", "tail"} plus "lower" when a support endpoint is set.
inline json to_json(const StepEstimator& e) {
    json j;
    j["n"] = e.n();
    j["knots"] = e.knots;
    j["values"] = e.values;
    j["tail"] = detail::optional_number(e.tail);
    if (e.lower) j["lower"] = *e.lower;
    return j;
}

inline StepEstimator estimator_from_json(const json& j) {
    StepEstimator e;
    e.knots = detail::number_array(j, "knots");
    e.values = detail::number_array(j, "values");
    e.tail = detail::optional_key(j, "tail");
    e.lower = detail::optional_key(j, "lower");
    if (j.contains("n") && j.at("n").get<int>() != e.n()) throw IoError("JSON: 'n' does not match the knots");
    try {
        e.validate();
    } catch (const DomainError& err) {
        throw IoError(std::string("JSON: ") + err.what());
    }
    return e;
}

// Weights-only form: {"n", "values", "tail"}.
inline json to_json(const WeightVector& v, std::optional<double> tail = std::nullopt) {
    json j;
    j["n"] = v.n;
    j["values"] = v.u;
    j["tail"] = detail::optional_number(tail);
    return j;
}

inline WeightVector weights_from_json(const json& j) {
    std::vector<double> u = detail::number_array(j, "values");
    const int n = j.contains("n") ? j.at("n").get<int>() : static_cast<int>(u.size()) - 1;
    return WeightVector(n, std::move(u));
}

inline json to_json(const RiskReport& r) {
    json j;
    j["value"] = std::isfinite(r.value) ? json(r.value) : json(nullptr);
    j["stderr"] = detail::optional_number(r.std_error);
    if (r.per_step) {
        json steps = json::array();
        for (double x : *r.per_step) steps.push_back(std::isfinite(x) ? json(x) : json(nullptr));
        j["per_step"] = steps;
    } else {
        j["per_step"] = nullptr;
    }
    j["divergent"] = r.divergent;
    if (r.divergent_step) j["divergent_step"] = *r.divergent_step;
    return j;
}

// ---------------------------------------------------------------- CSV

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace detail

// Reads one numeric column of a comma-separated file with a header row. Lines
// starting with '#' are skipped.
inline std::vector<double> read_csv_column(std::istream& in, const std::string& column = "x") {
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (!t.empty() && t[0] != '#') {
            header = detail::split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw IoError("CSV: empty input");
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);
    std::size_t col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == column) col = i;
    if (col == header.size()) {
        if (header.size() == 1) col = 0;
        else throw IoError("CSV: no column named '" + column + "'");
    }
    std::vector<double> out;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty() || line[0] == '#') continue;
        const auto cells = detail::split_csv_line(line);
        if (col >= cells.size()) throw IoError("CSV: row " + std::to_string(row) + " is too short");
        const std::string& c = cells[col];
        double x = 0.0;
        const auto res = std::from_chars(c.data(), c.data() + c.size(), x);
        if (res.ec != std::errc() || res.ptr != c.data() + c.size() || !std::isfinite(x))
            throw IoError("CSV: row " + std::to_string(row) + ": '" + c + "' is not a finite number");
        out.push_back(x);
    }
    return out;
}

inline void write_csv_column(std::ostream& out, const std::vector<double>& x, const std::string& column = "x") {
    out << column << '\n';
    for (double v : x) out << format_double(v) << '\n';
}

} // namespace minimaxcdf
