#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"

#include "minimaxcdf/minimaxcdf.hpp"

#ifndef MINIMAXCDF_DATA_DIR
#define MINIMAXCDF_DATA_DIR "data"
#endif

namespace minimaxcdf::cli {

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelArgs {
    std::string rho = "squared";
    std::string tau = "identity";
    std::string H = "none";
    std::string scheme;
    std::string variant;
};

void add_model_options(CLI::App* app, ModelArgs& m) {
    app->add_option("--rho", m.rho, "loss shape: squared, absolute, lp:p, linex:a, entropy")->capture_default_str();
    app->add_option("--tau", m.tau, "transform: identity, power:m, maxima:k, minima:k, odds, log_odds, median_nom:k")
        ->capture_default_str();
    app->add_option("--H", m.H, "prior weight: none, pow:c, ef, tau_prime")->capture_default_str();
    app->add_option("--scheme", m.scheme, "nomination scheme maxima:k, minima:k or median:k (base-cdf scale output)");
    app->add_option("--variant", m.variant, "with --scheme: L1, L2 or MLE");
}

LossSpec loss_from(const ModelArgs& m) {
    LossSpec l;
    l.rho = parse_rho(m.rho);
    l.H = parse_weight(m.H);
    return l;
}

// Weights on the decision scale and, when they differ, on the tau scale.
struct ComputedWeights {
    WeightVector u;              // levels of the cdf estimate
    std::optional<std::vector<double>> tau_u;
    Transform tau = Transform::identity();
};

ComputedWeights compute_weights(int n, const ModelArgs& m) {
    if (n < 1) throw UsageError("--n must be at least 1");
    ComputedWeights out;
    if (m.scheme.empty()) {
        if (!m.variant.empty()) throw UsageError("--variant needs --scheme");
        out.tau = parse_transform(m.tau);
        out.u = best_invariant(n, loss_from(m), out.tau);
        if (out.tau.kind() != TransformKind::identity) out.tau_u = to_tau_scale(out.u, out.tau);
        return out;
    }
    // Nomination schemes report estimates of the base cdf, i.e. tau(F_nom).
    const NominationScheme s = parse_scheme(m.scheme, n);
    out.tau = Transform::identity();
    std::string v = m.variant;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (v == "MLE") {
        out.u = mle_nomination_weights(n, s);
    } else if (v == "L1" || v == "L2") {
        const bool l1 = v == "L1";
        switch (s.kind) {
        case NominationKind::maxima: out.u = l1 ? maxima_l1_weights(n, s.k) : maxima_lse_weights(n, s.k); break;
        case NominationKind::minima: {
            auto [a, b] = minima_weights(n, s.k);
            out.u = l1 ? a : b;
            break;
        }
        case NominationKind::median:
            out.u = median_nom_weights(n, s.k, l1 ? NominationLoss::L1 : NominationLoss::L2);
            break;
        }
    } else if (v.empty()) {
        const Transform tau = scheme_transform(s);
        out.u = WeightVector(n, to_tau_scale(best_invariant(n, loss_from(m), tau), tau));
    } else {
        throw UsageError("unknown --variant '" + m.variant + "' (expected L1, L2 or MLE)");
    }
    return out;
}

WeightVector empirical_weights(int n) {
    std::vector<double> u(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) u[static_cast<std::size_t>(i)] = static_cast<double>(i) / n;
    return WeightVector(n, std::move(u));
}

std::vector<double> read_data(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<double> x;
    try {
        x = read_csv_column(in, column);
    } catch (const IoError& e) {
        if (std::string(e.what()) == "CSV: empty input") throw UsageError("input '" + path + "' has no observations");
        throw;
    }
    if (x.empty()) throw UsageError("input '" + path + "' has no observations");
    return x;
}

std::ostream& open_output(const std::string& path, std::unique_ptr<std::ofstream>& file, std::ostream& fallback) {
    if (path.empty() || path == "-") return fallback;
    file = std::make_unique<std::ofstream>(path);
    if (!*file) throw IoError("cannot write '" + path + "'");
    return *file;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

// ---------------------------------------------------------------- weights

struct WeightsArgs {
    int n = 0;
    ModelArgs model;
    bool constrained = false;
    bool table1 = false;
    int decimals = 3;
    std::string format = "csv";
};

void cmd_weights(const WeightsArgs& a, std::ostream& out) {
    if (a.decimals < 0 || a.decimals > 17) throw UsageError("--decimals must lie in 0..17");
    if (a.table1) {
        const int n = 10;
        const int k = 5;
        const WeightVector u1 = median_nom_weights(n, k, NominationLoss::L1);
        const WeightVector u2 = median_nom_weights(n, k, NominationLoss::L2);
        const WeightVector mle = mle_nomination_weights(n, NominationScheme{NominationKind::median, k, n});
        if (a.format == "json") {
            out << json{{"n", n}, {"k", k}, {"u1", u1.u}, {"u2", u2.u}, {"mle", mle.u}}.dump(2) << '\n';
            return;
        }
        out << "i,u1,u2,mle\n";
        for (int i = 0; i <= n; ++i) {
            const auto si = static_cast<std::size_t>(i);
            out << i << ',' << format_fixed(u1[si], a.decimals) << ',' << format_fixed(u2[si], a.decimals) << ','
                << format_fixed(mle[si], a.decimals) << '\n';
        }
        return;
    }
    if (a.n < 1) throw UsageError("weights needs --n >= 1 (or --table1)");
    ComputedWeights w = compute_weights(a.n, a.model);
    if (a.constrained) {
        w.u = constrained_weights(w.u);
        if (w.tau_u) w.tau_u = to_tau_scale(w.u, w.tau);
    }
    if (a.format == "json") {
        json j = to_json(w.u);
        if (w.tau_u) {
            json t = json::array();
            for (double x : *w.tau_u) t.push_back(number_or_null(x));
            j["tau_values"] = t;
        }
        out << j.dump(2) << '\n';
        return;
    }
    out << (w.tau_u ? "i,u,tau_u\n" : "i,u\n");
    for (int i = 0; i <= a.n; ++i) {
        const auto si = static_cast<std::size_t>(i);
        out << i << ',' << format_fixed(w.u[si], a.decimals);
        if (w.tau_u) out << ',' << format_fixed((*w.tau_u)[si], a.decimals);
        out << '\n';
    }
}

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
    std::string input;
    std::string column = "x";
    std::string weights = "best";
    std::string weights_file;
    ModelArgs model;
    std::optional<double> tail;
    std::optional<double> lower;
    std::string genuine = "none";
    double w = 0.5;
    std::string output;
};

void cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
    const std::vector<double> data = read_data(a.input, a.column);
    const int n = static_cast<int>(data.size());
    WeightVector v;
    std::optional<double> tail = a.tail;
    if (!a.weights_file.empty()) {
        std::ifstream in(a.weights_file);
        if (!in) throw IoError("cannot open '" + a.weights_file + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw IoError("'" + a.weights_file + "': " + e.what());
        }
        v = weights_from_json(j);
    } else if (a.weights == "aggarwal") {
        v = best_invariant(n, LossSpec{}, Transform::identity());
    } else if (a.weights == "empirical") {
        v = empirical_weights(n);
        if (!tail) tail = 1.0;
    } else if (a.weights == "best") {
        v = compute_weights(n, a.model).u;
    } else {
        throw UsageError("unknown --weights '" + a.weights + "' (expected best, aggarwal or empirical)");
    }
    if (v.n != n)
        throw UsageError("weights are for n = " + std::to_string(v.n) + " but the data have " + std::to_string(n) +
                         " observations");

    if (a.genuine == "constrained") {
        v = constrained_weights(v);
    } else if (a.genuine == "balanced") {
        // Target: the MLE for a nomination scheme, F_n otherwise. w = 1 where
        // F_n is 0 or 1 (only at the top for maxima, as the support starts at a).
        BalancedSpec spec;
        spec.w.assign(static_cast<std::size_t>(n) + 1, a.w);
        spec.w.back() = 1.0;
        if (!a.model.scheme.empty()) {
            spec.target_weights = mle_nomination_weights(n, parse_scheme(a.model.scheme, n)).u;
        } else {
            spec.target_weights = empirical_weights(n).u;
            spec.w.front() = 1.0;
        }
        const GenuinenessReport g = genuineness_check(spec.target_weights, v.u);
        if (!g.ok) throw NonMonotoneResult(g.failures.front(), "target and invariant weights fail the genuineness condition");
        v = balanced_combine(spec, v);
    } else if (a.genuine != "none") {
        throw UsageError("unknown --genuine '" + a.genuine + "' (expected none, constrained or balanced)");
    }

    FitDiagnostics diag;
    StepEstimator e = fit(data, v, tail, &diag);
    e.lower = a.lower;
    e.validate();
    for (const auto& w : diag.warnings) err << "warning: " << w << '\n';
    std::unique_ptr<std::ofstream> file;
    std::ostream& os = open_output(a.output, file, out);
    os << to_json(e).dump(2) << '\n';
}

// ---------------------------------------------------------------- risk

struct RiskArgs {
    int n = 0;
    ModelArgs model;
    std::string weights = "best";
    std::string weights_file;
    std::vector<std::string> mc;
    std::string F = "uniform";
    std::string check_constant;
    bool decompose = false;
    double w = 0.5;
    unsigned threads = 1;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

void cmd_risk(const RiskArgs& a, std::ostream& out) {
    if (!a.model.scheme.empty()) throw UsageError("risk takes --tau rather than --scheme");
    WeightVector v;
    const Transform tau = parse_transform(a.model.tau);
    const LossSpec loss = loss_from(a.model);
    if (!a.weights_file.empty()) {
        std::ifstream in(a.weights_file);
        if (!in) throw IoError("cannot open '" + a.weights_file + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw IoError("'" + a.weights_file + "': " + e.what());
        }
        v = weights_from_json(j);
    } else {
        if (a.n < 1) throw UsageError("risk needs --n >= 1");
        if (a.weights == "best") v = best_invariant(a.n, loss, tau);
        else if (a.weights == "aggarwal") v = best_invariant(a.n, LossSpec{}, Transform::identity());
        else if (a.weights == "empirical") v = empirical_weights(a.n);
        else throw UsageError("unknown --weights '" + a.weights + "' (expected best, aggarwal or empirical)");
    }

    McOptions o;
    o.threads = std::max(1u, a.threads);
    if (!a.mc.empty()) {
        if (a.mc.size() != 2) throw UsageError("--mc expects two values: reps seed");
        try {
            o.reps = std::stoll(a.mc[0]);
            o.seed = std::stoull(a.mc[1]);
        } catch (const std::exception&) {
            throw UsageError("--mc expects integers: reps seed");
        }
        if (o.reps < 2) throw UsageError("--mc needs reps >= 2");
    }

    if (a.decompose) {
        if (tau.kind() != TransformKind::identity && tau.kind() != TransformKind::power)
            throw UsageError("--decompose supports identity and power transforms");
        // d0 = F_n on the tau scale, d0* = least squares weights, g = d0* - d0.
        const int n = v.n;
        std::vector<double> d0 = to_tau_scale(empirical_weights(n), tau);
        const std::vector<double> star = sel_tau_weights(n, tau).tau_scale;
        std::vector<double> g(d0.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = star[i] - d0[i];
        const BalancedSpec spec{d0, std::vector<double>(d0.size(), a.w)};
        const auto d = balanced_risk_decompose(spec, g, tau, parse_sampler(a.F), o);
        std::vector<double> mix(d0.size());
        for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = d0[i] + (1.0 - a.w) * g[i];
        json j{{"r_h1", d.r_h1},          {"r_h2", d.r_h2},
               {"total", d.total},        {"stderr_total", d.se_total},
               {"max_residual", d.max_residual},
               {"quadrature_total", balanced_invariant_risk(spec, mix, tau)}};
        out << j.dump(2) << '\n';
        return;
    }

    if (!a.check_constant.empty()) {
        std::vector<Sampler> samplers;
        for (const auto& s : split_list(a.check_constant)) samplers.push_back(parse_sampler(s));
        if (samplers.size() < 2) throw UsageError("--check-constant needs at least two distributions");
        const auto rep = distribution_free_check(v, loss, tau, samplers, o);
        json risks = json::array();
        for (std::size_t i = 0; i < rep.risks.size(); ++i)
            risks.push_back({{"F", rep.samplers[i]}, {"value", rep.risks[i].value}, {"stderr", *rep.risks[i].std_error}});
        json j{{"pass", rep.pass}, {"reference", rep.reference ? json(*rep.reference) : json(nullptr)},
               {"risks", risks}, {"failures", rep.failures}};
        out << j.dump(2) << '\n';
        return;
    }

    RiskReport r;
    if (!a.mc.empty()) r = mc_risk(invariant_rule(v), parse_sampler(a.F), v.n, loss, tau, o);
    else r = invariant_risk(v, loss, tau);
    out << to_json(r).dump(2) << '\n';
    if (r.divergent) throw DivergentObjective(*r.divergent_step, "risk is infinite");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string scheme = "maxima:5";
    int n = 10;
    std::string F = "normal";
    std::uint64_t seed = 1;
    int grid_points = 512;
    std::string output;
};

std::vector<double> evaluate_on(const StepEstimator& e, const std::vector<double>& grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double t : grid) out.push_back(evaluate(e, t));
    return out;
}

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    if (a.n < 1) throw UsageError("--n must be at least 1");
    if (a.grid_points < 2) throw UsageError("--grid-points must be at least 2");
    const NominationScheme s = parse_scheme(a.scheme, a.n);
    const Sampler F = parse_sampler(a.F);
    const std::vector<double> data = generate(s, F, a.seed);
    ModelArgs m;
    m.scheme = a.scheme;
    m.variant = "L1";
    const WeightVector d1 = compute_weights(a.n, m).u;
    m.variant = "L2";
    const WeightVector d2 = compute_weights(a.n, m).u;
    const WeightVector mle = mle_nomination_weights(a.n, s);

    PlotTable table(default_grid(data, a.grid_points));
    table.add("d1", evaluate_on(fit(data, d1), table.grid()));
    table.add("d2", evaluate_on(fit(data, d2), table.grid()));
    table.add("mle", evaluate_on(fit(data, mle), table.grid()));
    table.add("fn", evaluate_on(empirical_cdf(data), table.grid()));
    std::vector<double> truth;
    for (const auto& [t, y] : true_tau_curve(s, F, table.grid())) truth.push_back(y);
    table.add("truth", std::move(truth));
    std::unique_ptr<std::ofstream> file;
    table.write_csv(open_output(a.output, file, out));
}

// ---------------------------------------------------------------- case study

struct CaseStudyArgs {
    std::string input = std::string(MINIMAXCDF_DATA_DIR) + "/bilirubin_placeholder.csv";
    std::string column = "x";
    int k = 5;
    double w = 0.5;
    double w_top = 1.0;
    double p = 0.95;
    double at = 17.65;
    double lower = 0.0;
    int grid_points = 512;
    std::string table;
};

void cmd_case_study(const CaseStudyArgs& a, std::ostream& out, std::ostream& err) {
    if (!(a.p > 0.0 && a.p < 1.0)) throw UsageError("--quantile must lie in (0, 1)");
    const std::vector<double> data = read_data(a.input, a.column);
    const int n = static_cast<int>(data.size());
    const NominationScheme s{NominationKind::maxima, a.k, n};
    s.validate();
    const WeightVector d2 = maxima_lse_weights(n, a.k);
    const WeightVector mle = mle_nomination_weights(n, s);
    BalancedSpec spec;
    spec.target_weights = mle.u;
    spec.w.assign(static_cast<std::size_t>(n) + 1, a.w);
    spec.w.back() = a.w_top;
    const WeightVector bal = balanced_combine(spec, d2);
    const GenuinenessReport g = genuineness_check(mle, d2);

    FitDiagnostics diag;
    std::map<std::string, StepEstimator> est;
    for (const auto& [name, v] : {std::pair<std::string, const WeightVector*>{"d2", &d2}, {"mle", &mle}, {"balanced", &bal}}) {
        StepEstimator e = fit(data, *v, std::nullopt, name == "d2" ? &diag : nullptr);
        if (a.lower <= e.knots.front()) e.lower = a.lower;
        est.emplace(name, std::move(e));
    }
    for (const auto& w : diag.warnings) err << "warning: " << w << '\n';

    json q;
    json at;
    json weights;
    for (const auto& name : {"d2", "mle", "balanced"}) {
        q[name] = number_or_null(quantile(est.at(name), a.p));
        at[name] = evaluate(est.at(name), a.at);
        weights[name] = est.at(name).values;
    }
    json j{{"n", n},
           {"k", a.k},
           {"input", a.input},
           {"weights", weights},
           {"genuine", g.ok && bal.u.back() == 1.0},
           {"quantile", {{"p", a.p}, {"values", q}}},
           {"cdf_at", {{"x", a.at}, {"values", at}}}};
    out << j.dump(2) << '\n';

    if (!a.table.empty()) {
        if (a.grid_points < 2) throw UsageError("--grid-points must be at least 2");
        PlotTable table(default_grid(data, a.grid_points));
        for (const auto& name : {"d2", "mle", "balanced"}) table.add(name, evaluate_on(est.at(name), table.grid()));
        std::unique_ptr<std::ofstream> file;
        table.write_csv(open_output(a.table, file, out));
    }
}

} // namespace

// ---------------------------------------------------------------- PlotTable

void PlotTable::add(const std::string& name, std::vector<double> values) {
    if (values.size() != grid_.size())
        throw DomainError("plot column '" + name + "' has " + std::to_string(values.size()) + " rows, grid has " +
                          std::to_string(grid_.size()));
    for (const auto& c : columns_)
        if (c.first == name || name == "t") throw DomainError("duplicate plot column '" + name + "'");
    columns_.emplace_back(name, std::move(values));
}

const std::vector<double>& PlotTable::column(const std::string& name) const {
    for (const auto& c : columns_)
        if (c.first == name) return c.second;
    throw DomainError("no plot column '" + name + "'");
}

void PlotTable::write_csv(std::ostream& out) const {
    out << 't';
    for (const auto& c : columns_) out << ',' << c.first;
    out << '\n';
    for (std::size_t r = 0; r < grid_.size(); ++r) {
        out << format_double(grid_[r]);
        for (const auto& c : columns_) out << ',' << format_double(c.second[r]);
        out << '\n';
    }
}

std::vector<double> default_grid(const std::vector<double>& data, int points) {
    if (data.empty()) throw DomainError("default_grid: no data");
    if (points < 2) throw DomainError("default_grid: need at least two points");
    std::vector<double> x = data;
    std::sort(x.begin(), x.end());
    auto q = [&](double p) {
        const double h = p * static_cast<double>(x.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, x.size() - 1);
        return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
    };
    double pad = 0.5 * (q(0.75) - q(0.25));
    if (!(pad > 0.0)) pad = 0.5 * std::max(1.0, std::fabs(x.front()));
    const double a = x.front() - pad;
    const double b = x.back() + pad;
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int j = 0; j < points; ++j) grid[static_cast<std::size_t>(j)] = a + (b - a) * j / (points - 1);
    return grid;
}

// ---------------------------------------------------------------- dispatch

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Best invariant and minimax estimators of a continuous cdf", "minimaxcdf-cli"};
    app.require_subcommand(1);

    WeightsArgs wa;
    auto* weights = app.add_subcommand("weights", "weight table u_0..u_n");
    weights->add_option("--n", wa.n, "sample size");
    add_model_options(weights, wa.model);
    weights->add_flag("--constrained", wa.constrained, "force u_0 = 0 and u_n = 1");
    weights->add_flag("--table1", wa.table1, "median nomination table for n = 10, k = 5 (u1, u2, MLE)");
    weights->add_option("--decimals", wa.decimals, "decimals in CSV output")->capture_default_str();
    weights->add_option("--format", wa.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    EstimateArgs ea;
    auto* estimate = app.add_subcommand("estimate", "fit a step cdf estimate to data");
    estimate->add_option("--input", ea.input, "CSV file with a column of observations")->required();
    estimate->add_option("--column", ea.column, "column name")->capture_default_str();
    estimate->add_option("--weights", ea.weights, "best, aggarwal or empirical")->capture_default_str();
    estimate->add_option("--weights-file", ea.weights_file, "JSON weights {\"n\", \"values\"}");
    add_model_options(estimate, ea.model);
    estimate->add_option("--tail", ea.tail, "value for t at or above the largest observation");
    estimate->add_option("--lower", ea.lower, "lower support endpoint (estimate is 0 below it)");
    estimate->add_option("--genuine", ea.genuine, "none, constrained or balanced")->capture_default_str();
    estimate->add_option("--w", ea.w, "balanced weight on the target away from the ends")->capture_default_str();
    estimate->add_option("--output", ea.output, "output JSON file (default stdout)");

    RiskArgs ra;
    auto* risk = app.add_subcommand("risk", "risk of an invariant estimator");
    risk->add_option("--n", ra.n, "sample size");
    add_model_options(risk, ra.model);
    risk->add_option("--weights", ra.weights, "best, aggarwal or empirical")->capture_default_str();
    risk->add_option("--weights-file", ra.weights_file, "JSON weights {\"n\", \"values\"}");
    risk->add_option("--mc", ra.mc, "Monte Carlo: reps seed")->expected(2);
    risk->add_option("--F", ra.F, "distribution for Monte Carlo: uniform, normal[:mu,sigma], exponential[:lambda]")
        ->capture_default_str();
    risk->add_option("--check-constant", ra.check_constant, "comma-separated distributions to compare");
    risk->add_flag("--decompose", ra.decompose, "balanced-risk decomposition with target F_n");
    risk->add_option("--w", ra.w, "constant balanced weight for --decompose")->capture_default_str();
    risk->add_option("--threads", ra.threads, "Monte Carlo threads")->capture_default_str();

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "plot table for simulated nomination data");
    simulate->add_option("--scheme", sa.scheme, "maxima:k, minima:k or median:k")->capture_default_str();
    simulate->add_option("--n", sa.n, "number of sets")->capture_default_str();
    simulate->add_option("--F", sa.F, "base distribution")->capture_default_str();
    simulate->add_option("--seed", sa.seed, "random seed")->capture_default_str();
    simulate->add_option("--grid-points", sa.grid_points, "plot grid size")->capture_default_str();
    simulate->add_option("--output", sa.output, "output CSV file (default stdout)");

    CaseStudyArgs ca;
    auto* case_study = app.add_subcommand("case-study", "balanced-loss analysis of maxima-nominated data");
    case_study->add_option("--input", ca.input, "CSV with column x (default: bundled placeholder data)")
        ->capture_default_str();
    case_study->add_option("--column", ca.column, "column name")->capture_default_str();
    case_study->add_option("--k", ca.k, "set size")->capture_default_str();
    case_study->add_option("--w", ca.w, "balanced weight below the largest observation")->capture_default_str();
    case_study->add_option("--w-top", ca.w_top, "balanced weight at and above the largest observation")
        ->capture_default_str();
    case_study->add_option("--quantile", ca.p, "order of the reported quantile")->capture_default_str();
    case_study->add_option("--at", ca.at, "report each estimated cdf at this value")->capture_default_str();
    case_study->add_option("--lower", ca.lower, "lower support endpoint")->capture_default_str();
    case_study->add_option("--grid-points", ca.grid_points, "plot grid size")->capture_default_str();
    case_study->add_option("--table", ca.table, "write the plot table CSV here");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ExitCode::ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ExitCode::ok;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return ExitCode::ok;
        err << "usage error: " << e.what() << '\n';
        return ExitCode::usage;
    }

    try {
        if (weights->parsed()) cmd_weights(wa, out);
        else if (estimate->parsed()) cmd_estimate(ea, out, err);
        else if (risk->parsed()) cmd_risk(ra, out);
        else if (simulate->parsed()) cmd_simulate(sa, out);
        else if (case_study->parsed()) cmd_case_study(ca, out, err);
        return ExitCode::ok;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return ExitCode::usage;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << '\n';
        return ExitCode::usage;
    } catch (const DivergentObjective& e) {
        const ModelArgs& m = weights->parsed() ? wa.model : (risk->parsed() ? ra.model : ea.model);
        err << "divergence: rho=" << m.rho << " tau=" << m.tau << " i=" << e.step() << ": " << e.what() << '\n';
        return ExitCode::divergence;
    } catch (const ImproperPosterior& e) {
        err << "divergence: " << e.what() << '\n';
        return ExitCode::divergence;
    } catch (const DivergentIntegral& e) {
        err << "divergence: " << e.what() << '\n';
        return ExitCode::divergence;
    } catch (const DivergentMoment& e) {
        err << "divergence: " << e.what() << '\n';
        return ExitCode::divergence;
    } catch (const NonMonotoneResult& e) {
        err << "error: " << e.what() << '\n';
        return ExitCode::divergence;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << '\n';
        return ExitCode::io;
    }
}

} // namespace minimaxcdf::cli
