#include <gtest/gtest.h>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "minimaxcdf/estimator.hpp"

using namespace minimaxcdf;

namespace {

double beta_median(int i, int n) { return boost::math::ibeta_inv(i + 1.0, n - i + 1.0, 0.5); }

// E[g(T_i)] by tanh-sinh quadrature against the Boost Beta density.
template <class G>
double boost_mean(int i, int n, G g) {
    const boost::math::beta_distribution<double> d(i + 1.0, n - i + 1.0);
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate([&](double t) { return g(t) * boost::math::pdf(d, t); }, 0.0, 1.0);
}

// Median-nomination expectations by the substitution t = Psi(x): the
// integrand becomes smooth in x and no inverse is needed.
double median_l1_oracle(int i, int n, int k) {
    const double a = 0.5 * (k + 1);
    const boost::math::beta_distribution<double> d(i + 1.0, n - i + 1.0);
    const boost::math::beta_distribution<double> psi(a, a);
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(
        [&](double x) { return x * boost::math::pdf(d, boost::math::cdf(psi, x)) * boost::math::pdf(psi, x); }, 0.0,
        1.0);
}

double median_l2_oracle(int i, int n, int k) {
    const double a = 0.5 * (k + 1);
    const boost::math::beta_distribution<double> d(i + 1.0, n - i + 1.0);
    const boost::math::beta_distribution<double> psi(a, a);
    boost::math::quadrature::tanh_sinh<double> ts;
    const double num = ts.integrate([&](double x) { return x * boost::math::pdf(d, boost::math::cdf(psi, x)); }, 0.0, 1.0);
    const double den = ts.integrate([&](double x) { return boost::math::pdf(d, boost::math::cdf(psi, x)); }, 0.0, 1.0);
    return num / den;
}

LossSpec loss_of(Rho r, WeightFn h = WeightFn::none()) {
    LossSpec l;
    l.rho = std::move(r);
    l.H = std::move(h);
    return l;
}

} // namespace

TEST(BestInvariant, AggarwalWeights) {
    const WeightVector v = best_invariant(2, LossSpec{}, Transform::identity());
    EXPECT_DOUBLE_EQ(v[0], 0.25);
    EXPECT_DOUBLE_EQ(v[1], 0.50);
    EXPECT_DOUBLE_EQ(v[2], 0.75);
}

TEST(SolveWeight, SquaredIdentityGenericSolver) {
    for (int n : {2, 6})
        for (int i = 0; i <= n; ++i)
            EXPECT_NEAR(solve_weight(BetaIndex(i, n), LossSpec{}, Transform::identity()), (i + 1.0) / (n + 2), 1e-9);
}

TEST(SolveWeight, AbsoluteLossGivesBetaMedian) {
    const LossSpec l = loss_of(Rho::absolute());
    EXPECT_NEAR(solve_weight(BetaIndex(1, 2), l, Transform::identity()), 0.5, 1e-9);
    for (int i = 0; i <= 7; ++i)
        EXPECT_NEAR(solve_weight(BetaIndex(i, 7), l, Transform::identity()), beta_median(i, 7), 1e-8);
}

TEST(SolveWeight, LpTwoEqualsSquared) {
    const LossSpec l = loss_of(Rho::lp(2));
    for (int i = 0; i <= 4; ++i)
        EXPECT_NEAR(solve_weight(BetaIndex(i, 4), l, Transform::identity()), (i + 1.0) / 6, 1e-9);
}

TEST(SolveWeight, LinexMatchesExponentialMoment) {
    for (double a : {1.0, -2.0}) {
        const LossSpec l = loss_of(Rho::linex(a));
        for (int i : {0, 2, 5}) {
            const double m = boost_mean(i, 5, [&](double t) { return std::exp(-a * t); });
            EXPECT_NEAR(solve_weight(BetaIndex(i, 5), l, Transform::identity()), -std::log(m) / a, 1e-8) << a << " " << i;
        }
    }
}

TEST(SolveWeight, EntropyLossOnIdentityGivesPosteriorMean) {
    // G(u) = E[T]/u + log u + const is minimized at u = E[T].
    const LossSpec l = loss_of(Rho::entropy_ratio());
    for (int i = 0; i <= 4; ++i)
        EXPECT_NEAR(solve_weight(BetaIndex(i, 4), l, Transform::identity()), (i + 1.0) / 6, 1e-8);
}

TEST(SolveWeight, PerStepOptimalityCertificates) {
    struct Case {
        LossSpec loss;
        Transform tau;
    };
    const std::vector<Case> cases = {{loss_of(Rho::lp(0.5)), Transform::identity()},
                                     {loss_of(Rho::absolute()), Transform::power(2)},
                                     {loss_of(Rho::linex(2)), Transform::maxima(5)},
                                     {loss_of(Rho::lp(1.5)), Transform::log_odds()}};
    for (const auto& c : cases) {
        const int n = 3;
        for (int i = 0; i <= n; ++i) {
            const BetaIndex idx(i, n);
            const double u = solve_weight(idx, c.loss, c.tau);
            const StepObjective G(idx, c.loss, c.tau);
            const double g = G.value(u);
            for (double d : {1e-3, 1e-2})
                for (double s : {-1.0, 1.0}) {
                    const double v = u + s * d;
                    if (G.feasible(v)) {
                        EXPECT_LE(g, G.value(v) + 1e-13) << c.loss.rho.name() << " " << c.tau.name();
                    }
                }
            double grid_min = std::numeric_limits<double>::infinity();
            for (int j = 0; j <= 1000; ++j)
                if (G.feasible(j / 1000.0)) grid_min = std::min(grid_min, G.value_or_inf(j / 1000.0));
            EXPECT_LE(g, grid_min + 1e-13) << c.loss.rho.name() << " " << c.tau.name() << " i=" << i;
        }
    }
}

TEST(SolveWeight, OddsDivergesAtLastStepForConvexLoss) {
    EXPECT_THROW(solve_weight(BetaIndex(5, 5), loss_of(Rho::lp(2)), Transform::odds()), DivergentObjective);
    EXPECT_THROW(solve_weight(BetaIndex(5, 5), loss_of(Rho::absolute()), Transform::odds()), DivergentObjective);
    try {
        best_invariant(10, loss_of(Rho::lp(2)), Transform::odds());
        FAIL() << "expected divergence";
    } catch (const DivergentObjective& e) {
        EXPECT_EQ(e.step(), 10u);
    }
    try {
        best_invariant(5, LossSpec{}, Transform::odds());
        FAIL() << "expected divergence";
    } catch (const DivergentObjective& e) {
        EXPECT_EQ(e.step(), 5u);
    }
}

TEST(SolveWeight, ConcaveLpWithOddsIsFinite) {
    const WeightVector v = best_invariant(3, loss_of(Rho::lp(0.5)), Transform::odds());
    EXPECT_TRUE(v.interior());
    for (double x : v.u) EXPECT_TRUE(std::isfinite(x));
}

TEST(SelTauWeights, ClosedForms) {
    const auto id = sel_tau_weights(7, Transform::identity());
    for (int i = 0; i <= 7; ++i) EXPECT_DOUBLE_EQ(id.f_scale[i], (i + 1.0) / 9);

    const auto mx = sel_tau_weights(10, Transform::power(0.2));
    for (int i = 0; i <= 10; ++i) {
        double prod = 1;
        for (int j = i; j <= 10; ++j) prod *= (j + 1.0) / (j + 1.2);
        EXPECT_NEAR(mx.tau_scale[i], prod, 1e-14);
    }

    const auto lo = sel_tau_weights(2, Transform::log_odds());
    EXPECT_NEAR(lo.tau_scale[1], 0.0, 1e-14);
    EXPECT_NEAR(lo.tau_scale[0], boost_mean(0, 2, [](double t) { return std::log(t / (1 - t)); }), 1e-10);
    EXPECT_NEAR(lo.f_scale[1], 0.5, 1e-14);

    EXPECT_THROW(sel_tau_weights(4, Transform::odds()), DivergentMoment);
}

TEST(MaximaWeights, LeastSquaresProducts) {
    const WeightVector one = maxima_lse_weights(1, 5);
    EXPECT_NEAR(one[0], (0.2 / 0.4) * (1.2 / 1.4), 1e-15);
    EXPECT_NEAR(one[0], 0.42857, 1e-5);
    const WeightVector ten = maxima_lse_weights(10, 5);
    EXPECT_NEAR(ten[10], 10.2 / 10.4, 1e-15);
    for (int i = 0; i <= 10; ++i) {
        // Moment ratio E[T^(-3/5)] / E[T^(-4/5)].
        const double want = boost::math::beta(i + 1 - 0.6, 11.0 - i) / boost::math::beta(i + 1 - 0.8, 11.0 - i);
        EXPECT_NEAR(ten[i], want, 1e-13);
    }
    for (int n : {3, 8}) {
        const WeightVector k1 = maxima_lse_weights(n, 1);
        for (int i = 0; i <= n; ++i) EXPECT_NEAR(k1[i], (i + 1.0) / (n + 2), 1e-15);
    }
}

TEST(MaximaWeights, L1Products) {
    const WeightVector v = maxima_l1_weights(10, 5);
    for (int i = 0; i <= 10; ++i) EXPECT_NEAR(v[i], boost_mean(i, 10, [](double t) { return std::pow(t, 0.2); }), 1e-12);
}

TEST(MinimaWeights, ReflectionAndExamples) {
    const auto [m1, m2] = minima_weights(1, 5);
    EXPECT_NEAR(m1[1], 1 - (1 / 1.2) * (2 / 2.2), 1e-15);
    EXPECT_NEAR(m1[1], 0.2424, 1e-4);
    const auto [a1, a2] = minima_weights(10, 5);
    const WeightVector x1 = maxima_l1_weights(10, 5);
    const WeightVector x2 = maxima_lse_weights(10, 5);
    for (int i = 0; i <= 10; ++i) {
        EXPECT_NEAR(a1[i], 1 - x1[10 - i], 1e-10);
        EXPECT_NEAR(a2[i], 1 - x2[10 - i], 1e-10);
    }
    const auto [k1a, k1b] = minima_weights(6, 1);
    for (int i = 0; i <= 6; ++i) {
        EXPECT_NEAR(k1a[i], (i + 1.0) / 8, 1e-14);
        EXPECT_NEAR(k1b[i], (i + 1.0) / 8, 1e-14);
    }
}

TEST(MedianWeights, TableValues) {
    const WeightVector l1 = median_nom_weights(10, 5, NominationLoss::L1);
    const WeightVector l2 = median_nom_weights(10, 5, NominationLoss::L2);
    const std::vector<double> t1 = {0.209, 0.291, 0.352, 0.405, 0.453, 0.500};
    const std::vector<double> t2 = {0.125, 0.257, 0.332, 0.393, 0.448, 0.500};
    for (int i = 0; i <= 5; ++i) {
        EXPECT_NEAR(std::round(l1[i] * 1000) / 1000, t1[i], 5e-4) << i;
        EXPECT_NEAR(std::round(l2[i] * 1000) / 1000, t2[i], 5e-4) << i;
    }
}

TEST(MedianWeights, SubstitutionOracleAndSymmetry) {
    for (int k : {3, 5}) {
        const int n = 8;
        const WeightVector l1 = median_nom_weights(n, k, NominationLoss::L1);
        const WeightVector l2 = median_nom_weights(n, k, NominationLoss::L2);
        for (int i = 0; i <= n; ++i) {
            EXPECT_NEAR(l1[i], median_l1_oracle(i, n, k), 1e-10) << k << " " << i;
            EXPECT_NEAR(l2[i], median_l2_oracle(i, n, k), 1e-10) << k << " " << i;
            EXPECT_NEAR(l1[i] + l1[n - i], 1.0, 1e-10);
            EXPECT_NEAR(l2[i] + l2[n - i], 1.0, 1e-10);
        }
        EXPECT_NEAR(l1[n / 2], 0.5, 1e-12);
        EXPECT_NEAR(l2[n / 2], 0.5, 1e-12);
    }
}

TEST(MleWeights, MaximaAndMedian) {
    const WeightVector mx = mle_nomination_weights(10, NominationScheme{NominationKind::maxima, 5, 10});
    EXPECT_EQ(mx[0], 0.0);
    EXPECT_NEAR(mx[5], std::pow(0.5, 0.2), 1e-15);
    EXPECT_NEAR(mx[5], 0.87055, 1e-5);
    EXPECT_EQ(mx[10], 1.0);
    const WeightVector md = mle_nomination_weights(10, NominationScheme{NominationKind::median, 5, 10});
    const std::vector<double> want = {0.000, 0.247, 0.327, 0.390, 0.446, 0.500};
    for (int i = 0; i <= 5; ++i) EXPECT_NEAR(std::round(md[i] * 1000) / 1000, want[i], 5e-4);
    EXPECT_EQ(md[10], 1.0);
}

TEST(WeightedSolve, EmpiricalCdfUnderInverseVarianceWeight) {
    const LossSpec l = loss_of(Rho::squared(), WeightFn::ef());
    const int n = 6;
    for (int i = 0; i <= n; ++i)
        EXPECT_NEAR(weighted_solve(BetaIndex(i, n), l, Transform::identity()), static_cast<double>(i) / n, 1e-14);
    // The generic solver agrees away from the ends and rejects the ends.
    for (int i = 1; i < n; ++i)
        EXPECT_NEAR(solve_weight(BetaIndex(i, n), l, Transform::identity()), static_cast<double>(i) / n, 1e-8);
    EXPECT_THROW(solve_weight(BetaIndex(0, n), l, Transform::identity()), ImproperPosterior);
    const WeightVector v = best_invariant(n, l, Transform::identity());
    EXPECT_EQ(v[0], 0.0);
    EXPECT_EQ(v[n], 1.0);
}

TEST(WeightedSolve, UniformWeightAndPowerWeight) {
    const LossSpec flat = loss_of(Rho::squared(), WeightFn::pow(1));
    EXPECT_NEAR(weighted_solve(BetaIndex(2, 5), flat, Transform::identity()), 3.0 / 7, 1e-14);
    const LossSpec l2 = loss_of(Rho::squared(), WeightFn::pow(0.2));
    const WeightVector lse = maxima_lse_weights(10, 5);
    const Transform mx = Transform::maxima(5);
    for (int i = 0; i <= 10; ++i)
        EXPECT_NEAR(mx.eval(weighted_solve(BetaIndex(i, 10), l2, mx)), lse[i], 1e-12);
}

TEST(Constrained, Examples) {
    const WeightVector agg = best_invariant(3, LossSpec{}, Transform::identity());
    const WeightVector c = constrained_weights(agg);
    EXPECT_EQ(c[0], 0.0);
    EXPECT_DOUBLE_EQ(c[1], 0.4);
    EXPECT_DOUBLE_EQ(c[2], 0.6);
    EXPECT_EQ(c[3], 1.0);
    EXPECT_EQ(constrained_weights(c).u, c.u);
    const WeightVector med = constrained_weights(best_invariant(2, loss_of(Rho::absolute()), Transform::identity()));
    EXPECT_EQ(med[0], 0.0);
    EXPECT_NEAR(med[1], 0.5, 1e-14);
    EXPECT_EQ(med[2], 1.0);
}

TEST(Balanced, CombineAndGenuineness) {
    const WeightVector star(2, {0.25, 0.5, 0.75});
    BalancedSpec zero{{0.0, 0.4, 1.0}, {0.0, 0.0, 0.0}};
    EXPECT_EQ(balanced_combine(zero, star).u, star.u);
    BalancedSpec one{{0.0, 0.4, 1.0}, {1.0, 1.0, 1.0}};
    EXPECT_EQ(balanced_combine(one, star).u, one.target_weights);

    EXPECT_TRUE(genuineness_check(std::vector<double>{0, 0.5, 1}, std::vector<double>{0.25, 0.5, 0.75}).ok);
    EXPECT_TRUE(genuineness_check(star, star).ok);
    const auto bad = genuineness_check(std::vector<double>{0, 0.9, 1}, std::vector<double>{0.25, 0.5, 0.75});
    EXPECT_FALSE(bad.ok);
    EXPECT_EQ(bad.failures, (std::vector<std::size_t>{1}));

    // F_n target with Aggarwal weights satisfies the condition for any n.
    for (int n : {2, 5, 20}) {
        std::vector<double> fn;
        for (int i = 0; i <= n; ++i) fn.push_back(static_cast<double>(i) / n);
        EXPECT_TRUE(genuineness_check(fn, best_invariant(n, LossSpec{}, Transform::identity()).u).ok);
    }

    BalancedSpec crossing{{0.0, 0.9, 0.1}, {1.0, 1.0, 1.0}};
    EXPECT_THROW(balanced_combine(crossing, star), NonMonotoneResult);
}

TEST(Balanced, CaseStudyRecipe) {
    const int n = 14;
    const WeightVector cs = case_study_weights(n, 5);
    const WeightVector lse = maxima_lse_weights(n, 5);
    const WeightVector mle = mle_nomination_weights(n, NominationScheme{NominationKind::maxima, 5, n});
    for (int i = 0; i < n; ++i) EXPECT_EQ(cs[i], 0.5 * (lse[i] + mle[i]));
    EXPECT_EQ(cs[n], 1.0);
    EXPECT_TRUE(genuineness_check(mle, lse).ok);
}

TEST(BestInvariant, MonotoneAndInteriorAcrossLosses) {
    const std::vector<LossSpec> losses = {LossSpec{}, loss_of(Rho::absolute()), loss_of(Rho::lp(0.5)),
                                          loss_of(Rho::linex(0.5)), loss_of(Rho::entropy_ratio())};
    const std::vector<Transform> taus = {Transform::identity(), Transform::power(2), Transform::minima(3),
                                         Transform::log_odds(), Transform::median_nom(3)};
    for (const auto& l : losses)
        for (const auto& t : taus) {
            if (l.rho.log_scale() && t.kind() == TransformKind::log_odds) {
                EXPECT_THROW(best_invariant(4, l, t), DomainError);
                continue;
            }
            const WeightVector v = best_invariant(4, l, t);
            EXPECT_TRUE(v.interior()) << l.rho.name() << " " << t.name();
        }
}

TEST(BestInvariant, SymmetryForSymmetricTransforms) {
    for (const auto& l : {LossSpec{}, loss_of(Rho::absolute()), loss_of(Rho::lp(0.5))})
        for (const auto& t : {Transform::identity(), Transform::median_nom(5)}) {
            const int n = 6;
            const WeightVector v = best_invariant(n, l, t);
            for (int i = 0; i <= n; ++i) EXPECT_NEAR(v[i] + v[n - i], 1.0, 1e-8) << l.rho.name() << " " << t.name();
        }
}

TEST(BestInvariant, StepWeightsDoNotChangeSolution) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> w(0.05, 1.0);
    for (const auto& base : {LossSpec{}, loss_of(Rho::lp(0.5)), loss_of(Rho::absolute())}) {
        LossSpec weighted = base;
        for (int i = 0; i <= 5; ++i) weighted.step_weights.push_back(w(rng));
        SolveOptions generic;
        generic.force_generic = true;
        const WeightVector a = best_invariant(5, base, Transform::power(0.5), generic);
        const WeightVector b = best_invariant(5, weighted, Transform::power(0.5), generic);
        for (int i = 0; i <= 5; ++i) EXPECT_NEAR(a[i], b[i], 1e-10) << base.rho.name();
    }
}

TEST(StepEstimatorFit, EvaluateAndQuantile) {
    const WeightVector v(3, {0.2, 0.4, 0.6, 0.8});
    const StepEstimator e = fit({3.0, 1.0, 2.0}, v);
    EXPECT_EQ(evaluate(e, 0.5), 0.2);
    EXPECT_EQ(evaluate(e, 1.0), 0.4);
    EXPECT_EQ(evaluate(e, 1.5), 0.4);
    EXPECT_EQ(evaluate(e, 2.0), 0.6);
    EXPECT_EQ(evaluate(e, 3.0), 0.8);
    EXPECT_EQ(quantile(e, 0.5), 2.0);
    EXPECT_EQ(quantile(e, 0.1), -std::numeric_limits<double>::infinity());
    EXPECT_EQ(quantile(e, 0.9), std::numeric_limits<double>::infinity());

    const StepEstimator t = fit({3.0, 1.0, 2.0}, v, 1.0);
    EXPECT_EQ(evaluate(t, 3.5), 1.0);
    EXPECT_EQ(quantile(t, 0.9), 3.0);

    EXPECT_THROW(fit({1.0, 2.0}, v), DomainError);
    EXPECT_THROW(fit({}, v), DomainError);
}

TEST(StepEstimatorFit, TiesAreJitteredDeterministically) {
    const WeightVector v(4, {0.1, 0.3, 0.5, 0.7, 0.9});
    FitDiagnostics d1;
    FitDiagnostics d2;
    const StepEstimator a = fit({2.0, 1.0, 2.0, 5.0}, v, std::nullopt, &d1);
    const StepEstimator b = fit({2.0, 1.0, 2.0, 5.0}, v, std::nullopt, &d2);
    EXPECT_EQ(a.knots, b.knots);
    EXPECT_EQ(d1.ties_resolved, 1u);
    EXPECT_FALSE(d1.warnings.empty());
    for (std::size_t i = 1; i < a.knots.size(); ++i) EXPECT_GT(a.knots[i], a.knots[i - 1]);
    EXPECT_NEAR(a.knots[2] - a.knots[1], 4e-9, 1e-15);
}

TEST(WeightVectorType, Validation) {
    EXPECT_THROW(WeightVector(2, {0.1, 0.2}), DomainError);
    EXPECT_THROW(WeightVector(2, {0.1, 0.3, 1.2}), DomainError);
    EXPECT_THROW(WeightVector(2, {0.5, 0.3, 0.9}), NonMonotoneResult);
}
