#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "gevtail/distributions.hpp"
#include "gevtail/estimator.hpp"

using namespace gevtail;

namespace {

OrderedSample random_sample(int n, double xi, std::uint64_t stream) {
    return order_sample(sample_gev({0.0, 1.0, xi}, static_cast<std::size_t>(n), RngSpec{7, stream}));
}

} // namespace

TEST(OrderedSample, SortsDescendingAndIndexesFromOne) {
    const std::vector<double> raw{0.5, 2.0, -1.0, 1.0};
    const auto s = order_sample(raw);
    EXPECT_EQ(s.n(), 4);
    EXPECT_EQ(s.x(1), 2.0);
    EXPECT_EQ(s.x(4), -1.0);
}

TEST(OrderedSample, RejectsBadInput) {
    const std::vector<double> with_nan{1.0, std::nan(""), 0.0};
    try {
        order_sample(with_nan);
        FAIL();
    } catch (const input_error& e) {
        EXPECT_NE(std::string(e.what()).find("NaN value at position 2"), std::string::npos);
    }
    const std::vector<double> with_inf{1.0, INFINITY};
    EXPECT_THROW(order_sample(with_inf), input_error);
    EXPECT_THROW(order_sample(std::vector<double>{}), input_error);
    EXPECT_THROW(OrderedSample::from_descending({0.0, 1.0}), input_error);
}

TEST(OrderedSample, TooSmallForEstimate) {
    const auto s = order_sample(std::vector<double>{1.0, 2.0});
    try {
        combined_estimate(s, make_scheme(WeightKind::equal));
        FAIL();
    } catch (const input_error& e) {
        EXPECT_NE(std::string(e.what()).find("need N >= 3"), std::string::npos);
    }
}

TEST(ElementalIndex, Validation) {
    EXPECT_NO_THROW(ElementalIndex(1, 3, 3));
    EXPECT_THROW(ElementalIndex(1, 2, 3), domain_error);
    EXPECT_THROW(ElementalIndex(0, 3, 3), domain_error);
    EXPECT_THROW(ElementalIndex(2, 5, 4), domain_error);
}

TEST(Enumerate, CountAndOrder) {
    for (int n = 3; n <= 30; ++n) {
        const auto idx = enumerate_elementals(n);
        EXPECT_EQ(idx.size(), static_cast<std::size_t>((n - 1) * (n - 2) / 2));
        EXPECT_EQ(idx.size(), elemental_count(n));
        EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
        EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
    }
    EXPECT_EQ(enumerate_elementals(3).front(), ElementalIndex(1, 3, 3));
    EXPECT_THROW(enumerate_elementals(2), domain_error);
}

TEST(SpacingRatios, DefinitionAndDegeneracy) {
    const auto s = order_sample(std::vector<double>{3.0, 1.0, 0.0});
    const auto r = spacing_ratios(s, {1, 3, 3});
    EXPECT_DOUBLE_EQ(r.tau, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(r.t, 1.0 / 3.0);

    const auto flat = order_sample(std::vector<double>{1.0, 1.0, 1.0});
    EXPECT_THROW(spacing_ratios(flat, {1, 3, 3}), degenerate_spacing_error);
    const auto tie_top = order_sample(std::vector<double>{2.0, 2.0, 0.0});
    try {
        elemental_estimate(tie_top, {1, 3, 3});
        FAIL();
    } catch (const degenerate_spacing_error& e) {
        EXPECT_EQ(e.i(), 1);
        EXPECT_EQ(e.j(), 3);
        EXPECT_TRUE(dynamic_cast<const input_error*>(&e) != nullptr);
    }
}

TEST(ElementalEstimate, WorkedExamples) {
    const auto s = order_sample(std::vector<double>{3.0, 1.0, 0.0});
    EXPECT_NEAR(elemental_estimate(s, {1, 3, 3}), 0.43336348389941525746, 1e-12);
    EXPECT_NEAR(elemental_estimate(s, {1, 3, 3}), 0.4334, 1e-4);
    EXPECT_NEAR(elemental_estimate(s, {1, 3, 3}, Family::gpd), std::log(4.0 / 3.0), 1e-14);
    EXPECT_NEAR(elemental_estimate(s, {1, 3, 3}, Family::gpd), 0.2877, 1e-4);

    const auto sym = order_sample(std::vector<double>{1.0, 0.0, -1.0});
    EXPECT_NEAR(elemental_estimate(sym, {1, 3, 3}), -0.2333031827672514092, 1e-12);
    EXPECT_NEAR((b_coefficient(3, 2) - b_coefficient(3, 1)) * std::log(0.5), -0.2333, 1e-4);
}

TEST(ElementalEstimate, ExplicitPairMatchesFamilyRoute) {
    const auto s = random_sample(9, 0.3, 1);
    for (const auto& e : enumerate_elementals(9)) {
        const CoefficientPair w{a_coefficient(9, e.j), b_coefficient(9, e.i)};
        EXPECT_EQ(elemental_estimate(s, e, w), elemental_estimate(s, e));
    }
}

TEST(ElementalEstimate, LocationScaleInvariance) {
    for (std::uint64_t k = 0; k < 200; ++k) {
        const int n = 3 + static_cast<int>(k % 12);
        const auto s = random_sample(n, -0.5 + 0.01 * static_cast<double>(k), k);
        const auto moved = s.affine(3.7, -12.5);
        for (Family f : {Family::gev, Family::gpd, Family::weibull}) {
            for (const auto& e : enumerate_elementals(n)) {
                const double a = elemental_estimate(s, e, f);
                const double b = elemental_estimate(moved, e, f);
                EXPECT_NEAR(a, b, 1e-9 * std::max(1.0, std::abs(a)));
            }
        }
    }
}

TEST(ElementalEstimate, ReflectionIdentity) {
    for (std::uint64_t k = 0; k < 300; ++k) {
        const int n = 3 + static_cast<int>(k % 8);
        const auto s = random_sample(n, 0.2, 1000 + k);
        const auto r = s.reflected();
        for (const auto& e : enumerate_elementals(n)) {
            const double zeta = elemental_estimate(r, e, Family::weibull);
            const double xi = elemental_estimate(s, {n + 1 - e.j, n + 1 - e.i, n}, Family::gev);
            EXPECT_NEAR(zeta, xi, 1e-9 * std::max(1.0, std::abs(xi)));
        }
    }
}

TEST(ElementalEstimate, PermutationInvariantViaOrdering) {
    std::vector<double> raw{0.3, -1.2, 4.5, 2.2, 0.9, -0.1};
    const double base = combined_estimate(order_sample(raw), make_scheme(WeightKind::equal));
    std::sort(raw.begin(), raw.end());
    do {
        EXPECT_EQ(combined_estimate(order_sample(raw), make_scheme(WeightKind::equal)), base);
    } while (std::next_permutation(raw.begin(), raw.begin() + 4));
}

TEST(Evaluator, BitIdenticalToSingleElementalPath) {
    for (Family f : {Family::gev, Family::gpd, Family::weibull}) {
        for (int n : {3, 4, 7, 18, 40}) {
            const auto s = random_sample(n, 0.1, 50 + static_cast<std::uint64_t>(n));
            ElementalEvaluator ev(f, n);
            std::vector<double> out(ev.size());
            EXPECT_EQ(ev.evaluate(s, out), 0u);
            for (std::size_t k = 0; k < out.size(); ++k) {
                EXPECT_EQ(out[k], elemental_estimate(s, ev.indices()[k], f)) << n;
            }
        }
    }
}

TEST(Evaluator, MarksDegenerateEntries) {
    const auto s = order_sample(std::vector<double>{5.0, 4.0, 4.0, 4.0, 1.0});
    ElementalEvaluator ev(Family::gev, 5);
    std::vector<double> out(ev.size());
    const auto bad = ev.evaluate(s, out);
    EXPECT_GT(bad, 0u);
    for (std::size_t k = 0; k < out.size(); ++k) {
        const auto& e = ev.indices()[k];
        bool degenerate = false;
        try {
            elemental_estimate(s, e);
        } catch (const degenerate_spacing_error&) {
            degenerate = true;
        }
        EXPECT_EQ(std::isnan(out[k]), degenerate) << e.i << "," << e.j;
    }
    std::vector<double> wrong(ev.size());
    EXPECT_THROW(ev.evaluate(random_sample(6, 0.0, 1), wrong), domain_error);
}

TEST(Weights, UnitSumAndNonnegative) {
    for (int n : {3, 4, 10, 57}) {
        for (WeightKind k : standard_weight_kinds) {
            const auto w = combination_weights(make_scheme(k), n);
            double sum = 0.0;
            for (const auto& x : w) {
                EXPECT_GE(x.weight, 0.0);
                sum += x.weight;
            }
            EXPECT_NEAR(sum, 1.0, 1e-12);
        }
    }
}

TEST(Weights, RawFormulas) {
    const auto s = WeightScheme::parse("nj1+jmi");
    EXPECT_EQ(s.raw_weight(2, 5, 9), (9 - 5 + 1) + (5 - 1 - 2));
    EXPECT_EQ(WeightScheme::parse("i").raw_weight(4, 7, 9), 4.0);
    EXPECT_EQ(WeightScheme::parse("jmi+i").raw_weight(4, 7, 9), 2.0 + 4.0);
    EXPECT_EQ(WeightScheme::parse("nj1+i").raw_weight(4, 7, 9), 3.0 + 4.0);
    // jmi vanishes on every elemental at N = 3 except none: j-1-i = 1 there.
    EXPECT_EQ(WeightScheme::parse("jmi").raw_weight(1, 3, 3), 1.0);
    EXPECT_THROW(WeightScheme::parse("bogus"), config_error);
    for (WeightKind k : standard_weight_kinds) {
        EXPECT_EQ(WeightScheme::parse(make_scheme(k).name()).kind, k);
    }
}

TEST(Weights, SingleElementalAtNThree) {
    const auto s = order_sample(std::vector<double>{3.0, 1.0, 0.0});
    for (WeightKind k : standard_weight_kinds) {
        EXPECT_NEAR(combined_estimate(s, make_scheme(k)), 0.43336348389941525746, 1e-12);
    }
}

TEST(Weights, CustomSchemes) {
    const auto s = random_sample(6, 0.4, 3);
    const auto one = WeightScheme::custom({{{2, 5}, 3.0}});
    EXPECT_EQ(combined_estimate(s, one), elemental_estimate(s, {2, 5, 6}));

    const auto two = WeightScheme::custom({{{1, 3}, 1.0}, {{2, 6}, 3.0}});
    EXPECT_NEAR(combined_estimate(s, two),
                0.25 * elemental_estimate(s, {1, 3, 6}) + 0.75 * elemental_estimate(s, {2, 6, 6}), 1e-14);

    EXPECT_THROW(combined_estimate(s, WeightScheme::custom({{{1, 3}, -1.0}})), config_error);
    EXPECT_THROW(combined_estimate(s, WeightScheme::custom({{{1, 3}, 0.0}})), config_error);
    EXPECT_THROW(combined_estimate(s, WeightScheme::custom({{{1, 2}, 1.0}})), config_error);
    EXPECT_THROW(combined_estimate(s, WeightScheme::custom({{{1, 9}, 1.0}})), config_error);
}

TEST(Combined, MatchesExplicitSum) {
    const auto s = random_sample(12, -0.3, 11);
    for (WeightKind k : standard_weight_kinds) {
        const auto w = combination_weights(make_scheme(k), 12);
        double ref = 0.0;
        for (const auto& x : w) ref += x.weight * elemental_estimate(s, x.index);
        EXPECT_NEAR(combined_estimate(s, make_scheme(k)), ref, 1e-12);
    }
}

TEST(Combined, CombinedEstimatorAgrees) {
    CombinedEstimator est(make_scheme(WeightKind::w_nj1), Family::gev, 15);
    for (std::uint64_t k = 0; k < 20; ++k) {
        const auto s = random_sample(15, 0.5, 200 + k);
        EXPECT_EQ(est(s), combined_estimate(s, make_scheme(WeightKind::w_nj1)));
    }
    CombinedEstimator copy = est;
    const auto s = random_sample(15, 0.5, 999);
    EXPECT_EQ(copy(s), est(s));
}

TEST(Combined, DegeneratePolicy) {
    const auto s = order_sample(std::vector<double>{5.0, 4.0, 4.0, 3.0, 1.0});
    EXPECT_THROW(combined_estimate(s, make_scheme(WeightKind::equal)), degenerate_spacing_error);
    const double skipped = combined_estimate(s, make_scheme(WeightKind::equal), Family::gev, {.skip_degenerate = true});
    EXPECT_TRUE(std::isfinite(skipped));

    double acc = 0.0;
    double used = 0.0;
    for (const auto& e : enumerate_elementals(5)) {
        try {
            acc += elemental_estimate(s, e);
            used += 1.0;
        } catch (const degenerate_spacing_error&) {
        }
    }
    EXPECT_NEAR(skipped, acc / used, 1e-13);

    const auto flat = order_sample(std::vector<double>{1.0, 1.0, 1.0, 1.0});
    EXPECT_THROW(combined_estimate(flat, make_scheme(WeightKind::equal), Family::gev, {.skip_degenerate = true}),
                 degenerate_spacing_error);
}

TEST(Combined, WeibullFamilyTracksReflectedShape) {
    // On the mirrored sample the Weibull-family estimate equals the GEV one
    // under the index-reversed weights.
    const int n = 8;
    const auto s = random_sample(n, 0.25, 77);
    std::map<std::pair<int, int>, double> w;
    std::map<std::pair<int, int>, double> w_mirror;
    for (const auto& e : enumerate_elementals(n)) {
        const double raw = 1.0 + e.i + 2.0 * e.j;
        w[{e.i, e.j}] = raw;
        w_mirror[{n + 1 - e.j, n + 1 - e.i}] = raw;
    }
    const double zeta = combined_estimate(s.reflected(), WeightScheme::custom(w), Family::weibull);
    const double xi = combined_estimate(s, WeightScheme::custom(w_mirror), Family::gev);
    EXPECT_NEAR(zeta, xi, 1e-12);
}

TEST(PerElemental, RowsMatchSingleEvaluations) {
    const auto s = random_sample(6, 1.0, 5);
    const auto rows = per_elemental(s, Family::gev);
    ASSERT_EQ(rows.size(), elemental_count(6));
    for (const auto& r : rows) {
        const auto q = spacing_ratios(s, r.index);
        EXPECT_EQ(r.tau, q.tau);
        EXPECT_EQ(r.t, q.t);
        EXPECT_NEAR(r.estimate, elemental_estimate(s, r.index), 1e-14);
    }
}

TEST(Family, ParseRoundTrip) {
    for (Family f : {Family::gev, Family::gpd, Family::weibull}) EXPECT_EQ(parse_family(to_string(f)), f);
    EXPECT_THROW(parse_family("frechet"), config_error);
}
