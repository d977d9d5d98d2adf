#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oubv/bv.hpp"

using namespace oubv;

namespace {

const double kTwoG0 = 2.0 / std::sqrt(2.0 * M_PI);

ScalarField sign_field(const GridPtr& g) {
    return ScalarField::from_function(g, [](const Point& x) { return x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0); });
}

}  // namespace

TEST(Divergence, Examples) {
    const auto g = build_grid(1, 4.0, 1.0 / 64.0);
    const auto e1 = VectorField::from_function(g, [](const Point&) { return Point{1, 0, 0}; });
    const auto d1 = gaussian_divergence(e1);
    const auto ye1 = VectorField::from_function(g, [](const Point& y) { return Point{y[0], 0, 0}; });
    const auto d2 = gaussian_divergence(ye1);
    const auto zero = gaussian_divergence(VectorField::from_function(g, [](const Point&) { return Point{}; }));
    for (std::size_t n = 0; n < g->size(); ++n) {
        const double y = g->node(n)[0];
        EXPECT_NEAR(d1[n], -y, 1e-12);
        EXPECT_NEAR(d2[n], 1.0 - y * y, 1e-12);
        EXPECT_EQ(zero[n], 0.0);
    }
}

TEST(Divergence, TwoDimensionalAnalytic) {
    const auto g = build_grid(2, 2.0, 1.0 / 128.0);
    const auto phi = VectorField::from_function(g, [](const Point& y) { return Point{std::sin(y[1]), y[0] * y[1], 0}; });
    const auto div = gaussian_divergence(phi);
    for (std::size_t n = 0; n < g->size(); n += 131) {
        const auto idx = g->multi_index(n);
        if (idx[0] == 0 || idx[1] == 0 || idx[0] == g->cells() || idx[1] == g->cells()) continue;
        const Point y = g->node(n);
        EXPECT_NEAR(div[n], y[0] - y[0] * std::sin(y[1]) - y[0] * y[1] * y[1], 1e-10);
    }
}

TEST(SobolevVariation, Examples) {
    const auto g = build_grid(1, 8.0, 1.0 / 1024.0);
    const auto lin = ScalarField::from_function(g, [](const Point& x) { return x[0]; });
    const auto I = ConvexBody::interval(-1.0, 1.0);
    const auto v = sobolev_variation(lin, I);
    EXPECT_NEAR(v.value, std::erf(1.0 / std::sqrt(2.0)), 5.0 * g->spacing());
    EXPECT_EQ(v.method, VariationMethod::Sobolev);
    EXPECT_EQ(v.resolution, g->spacing());
    EXPECT_EQ(sobolev_variation(ScalarField::constant(g, 2.0), I).value, 0.0);
    EXPECT_NEAR(sobolev_variation(lin).value, 1.0, 1e-10);
    EXPECT_THROW(sobolev_variation(lin, ConvexBody::ball(2, 1.0)), std::invalid_argument);
}

TEST(SobolevVariation, OneSidedBoundaryGradientIsExactForQuadratics) {
    const auto g = build_grid(1, 4.0, 1.0 / 32.0);
    const auto q = ScalarField::from_function(g, [](const Point& x) { return x[0] * x[0]; });
    const auto I = ConvexBody::interval(-1.0, 1.0);
    const auto grad = gradient(q, effective_mask(q, &I));
    for (std::size_t n = 0; n < g->size(); ++n) {
        if (!I.contains(g->node(n))) continue;
        EXPECT_NEAR(grad.at(n)[0], 2.0 * g->node(n)[0], 1e-12);
    }
}

TEST(JumpVariation, Examples) {
    const auto I = ConvexBody::interval(-1.0, 1.0);
    EXPECT_NEAR(jump_variation(JumpSet{1, {{0.0, 1.0}}, {}}, I).value, 0.3989423, 1e-7);
    EXPECT_NEAR(jump_variation(JumpSet{1, {{0.0, 2.0}}, {}}, I).value, 0.7978846, 1e-7);
    EXPECT_THROW(jump_variation(JumpSet{1, {{0.5, 1.0}}, {}}, ConvexBody::interval(-1.0, 0.25)),
                 std::invalid_argument);
}

TEST(JumpVariation, SegmentAcrossDiskMatchesErf) {
    const auto disk = ConvexBody::ball(2, 1.0);
    const JumpSet js{2, {}, {{Point{0, -5, 0}, Point{0, 5, 0}, 2.0}}};
    EXPECT_NEAR(jump_variation(js, disk).value, kTwoG0 * std::erf(1.0 / std::sqrt(2.0)), 1e-7);
    const JumpSet outside{2, {}, {{Point{2, -5, 0}, Point{2, 5, 0}, 1.0}}};
    EXPECT_THROW(jump_variation(outside, disk), std::invalid_argument);
}

TEST(JumpVariation, SobolevOfSharpJumpApproachesJumpForm) {
    const auto g = build_grid(1, 8.0, 1.0 / 1024.0);
    const auto I = ConvexBody::interval(-1.0, 1.0);
    EXPECT_NEAR(sobolev_variation(sign_field(g), I).value, kTwoG0, 1e-3);
}

TEST(DualBound, Examples) {
    const auto g = build_grid(1, 8.0, 1.0 / 512.0);
    const auto I = ConvexBody::interval(-1.0, 1.0);
    const auto fam = stock_dual_family(g, {Point{}}, {0.3, 0.6, 0.9});
    const auto c = dual_variation_lower_bound(ScalarField::constant(g, 1.0), I, fam);
    EXPECT_NEAR(c.value, 0.0, 1e-10);
    const auto s = dual_variation_lower_bound(sign_field(g), I, fam);
    EXPECT_EQ(s.method, VariationMethod::Dual);
    EXPECT_GE(s.value, 0.75);
    EXPECT_LE(s.value, 0.7978846 + 1e-9);
}

TEST(DualBound, RejectsInadmissibleFields) {
    const auto g = build_grid(1, 4.0, 1.0 / 64.0);
    const auto I = ConvexBody::interval(-1.0, 1.0);
    const auto u = sign_field(g);
    const auto big = VectorField::from_function(g, [](const Point& y) {
        return Point{1.5 * plateau(std::abs(y[0]) / 0.5), 0, 0};
    });
    EXPECT_THROW(dual_variation_lower_bound(u, I, {big}), std::invalid_argument);
    const auto wide = bump_test_field(g, Point{}, 1.0, 0);
    EXPECT_THROW(dual_variation_lower_bound(u, I, {wide}), std::invalid_argument);
    EXPECT_THROW(dual_variation_lower_bound(u, I, {}), std::invalid_argument);
}

TEST(DualBound, NeverExceedsSobolevOnRandomSmoothData) {
    const auto g = build_grid(2, 3.0, 1.0 / 32.0);
    const auto body = ConvexBody::ball(2, 1.5);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> c(-1.0, 1.0);
    std::vector<Point> centers{{0, 0, 0}, {0.4, 0.2, 0}, {-0.3, 0.5, 0}};
    const auto fam = stock_dual_family(g, centers, {0.3, 0.6});
    for (int i = 0; i < 5; ++i) {
        const double a = c(rng), b = c(rng), e = c(rng);
        const auto u = ScalarField::from_function(g, [&](const Point& x) {
            return a * std::sin(2.0 * x[0]) + b * x[1] * x[0] + e * std::tanh(3.0 * x[1]);
        });
        EXPECT_LE(dual_variation_lower_bound(u, body, fam).value, sobolev_variation(u, body).value + 1e-3);
    }
}

TEST(RegularizedVariation, Examples) {
    const auto g = build_grid(1, 8.0, 1.0 / 256.0);
    const auto I = ConvexBody::interval(-1.0, 1.0);
    const double mass = gaussian_integrate(ScalarField::constant(g, 1.0), I);
    EXPECT_LE(regularized_variation(ScalarField::constant(g, 1.0), 1.0, I), mass + 1e-12);
    EXPECT_THROW(regularized_variation(ScalarField::constant(g, 1.0), 0.0, I), std::invalid_argument);

    const auto lin = ScalarField::from_function(g, [](const Point& x) { return x[0]; });
    double theta_mass = 0.0;
    for (std::size_t n = 0; n < g->size(); ++n) theta_mass += radial_cutoff(std::abs(g->node(n)[0]), 100.0) * g->weight(n);
    EXPECT_NEAR(regularized_variation(lin, 100.0), std::sqrt(1.01) * theta_mass, 1e-10);
}

TEST(RegularizedVariation, DecreasesToSobolev) {
    const auto g = build_grid(1, 8.0, 1.0 / 256.0);
    const auto u = ScalarField::from_function(g, [](const Point& x) { return std::sin(x[0]) + 0.3 * x[0] * x[0]; });
    const double sob = sobolev_variation(u).value;
    double prev = std::numeric_limits<double>::infinity();
    for (double R : {1.0, 10.0, 100.0, 1000.0}) {
        const double r = regularized_variation(u, R);
        EXPECT_LT(r, prev);
        prev = r;
    }
    EXPECT_NEAR(prev, sob, 2e-3);
}

TEST(RadialCutoff, Shape) {
    EXPECT_EQ(radial_cutoff(0.5, 1.0), 1.0);
    EXPECT_EQ(radial_cutoff(2.0, 1.0), 0.0);
    double prev = 1.0;
    for (double r = 1.0; r <= 2.0; r += 0.01) {
        const double v = radial_cutoff(r, 1.0);
        EXPECT_LE(v, prev);
        EXPECT_LE(std::abs(v - radial_cutoff(r + 1e-6, 1.0)) / 1e-6, 2.0);
        prev = v;
    }
}

TEST(MeyersSerrin, SignOnInterval) {
    const auto g = build_grid(1, 8.0, 1.0 / 1024.0);
    const auto I = ConvexBody::interval(-1.0, 1.0);
    const double eps = 0.05;
    const auto r = meyers_serrin_approximate(sign_field(g), eps, I);
    EXPECT_LT(r.l2_error, eps);
    EXPECT_LT(std::abs(sobolev_variation(r.field, I).value - kTwoG0), eps * r.drift_factor(eps));
}

TEST(MeyersSerrin, SmoothInteriorDataAndConstants) {
    const auto g = build_grid(1, 8.0, 1.0 / 512.0);
    const auto I = ConvexBody::interval(-2.0, 2.0);
    const auto bump = ScalarField::from_function(g, [](const Point& x) { return plateau(std::abs(x[0])); });
    const double eps = 0.2;
    const auto r = meyers_serrin_approximate(bump, eps, I);
    EXPECT_LT(std::abs(sobolev_variation(r.field, I).value - sobolev_variation(bump, I).value), eps);

    const auto c = meyers_serrin_approximate(ScalarField::constant(g, 0.7), 0.1, I);
    for (std::size_t n = 0; n < g->size(); ++n) {
        if (c.field.active(n)) ASSERT_NEAR(c.field[n], 0.7, 1e-12);
    }
    EXPECT_NEAR(sobolev_variation(c.field, I).value, 0.0, 1e-10);
}

TEST(MeyersSerrin, RequestsRefinementWhenRadiusFallsBelowGrid) {
    const auto g = build_grid(1, 8.0, 1.0 / 64.0);
    EXPECT_THROW(meyers_serrin_approximate(sign_field(g), 0.01, ConvexBody::interval(-1.0, 1.0)), std::runtime_error);
    EXPECT_THROW(meyers_serrin_approximate(sign_field(g), 0.0, ConvexBody::interval(-1.0, 1.0)),
                 std::invalid_argument);
}

TEST(ConditionalExpectation, Examples) {
    const auto g = build_grid(2, 6.0, 1.0 / 16.0);
    const auto f = ScalarField::from_function(g, [](const Point& x) { return std::cos(x[0]); });
    const auto ef = conditional_expectation(f, 1);
    const auto s = conditional_expectation(ScalarField::from_function(g, [](const Point& x) { return x[0] + x[1]; }), 1);
    const auto q = conditional_expectation(ScalarField::from_function(g, [](const Point& x) { return x[0] * x[1] * x[1]; }), 1);
    for (std::size_t n = 0; n < g->size(); ++n) {
        const double x = g->node(n)[0];
        ASSERT_NEAR(ef[n], f[n], 1e-14);
        ASSERT_NEAR(s[n], x, 1e-12);
        ASSERT_NEAR(q[n], x, 1e-6 * (1.0 + std::abs(x)));
    }
    EXPECT_THROW(conditional_expectation(f, 2), std::invalid_argument);
    EXPECT_THROW(conditional_expectation(f, 0), std::invalid_argument);
}

TEST(ConditionalExpectation, ThreeDimensionalAveragesTrailingPair) {
    const auto g = build_grid(3, 4.0, 0.25);
    const auto u = ScalarField::from_function(g, [](const Point& x) { return x[0] + x[1] * x[1] + x[1] * x[2]; });
    const auto e = conditional_expectation(u, 1);
    const double second = [&] {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < g->per_axis(); ++i) {
            const double y = g->coord(i), w = std::exp(-0.5 * y * y);
            num += y * y * w;
            den += w;
        }
        return num / den;
    }();
    for (std::size_t n = 0; n < g->size(); n += 17) EXPECT_NEAR(e[n], g->node(n)[0] + second, 1e-12);
}

TEST(BvNorm, Examples) {
    const auto g = build_grid(1, 8.0, 1.0 / 512.0);
    const auto whole = ConvexBody::whole_space(1);
    EXPECT_NEAR(bv_norm(ScalarField::constant(g, 1.0), whole), 1.0, 1e-12);
    EXPECT_EQ(bv_norm(ScalarField::constant(g, 0.0), whole), 0.0);
    const auto I = ConvexBody::interval(-1.0, 1.0);
    const JumpSet js{1, {{0.0, 2.0}}, {}};
    EXPECT_NEAR(bv_norm(sign_field(g), I, &js), std::erf(1.0 / std::sqrt(2.0)) + kTwoG0, 5.0 * g->spacing());
}

TEST(IntegrationByParts, ResidualShrinksWithSpacing) {
    double prev = 1.0;
    for (int p = 5; p <= 8; ++p) {
        const auto g = build_grid(2, 3.0, std::ldexp(1.0, -p));
        const auto u = ScalarField::from_function(g, [](const Point& x) { return std::exp(0.3 * x[0]) * std::cos(x[1]); });
        const auto phi = VectorField::from_function(g, [](const Point& y) {
            const double b = plateau(std::hypot(y[0] - 0.2, y[1]) / 1.2);
            return Point{0.6 * b, -0.8 * b, 0};
        });
        const double r = integration_by_parts_residual(u, phi);
        EXPECT_LT(r, g->spacing());
        EXPECT_LT(r, prev);
        prev = r;
    }
}

TEST(VariationEstimate, MethodNames) {
    EXPECT_STREQ(to_string(VariationMethod::Sobolev), "sobolev");
    EXPECT_STREQ(to_string(VariationMethod::Jump), "jump");
    EXPECT_STREQ(to_string(VariationMethod::Dual), "dual");
    EXPECT_STREQ(to_string(VariationMethod::Regularized), "regularized");
}
