#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oubv/convex.hpp"

using namespace oubv;

namespace {

double normal_cdf_oracle(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

TEST(Minkowski, Examples) {
    const auto ball = ConvexBody::ball(2, 1.0);
    EXPECT_DOUBLE_EQ(minkowski_eval(ball, Point{2.0, 0.0, 0}), 2.0);
    const auto sq = ConvexBody::cube(2, 1.0);
    EXPECT_DOUBLE_EQ(minkowski_eval(sq, Point{0.5, 0.25, 0}), 0.5);
    for (const auto& b : {ball, sq, ConvexBody::regular_polygon(7, 0.8)}) {
        EXPECT_EQ(minkowski_eval(b, b.center()), 0.0);
    }
    const auto shifted = ConvexBody::halfspaces(1, {{{1, 0, 0}, 3.0}, {{-1, 0, 0}, -1.0}});
    EXPECT_NEAR(shifted.center()[0], 2.0, 1e-12);
    EXPECT_NEAR(minkowski_eval(shifted, Point{3.0, 0, 0}), 1.0, 1e-12);
}

TEST(Minkowski, HalfspaceClosedForm) {
    const std::vector<Halfspace> faces{{{1, 0, 0}, 2.0}, {{0, 1, 0}, 1.0}, {{-M_SQRT1_2, -M_SQRT1_2, 0}, 1.0}};
    const auto body = ConvexBody::halfspaces(2, faces, Point{0.1, -0.2, 0});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 500; ++i) {
        const Point x{u(rng), u(rng), 0};
        double expect = 0.0;
        for (const auto& f : faces) {
            const double num = f.normal[0] * (x[0] - 0.1) + f.normal[1] * (x[1] + 0.2);
            const double den = f.offset - (f.normal[0] * 0.1 - f.normal[1] * 0.2);
            expect = std::max(expect, std::max(num, 0.0) / den);
        }
        EXPECT_NEAR(body.gauge(x), expect, 1e-14);
        bool inside = true;
        for (const auto& f : faces) inside = inside && f.normal[0] * x[0] + f.normal[1] * x[1] < f.offset;
        EXPECT_EQ(body.contains(x), inside);
    }
}

TEST(ConvexBody, Invariants) {
    const auto poly = ConvexBody::regular_polygon(6, 1.0);
    EXPECT_NEAR(poly.inradius(), 1.0, 1e-12);
    for (const auto& f : poly.faces()) EXPECT_LE(dot(f.normal, poly.center(), 2) + poly.inradius(), f.offset + 1e-12);
    EXPECT_THROW(ConvexBody::halfspaces(1, {{{1, 0, 0}, -1.0}, {{-1, 0, 0}, -1.0}}), std::invalid_argument);
    EXPECT_THROW(ConvexBody::halfspaces(2, {{{1, 0, 0}, 1.0}}, Point{2.0, 0, 0}), std::invalid_argument);
    EXPECT_THROW(ConvexBody::ball(2, 0.0), std::invalid_argument);
}

TEST(SmoothBody, SquareVerticesStrictlyInterior) {
    const auto sq = ConvexBody::cube(2, 1.0);
    const auto sm = smooth_body(sq, 0.05);
    EXPECT_TRUE(sm.smooth());
    for (double sx : {-1.0, 1.0}) {
        for (double sy : {-1.0, 1.0}) EXPECT_LT(minkowski_eval(sm, Point{sx, sy, 0}), 1.0);
    }
    EXPECT_GT(containment_margin(sq, sm), 0.0);
}

TEST(SmoothBody, RejectsLargeDelta) {
    const auto sq = ConvexBody::cube(2, 1.0);
    EXPECT_THROW(smooth_body(sq, 0.5), std::invalid_argument);
    EXPECT_THROW(smooth_body(sq, 0.25), std::invalid_argument);
    EXPECT_THROW(smooth_body(sq, -0.1), std::invalid_argument);
    EXPECT_THROW(smooth_body(smooth_body(sq, 0.1), 0.05), std::invalid_argument);
    EXPECT_THROW(smooth_body(ConvexBody::whole_space(2), 0.05), std::invalid_argument);
}

TEST(SmoothBody, ExcessMassShrinksWithDelta) {
    const auto g = build_grid(2, 2.0, 1.0 / 128.0);
    const auto ball = ConvexBody::ball(2, 1.0);
    double prev = 1.0;
    for (double delta : {0.2, 0.1, 0.05}) {
        const double ex = gaussian_measure_difference(*g, smooth_body(ball, delta), ball);
        EXPECT_GT(ex, 0.0);
        EXPECT_LT(ex, prev);
        prev = ex;
    }
}

TEST(SmoothBody, ExcessMassOfDiskMatchesPolarIntegral) {
    // C_delta of a disk is a disk; its radius is where the mollified gauge
    // reaches 1 along a ray. gamma of an annulus is e^{-a^2/2} - e^{-b^2/2}.
    const auto ball = ConvexBody::ball(2, 1.0);
    const auto sm = smooth_body(ball, 0.1);
    const double rad = *boundary_along_ray(sm, Point{1, 0, 0});
    const double exact = std::exp(-0.5) - std::exp(-0.5 * rad * rad);
    const auto g = build_grid(2, 2.0, 1.0 / 256.0);
    EXPECT_NEAR(gaussian_measure_difference(*g, sm, ball), exact, 5e-3 * exact + 1e-4);
    EXPECT_GT(rad, 1.0);
    EXPECT_LT(rad, 1.1 + 1e-9);
}

TEST(SmoothBody, MollifiedGaugeMatchesBruteForceIntegral) {
    const auto sq = ConvexBody::cube(2, 1.0);
    const auto sm = smooth_body(sq, 0.1);
    const auto& enl = sm.enlarged();
    // Independent midpoint integration of the bump over the unit disk.
    const int n = 400;
    for (const Point x : {Point{1.05, 1.05, 0}, Point{0.3, 1.1, 0}, Point{-1.0, 0.0, 0}}) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double u = -1.0 + (i + 0.5) * 2.0 / n, v = -1.0 + (j + 0.5) * 2.0 / n;
                const double r2 = u * u + v * v;
                if (r2 >= 1.0) continue;
                const double w = std::exp(1.0 / (r2 - 1.0));
                num += w * enl.gauge(Point{x[0] - sm.eta() * u, x[1] - sm.eta() * v, 0});
                den += w;
            }
        }
        // The 9-point tensor rule sees the kink of the enlarged gauge.
        EXPECT_NEAR(sm.gauge(x), num / den, 1e-3);
    }
}

TEST(SmoothBody, GradientBoundPositive) {
    const auto sm = smooth_body(ConvexBody::cube(2, 1.0), 0.05);
    const auto b = boundary_gradient_bound(sm);
    EXPECT_GT(b.radial, 0.0);
    EXPECT_GT(b.magnitude, 0.0);
}

TEST(SmoothBody, ConvexAndLipschitz) {
    const auto sm = smooth_body(ConvexBody::regular_polygon(5, 1.0), 0.1);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.5, 2.5), l(0.0, 1.0);
    for (int i = 0; i < 300; ++i) {
        const Point x{u(rng), u(rng), 0}, y{u(rng), u(rng), 0};
        const double lam = l(rng);
        const Point z{lam * x[0] + (1 - lam) * y[0], lam * x[1] + (1 - lam) * y[1], 0};
        EXPECT_LE(sm.gauge(z), lam * sm.gauge(x) + (1 - lam) * sm.gauge(y) + 1e-12);
        EXPECT_LE(std::abs(sm.gauge(x) - sm.gauge(y)), std::hypot(x[0] - y[0], x[1] - y[1]) / sm.inradius() + 1e-12);
    }
}

TEST(OutwardNormal, Examples) {
    const auto ball = ConvexBody::ball(2, 1.0);
    const auto n = outward_normal(ball, Point{1.0, 0.0, 0});
    EXPECT_NEAR(n[0], 1.0, 1e-9);
    EXPECT_NEAR(n[1], 0.0, 1e-9);
    EXPECT_NEAR(norm(n, 2), 1.0, 1e-12);

    const auto half = ConvexBody::halfspaces(2, {{{1, 0, 0}, 1.0}});
    const auto m = outward_normal(half, Point{1.0, 0.3, 0});
    EXPECT_NEAR(m[0], 1.0, 1e-9);
    EXPECT_NEAR(m[1], 0.0, 1e-9);

    const auto sq = ConvexBody::cube(2, 1.0);
    EXPECT_THROW(outward_normal(sq, Point{1.0, 1.0, 0}), std::domain_error);
    EXPECT_THROW(outward_normal(ball, Point{0.5, 0.0, 0}), std::invalid_argument);
}

TEST(OutwardNormal, SmoothedSquareCornerIsRadial) {
    const auto sm = smooth_body(ConvexBody::cube(2, 1.0), 0.1);
    const Point dir{M_SQRT1_2, M_SQRT1_2, 0};
    const double s = *boundary_along_ray(sm, dir);
    const auto n = outward_normal(sm, Point{s * dir[0], s * dir[1], 0});
    EXPECT_NEAR(n[0], M_SQRT1_2, 1e-6);
    EXPECT_NEAR(n[1], M_SQRT1_2, 1e-6);
}

TEST(EulerRelation, GaugeBodiesAtSmoothBoundaryPoints) {
    const auto ball = ConvexBody::ball(3, 1.2, Point{0.1, 0.0, -0.2});
    for (const auto& p : sample_boundary(ball, 200)) {
        const auto gg = gauge_gradient(ball, *p);
        Point rel{};
        for (int k = 0; k < 3; ++k) rel[k] = (*p)[k] - ball.center()[k];
        EXPECT_NEAR(dot(gg.gradient, rel, 3), ball.gauge(*p), 1e-6);
    }
}

TEST(Hausdorff, Examples) {
    const auto a = ConvexBody::ball(2, 1.0);
    EXPECT_NEAR(hausdorff_boundary_distance(a, a, 3.0).distance, 0.0, 1e-9);
    const auto r = hausdorff_boundary_distance(a, ConvexBody::ball(2, 1.2), 3.0);
    EXPECT_NEAR(r.distance, 0.2, 1e-6);
    EXPECT_GT(r.resolution, 0.0);

    const auto sq = ConvexBody::cube(2, 1.0);
    const double delta = 0.05;
    const auto sm = smooth_body(sq, delta);
    const double bound = delta * (1.0 + mollifier_first_moment(2));
    EXPECT_LE(hausdorff_boundary_distance(sq, sm, 3.0).distance, bound + 1e-6);
}

TEST(Hausdorff, ClippingAndErrors) {
    const auto a = ConvexBody::ball(2, 5.0);
    EXPECT_THROW(hausdorff_boundary_distance(a, ConvexBody::ball(2, 1.0), 2.0), std::invalid_argument);
    EXPECT_THROW(hausdorff_boundary_distance(a, ConvexBody::ball(3, 1.0), 2.0), std::invalid_argument);
    const auto half1 = ConvexBody::halfspaces(2, {{{1, 0, 0}, 1.0}});
    const auto half2 = ConvexBody::halfspaces(2, {{{1, 0, 0}, 1.3}});
    // Clipping adds arc pieces, so only the lower bound is exact.
    EXPECT_GE(hausdorff_boundary_distance(half1, half2, 3.0).distance, 0.3 - 1e-9);
}

TEST(Cylindrical, SquareFaces) {
    const auto sq = ConvexBody::cube(2, 1.0);
    const auto body = cylindrical_approximation(2, sq.faces(), 4, 0.05);
    EXPECT_GT(containment_margin(sq, body), 0.0);
}

TEST(Cylindrical, SingleHalfspaceMass) {
    const auto faces = ConvexBody::cube(2, 0.5).faces();
    const double delta = 0.05;
    const auto body = cylindrical_approximation(2, faces, 1, delta);
    const auto g = build_grid(2, 6.0, 1.0 / 64.0);
    const double mass = gaussian_measure(*g, body);
    const double b = faces[0].offset;
    EXPECT_GT(mass, normal_cdf_oracle(b) - 5.0 * g->spacing() * 0.4);
    EXPECT_LT(mass, normal_cdf_oracle(b + 2.0 * delta) + 5.0 * g->spacing() * 0.4);
}

TEST(Cylindrical, PolygonExcessMassDecreases) {
    const auto disk = ConvexBody::ball(2, 1.0);
    const auto g = build_grid(2, 2.0, 1.0 / 128.0);
    double prev = 1.0;
    for (int m = 4; m <= 12; ++m) {
        const auto body = cylindrical_approximation(2, ConvexBody::polygon_faces(m, 1.0), m, 0.2 / m);
        EXPECT_GT(containment_margin(disk, body), 0.0);
        const double ex = gaussian_measure_difference(*g, body, disk);
        EXPECT_LT(ex, prev) << "m=" << m;
        prev = ex;
    }
}

TEST(Cylindrical, NestedSequenceReportsMargins) {
    // Slab intersections with growing constraint sets and shrinking delta.
    std::vector<Halfspace> faces{{{1, 0, 0}, 1.5}, {{-1, 0, 0}, 1.5}, {{0, 1, 0}, 1.2}, {{0, -1, 0}, 1.2},
                                 {{M_SQRT1_2, M_SQRT1_2, 0}, 1.4}};
    const auto seq = cylindrical_sequence(2, faces, {0.2, 0.15, 0.1, 0.05}, 2);
    ASSERT_EQ(seq.bodies.size(), 4u);
    ASSERT_EQ(seq.nesting_margins.size(), 3u);
    for (double m : seq.nesting_margins) EXPECT_GT(m, 0.0);
    EXPECT_THROW(cylindrical_sequence(2, faces, {0.1, 0.2}, 2), std::invalid_argument);
    EXPECT_THROW(cylindrical_approximation(2, faces, 0, 0.1), std::invalid_argument);
}

TEST(Cylindrical, HausdorffFollowsMassConvergence) {
    const auto disk = ConvexBody::ball(2, 1.0);
    double prev = 1e9;
    for (int m : {4, 8, 16, 32}) {
        const auto body = cylindrical_approximation(2, ConvexBody::polygon_faces(m, 1.0), m, 0.1 / m);
        const double hd = hausdorff_boundary_distance(body, disk, 3.0).distance;
        EXPECT_LT(hd, prev);
        prev = hd;
    }
    EXPECT_LT(prev, 0.02);
}

TEST(GaussianMeasure, UnitDisk) {
    const auto g = build_grid(2, 6.0, 1.0 / 64.0);
    EXPECT_NEAR(gaussian_measure(*g, ConvexBody::ball(2, 1.0)), 1.0 - std::exp(-0.5), 5.0 * g->spacing());
    const auto one = ScalarField::constant(g, 1.0);
    EXPECT_NEAR(gaussian_integrate(one, ConvexBody::ball(2, 1.0)), 1.0 - std::exp(-0.5), 5.0 * g->spacing());
    EXPECT_THROW(gaussian_integrate(one, ConvexBody::ball(3, 1.0)), std::invalid_argument);
}

TEST(BodyParsing, FileFormat) {
    std::istringstream in(
        "# unit square\n"
        "halfspace 1 0 1\n"
        "halfspace -1 0 1\n"
        "halfspace 0 1 1   # top\n"
        "halfspace 0 -1 1\n"
        "smooth 0.05\n");
    const auto b = parse_body(in, 2);
    EXPECT_TRUE(b.smooth());
    EXPECT_NEAR(b.delta(), 0.05, 1e-15);
    EXPECT_LT(b.gauge(Point{1.0, 1.0, 0}), 1.0);

    std::istringstream bad("halfspace 1 0\nhalfspace 0 1 1\n");
    EXPECT_THROW(parse_body(bad), std::invalid_argument);
    std::istringstream unknown("plane 1 0 1\n");
    EXPECT_THROW(parse_body(unknown), std::invalid_argument);
}

TEST(BodyParsing, InlineDomains) {
    const auto i = parse_domain("interval:-1,1", 1);
    EXPECT_TRUE(i.contains(Point{0.99, 0, 0}));
    EXPECT_FALSE(i.contains(Point{1.0, 0, 0}));
    const auto s = parse_domain("interval:-1,2", 2);
    EXPECT_TRUE(s.contains(Point{1.5, 100.0, 0}));
    EXPECT_NEAR(parse_domain("ball:1.5", 2).radius(), 1.5, 0);
    EXPECT_NEAR(parse_domain("square:2", 3).gauge(Point{1, 1, 1}), 0.5, 1e-15);
    EXPECT_EQ(parse_domain("whole", 2).gauge(Point{50, 50, 0}), 0.0);
    EXPECT_THROW(parse_domain("interval:1", 1), std::invalid_argument);
    EXPECT_THROW(parse_domain("no-such-thing", 1), std::invalid_argument);
}
