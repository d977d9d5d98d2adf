#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oubv/gaussian.hpp"
#include "oubv/mollifier.hpp"

namespace oubv {

/// Closed half-space {x : normal . x <= offset} with a unit normal.
struct Halfspace {
    Point normal{};
    double offset = 0.0;
};

/// Convex domain with a stored interior center x0 and a certified inradius r,
/// meaning B_r(x0) lies inside the body.
///
/// Three representations share one gauge interface:
///  - an intersection of half-spaces (no faces means the whole space),
///  - a Euclidean ball,
///  - the sublevel set {m_eta <= 1} of the mollified gauge of the
///    delta-enlargement of a base body.
class ConvexBody {
public:
    enum class Kind { Halfspaces, Ball, SmoothLevelSet };

    static ConvexBody halfspaces(int d, std::vector<Halfspace> faces,
                                 std::optional<Point> center = std::nullopt) {
        check_dim(d);
        for (auto& f : faces) {
            const double len = norm(f.normal, d);
            if (!(len > 0.0) || !std::isfinite(len) || !std::isfinite(f.offset)) {
                throw std::invalid_argument("half-space needs a finite nonzero normal");
            }
            for (int k = 0; k < d; ++k) f.normal[k] /= len;
            for (int k = d; k < kMaxDim; ++k) f.normal[k] = 0.0;
            f.offset /= len;
        }
        ConvexBody b;
        b.kind_ = Kind::Halfspaces;
        b.dim_ = d;
        b.faces_ = std::move(faces);
        b.center_ = center ? *center : b.find_interior_point();
        b.inradius_ = std::numeric_limits<double>::infinity();
        for (const auto& f : b.faces_) {
            b.inradius_ = std::min(b.inradius_, f.offset - dot(f.normal, b.center_, d));
        }
        if (!(b.inradius_ > 0.0)) {
            throw std::invalid_argument("half-space intersection has no interior around its center");
        }
        return b;
    }

    static ConvexBody whole_space(int d) { return halfspaces(d, {}, Point{}); }

    static ConvexBody ball(int d, double radius, Point center = {}) {
        check_dim(d);
        if (!(radius > 0.0) || !std::isfinite(radius)) {
            throw std::invalid_argument("ball radius must be positive");
        }
        ConvexBody b;
        b.kind_ = Kind::Ball;
        b.dim_ = d;
        b.radius_ = radius;
        b.center_ = center;
        b.inradius_ = radius;
        return b;
    }

    static ConvexBody interval(double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("interval needs lo < hi");
        return halfspaces(1, {{{1, 0, 0}, hi}, {{-1, 0, 0}, -lo}}, Point{0.5 * (lo + hi), 0, 0});
    }

    /// Slab lo < x_1 < hi in dimension d.
    static ConvexBody slab(int d, double lo, double hi) {
        if (!(lo < hi)) throw std::invalid_argument("slab needs lo < hi");
        return halfspaces(d, {{{1, 0, 0}, hi}, {{-1, 0, 0}, -lo}}, Point{0.5 * (lo + hi), 0, 0});
    }

    /// Cube [-s, s]^d.
    static ConvexBody cube(int d, double half_side) {
        check_dim(d);
        std::vector<Halfspace> faces;
        for (int k = 0; k < d; ++k) {
            Halfspace plus, minus;
            plus.normal[k] = 1.0;
            minus.normal[k] = -1.0;
            plus.offset = minus.offset = half_side;
            faces.push_back(plus);
            faces.push_back(minus);
        }
        return halfspaces(d, std::move(faces), Point{});
    }

    /// Tangent half-spaces of a regular m-gon circumscribing the disk of
    /// the given radius about the origin; the first face has normal e_1.
    static ConvexBody regular_polygon(int m, double inradius) {
        if (m < 3) throw std::invalid_argument("polygon needs at least three faces");
        return halfspaces(2, polygon_faces(m, inradius), Point{});
    }

    static std::vector<Halfspace> polygon_faces(int m, double inradius) {
        std::vector<Halfspace> faces;
        for (int j = 0; j < m; ++j) {
            const double th = 2.0 * std::numbers::pi * j / m;
            faces.push_back({{std::cos(th), std::sin(th), 0.0}, inradius});
        }
        return faces;
    }

    int dim() const { return dim_; }
    Kind kind() const { return kind_; }
    const Point& center() const { return center_; }
    double inradius() const { return inradius_; }
    bool smooth() const { return kind_ != Kind::Halfspaces; }

    const std::vector<Halfspace>& faces() const { return faces_; }
    double radius() const { return radius_; }

    const ConvexBody& base() const { return *base_; }
    const ConvexBody& enlarged() const { return *enlarged_; }
    double delta() const { return delta_; }
    double eta() const { return eta_; }
    const MollifierRule& rule() const { return *rule_; }

    /// Minkowski gauge about the center. For a smoothed body this is the
    /// mollified gauge of the enlarged base body.
    double gauge(const Point& x) const {
        switch (kind_) {
            case Kind::Halfspaces: {
                double m = 0.0;
                for (const auto& f : faces_) {
                    double num = 0.0, den = f.offset;
                    for (int k = 0; k < dim_; ++k) {
                        num += f.normal[k] * (x[k] - center_[k]);
                        den -= f.normal[k] * center_[k];
                    }
                    m = std::max(m, num / den);
                }
                return m;
            }
            case Kind::Ball: {
                double s = 0.0;
                for (int k = 0; k < dim_; ++k) s += (x[k] - center_[k]) * (x[k] - center_[k]);
                return std::sqrt(s) / radius_;
            }
            case Kind::SmoothLevelSet: {
                double m = 0.0;
                Point y{};
                const auto& r = *rule_;
                for (std::size_t q = 0; q < r.size(); ++q) {
                    for (int k = 0; k < dim_; ++k) y[k] = x[k] - eta_ * r.offsets[q][k];
                    m += r.weights[q] * enlarged_->gauge(y);
                }
                return m;
            }
        }
        return 0.0;
    }

    /// Open-set membership, gauge < 1. For a smoothed body the enlarged
    /// gauge g0 brackets the mollified one: g0 <= m_eta <= g0 + eta / r.
    bool contains(const Point& x) const {
        if (kind_ == Kind::SmoothLevelSet) {
            const double g0 = enlarged_->gauge(x);
            if (g0 > 1.0 + 1e-12) return false;
            if (g0 + eta_ / enlarged_->inradius() < 1.0 - 1e-12) return true;
        }
        return gauge(x) < 1.0;
    }

private:
    Point find_interior_point() const {
        const auto strictly_inside = [&](const Point& x) {
            for (const auto& f : faces_) {
                if (!(dot(f.normal, x, dim_) < f.offset)) return false;
            }
            return true;
        };
        if (strictly_inside(Point{})) return Point{};
        // Average of the feasible vertices.
        const std::size_t n = faces_.size();
        Point sum{};
        std::size_t count = 0;
        std::vector<std::size_t> pick(dim_);
        const auto visit = [&](auto&& self, std::size_t start, int depth) -> void {
            if (depth == dim_) {
                double a[3][3], rhs[3];
                for (int i = 0; i < dim_; ++i) {
                    for (int k = 0; k < dim_; ++k) a[i][k] = faces_[pick[i]].normal[k];
                    rhs[i] = faces_[pick[i]].offset;
                }
                Point v{};
                if (!solve_small(a, rhs, v)) return;
                for (const auto& f : faces_) {
                    if (dot(f.normal, v, dim_) > f.offset + 1e-12) return;
                }
                for (int k = 0; k < dim_; ++k) sum[k] += v[k];
                ++count;
                return;
            }
            for (std::size_t j = start; j < n; ++j) {
                pick[depth] = j;
                self(self, j + 1, depth + 1);
            }
        };
        visit(visit, 0, 0);
        if (count > 0) {
            for (int k = 0; k < dim_; ++k) sum[k] /= static_cast<double>(count);
            if (strictly_inside(sum)) return sum;
        }
        throw std::invalid_argument("could not find an interior point of the half-space intersection; "
                                    "it is empty, degenerate or needs an explicit center");
    }

    bool solve_small(double a[3][3], double rhs[3], Point& x) const {
        const int d = dim_;
        int perm[3] = {0, 1, 2};
        for (int c = 0; c < d; ++c) {
            int p = c;
            for (int r = c + 1; r < d; ++r) {
                if (std::abs(a[perm[r]][c]) > std::abs(a[perm[p]][c])) p = r;
            }
            std::swap(perm[c], perm[p]);
            if (std::abs(a[perm[c]][c]) < 1e-12) return false;
            for (int r = c + 1; r < d; ++r) {
                const double f = a[perm[r]][c] / a[perm[c]][c];
                for (int k = c; k < d; ++k) a[perm[r]][k] -= f * a[perm[c]][k];
                rhs[perm[r]] -= f * rhs[perm[c]];
            }
        }
        for (int c = d - 1; c >= 0; --c) {
            double s = rhs[perm[c]];
            for (int k = c + 1; k < d; ++k) s -= a[perm[c]][k] * x[k];
            x[c] = s / a[perm[c]][c];
        }
        return true;
    }

    friend ConvexBody smooth_body(const ConvexBody&, double, std::optional<double>, int);

    Kind kind_ = Kind::Halfspaces;
    int dim_ = 1;
    Point center_{};
    double inradius_ = 0.0;
    std::vector<Halfspace> faces_;
    double radius_ = 0.0;
    std::shared_ptr<const ConvexBody> base_;
    std::shared_ptr<const ConvexBody> enlarged_;
    std::shared_ptr<const MollifierRule> rule_;
    double delta_ = 0.0;
    double eta_ = 0.0;
};

inline double minkowski_eval(const ConvexBody& body, const Point& x) { return body.gauge(x); }

/// Exact delta-enlargement for balls; offsets every face by delta for polyhedra.
inline ConvexBody enlarge(const ConvexBody& body, double delta) {
    switch (body.kind()) {
        case ConvexBody::Kind::Ball:
            return ConvexBody::ball(body.dim(), body.radius() + delta, body.center());
        case ConvexBody::Kind::Halfspaces: {
            auto faces = body.faces();
            for (auto& f : faces) f.offset += delta;
            return ConvexBody::halfspaces(body.dim(), std::move(faces), body.center());
        }
        case ConvexBody::Kind::SmoothLevelSet:
            break;
    }
    throw std::invalid_argument("cannot enlarge an already smoothed body");
}

/// Unit directions used for ray sampling of boundaries.
inline std::vector<Point> ray_directions(int d, std::size_t count) {
    check_dim(d);
    std::vector<Point> dirs;
    if (d == 1) {
        dirs.push_back({-1, 0, 0});
        dirs.push_back({1, 0, 0});
    } else if (d == 2) {
        for (std::size_t i = 0; i < count; ++i) {
            const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
            dirs.push_back({std::cos(th), std::sin(th), 0});
        }
    } else {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        for (std::size_t i = 0; i < count; ++i) {
            const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double th = golden * static_cast<double>(i);
            dirs.push_back({rho * std::cos(th), rho * std::sin(th), z});
        }
    }
    return dirs;
}

inline std::size_t default_ray_count(int d) { return d == 1 ? 2 : (d == 2 ? 720 : 2000); }

/// Distance s > 0 with gauge(center + s dir) = 1, or nothing when the ray
/// never leaves the body. Gauge bodies use homogeneity; smoothed bodies are
/// bisected to a 1e-10 interval (the mollified gauge is convex along rays).
inline std::optional<double> boundary_along_ray(const ConvexBody& body, const Point& dir,
                                                double max_distance = 1e6) {
    const int d = body.dim();
    const Point& c = body.center();
    const auto at = [&](double s) {
        Point x{};
        for (int k = 0; k < d; ++k) x[k] = c[k] + s * dir[k];
        return body.gauge(x);
    };
    if (!body.smooth() || body.kind() == ConvexBody::Kind::Ball) {
        const double g = at(1.0);
        if (!(g > 0.0)) return std::nullopt;
        const double s = 1.0 / g;
        if (s > max_distance) return std::nullopt;
        return s;
    }
    double lo = 0.0, hi = body.inradius();
    while (at(hi) <= 1.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > max_distance) return std::nullopt;
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (at(mid) <= 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// Boundary points found along the sampling rays; missing entries mark rays
/// that do not hit the boundary.
inline std::vector<std::optional<Point>> sample_boundary(const ConvexBody& body, std::size_t rays = 0) {
    const int d = body.dim();
    const auto dirs = ray_directions(d, rays ? rays : default_ray_count(d));
    std::vector<std::optional<Point>> pts;
    pts.reserve(dirs.size());
    for (const auto& u : dirs) {
        const auto s = boundary_along_ray(body, u);
        if (!s) {
            pts.emplace_back();
            continue;
        }
        Point x{};
        for (int k = 0; k < d; ++k) x[k] = body.center()[k] + *s * u[k];
        pts.emplace_back(x);
    }
    return pts;
}

/// Smallest value of 1 - gauge_outer over sampled boundary points of
/// `inner`; positive means inner lies in the interior of outer at the samples.
inline double containment_margin(const ConvexBody& inner, const ConvexBody& outer, std::size_t rays = 0) {
    double margin = std::numeric_limits<double>::infinity();
    for (const auto& p : sample_boundary(inner, rays)) {
        if (p) margin = std::min(margin, 1.0 - outer.gauge(*p));
    }
    return margin;
}

/// Smooth convex approximant C_delta = {m_eta <= 1} where m is the gauge of
/// the delta-enlargement of `body` and m_eta its mollification (eta defaults
/// to delta). Requires delta < r/4 and delta * int|u|rho < r/2 so that the
/// gradient of m_eta stays away from zero on the level set.
inline ConvexBody smooth_body(const ConvexBody& body, double delta,
                              std::optional<double> eta = std::nullopt, int rule_points = 9) {
    if (body.kind() == ConvexBody::Kind::SmoothLevelSet) {
        throw std::invalid_argument("body is already smoothed");
    }
    const double r = body.inradius();
    if (!std::isfinite(r)) throw std::invalid_argument("body has no boundary to smooth");
    if (!(r > 0.0)) throw std::invalid_argument("body has empty interior");
    if (!(delta > 0.0)) throw std::invalid_argument("smoothing delta must be positive");
    if (!(delta < 0.25 * r)) {
        throw std::invalid_argument("smoothing delta must be below a quarter of the inradius");
    }
    const int d = body.dim();
    if (!(delta * mollifier_first_moment(d) < 0.5 * r)) {
        throw std::invalid_argument("smoothing delta violates the first-moment condition");
    }
    const double radius = eta.value_or(delta);
    if (!(radius > 0.0)) throw std::invalid_argument("mollification radius must be positive");

    ConvexBody out;
    out.kind_ = ConvexBody::Kind::SmoothLevelSet;
    out.dim_ = d;
    out.center_ = body.center();
    out.inradius_ = r;
    out.base_ = std::make_shared<const ConvexBody>(body);
    out.enlarged_ = std::make_shared<const ConvexBody>(enlarge(body, delta));
    out.rule_ = std::make_shared<const MollifierRule>(MollifierRule::tensor(d, rule_points));
    out.delta_ = delta;
    out.eta_ = radius;
    if (!(containment_margin(body, out) > 0.0)) {
        throw std::runtime_error("smoothed body does not strictly contain its base at the sampled points");
    }
    return out;
}

struct GaugeGradient {
    Point gradient{};
    double kink = 0.0;  // largest forward/backward slope mismatch
};

inline GaugeGradient gauge_gradient(const ConvexBody& body, const Point& x, double step = 1e-6) {
    GaugeGradient out;
    const double g0 = body.gauge(x);
    for (int k = 0; k < body.dim(); ++k) {
        Point xp = x, xm = x;
        xp[k] += step;
        xm[k] -= step;
        const double gp = body.gauge(xp), gm = body.gauge(xm);
        out.gradient[k] = (gp - gm) / (2.0 * step);
        out.kink = std::max(out.kink, std::abs((gp - g0) - (g0 - gm)) / step);
    }
    return out;
}

/// Exterior unit normal at a boundary point, from the central-difference
/// gradient of the gauge. Rejects corners and points off the boundary.
inline Point outward_normal(const ConvexBody& body, const Point& x, double step = 1e-6,
                            double boundary_tol = 1e-6) {
    const int d = body.dim();
    if (std::abs(body.gauge(x) - 1.0) > boundary_tol) {
        throw std::invalid_argument("point is not on the boundary");
    }
    const auto gg = gauge_gradient(body, x, step);
    const double len = norm(gg.gradient, d);
    if (!(len > 1e-8)) throw std::domain_error("gauge gradient vanishes; normal undefined");
    if (gg.kink > 0.5 * len) throw std::domain_error("boundary is not differentiable here (corner)");
    Point n{};
    for (int k = 0; k < d; ++k) n[k] = gg.gradient[k] / len;
    return n;
}

/// Sampled lower bounds for the level-set gradient of a smoothed body:
/// min <grad m, x - x0> and min |grad m| over boundary samples.
struct BoundaryGradientBound {
    double radial = std::numeric_limits<double>::infinity();
    double magnitude = std::numeric_limits<double>::infinity();
};

inline BoundaryGradientBound boundary_gradient_bound(const ConvexBody& body, std::size_t rays = 0,
                                                     double step = 1e-6) {
    BoundaryGradientBound b;
    const int d = body.dim();
    for (const auto& p : sample_boundary(body, rays)) {
        if (!p) continue;
        const auto gg = gauge_gradient(body, *p, step);
        Point rel{};
        for (int k = 0; k < d; ++k) rel[k] = (*p)[k] - body.center()[k];
        b.radial = std::min(b.radial, dot(gg.gradient, rel, d));
        b.magnitude = std::min(b.magnitude, norm(gg.gradient, d));
    }
    return b;
}

struct HausdorffResult {
    double distance = 0.0;
    double resolution = 0.0;  // largest gap between consecutive boundary samples
    std::size_t samples_a = 0;
    std::size_t samples_b = 0;
};

namespace detail {

inline double point_segment_distance(const Point& p, const Point& a, const Point& b, int d) {
    Point ab{}, ap{};
    for (int k = 0; k < d; ++k) {
        ab[k] = b[k] - a[k];
        ap[k] = p[k] - a[k];
    }
    const double len2 = norm2(ab, d);
    const double t = len2 > 0.0 ? std::clamp(dot(ap, ab, d) / len2, 0.0, 1.0) : 0.0;
    Point q{};
    for (int k = 0; k < d; ++k) q[k] = a[k] + t * ab[k] - p[k];
    return norm(q, d);
}

struct ClippedBoundary {
    std::vector<std::optional<Point>> ring;
    std::size_t count = 0;
    double resolution = 0.0;
};

inline ClippedBoundary clipped_boundary(const ConvexBody& body, double radius, std::size_t rays) {
    ClippedBoundary out;
    out.ring = sample_boundary(body, rays);
    const int d = body.dim();
    for (auto& p : out.ring) {
        if (p && norm(*p, d) > radius) p.reset();
        if (p) ++out.count;
    }
    if (d == 2) {
        const std::size_t n = out.ring.size();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& a = out.ring[i];
            const auto& b = out.ring[(i + 1) % n];
            if (!a || !b) continue;
            Point diff{};
            for (int k = 0; k < d; ++k) diff[k] = (*a)[k] - (*b)[k];
            out.resolution = std::max(out.resolution, norm(diff, d));
        }
    }
    return out;
}

// Distance from p to the sampled boundary; in 2-d to the polyline through
// consecutive samples.
inline double distance_to_boundary(const Point& p, const ClippedBoundary& b, int d) {
    double best = std::numeric_limits<double>::infinity();
    const std::size_t n = b.ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& q = b.ring[i];
        if (!q) continue;
        Point diff{};
        for (int k = 0; k < d; ++k) diff[k] = p[k] - (*q)[k];
        best = std::min(best, norm(diff, d));
        if (d == 2) {
            const auto& q2 = b.ring[(i + 1) % n];
            if (q2) best = std::min(best, point_segment_distance(p, *q, *q2, d));
        }
    }
    return best;
}

}  // namespace detail

/// Symmetric Hausdorff distance between ray-sampled boundaries clipped to
/// the closed ball of radius R about the origin.
inline HausdorffResult hausdorff_boundary_distance(const ConvexBody& a, const ConvexBody& b, double radius,
                                                   std::size_t rays = 0) {
    if (a.dim() != b.dim()) throw std::invalid_argument("bodies have different dimensions");
    if (!(radius > 0.0)) throw std::invalid_argument("clipping radius must be positive");
    const int d = a.dim();
    const auto ba = detail::clipped_boundary(a, radius, rays);
    const auto bb = detail::clipped_boundary(b, radius, rays);
    if (ba.count == 0 || bb.count == 0) {
        throw std::invalid_argument("a boundary does not meet the clipping ball");
    }
    HausdorffResult out;
    out.samples_a = ba.count;
    out.samples_b = bb.count;
    out.resolution = std::max(ba.resolution, bb.resolution);
    for (const auto& p : ba.ring) {
        if (p) out.distance = std::max(out.distance, detail::distance_to_boundary(*p, bb, d));
    }
    for (const auto& p : bb.ring) {
        if (p) out.distance = std::max(out.distance, detail::distance_to_boundary(*p, ba, d));
    }
    return out;
}

/// Smoothed intersection of the first n half-spaces.
inline ConvexBody cylindrical_approximation(int d, const std::vector<Halfspace>& faces, std::size_t n,
                                            double delta, std::optional<Point> center = std::nullopt) {
    if (n < 1 || n > faces.size()) throw std::invalid_argument("face count out of range");
    std::vector<Halfspace> first(faces.begin(), faces.begin() + static_cast<std::ptrdiff_t>(n));
    return smooth_body(ConvexBody::halfspaces(d, std::move(first), center), delta);
}

/// Nested sequence Omega_n for n = 1..deltas.size(), with the sampled
/// nesting margins min (1 - gauge_{n}) over boundary samples of Omega_{n+1}.
struct CylindricalSequence {
    std::vector<ConvexBody> bodies;
    std::vector<double> nesting_margins;
};

inline CylindricalSequence cylindrical_sequence(int d, const std::vector<Halfspace>& faces,
                                                const std::vector<double>& deltas,
                                                std::size_t first_n = 1,
                                                std::optional<Point> center = std::nullopt) {
    for (std::size_t i = 1; i < deltas.size(); ++i) {
        if (!(deltas[i] < deltas[i - 1])) throw std::invalid_argument("delta schedule must decrease");
    }
    CylindricalSequence seq;
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        seq.bodies.push_back(cylindrical_approximation(d, faces, first_n + i, deltas[i], center));
        if (i > 0) seq.nesting_margins.push_back(containment_margin(seq.bodies[i], seq.bodies[i - 1]));
    }
    return seq;
}

/// Per-node open membership flags.
inline Mask body_mask(const GaussianGrid& grid, const ConvexBody& body) {
    if (grid.dim() != body.dim()) throw std::invalid_argument("grid and body dimensions differ");
    Mask m(grid.size());
    for (std::size_t n = 0; n < grid.size(); ++n) m[n] = body.contains(grid.node(n)) ? 1 : 0;
    return m;
}

/// Gaussian integral of f over the nodes of the body that are active in f.
inline double gaussian_integrate(const ScalarField& f, const ConvexBody& body) {
    const auto& g = f.grid();
    if (g.dim() != body.dim()) throw std::invalid_argument("grid and body dimensions differ");
    double s = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (f.active(n) && body.contains(g.node(n))) s += f[n] * g.weight(n);
    }
    return s;
}

inline double gaussian_measure(const GaussianGrid& grid, const ConvexBody& body) {
    if (grid.dim() != body.dim()) throw std::invalid_argument("grid and body dimensions differ");
    double s = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        if (body.contains(grid.node(n))) s += grid.weight(n);
    }
    return s;
}

/// Gaussian measure of outer \ inner on the grid.
inline double gaussian_measure_difference(const GaussianGrid& grid, const ConvexBody& outer,
                                          const ConvexBody& inner) {
    double s = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        const Point x = grid.node(n);
        if (outer.contains(x) && !inner.contains(x)) s += grid.weight(n);
    }
    return s;
}

/// Body description: lines `halfspace a1 .. ad b`, optional `center x1 .. xd`
/// and `smooth delta [eta]`; `#` starts a comment.
inline ConvexBody parse_body(std::istream& is, int expected_dim = 0) {
    std::vector<Halfspace> faces;
    std::optional<Point> center;
    std::optional<std::pair<double, std::optional<double>>> smoothing;
    int d = expected_dim;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        std::vector<double> nums;
        double v;
        while (ss >> v) nums.push_back(v);
        if (!ss.eof()) throw std::invalid_argument("body line " + std::to_string(lineno) + ": bad number");
        const auto where = " on body line " + std::to_string(lineno);
        if (key == "halfspace") {
            const int here = static_cast<int>(nums.size()) - 1;
            if (d == 0) d = here;
            if (here != d) throw std::invalid_argument("half-space dimension mismatch" + where);
            check_dim(d);
            Halfspace h;
            for (int k = 0; k < d; ++k) h.normal[k] = nums[k];
            h.offset = nums[d];
            faces.push_back(h);
        } else if (key == "center") {
            if (d == 0) d = static_cast<int>(nums.size());
            if (static_cast<int>(nums.size()) != d) throw std::invalid_argument("center dimension mismatch" + where);
            check_dim(d);
            Point c{};
            for (int k = 0; k < d; ++k) c[k] = nums[k];
            center = c;
        } else if (key == "smooth") {
            if (nums.empty() || nums.size() > 2) throw std::invalid_argument("smooth takes delta [eta]" + where);
            smoothing = std::make_pair(nums[0], nums.size() == 2 ? std::optional<double>(nums[1]) : std::nullopt);
        } else {
            throw std::invalid_argument("unknown keyword '" + key + "'" + where);
        }
    }
    if (faces.empty()) throw std::invalid_argument("body file has no half-spaces");
    auto body = ConvexBody::halfspaces(d, std::move(faces), center);
    if (smoothing) return smooth_body(body, smoothing->first, smoothing->second);
    return body;
}

/// Domain strings: `interval:a,b`, `ball:r`, `square:s`, `whole`, or a body file path.
inline ConvexBody parse_domain(const std::string& spec, int d) {
    check_dim(d);
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    const auto numbers = [&]() {
        std::vector<double> out;
        std::stringstream ss(args);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
        return out;
    };
    if (kind == "interval") {
        const auto v = numbers();
        if (v.size() != 2) throw std::invalid_argument("interval needs two endpoints");
        return ConvexBody::slab(d, v[0], v[1]);
    }
    if (kind == "ball") {
        const auto v = numbers();
        if (v.size() != 1) throw std::invalid_argument("ball needs a radius");
        return ConvexBody::ball(d, v[0]);
    }
    if (kind == "square") {
        const auto v = numbers();
        if (v.size() != 1) throw std::invalid_argument("square needs a half-side");
        return ConvexBody::cube(d, v[0]);
    }
    if (kind == "whole") return ConvexBody::whole_space(d);
    std::ifstream in(spec);
    if (!in) throw std::invalid_argument("unknown domain '" + spec + "'");
    auto body = parse_body(in, d);
    if (body.dim() != d) throw std::invalid_argument("body file dimension does not match --dim");
    return body;
}

}  // namespace oubv
