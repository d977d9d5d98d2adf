#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oubv/convex.hpp"
#include "oubv/gaussian.hpp"
#include "oubv/mollifier.hpp"

namespace oubv {

enum class VariationMethod { Sobolev, Jump, Dual, Regularized };

inline const char* to_string(VariationMethod m) {
    switch (m) {
        case VariationMethod::Sobolev: return "sobolev";
        case VariationMethod::Jump: return "jump";
        case VariationMethod::Dual: return "dual";
        case VariationMethod::Regularized: return "regularized";
    }
    return "?";
}

/// A Gaussian total-variation value with the resolution and truncation
/// tail it was computed under.
struct VariationEstimate {
    double value = 0.0;
    VariationMethod method = VariationMethod::Sobolev;
    double resolution = 0.0;
    double tail = 0.0;
};

/// Active-node mask of f intersected with the open body.
inline Mask effective_mask(const ScalarField& f, const ConvexBody* body) {
    const auto& g = f.grid();
    if (body && body->dim() != g.dim()) throw std::invalid_argument("grid and body dimensions differ");
    Mask m(g.size(), 1);
    for (std::size_t n = 0; n < g.size(); ++n) {
        bool in = f.active(n);
        if (in && body) in = body->contains(g.node(n));
        m[n] = in ? 1 : 0;
    }
    return m;
}

namespace detail {

// Derivative along `axis` at node n using only nodes flagged in `mask`:
// central where both neighbours exist, second-order one-sided at the mask
// boundary, first-order with a single neighbour, zero for isolated nodes.
template <class Values>
double partial(const GaussianGrid& g, const Values& v, const Mask& mask, std::size_t n,
               const std::array<int, 3>& idx, int axis) {
    const double h = g.spacing();
    const std::size_t s = g.stride(axis);
    const int i = idx[axis];
    const int last = g.cells();
    const auto ok = [&](int j, std::size_t node) { return j >= 0 && j <= last && mask[node]; };
    const bool has_p = ok(i + 1, n + s);
    const bool has_m = i >= 1 && ok(i - 1, n - s);
    if (has_p && has_m) return (v(n + s) - v(n - s)) / (2.0 * h);
    if (has_p) {
        if (ok(i + 2, n + 2 * s)) return (-3.0 * v(n) + 4.0 * v(n + s) - v(n + 2 * s)) / (2.0 * h);
        return (v(n + s) - v(n)) / h;
    }
    if (has_m) {
        if (i >= 2 && ok(i - 2, n - 2 * s)) return (3.0 * v(n) - 4.0 * v(n - s) + v(n - 2 * s)) / (2.0 * h);
        return (v(n) - v(n - s)) / h;
    }
    return 0.0;
}

inline Mask full_or(const Mask& m, std::size_t size) { return m.empty() ? Mask(size, 1) : m; }

}  // namespace detail

/// Discrete gradient restricted to `mask` (defaults to the field's own mask).
inline VectorField gradient(const ScalarField& u, const Mask& mask) {
    const auto& g = u.grid();
    const int d = g.dim();
    const Mask m = detail::full_or(mask, g.size());
    std::vector<double> out(g.size() * d, 0.0);
    const auto val = [&](std::size_t n) { return u[n]; };
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!m[n]) continue;
        const auto idx = g.multi_index(n);
        for (int k = 0; k < d; ++k) out[n * d + k] = detail::partial(g, val, m, n, idx, k);
    }
    return VectorField(u.grid_ptr(), std::move(out), mask);
}

inline VectorField gradient(const ScalarField& u) { return gradient(u, u.mask()); }

/// Gaussian divergence sum_j (d_j phi_j - y_j phi_j), by the same difference
/// stencils as `gradient`.
inline ScalarField gaussian_divergence(const VectorField& phi) {
    const auto& g = phi.grid();
    const int d = g.dim();
    const Mask m = detail::full_or(phi.mask(), g.size());
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!m[n]) continue;
        const auto idx = g.multi_index(n);
        const Point y = g.node(n);
        double acc = 0.0;
        for (int k = 0; k < d; ++k) {
            const auto comp = [&](std::size_t j) { return phi.component(j, k); };
            acc += detail::partial(g, comp, m, n, idx, k) - y[k] * phi.component(n, k);
        }
        out[n] = acc;
    }
    return ScalarField(phi.grid_ptr(), std::move(out), phi.mask());
}

/// Integral of |grad u| over the body, gradient taken on the masked grid.
inline VariationEstimate sobolev_variation(const ScalarField& u, const ConvexBody* body = nullptr) {
    const auto& g = u.grid();
    const Mask m = effective_mask(u, body);
    const auto grad = gradient(u, m);
    double s = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (m[n]) s += norm(grad.at(n), g.dim()) * g.weight(n);
    }
    return {s, VariationMethod::Sobolev, g.spacing(), g.tail_mass()};
}

inline VariationEstimate sobolev_variation(const ScalarField& u, const ConvexBody& body) {
    return sobolev_variation(u, &body);
}

/// Interface of a piecewise-constant function: jump points in 1-d,
/// straight segments in 2-d, each with the jump height across it.
struct JumpSet {
    struct PointJump {
        double location = 0.0;
        double height = 0.0;
    };
    struct SegmentJump {
        Point a{}, b{};
        double height = 0.0;
    };
    int dim = 1;
    std::vector<PointJump> points;
    std::vector<SegmentJump> segments;
};

namespace detail {

// Parameter interval of the segment a->b inside the open convex body.
inline std::optional<std::pair<double, double>> clip_segment(const ConvexBody& body, const Point& a,
                                                             const Point& b, int probes = 1025) {
    const auto at = [&](double t) {
        Point x{};
        for (int k = 0; k < kMaxDim; ++k) x[k] = a[k] + t * (b[k] - a[k]);
        return body.contains(x);
    };
    int first = -1, last = -1;
    for (int i = 0; i < probes; ++i) {
        if (at(static_cast<double>(i) / (probes - 1))) {
            if (first < 0) first = i;
            last = i;
        }
    }
    if (first < 0) return std::nullopt;
    const auto refine = [&](double in, double out) {
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (in + out);
            (at(mid) ? in : out) = mid;
        }
        return 0.5 * (in + out);
    };
    const double step = 1.0 / (probes - 1);
    const double t0 = first == 0 ? 0.0 : refine(first * step, (first - 1) * step);
    const double t1 = last == probes - 1 ? 1.0 : refine(last * step, (last + 1) * step);
    return std::make_pair(t0, t1);
}

}  // namespace detail

/// Exact variation of a piecewise-constant function: jump heights times the
/// Gaussian-weighted surface measure of the interface inside the body.
/// Segments are integrated by the composite midpoint rule.
inline VariationEstimate jump_variation(const JumpSet& jumps, const ConvexBody& body,
                                        int subdivisions = 4096) {
    if (jumps.dim != body.dim()) throw std::invalid_argument("jump set and body dimensions differ");
    VariationEstimate est{0.0, VariationMethod::Jump, 0.0, 0.0};
    if (jumps.dim == 1) {
        for (const auto& j : jumps.points) {
            if (!body.contains(Point{j.location, 0, 0})) {
                throw std::invalid_argument("jump location lies outside the body");
            }
            est.value += std::abs(j.height) * gaussian_density_1d(j.location);
        }
        return est;
    }
    if (jumps.dim != 2) throw std::invalid_argument("jump interfaces are supported in 1-d and 2-d only");
    for (const auto& s : jumps.segments) {
        const auto span = detail::clip_segment(body, s.a, s.b);
        if (!span) throw std::invalid_argument("jump segment lies outside the body");
        Point ab{};
        for (int k = 0; k < 2; ++k) ab[k] = s.b[k] - s.a[k];
        const double len = norm(ab, 2) * (span->second - span->first);
        const double dt = (span->second - span->first) / subdivisions;
        double acc = 0.0;
        for (int i = 0; i < subdivisions; ++i) {
            const double t = span->first + (i + 0.5) * dt;
            acc += gaussian_density(Point{s.a[0] + t * ab[0], s.a[1] + t * ab[1], 0}, 2);
        }
        est.value += std::abs(s.height) * acc * len / subdivisions;
        est.resolution = std::max(est.resolution, len / subdivisions);
    }
    return est;
}

/// Smooth plateau profile: 1 on [0, 1/2], 0 beyond 1, C-infinity between.
inline double plateau(double r) {
    if (r <= 0.5) return 1.0;
    if (r >= 1.0) return 0.0;
    const auto f = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
    const double t = 2.0 * (r - 0.5);
    return f(1.0 - t) / (f(1.0 - t) + f(t));
}

/// Capped smooth bump e_axis * sign * plateau(|y - c| / width).
inline VectorField bump_test_field(const GridPtr& grid, const Point& center, double width, int axis,
                                   double sign = 1.0) {
    const int d = grid->dim();
    return VectorField::from_function(grid, [&](const Point& y) {
        Point v{};
        Point rel{};
        for (int k = 0; k < d; ++k) rel[k] = y[k] - center[k];
        v[axis] = sign * plateau(norm(rel, d) / width);
        return v;
    });
}

/// Stock dual family: bumps in every +/- coordinate direction at the given
/// centers and widths.
inline std::vector<VectorField> stock_dual_family(const GridPtr& grid, const std::vector<Point>& centers,
                                                  const std::vector<double>& widths) {
    std::vector<VectorField> out;
    for (const auto& c : centers) {
        for (double w : widths) {
            for (int k = 0; k < grid->dim(); ++k) {
                out.push_back(bump_test_field(grid, c, w, k, 1.0));
                out.push_back(bump_test_field(grid, c, w, k, -1.0));
            }
        }
    }
    return out;
}

/// Largest value of int u div phi dgamma over the supplied test fields, a
/// lower bound for the variation. Each phi must satisfy |phi| <= 1 and vanish
/// within two cells of the mask boundary.
inline VariationEstimate dual_variation_lower_bound(const ScalarField& u, const ConvexBody& body,
                                                    const std::vector<VectorField>& phis) {
    if (phis.empty()) throw std::invalid_argument("dual bound needs at least one test field");
    const auto& g = u.grid();
    const int d = g.dim();
    const Mask m = effective_mask(u, &body);
    // Nodes whose radius-2 box neighbourhood lies inside the mask and the grid.
    Mask deep(g.size(), 0);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!m[n]) continue;
        const auto idx = g.multi_index(n);
        bool ok = true;
        for (int k = 0; k < d && ok; ++k) ok = idx[k] >= 2 && idx[k] <= g.cells() - 2;
        if (!ok) continue;
        int span = 1;
        for (int k = 0; k < d; ++k) span *= 5;
        for (int c = 0; c < span && ok; ++c) {
            int rest = c;
            std::size_t nb = n;
            for (int k = 0; k < d; ++k) {
                const int off = rest % 5 - 2;
                rest /= 5;
                nb = static_cast<std::size_t>(static_cast<long long>(nb) +
                                              off * static_cast<long long>(g.stride(k)));
            }
            ok = m[nb] != 0;
        }
        deep[n] = ok ? 1 : 0;
    }
    VariationEstimate best{-std::numeric_limits<double>::infinity(), VariationMethod::Dual, g.spacing(),
                           g.tail_mass()};
    for (std::size_t p = 0; p < phis.size(); ++p) {
        const auto& phi = phis[p];
        if (phi.grid_ptr().get() != &g && phi.grid().size() != g.size()) {
            throw std::invalid_argument("test field lives on a different grid");
        }
        for (std::size_t n = 0; n < g.size(); ++n) {
            const double len = norm(phi.at(n), d);
            if (len > 1.0 + 1e-12) throw std::invalid_argument("test field exceeds unit length");
            if (len != 0.0 && !deep[n]) {
                throw std::invalid_argument("test field does not vanish near the domain boundary");
            }
        }
        const auto div = gaussian_divergence(phi);
        double s = 0.0;
        for (std::size_t n = 0; n < g.size(); ++n) {
            if (m[n]) s += u[n] * div[n] * g.weight(n);
        }
        best.value = std::max(best.value, s);
    }
    return best;
}

/// Radial cutoff: 1 on B_R, smoothstep down to 0 on [R, 2R] (slope <= 1.5/R).
inline double radial_cutoff(double r, double R) {
    if (r <= R) return 1.0;
    if (r >= 2.0 * R) return 0.0;
    const double t = (r - R) / R;
    return 1.0 - t * t * (3.0 - 2.0 * t);
}

/// int theta_R sqrt(|grad u|^2 + 1/R) dgamma over the body.
inline double regularized_variation(const ScalarField& u, double R, const ConvexBody* body = nullptr) {
    if (!(R > 0.0)) throw std::invalid_argument("regularization radius must be positive");
    const auto& g = u.grid();
    const Mask m = effective_mask(u, body);
    const auto grad = gradient(u, m);
    double s = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!m[n]) continue;
        const double theta = radial_cutoff(norm(g.node(n), g.dim()), R);
        if (theta == 0.0) continue;
        s += theta * std::sqrt(norm2(grad.at(n), g.dim()) + 1.0 / R) * g.weight(n);
    }
    return s;
}

inline double regularized_variation(const ScalarField& u, double R, const ConvexBody& body) {
    return regularized_variation(u, R, &body);
}

/// L^1(gamma) norm plus variation (jump form when a jump set is given).
inline double bv_norm(const ScalarField& u, const ConvexBody& body, const JumpSet* jumps = nullptr) {
    const auto& g = u.grid();
    const Mask m = effective_mask(u, &body);
    double l1 = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (m[n]) l1 += std::abs(u[n]) * g.weight(n);
    }
    const double var = jumps ? jump_variation(*jumps, body).value : sobolev_variation(u, body).value;
    return l1 + var;
}

/// |int u div phi dgamma + int <phi, grad u> dgamma| over the active nodes.
inline double integration_by_parts_residual(const ScalarField& u, const VectorField& phi) {
    const auto& g = u.grid();
    const auto div = gaussian_divergence(phi);
    const auto grad = gradient(u);
    double s = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!u.active(n)) continue;
        s += (u[n] * div[n] + dot(phi.at(n), grad.at(n), g.dim())) * g.weight(n);
    }
    return std::abs(s);
}

struct MeyersSerrinResult {
    ScalarField field;
    double cutoff_radius = 0.0;        // R-hat
    double mollification_radius = 0.0; // largest radius used
    double l2_error = 0.0;

    /// Error factor e^{eps R + eps^2/2} for the variation drift.
    double drift_factor(double eps) const { return std::exp(eps * cutoff_radius + 0.5 * eps * eps); }
};

/// Smooth approximation in variation: cut off at radius R-hat, then
/// mollify with a radius that shrinks near the body boundary so that every
/// kernel support stays interior. The radius is halved from eps until the
/// L^2(body) distance drops below eps.
inline MeyersSerrinResult meyers_serrin_approximate(const ScalarField& u, double eps, const ConvexBody& body) {
    if (!(eps > 0.0)) throw std::invalid_argument("approximation tolerance must be positive");
    const auto& g = u.grid();
    const int d = g.dim();
    const double h = g.spacing();
    const Mask m = effective_mask(u, &body);

    const auto l2_on_mask = [&](const std::vector<double>& a) {
        double s = 0.0;
        for (std::size_t n = 0; n < g.size(); ++n) {
            if (m[n]) s += (a[n] - u[n]) * (a[n] - u[n]) * g.weight(n);
        }
        return std::sqrt(s);
    };

    // Cutoff equal to 1 on B_{R-1}, supported in B_R, slope at most 2.
    const auto shell_cutoff = [](double r, double R) {
        if (r <= R - 1.0) return 1.0;
        if (r >= R) return 0.0;
        const double t = r - (R - 1.0);
        return 1.0 - t * t * (3.0 - 2.0 * t);
    };
    double R = 2.0;
    std::vector<double> cut(g.size(), 0.0);
    for (;; R *= 2.0) {
        for (std::size_t n = 0; n < g.size(); ++n) cut[n] = m[n] ? u[n] * shell_cutoff(norm(g.node(n), d), R) : 0.0;
        if (l2_on_mask(cut) < 0.25 * eps) break;
        if (R > 1e6) throw std::runtime_error("cutoff radius search did not converge");
    }

    // Distance to the boundary of body and grid box, bounded below through
    // the 1/r-Lipschitz gauge.
    std::vector<double> dist(g.size(), 0.0);
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!m[n]) continue;
        const Point x = g.node(n);
        double dd = std::isfinite(body.inradius()) ? (1.0 - body.gauge(x)) * body.inradius()
                                                   : std::numeric_limits<double>::infinity();
        for (int k = 0; k < d; ++k) dd = std::min(dd, g.half_width() - std::abs(x[k]));
        dist[n] = std::max(dd, 0.0);
    }

    std::vector<double> v(g.size(), 0.0);
    const auto mollify = [&](double radius_cap) {
        for (std::size_t n = 0; n < g.size(); ++n) {
            if (!m[n]) continue;
            const double eta = std::min(radius_cap, 0.5 * dist[n]);
            if (eta < 2.0 * h) {
                v[n] = cut[n];
                continue;
            }
            const int reach = static_cast<int>(std::floor(eta / h));
            const auto idx = g.multi_index(n);
            double num = 0.0, den = 0.0;
            int span = 1;
            for (int k = 0; k < d; ++k) span *= 2 * reach + 1;
            for (int c = 0; c < span; ++c) {
                int rest = c;
                std::array<int, 3> j{};
                double r2 = 0.0;
                for (int k = 0; k < d; ++k) {
                    const int off = rest % (2 * reach + 1) - reach;
                    rest /= 2 * reach + 1;
                    j[k] = idx[k] + off;
                    const double z = off * h / eta;
                    r2 += z * z;
                }
                if (r2 >= 1.0) continue;
                const double w = bump(r2);
                const std::size_t nj = g.flat_index(j);
                num += w * cut[nj];
                den += w;
            }
            v[n] = num / den;
        }
    };

    double radius = eps;
    for (;;) {
        if (radius < 2.0 * h) {
            throw std::runtime_error("required mollification radius falls below the grid spacing; refine the grid");
        }
        mollify(radius);
        const double err = l2_on_mask(v);
        if (err < eps) {
            MeyersSerrinResult res;
            res.field = ScalarField(u.grid_ptr(), v, m);
            res.cutoff_radius = R;
            res.mollification_radius = radius;
            res.l2_error = err;
            return res;
        }
        radius *= 0.5;
    }
}

/// Gaussian average over the last dim - m coordinates.
inline ScalarField conditional_expectation(const ScalarField& u, int m) {
    const auto& g = u.grid();
    const int d = g.dim();
    if (u.masked()) throw std::invalid_argument("conditional expectation needs an unmasked field");
    if (m < 1 || m >= d) throw std::invalid_argument("conditional expectation needs 1 <= m < dim");
    std::vector<double> axis_w(g.per_axis());
    double axis_sum = 0.0;
    for (int i = 0; i < g.per_axis(); ++i) {
        axis_w[i] = gaussian_density_1d(g.coord(i));
        axis_sum += axis_w[i];
    }
    for (double& w : axis_w) w /= axis_sum;
    // Base nodes vary fastest, so index = base + stride(m) * trailing.
    const std::size_t base_size = g.stride(m);
    const std::size_t trailing = g.size() / base_size;
    std::vector<double> avg(base_size, 0.0);
    for (std::size_t t = 0; t < trailing; ++t) {
        const auto tidx = g.multi_index(t * base_size);
        double w = 1.0;
        for (int k = m; k < d; ++k) w *= axis_w[tidx[k]];
        for (std::size_t b = 0; b < base_size; ++b) avg[b] += w * u[t * base_size + b];
    }
    std::vector<double> out(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) out[n] = avg[n % base_size];
    return ScalarField(u.grid_ptr(), std::move(out));
}

}  // namespace oubv
