#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "oubv/gaussian.hpp"

namespace oubv {

/// Unnormalized standard bump exp(1/(|u|^2 - 1)) on the open unit ball.
inline double bump(double r2) { return r2 < 1.0 ? std::exp(1.0 / (r2 - 1.0)) : 0.0; }

/// Gauss-Legendre nodes and weights on [-1, 1].
inline void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

/// Discrete standard mollifier: tensor Gauss-Legendre points in [-1,1]^d
/// weighted by the bump and normalized to unit mass. The rule is symmetric,
/// so its first moment vanishes exactly.
struct MollifierRule {
    int dim = 1;
    std::vector<Point> offsets;
    std::vector<double> weights;

    static MollifierRule tensor(int d, int points_per_axis = 9) {
        check_dim(d);
        std::vector<double> x, w;
        gauss_legendre(points_per_axis, x, w);
        MollifierRule rule;
        rule.dim = d;
        int total = 1;
        for (int k = 0; k < d; ++k) total *= points_per_axis;
        double mass = 0.0;
        for (int c = 0; c < total; ++c) {
            Point u{};
            double wt = 1.0;
            int rest = c;
            for (int k = 0; k < d; ++k) {
                const int i = rest % points_per_axis;
                rest /= points_per_axis;
                u[k] = x[i];
                wt *= w[i];
            }
            wt *= bump(norm2(u, d));
            if (wt <= 0.0) continue;
            rule.offsets.push_back(u);
            rule.weights.push_back(wt);
            mass += wt;
        }
        for (double& wt : rule.weights) wt /= mass;
        return rule;
    }

    std::size_t size() const { return weights.size(); }
};

/// First absolute moment int |u| rho(u) du of the normalized bump,
/// by radial midpoint quadrature.
inline double mollifier_first_moment(int d, int samples = 20000) {
    check_dim(d);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double r = (i + 0.5) / samples;
        const double shell = std::pow(r, d - 1) * bump(r * r);
        num += r * shell;
        den += shell;
    }
    return num / den;
}

}  // namespace oubv
