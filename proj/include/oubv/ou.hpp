#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "oubv/bv.hpp"
#include "oubv/convex.hpp"
#include "oubv/gaussian.hpp"

namespace oubv {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Discrete Dirichlet form of the Ornstein-Uhlenbeck operator on the grid
/// nodes strictly inside a convex body.
///
/// E_h(u, v) = sum over grid faces with both endpoints interior of
/// w_face (u+ - u-)(v+ - v-) / h^2 with w_face = G_d(midpoint) h^d. Faces
/// leaving the body carry no term, which is the variational Neumann
/// condition. The generator is L = -M^{-1} A with M the diagonal of node
/// weights and A the form matrix.
class OUOperator {
public:
    OUOperator(GridPtr grid, const ConvexBody& body)
        : grid_(std::move(grid)), body_(body) {
        const auto& g = *grid_;
        if (g.dim() != body.dim()) throw std::invalid_argument("grid and body dimensions differ");
        const int d = g.dim();
        const double h = g.spacing();
        mask_ = body_mask(g, body);
        index_.assign(g.size(), -1);
        for (std::size_t n = 0; n < g.size(); ++n) {
            if (mask_[n]) {
                index_[n] = static_cast<std::int64_t>(nodes_.size());
                nodes_.push_back(n);
            }
        }
        if (nodes_.empty()) throw std::invalid_argument("body contains no grid nodes");

        const std::size_t count = nodes_.size();
        mass_.resize(static_cast<Eigen::Index>(count));
        for (std::size_t i = 0; i < count; ++i) mass_[static_cast<Eigen::Index>(i)] = g.weight(nodes_[i]);

        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(count * (2 * d + 1));
        std::vector<double> diag(count, 0.0);
        const double scale = std::pow(h, d - 2);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t n = nodes_[i];
            const auto idx = g.multi_index(n);
            const Point x = g.node(n);
            for (int k = 0; k < d; ++k) {
                if (idx[k] == g.cells()) continue;
                const std::size_t nb = n + g.stride(k);
                if (!mask_[nb]) continue;
                Point mid = x;
                mid[k] += 0.5 * h;
                const double c = gaussian_density(mid, d) * scale;
                const auto j = static_cast<std::size_t>(index_[nb]);
                faces_.push_back({i, j, c});
                trip.emplace_back(static_cast<int>(i), static_cast<int>(j), -c);
                trip.emplace_back(static_cast<int>(j), static_cast<int>(i), -c);
                diag[i] += c;
                diag[j] += c;
            }
        }
        for (std::size_t i = 0; i < count; ++i) trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag[i]);
        stiffness_.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
        stiffness_.setFromTriplets(trip.begin(), trip.end());
        stiffness_.makeCompressed();
        check_connected();
    }

    const GaussianGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const ConvexBody& body() const { return body_; }
    const Mask& mask() const { return mask_; }
    std::size_t unknowns() const { return nodes_.size(); }
    const std::vector<std::size_t>& interior_nodes() const { return nodes_; }
    const SparseMatrix& form_matrix() const { return stiffness_; }
    const Eigen::VectorXd& mass_weights() const { return mass_; }

    struct Face {
        std::size_t a, b;
        double coefficient;  // w_face / h^2
    };
    const std::vector<Face>& faces() const { return faces_; }

    /// Interior values of a grid field; every interior node must be active in f.
    Eigen::VectorXd restrict(const ScalarField& f) const {
        if (f.size() != grid_->size()) throw std::invalid_argument("field lives on a different grid");
        Eigen::VectorXd v(static_cast<Eigen::Index>(nodes_.size()));
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!f.active(nodes_[i])) throw std::invalid_argument("field is undefined at an interior node");
            v[static_cast<Eigen::Index>(i)] = f[nodes_[i]];
        }
        return v;
    }

    ScalarField extend(const Eigen::VectorXd& v) const {
        std::vector<double> out(grid_->size(), 0.0);
        for (std::size_t i = 0; i < nodes_.size(); ++i) out[nodes_[i]] = v[static_cast<Eigen::Index>(i)];
        return ScalarField(grid_, std::move(out), mask_);
    }

    /// E_h(u, v), summed face by face so that constants give exactly zero.
    double energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        double s = 0.0;
        for (const auto& f : faces_) {
            const auto a = static_cast<Eigen::Index>(f.a), b = static_cast<Eigen::Index>(f.b);
            s += f.coefficient * (u[b] - u[a]) * (v[b] - v[a]);
        }
        return s;
    }

    double energy(const ScalarField& u, const ScalarField& v) const { return energy(restrict(u), restrict(v)); }

    /// <u, v>_{L^2(body, gamma)} on interior nodes.
    double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        return (u.array() * v.array() * mass_.array()).sum();
    }

    double mass(const Eigen::VectorXd& u) const { return u.dot(mass_); }

private:
    void check_connected() const {
        const std::size_t count = nodes_.size();
        std::vector<std::vector<std::size_t>> adj(count);
        for (const auto& f : faces_) {
            adj[f.a].push_back(f.b);
            adj[f.b].push_back(f.a);
        }
        std::vector<std::uint8_t> seen(count, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t j : adj[i]) {
                if (!seen[j]) {
                    seen[j] = 1;
                    ++reached;
                    stack.push_back(j);
                }
            }
        }
        if (reached != count) {
            throw std::invalid_argument("interior grid nodes of the body are not connected");
        }
    }

    GridPtr grid_;
    ConvexBody body_;
    Mask mask_;
    std::vector<std::int64_t> index_;
    std::vector<std::size_t> nodes_;
    std::vector<Face> faces_;
    SparseMatrix stiffness_;
    Eigen::VectorXd mass_;
};

inline OUOperator assemble_dirichlet_form(GridPtr grid, const ConvexBody& body) {
    return OUOperator(std::move(grid), body);
}

struct SolveStats {
    long iterations = 0;
    double residual = 0.0;
};

/// u = R(lambda, L) f, i.e. (lambda M + A) u = M f, by Jacobi-preconditioned
/// conjugate gradients to relative residual `tol`.
inline ScalarField solve_resolvent(const OUOperator& op, double lambda, const ScalarField& f,
                                   SolveStats* stats = nullptr, double tol = 1e-10,
                                   long max_iterations = 20000) {
    if (!(lambda > 0.0)) throw std::invalid_argument("resolvent needs lambda > 0");
    const Eigen::VectorXd fv = op.restrict(f);
    SparseMatrix sys = op.form_matrix();
    sys.diagonal() += lambda * op.mass_weights();
    const Eigen::VectorXd rhs = op.mass_weights().cwiseProduct(fv);
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper, Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(max_iterations);
    cg.compute(sys);
    Eigen::VectorXd u = cg.solve(rhs);
    if (rhs.norm() == 0.0) u.setZero();
    const double res = rhs.norm() > 0.0 ? (rhs - sys * u).norm() / rhs.norm() : 0.0;
    if (stats) {
        stats->iterations = cg.iterations();
        stats->residual = res;
    }
    if (!(res <= 10.0 * tol)) {
        throw std::runtime_error("resolvent solve did not reach tolerance within " +
                                 std::to_string(max_iterations) + " iterations (residual " +
                                 std::to_string(res) + ")");
    }
    return op.extend(u);
}

/// Default step count for a time span t on spacing h.
inline int default_steps(double t, double h) {
    return std::max(32, static_cast<int>(std::ceil(t / h - 1e-12)));
}

/// Semigroup evolution of M u' = -A u by Crank-Nicolson. The first
/// `startup` steps are each replaced by two implicit Euler half-steps, which
/// damps the stiff modes of rough data; both use the matrix M + (dt/2) A.
inline Eigen::VectorXd evolve_vector(const OUOperator& op, Eigen::VectorXd u, double t, int steps,
                                     int startup = 2) {
    if (!(t > 0.0)) throw std::invalid_argument("evolution time must be positive");
    if (steps < 1) throw std::invalid_argument("evolution needs at least one step");
    const double dt = t / steps;
    if (dt > op.grid().spacing() * (1.0 + 1e-12)) {
        throw std::invalid_argument("time step exceeds the accuracy budget dt_max = h");
    }
    SparseMatrix lhs = op.form_matrix() * (0.5 * dt);
    lhs.diagonal() += op.mass_weights();
    SparseMatrix rhs_op = op.form_matrix() * (-0.5 * dt);
    rhs_op.diagonal() += op.mass_weights();
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(lhs);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("time-step factorization failed");
    const auto& m = op.mass_weights();
    for (int s = 0; s < steps; ++s) {
        if (s < startup) {
            for (int half = 0; half < 2; ++half) {
                const Eigen::VectorXd rhs = m.cwiseProduct(u);
                u = ldlt.solve(rhs);
            }
        } else {
            const Eigen::VectorXd rhs = rhs_op * u;
            u = ldlt.solve(rhs);
        }
    }
    return u;
}

/// Approximation of T_t u0 on the interior nodes of the body.
inline ScalarField evolve_semigroup(const OUOperator& op, const ScalarField& u0, double t, int steps = 0) {
    if (steps == 0) steps = default_steps(t, op.grid().spacing());
    return op.extend(evolve_vector(op, op.restrict(u0), t, steps));
}

/// Initial datum together with its interface when it is piecewise constant.
struct InitialDatum {
    ScalarField field;
    std::optional<JumpSet> jumps;
    std::string label;
};

/// Reference variation |D u0|(body): exact jump form for piecewise-constant
/// data, Sobolev form otherwise.
inline VariationEstimate reference_variation(const InitialDatum& u0, const ConvexBody& body) {
    if (u0.jumps) return jump_variation(*u0.jumps, body);
    return sobolev_variation(u0.field, body);
}

/// Samples of F(t) = int |grad T_t u0| dgamma with per-time error estimates.
struct SemigroupTrace {
    std::vector<double> times;
    std::vector<double> values;
    double reference = 0.0;
    std::vector<double> tolerances;
    std::vector<double> mass_drift;
    std::vector<double> contraction_margin;
    double error_constant = 1.0;
};

/// Smallest resolvable time (10 h)^2.
inline double min_resolvable_time(double h) { return 100.0 * h * h; }

/// Error model C (h / sqrt(t) + dt^2 / t).
inline double trace_error_estimate(double constant, double h, double t, double dt) {
    return constant * (h / std::sqrt(t) + dt * dt / t);
}

/// Evaluates F along increasing times, advancing the solution from one time
/// to the next with default_steps(t_k - t_{k-1}, h) steps.
inline SemigroupTrace variation_trace(const OUOperator& op, const InitialDatum& u0, const std::vector<double>& times,
                                      double error_constant = 1.0) {
    if (times.empty()) throw std::invalid_argument("trace needs at least one time");
    const double h = op.grid().spacing();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < min_resolvable_time(h) * (1.0 - 1e-12)) {
            throw std::invalid_argument("time " + std::to_string(times[i]) +
                                        " is below the resolvable threshold (10h)^2 = " +
                                        std::to_string(min_resolvable_time(h)));
        }
        if (i > 0 && !(times[i] > times[i - 1])) throw std::invalid_argument("trace times must increase");
    }
    SemigroupTrace tr;
    tr.reference = reference_variation(u0, op.body()).value;
    tr.error_constant = error_constant;
    Eigen::VectorXd u = op.restrict(u0.field);
    const double mass0 = op.mass(u);
    const double norm0 = std::sqrt(op.inner(u, u));
    double prev = 0.0;
    for (double t : times) {
        const double span = t - prev;
        const int steps = default_steps(span, h);
        u = evolve_vector(op, u, span, steps);
        const ScalarField field = op.extend(u);
        tr.times.push_back(t);
        tr.values.push_back(sobolev_variation(field, op.body()).value);
        tr.tolerances.push_back(trace_error_estimate(error_constant, h, t, span / steps));
        tr.mass_drift.push_back(std::abs(op.mass(u) - mass0));
        tr.contraction_margin.push_back(norm0 - std::sqrt(op.inner(u, u)));
        prev = t;
    }
    return tr;
}

/// W^{1,2}(body, gamma) norm of (approx restricted to the body) - exact,
/// with the gradient part measured by the body's own form.
inline double w12_restriction_error(const OUOperator& target, const ScalarField& approx, const ScalarField& exact) {
    const Eigen::VectorXd diff = target.restrict(approx) - target.restrict(exact);
    return std::sqrt(target.inner(diff, diff) + target.energy(diff, diff));
}

/// Extends a field on a base grid of dimension m to a grid of higher
/// dimension with the same half-width and spacing, constant along the
/// trailing coordinates.
inline ScalarField lift_cylindrical(const ScalarField& base, const GridPtr& full) {
    const auto& b = base.grid();
    if (full->dim() <= b.dim() || full->spacing() != b.spacing() || full->half_width() != b.half_width()) {
        throw std::invalid_argument("cylindrical lift needs a higher-dimensional grid with the same lattice");
    }
    const std::size_t base_size = b.size();
    std::vector<double> out(full->size());
    Mask mask;
    if (base.masked()) mask.resize(full->size());
    for (std::size_t n = 0; n < full->size(); ++n) {
        out[n] = base[n % base_size];
        if (base.masked()) mask[n] = base.mask()[n % base_size];
    }
    return ScalarField(full, std::move(out), std::move(mask));
}

}  // namespace oubv
