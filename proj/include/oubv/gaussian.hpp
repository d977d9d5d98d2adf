#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace oubv {

/// Points carry up to three coordinates; entries past the active dimension are zero.
using Point = std::array<double, 3>;

inline constexpr int kMaxDim = 3;

inline void check_dim(int d) {
    if (d < 1 || d > kMaxDim) {
        throw std::invalid_argument("dimension must be 1, 2 or 3, got " + std::to_string(d));
    }
}

inline double norm2(const Point& x, int d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += x[k] * x[k];
    return s;
}

inline double norm(const Point& x, int d) { return std::sqrt(norm2(x, d)); }

inline double dot(const Point& a, const Point& b, int d) {
    double s = 0.0;
    for (int k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
}

/// Standard Gaussian density G_d(x) = (2 pi)^{-d/2} exp(-|x|^2 / 2).
inline double gaussian_density(const Point& x, int d) {
    check_dim(d);
    return std::pow(2.0 * std::numbers::pi, -0.5 * d) * std::exp(-0.5 * norm2(x, d));
}

inline double gaussian_density(std::span<const double> x) {
    Point p{};
    check_dim(static_cast<int>(x.size()));
    std::copy(x.begin(), x.end(), p.begin());
    return gaussian_density(p, static_cast<int>(x.size()));
}

inline double gaussian_density_1d(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Gaussian mass outside the cube [-L, L]^d.
inline double gaussian_tail_mass(int d, double half_width) {
    const double outside_1d = std::erfc(half_width / std::numbers::sqrt2);
    return -std::expm1(d * std::log1p(-outside_1d));
}

/// Uniform Cartesian lattice on [-L, L]^d carrying the weights G_d(node) h^d.
///
/// The half-width is snapped down so that 2L/h is an integer. Nodes are stored
/// with the first coordinate varying fastest.
class GaussianGrid {
public:
    static constexpr std::size_t kDefaultNodeCap = std::size_t{1} << 26;

    GaussianGrid(int dim, double half_width, double spacing,
                 std::size_t node_cap = kDefaultNodeCap)
        : dim_(dim), spacing_(spacing) {
        check_dim(dim);
        if (!(half_width > 0.0) || !std::isfinite(half_width)) {
            throw std::invalid_argument("grid half-width must be positive");
        }
        if (!(spacing > 0.0) || !std::isfinite(spacing)) {
            throw std::invalid_argument("grid spacing must be positive");
        }
        if (spacing > half_width) {
            throw std::invalid_argument("grid spacing must not exceed the half-width");
        }
        const double cells = std::floor(2.0 * half_width / spacing + 1e-9);
        cells_ = static_cast<int>(cells);
        half_width_ = 0.5 * cells * spacing;
        const double count = std::pow(cells + 1.0, dim);
        if (count > static_cast<double>(node_cap)) {
            throw std::invalid_argument("grid would have " + std::to_string(count) +
                                        " nodes, above the cap of " + std::to_string(node_cap));
        }
        size_ = 1;
        for (int k = 0; k < dim_; ++k) {
            strides_[k] = size_;
            size_ *= static_cast<std::size_t>(cells_ + 1);
        }
        const double cell_volume = std::pow(spacing_, dim_);
        weights_.resize(size_);
        std::vector<double> axis_density(per_axis());
        for (int i = 0; i < per_axis(); ++i) axis_density[i] = gaussian_density_1d(coord(i));
        for (std::size_t n = 0; n < size_; ++n) {
            double w = cell_volume;
            const auto idx = multi_index(n);
            for (int k = 0; k < dim_; ++k) w *= axis_density[idx[k]];
            weights_[n] = w;
        }
    }

    int dim() const { return dim_; }
    double half_width() const { return half_width_; }
    double spacing() const { return spacing_; }
    int cells() const { return cells_; }
    int per_axis() const { return cells_ + 1; }
    std::size_t size() const { return size_; }
    std::size_t stride(int axis) const { return strides_[axis]; }

    double coord(int i) const { return -half_width_ + i * spacing_; }

    std::array<int, 3> multi_index(std::size_t n) const {
        std::array<int, 3> idx{};
        for (int k = 0; k < dim_; ++k) {
            idx[k] = static_cast<int>(n % static_cast<std::size_t>(per_axis()));
            n /= static_cast<std::size_t>(per_axis());
        }
        return idx;
    }

    std::size_t flat_index(const std::array<int, 3>& idx) const {
        std::size_t n = 0;
        for (int k = 0; k < dim_; ++k) n += static_cast<std::size_t>(idx[k]) * strides_[k];
        return n;
    }

    Point node(std::size_t n) const {
        Point x{};
        const auto idx = multi_index(n);
        for (int k = 0; k < dim_; ++k) x[k] = coord(idx[k]);
        return x;
    }

    std::span<const double> weights() const { return weights_; }
    double weight(std::size_t n) const { return weights_[n]; }

    double weight_sum() const {
        double s = 0.0;
        for (double w : weights_) s += w;
        return s;
    }

    /// Gaussian mass outside the truncation box.
    double tail_mass() const { return gaussian_tail_mass(dim_, half_width_); }

    /// Interval that the weight sum must fall in. Besides the tail, the lattice
    /// sum differs from the integral by the leading aliasing term of Poisson
    /// summation and by the half-weights a trapezoid rule would give the faces.
    std::pair<double, double> weight_sum_bounds() const {
        const double pi = std::numbers::pi;
        const double alias = 2.0 * dim_ * std::exp(-2.0 * pi * pi / (spacing_ * spacing_));
        const double faces = dim_ * spacing_ * gaussian_density_1d(half_width_);
        return {1.0 - tail_mass() - alias, 1.0 + alias + faces};
    }

private:
    int dim_ = 1;
    double half_width_ = 0.0;
    double spacing_ = 0.0;
    int cells_ = 0;
    std::size_t size_ = 0;
    std::array<std::size_t, 3> strides_{};
    std::vector<double> weights_;
};

using GridPtr = std::shared_ptr<const GaussianGrid>;

inline GridPtr build_grid(int dim, double half_width, double spacing,
                          std::size_t node_cap = GaussianGrid::kDefaultNodeCap) {
    return std::make_shared<const GaussianGrid>(dim, half_width, spacing, node_cap);
}

/// Per-node membership flags; an empty mask means every node is active.
using Mask = std::vector<std::uint8_t>;

/// Grid-aligned scalar values, optionally restricted to a masked subset of nodes.
class ScalarField {
public:
    ScalarField() = default;

    ScalarField(GridPtr grid, std::vector<double> values, Mask mask = {})
        : grid_(std::move(grid)), values_(std::move(values)), mask_(std::move(mask)) {
        if (!grid_) throw std::invalid_argument("field needs a grid");
        if (values_.size() != grid_->size()) {
            throw std::invalid_argument("field value count does not match the grid");
        }
        if (!mask_.empty() && mask_.size() != grid_->size()) {
            throw std::invalid_argument("field mask size does not match the grid");
        }
        for (std::size_t n = 0; n < values_.size(); ++n) {
            if (active(n) && !std::isfinite(values_[n])) {
                throw std::invalid_argument("field value is not finite at an active node");
            }
        }
    }

    template <class F>
    static ScalarField from_function(GridPtr grid, F&& f, Mask mask = {}) {
        std::vector<double> values(grid->size(), 0.0);
        for (std::size_t n = 0; n < grid->size(); ++n) {
            if (mask.empty() || mask[n]) values[n] = f(grid->node(n));
        }
        return ScalarField(std::move(grid), std::move(values), std::move(mask));
    }

    static ScalarField constant(GridPtr grid, double c, Mask mask = {}) {
        std::vector<double> values(grid->size(), c);
        return ScalarField(std::move(grid), std::move(values), std::move(mask));
    }

    const GaussianGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    bool masked() const { return !mask_.empty(); }
    bool active(std::size_t n) const { return mask_.empty() || mask_[n] != 0; }
    const Mask& mask() const { return mask_; }

    double operator[](std::size_t n) const { return values_[n]; }
    std::span<const double> values() const { return values_; }

    /// Same grid and mask with new values.
    ScalarField with_values(std::vector<double> values) const {
        return ScalarField(grid_, std::move(values), mask_);
    }

    ScalarField with_mask(Mask mask) const {
        std::vector<double> v = values_;
        for (std::size_t n = 0; n < v.size(); ++n) {
            if (!mask.empty() && !mask[n]) v[n] = 0.0;
        }
        return ScalarField(grid_, std::move(v), std::move(mask));
    }

private:
    GridPtr grid_;
    std::vector<double> values_;
    Mask mask_;
};

/// Grid-aligned vector values (dim components per node, interleaved).
class VectorField {
public:
    VectorField() = default;

    VectorField(GridPtr grid, std::vector<double> values, Mask mask = {})
        : grid_(std::move(grid)), values_(std::move(values)), mask_(std::move(mask)) {
        if (!grid_) throw std::invalid_argument("field needs a grid");
        if (values_.size() != grid_->size() * static_cast<std::size_t>(grid_->dim())) {
            throw std::invalid_argument("vector field value count does not match the grid");
        }
        if (!mask_.empty() && mask_.size() != grid_->size()) {
            throw std::invalid_argument("field mask size does not match the grid");
        }
        for (std::size_t n = 0; n < grid_->size(); ++n) {
            if (active(n) && !std::isfinite(norm(at(n), grid_->dim()))) {
                throw std::invalid_argument("vector field is not finite at an active node");
            }
        }
    }

    template <class F>
    static VectorField from_function(GridPtr grid, F&& f, Mask mask = {}) {
        const int d = grid->dim();
        std::vector<double> values(grid->size() * static_cast<std::size_t>(d), 0.0);
        for (std::size_t n = 0; n < grid->size(); ++n) {
            if (!mask.empty() && !mask[n]) continue;
            const Point v = f(grid->node(n));
            for (int k = 0; k < d; ++k) values[n * d + k] = v[k];
        }
        return VectorField(std::move(grid), std::move(values), std::move(mask));
    }

    const GaussianGrid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    bool masked() const { return !mask_.empty(); }
    bool active(std::size_t n) const { return mask_.empty() || mask_[n] != 0; }
    const Mask& mask() const { return mask_; }

    Point at(std::size_t n) const {
        Point v{};
        const int d = grid_->dim();
        for (int k = 0; k < d; ++k) v[k] = values_[n * d + k];
        return v;
    }

    double component(std::size_t n, int k) const { return values_[n * grid_->dim() + k]; }

private:
    GridPtr grid_;
    std::vector<double> values_;
    Mask mask_;
};

/// Sum of f(node) * weight over the active nodes of f.
inline double gaussian_integrate(const ScalarField& f) {
    const auto& g = f.grid();
    double s = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (f.active(n)) s += f[n] * g.weight(n);
    }
    return s;
}

/// L^2(gamma) norm over the active nodes.
inline double l2_norm(const ScalarField& f) {
    const auto& g = f.grid();
    double s = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (f.active(n)) s += f[n] * f[n] * g.weight(n);
    }
    return std::sqrt(s);
}

/// L^2(gamma) distance over nodes active in both fields.
inline double l2_distance(const ScalarField& a, const ScalarField& b) {
    if (a.grid_ptr() != b.grid_ptr() && a.size() != b.size()) {
        throw std::invalid_argument("fields live on different grids");
    }
    const auto& g = a.grid();
    double s = 0.0;
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (a.active(n) && b.active(n)) {
            const double e = a[n] - b[n];
            s += e * e * g.weight(n);
        }
    }
    return std::sqrt(s);
}

/// Multilinear interpolation of f at x, constant extension outside [-L, L]^d.
inline double interpolate(const ScalarField& f, const Point& x) {
    const auto& g = f.grid();
    const int d = g.dim();
    const double h = g.spacing();
    std::array<int, 3> base{};
    std::array<double, 3> frac{};
    for (int k = 0; k < d; ++k) {
        const double s = std::clamp((x[k] + g.half_width()) / h, 0.0, static_cast<double>(g.cells()));
        int i = static_cast<int>(std::floor(s));
        if (i >= g.cells()) i = g.cells() - 1;
        base[k] = i;
        frac[k] = s - i;
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        std::size_t n = 0;
        for (int k = 0; k < d; ++k) {
            const int bit = (corner >> k) & 1;
            w *= bit ? frac[k] : 1.0 - frac[k];
            n += static_cast<std::size_t>(base[k] + bit) * g.stride(k);
        }
        if (w != 0.0) acc += w * f[n];
    }
    return acc;
}

/// Whole-space Ornstein-Uhlenbeck semigroup by the Mehler formula,
/// T_t f(x) = int f(e^{-t} x + sqrt(1 - e^{-2t}) y) dgamma(y),
/// with the inner integral taken on the same grid.
inline ScalarField mehler_apply(const ScalarField& f, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("Mehler time must be nonnegative");
    if (f.masked()) throw std::invalid_argument("Mehler formula needs an unmasked field");
    if (t == 0.0) return f;
    const auto& g = f.grid();
    const int d = g.dim();
    const double decay = std::exp(-t);
    const double spread = std::sqrt(-std::expm1(-2.0 * t));
    const double wsum = g.weight_sum();
    std::vector<double> out(g.size());
    std::vector<Point> nodes(g.size());
    for (std::size_t n = 0; n < g.size(); ++n) nodes[n] = g.node(n);
    for (std::size_t n = 0; n < g.size(); ++n) {
        double acc = 0.0;
        Point z{};
        for (std::size_t m = 0; m < g.size(); ++m) {
            for (int k = 0; k < d; ++k) z[k] = decay * nodes[n][k] + spread * nodes[m][k];
            acc += interpolate(f, z) * g.weight(m);
        }
        out[n] = acc / wsum;
    }
    return f.with_values(std::move(out));
}

/// Writes active nodes as CSV with header x1[,x2[,x3]],value.
inline void write_csv(const ScalarField& f, std::ostream& os) {
    const auto& g = f.grid();
    for (int k = 0; k < g.dim(); ++k) os << 'x' << (k + 1) << ',';
    os << "value\n";
    char buf[64];
    for (std::size_t n = 0; n < g.size(); ++n) {
        if (!f.active(n)) continue;
        const Point x = g.node(n);
        for (int k = 0; k < g.dim(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g,", x[k]);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g\n", f[n]);
        os << buf;
    }
}

/// Reads a CSV written by write_csv onto `grid`. Rows must sit on grid nodes;
/// nodes missing from the file are masked out.
inline ScalarField read_csv(const GridPtr& grid, std::istream& is) {
    const int d = grid->dim();
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("empty field CSV");
    {
        std::string expected;
        for (int k = 0; k < d; ++k) expected += "x" + std::to_string(k + 1) + ",";
        expected += "value";
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != expected) {
            throw std::invalid_argument("field CSV header must be '" + expected + "'");
        }
    }
    std::vector<double> values(grid->size(), 0.0);
    Mask mask(grid->size(), 0);
    const double h = grid->spacing();
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        std::stringstream ss(line);
        std::array<double, 4> cols{};
        std::string cell;
        int c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c > d) throw std::invalid_argument("too many columns in field CSV row " + std::to_string(row));
            cols[c++] = std::stod(cell);
        }
        if (c != d + 1) throw std::invalid_argument("too few columns in field CSV row " + std::to_string(row));
        std::array<int, 3> idx{};
        for (int k = 0; k < d; ++k) {
            const double s = (cols[k] + grid->half_width()) / h;
            const double r = std::round(s);
            if (std::abs(s - r) > 1e-6 || r < 0 || r > grid->cells()) {
                throw std::invalid_argument("field CSV row " + std::to_string(row) + " is not on a grid node");
            }
            idx[k] = static_cast<int>(r);
        }
        const std::size_t n = grid->flat_index(idx);
        values[n] = cols[d];
        mask[n] = 1;
    }
    if (std::all_of(mask.begin(), mask.end(), [](std::uint8_t m) { return m != 0; })) mask.clear();
    return ScalarField(grid, std::move(values), std::move(mask));
}

}  // namespace oubv
