#include "hybridlab/grid.hpp"

#include <algorithm>
#include <numbers>
#include <string>

#include "hybridlab/error.hpp"

namespace hybridlab {

SpatialGrid::SpatialGrid(int interior_nodes) : nodes_(interior_nodes), spacing_(0.0) {
    require(interior_nodes >= 3, "grid needs at least 3 interior nodes, got " + std::to_string(interior_nodes));
    spacing_ = 1.0 / (interior_nodes + 1);
}

SpatialGrid make_grid(int interior_nodes) { return SpatialGrid(interior_nodes); }

GridFunction::GridFunction(const SpatialGrid& grid)
    : grid_(grid), values_(static_cast<std::size_t>(grid.size()), 0.0) {}

GridFunction::GridFunction(const SpatialGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    require(values_.size() == static_cast<std::size_t>(grid.size()),
            "grid function has " + std::to_string(values_.size()) + " values for a grid of " +
                std::to_string(grid.size()) + " nodes");
    require(all_finite(), "grid function values must be finite");
}

bool GridFunction::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double discrete_dot(double h, std::span<const double> u, std::span<const double> v) noexcept {
    double sum = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) sum += u[j] * v[j];
    return h * sum;
}

double inner_product(const GridFunction& u, const GridFunction& v) {
    require(u.grid() == v.grid(), "inner product of grid functions on different grids");
    return discrete_dot(u.grid().spacing(), u.values(), v.values());
}

double norm(const GridFunction& u) { return std::sqrt(inner_product(u, u)); }

double distance_squared(const GridFunction& u, const GridFunction& v) {
    require(u.grid() == v.grid(), "distance between grid functions on different grids");
    double sum = 0.0;
    for (int j = 0; j < u.size(); ++j) {
        const double d = u[j] - v[j];
        sum += d * d;
    }
    return u.grid().spacing() * sum;
}

double bump(double u) noexcept {
    const double s = 1.0 - u * u;
    if (s <= 0.0) return 0.0;
    return std::exp(-1.0 / s);
}

Mollifier::Mollifier(int site, int population, const SpatialGrid& grid)
    : site_(site), population_(population), grid_(grid) {
    require(population >= 2, "mollifier population must be >= 2");
    require(site >= 1 && site <= population - 1,
            "mollifier site " + std::to_string(site) + " outside 1.." + std::to_string(population - 1));
    const double h = grid.spacing();
    const double n = population;
    const double z = center();
    const int lo = std::max(0, static_cast<int>(std::floor((z - 1.0 / n) / h)) - 2);
    const int hi = std::min(grid.size() - 1, static_cast<int>(std::ceil((z + 1.0 / n) / h)) + 1);
    int first = -1;
    int last = -1;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(hi - lo + 1));
    for (int j = lo; j <= hi; ++j) {
        const double v = n * bump(n * (grid.node(j) - z));
        values.push_back(v);
        if (v > 0.0) {
            if (first < 0) first = j;
            last = j;
        }
    }
    if (first >= 0) {
        first_ = first;
        band_.assign(values.begin() + (first - lo), values.begin() + (last - lo + 1));
    }
}

Mollifier mollifier_build(int site, int population, const SpatialGrid& grid) {
    return Mollifier(site, population, grid);
}

double Mollifier::project(std::span<const double> x) const noexcept {
    return discrete_dot(grid_.spacing(), band_, x.subspan(static_cast<std::size_t>(first_), band_.size()));
}

void Mollifier::accumulate(double weight, std::span<double> out) const noexcept {
    double* o = out.data() + first_;
    for (std::size_t k = 0; k < band_.size(); ++k) o[k] += weight * band_[k];
}

GridFunction Mollifier::samples() const {
    GridFunction g(grid_);
    accumulate(1.0, g.values());
    return g;
}

double Mollifier::norm() const noexcept { return std::sqrt(discrete_dot(grid_.spacing(), band_, band_)); }

MollifierFamily::MollifierFamily(int population, const SpatialGrid& grid) : population_(population), grid_(grid) {
    require(population >= 2, "population N must be >= 2");
    members_.reserve(static_cast<std::size_t>(population - 1));
    for (int i = 1; i < population; ++i) members_.emplace_back(i, population, grid);
}

void MollifierFamily::project(std::span<const double> x, std::span<double> zeta) const noexcept {
    for (std::size_t k = 0; k < members_.size(); ++k) zeta[k] = members_[k].project(x);
}

std::vector<double> MollifierFamily::project(const GridFunction& x) const {
    require(x.grid() == grid_, "projection of a grid function from a different grid");
    std::vector<double> zeta(members_.size());
    project(x.values(), zeta);
    return zeta;
}

void MollifierFamily::combine(std::span<const double> weights, std::span<double> out) const noexcept {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < members_.size(); ++k) members_[k].accumulate(weights[k], out);
}

GridFunction MollifierFamily::combine(std::span<const double> weights) const {
    require(weights.size() == members_.size(), "one weight per site required");
    GridFunction g(grid_);
    combine(weights, g.values());
    return g;
}

double MollifierFamily::gram_row_bound() const {
    const double h = grid_.spacing();
    double best = 0.0;
    for (const auto& a : members_) {
        double row = 0.0;
        for (const auto& b : members_) {
            const int lo = std::max(a.first_node(), b.first_node());
            const int hi = std::min(a.first_node() + static_cast<int>(a.band().size()),
                                    b.first_node() + static_cast<int>(b.band().size()));
            double s = 0.0;
            for (int j = lo; j < hi; ++j) {
                s += a.band()[static_cast<std::size_t>(j - a.first_node())] *
                     b.band()[static_cast<std::size_t>(j - b.first_node())];
            }
            row += std::abs(h * s);
        }
        best = std::max(best, row);
    }
    return best;
}

void Tridiagonal::apply(std::span<const double> u, std::span<double> out) const {
    const int n = size();
    require(static_cast<int>(u.size()) == n && static_cast<int>(out.size()) == n, "tridiagonal apply: size mismatch");
    for (int j = 0; j < n; ++j) {
        const auto k = static_cast<std::size_t>(j);
        double v = diag[k] * u[k];
        if (j > 0) v += lower[k] * u[k - 1];
        if (j + 1 < n) v += upper[k] * u[k + 1];
        out[k] = v;
    }
}

std::vector<double> Tridiagonal::apply(std::span<const double> u) const {
    std::vector<double> out(u.size());
    apply(u, out);
    return out;
}

Tridiagonal laplacian_matrix(const SpatialGrid& grid) {
    const auto n = static_cast<std::size_t>(grid.size());
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    Tridiagonal t{std::vector<double>(n, inv_h2), std::vector<double>(n, -2.0 * inv_h2),
                  std::vector<double>(n, inv_h2)};
    t.lower[0] = 0.0;
    t.upper[n - 1] = 0.0;
    return t;
}

double laplacian_first_eigenvalue(const SpatialGrid& grid) noexcept {
    const double h = grid.spacing();
    const double s = std::sin(std::numbers::pi * h / 2.0);
    return 4.0 * s * s / (h * h);
}

void solve_tridiagonal(const Tridiagonal& matrix, std::span<const double> rhs, std::span<double> out,
                       std::span<double> scratch) {
    const int n = matrix.size();
    require(static_cast<int>(rhs.size()) == n && static_cast<int>(out.size()) == n &&
                static_cast<int>(scratch.size()) >= n,
            "tridiagonal solve: size mismatch");
    const auto& a = matrix.lower;
    const auto& b = matrix.diag;
    const auto& c = matrix.upper;
    double m = b[0];
    if (m == 0.0) raise(ErrorCode::Internal, "singular tridiagonal system");
    scratch[0] = c[0] / m;
    out[0] = rhs[0] / m;
    for (int j = 1; j < n; ++j) {
        const auto k = static_cast<std::size_t>(j);
        m = b[k] - a[k] * scratch[k - 1];
        if (m == 0.0) raise(ErrorCode::Internal, "singular tridiagonal system");
        scratch[k] = c[k] / m;
        out[k] = (rhs[k] - a[k] * out[k - 1]) / m;
    }
    for (int j = n - 2; j >= 0; --j) {
        const auto k = static_cast<std::size_t>(j);
        out[k] -= scratch[k] * out[k + 1];
    }
}

}  // namespace hybridlab
