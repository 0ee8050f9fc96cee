#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace hybridlab {

/// Uniform grid on I = [0,1] with M interior nodes xi_j = j*h, h = 1/(M+1).
/// Boundary values are zero by the Dirichlet convention and never stored.
/// Node indices are 0-based in code: node(0) = h, node(M-1) = 1 - h.
class SpatialGrid {
public:
    explicit SpatialGrid(int interior_nodes);

    int size() const noexcept { return nodes_; }
    double spacing() const noexcept { return spacing_; }
    double node(int j) const noexcept { return (j + 1) * spacing_; }

    bool operator==(const SpatialGrid&) const = default;

private:
    int nodes_;
    double spacing_;
};

/// Throws invalid-argument for M < 3.
SpatialGrid make_grid(int interior_nodes);

/// Interior samples of a function in L^2(0,1) on a SpatialGrid.
class GridFunction {
public:
    explicit GridFunction(const SpatialGrid& grid);
    GridFunction(const SpatialGrid& grid, std::vector<double> values);

    template <class F>
    static GridFunction sample(const SpatialGrid& grid, F&& f) {
        std::vector<double> values(static_cast<std::size_t>(grid.size()));
        for (int j = 0; j < grid.size(); ++j) values[static_cast<std::size_t>(j)] = f(grid.node(j));
        return GridFunction(grid, std::move(values));
    }

    const SpatialGrid& grid() const noexcept { return grid_; }
    int size() const noexcept { return grid_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }
    double operator[](int j) const { return values_[static_cast<std::size_t>(j)]; }
    double& operator[](int j) { return values_[static_cast<std::size_t>(j)]; }

    bool all_finite() const noexcept;

private:
    SpatialGrid grid_;
    std::vector<double> values_;
};

// Trapezoid rule on [0,1] with zero endpoint values: h * sum_j u_j v_j.
double discrete_dot(double h, std::span<const double> u, std::span<const double> v) noexcept;
double inner_product(const GridFunction& u, const GridFunction& v);
double norm(const GridFunction& u);
double distance_squared(const GridFunction& u, const GridFunction& v);

/// psi(u) = exp(-1/(1-u^2)) on (-1,1), zero elsewhere.
double bump(double u) noexcept;

/// Sampled phi_i^N(xi) = N * psi(N (xi - i/N)); only the nonzero band is stored.
class Mollifier {
public:
    /// site is 1-based (1..N-1) as in z_i = i/N.
    Mollifier(int site, int population, const SpatialGrid& grid);

    int site() const noexcept { return site_; }
    int population() const noexcept { return population_; }
    double center() const noexcept { return static_cast<double>(site_) / population_; }
    const SpatialGrid& grid() const noexcept { return grid_; }

    int first_node() const noexcept { return first_; }
    std::span<const double> band() const noexcept { return band_; }

    /// (x, phi) for x given on the full grid.
    double project(std::span<const double> x) const noexcept;
    /// out += weight * phi
    void accumulate(double weight, std::span<double> out) const noexcept;

    GridFunction samples() const;
    double norm() const noexcept;

private:
    int site_;
    int population_;
    SpatialGrid grid_;
    int first_ = 0;
    std::vector<double> band_;
};

Mollifier mollifier_build(int site, int population, const SpatialGrid& grid);

/// The N-1 mollifiers of a population of size N on a shared grid.
class MollifierFamily {
public:
    MollifierFamily(int population, const SpatialGrid& grid);

    int population() const noexcept { return population_; }
    int sites() const noexcept { return static_cast<int>(members_.size()); }
    const SpatialGrid& grid() const noexcept { return grid_; }
    const Mollifier& operator[](int k) const { return members_[static_cast<std::size_t>(k)]; }
    auto begin() const noexcept { return members_.begin(); }
    auto end() const noexcept { return members_.end(); }

    /// zeta[k] = (x, phi_{k+1})
    void project(std::span<const double> x, std::span<double> zeta) const noexcept;
    std::vector<double> project(const GridFunction& x) const;

    /// out = sum_k weights[k] * phi_{k+1}
    void combine(std::span<const double> weights, std::span<double> out) const noexcept;
    GridFunction combine(std::span<const double> weights) const;

    /// Operator norm bound of x -> ((x, phi_i))_i squared, via the Gram row sums.
    double gram_row_bound() const;

private:
    int population_;
    SpatialGrid grid_;
    std::vector<Mollifier> members_;
};

/// Tridiagonal matrix; lower[0] and upper[n-1] are unused.
struct Tridiagonal {
    std::vector<double> lower;
    std::vector<double> diag;
    std::vector<double> upper;

    int size() const noexcept { return static_cast<int>(diag.size()); }
    void apply(std::span<const double> u, std::span<double> out) const;
    std::vector<double> apply(std::span<const double> u) const;
};

/// Centered second differences with zero Dirichlet data: (1, -2, 1)/h^2.
Tridiagonal laplacian_matrix(const SpatialGrid& grid);

/// Magnitude of the smallest discrete Dirichlet eigenvalue, (4/h^2) sin^2(pi h / 2).
double laplacian_first_eigenvalue(const SpatialGrid& grid) noexcept;

/// Thomas algorithm; no pivoting, so the matrix must be diagonally dominant.
/// scratch needs size() entries. out may alias rhs.
void solve_tridiagonal(const Tridiagonal& matrix, std::span<const double> rhs, std::span<double> out,
                       std::span<double> scratch);

}  // namespace hybridlab
